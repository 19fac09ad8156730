#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "persopt/losses.hpp"

namespace persopt {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Sums in ascending order so the result does not depend on point order.
double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace

LossValue total_persistence(const Diagram& d, std::span<const int> dims) {
  LossValue out;
  out.grad = DiagramGradient::zeros_like(d);
  for (int dim : dims) {
    if (dim < 0 || dim >= d.num_dims()) continue;
    const auto& points = d[dim].regular;
    std::vector<double> terms;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double pers = points[i].persistence();
      if (pers == 0.0) continue;
      terms.push_back(pers);
      out.grad.regular[static_cast<std::size_t>(dim)][i] = {-1.0, 1.0};
    }
    out.value += ordered_sum(std::move(terms));
  }
  return out;
}

LossValue total_persistence_excluding_top(const Diagram& d, int dim, int n_exclude) {
  if (n_exclude < 0) throw std::invalid_argument("total_persistence_excluding_top: negative count");
  LossValue out;
  out.grad = DiagramGradient::zeros_like(d);
  if (dim < 0 || dim >= d.num_dims()) return out;
  const auto& points = d[dim].regular;
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return points[a].persistence() > points[b].persistence();
  });
  std::vector<double> terms;
  for (std::size_t r = static_cast<std::size_t>(n_exclude); r < idx.size(); ++r) {
    const std::size_t i = idx[r];
    const double pers = points[i].persistence();
    if (pers == 0.0) continue;
    terms.push_back(pers);
    out.grad.regular[static_cast<std::size_t>(dim)][i] = {-1.0, 1.0};
  }
  out.value = ordered_sum(std::move(terms));
  return out;
}

LossValue hole_penalty(const Diagram& d, int dim) {
  LossValue out;
  out.grad = DiagramGradient::zeros_like(d);
  if (dim < 0 || dim >= d.num_dims()) return out;
  const auto& points = d[dim].regular;
  std::vector<double> terms;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double half = points[i].persistence() / 2.0;
    terms.push_back(-half * half);
    out.grad.regular[static_cast<std::size_t>(dim)][i] = {half, -half};
  }
  out.value = ordered_sum(std::move(terms));
  return out;
}

LossValue penalty_square(const PointCloud& points, const Box& box) {
  const std::size_t d = points.dim();
  if (box.lower.size() != d || box.upper.size() != d) {
    throw std::invalid_argument("penalty_square: box dimension does not match the points");
  }
  for (std::size_t k = 0; k < d; ++k) {
    if (!(box.lower[k] <= box.upper[k])) throw std::invalid_argument("penalty_square: empty box");
  }
  LossValue out;
  out.grad_aux.assign(points.size() * d, 0.0);
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double x = points(i, k);
      diff[k] = x - std::clamp(x, box.lower[k], box.upper[k]);
      sq += diff[k] * diff[k];
    }
    if (sq == 0.0) continue;
    const double dist = std::sqrt(sq);
    out.value += dist;
    for (std::size_t k = 0; k < d; ++k) out.grad_aux[i * d + k] = diff[k] / dist;
  }
  return out;
}

LossValue penalty_binary_image(std::span<const double> pixels) {
  LossValue out;
  out.grad_aux.assign(pixels.size(), 0.0);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double p = pixels[i];
    const double to_zero = std::abs(p);
    const double to_one = std::abs(1.0 - p);
    if (to_zero <= to_one) {
      out.value += to_zero;
      out.grad_aux[i] = sign(p);
    } else {
      out.value += to_one;
      out.grad_aux[i] = -sign(1.0 - p);
    }
  }
  return out;
}

LossValue penalty_tv(std::span<const double> beta) {
  if (beta.size() < 2) throw std::invalid_argument("penalty_tv: need at least two coefficients");
  LossValue out;
  out.grad_aux.assign(beta.size(), 0.0);
  for (std::size_t i = 0; i + 1 < beta.size(); ++i) {
    const double diff = beta[i + 1] - beta[i];
    out.value += std::abs(diff);
    const double s = sign(diff);
    out.grad_aux[i + 1] += s;
    out.grad_aux[i] -= s;
  }
  return out;
}

LossValue penalty_mse(const Matrix& x, std::span<const double> y, std::span<const double> beta) {
  if (x.rows() != y.size() || x.cols() != beta.size()) {
    throw std::invalid_argument("penalty_mse: shapes of X, y and beta are incompatible");
  }
  LossValue out;
  out.grad_aux.assign(beta.size(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double r = -y[i];
    for (std::size_t k = 0; k < beta.size(); ++k) r += x(i, k) * beta[k];
    out.value += r * r;
    for (std::size_t k = 0; k < beta.size(); ++k) out.grad_aux[k] += 2.0 * x(i, k) * r;
  }
  return out;
}

}  // namespace persopt
