#include "persopt/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace persopt {

DiagramGradient DiagramFeatures::backward(const Diagram& d, std::span<const double> upstream) const {
  if (upstream.size() != values.size()) {
    throw std::invalid_argument("DiagramFeatures::backward: upstream size mismatch");
  }
  DiagramGradient g = DiagramGradient::zeros_like(d);
  if (dim >= d.num_dims()) return g;
  auto& pts = g.regular[static_cast<std::size_t>(dim)];
  for (const FeatureJacobianEntry& e : jacobian) {
    const double u = upstream[static_cast<std::size_t>(e.output)];
    pts[static_cast<std::size_t>(e.point)][0] += u * e.d_birth;
    pts[static_cast<std::size_t>(e.point)][1] += u * e.d_death;
  }
  return g;
}

double tent(double birth, double death, double t) {
  const double mid = 0.5 * (birth + death);
  if (t >= birth && t <= mid) return t - birth;
  if (t > mid && t <= death) return death - t;
  return 0.0;
}

DiagramFeatures landscape(const Diagram& d, int dim, int k_max, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("landscape: empty grid");
  if (k_max < 1) throw std::invalid_argument("landscape: k_max must be >= 1");
  const auto& points = d[dim].regular;
  const std::size_t n_grid = grid.size();
  DiagramFeatures out;
  out.dim = dim;
  out.values.assign(static_cast<std::size_t>(k_max) * n_grid, 0.0);

  std::vector<double> tents(points.size());
  std::vector<std::size_t> order(points.size());
  for (std::size_t s = 0; s < n_grid; ++s) {
    const double t = grid[s];
    for (std::size_t i = 0; i < points.size(); ++i) tents[i] = tent(points[i].birth, points[i].death, t);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return tents[a] > tents[b]; });
    const std::size_t depth = std::min(order.size(), static_cast<std::size_t>(k_max));
    for (std::size_t k = 0; k < depth; ++k) {
      const std::size_t i = order[k];
      const double v = tents[i];
      if (v <= 0.0) break;
      const auto output = static_cast<int>(k * n_grid + s);
      out.values[static_cast<std::size_t>(output)] = v;
      const double mid = 0.5 * (points[i].birth + points[i].death);
      if (t <= mid) {
        out.jacobian.push_back({output, static_cast<int>(i), -1.0, 0.0});
      } else {
        out.jacobian.push_back({output, static_cast<int>(i), 0.0, 1.0});
      }
    }
  }
  return out;
}

DiagramFeatures persistence_image(const Diagram& d, int dim,
                                  std::span<const std::array<double, 2>> grid, double sigma,
                                  ImageWeight weight) {
  if (!(sigma > 0.0)) throw std::invalid_argument("persistence_image: sigma must be positive");
  const auto& points = d[dim].regular;
  DiagramFeatures out;
  out.dim = dim;
  out.values.assign(grid.size(), 0.0);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double db = grid[q][0] - points[i].birth;
      const double dd = grid[q][1] - points[i].death;
      const double g = std::exp(-(db * db + dd * dd) * inv2s2);
      const double w = weight == ImageWeight::constant ? 1.0 : points[i].persistence();
      out.values[q] += w * g;
      // d/d birth of w * g: g * dw/db + w * g * db / sigma^2, similarly for death.
      const double dw_db = weight == ImageWeight::constant ? 0.0 : -1.0;
      const double dw_dd = weight == ImageWeight::constant ? 0.0 : 1.0;
      out.jacobian.push_back({static_cast<int>(q), static_cast<int>(i),
                              g * dw_db + w * g * db * 2.0 * inv2s2,
                              g * dw_dd + w * g * dd * 2.0 * inv2s2});
    }
  }
  return out;
}

}  // namespace persopt
