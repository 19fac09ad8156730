#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>

#include "persopt/assignment.hpp"
#include "persopt/losses.hpp"

namespace persopt {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Sum of doubles computed exactly and rounded once to nearest (Shewchuk's
// non-overlapping partials with the half-way fix-up of Python's fsum).
double exact_sum(std::span<const double> xs) {
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t i = 0;
    for (std::size_t k = 0; k < partials.size(); ++k) {
      double y = partials[k];
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  if (partials.empty()) return 0.0;
  std::size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    lo = y - (hi - x);
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

// |a - b| as an unevaluated sum hi + lo.
std::array<double, 2> abs_diff(double a, double b) {
  const double s = a - b;
  const double bv = s - a;
  const double err = (a - (s - bv)) + (-b - bv);
  return s < 0.0 || (s == 0.0 && err < 0.0) ? std::array<double, 2>{-s, -err} : std::array<double, 2>{s, err};
}

// Exact parts of cost^p for an L-inf cost given as hi + lo (p = 1, 2), or
// its rounded power otherwise.
void push_power(std::vector<double>& out, std::array<double, 2> c, int p) {
  if (p == 1) {
    out.insert(out.end(), {c[0], c[1]});
    return;
  }
  if (p != 2) {
    out.push_back(std::pow(c[0] + c[1], p));
    return;
  }
  auto two_prod = [&](double x, double y) {
    const double prod = x * y;
    out.insert(out.end(), {prod, std::fma(x, y, -prod)});
  };
  two_prod(c[0], c[0]);
  two_prod(2.0 * c[0], c[1]);
  two_prod(c[1], c[1]);
}

// Off-diagonal regular points of one dimension, with their original index.
struct PlanePoint {
  double birth;
  double death;
  int index;
};

std::vector<PlanePoint> off_diagonal(const Diagram& d, int dim) {
  std::vector<PlanePoint> out;
  const auto& regular = d[dim].regular;
  for (std::size_t i = 0; i < regular.size(); ++i) {
    if (regular[i].death != regular[i].birth) {
      out.push_back({regular[i].birth, regular[i].death, static_cast<int>(i)});
    }
  }
  return out;
}

double pair_cost(const PlanePoint& p, const PlanePoint& q, GroundMetric g) {
  const double db = p.birth - q.birth;
  const double dd = p.death - q.death;
  if (g == GroundMetric::linf) return std::max(std::abs(db), std::abs(dd));
  return std::sqrt(db * db + dd * dd);
}

double diagonal_cost(const PlanePoint& p, GroundMetric g) {
  const double pers = std::abs(p.death - p.birth);
  return g == GroundMetric::linf ? pers / 2.0 : pers / std::numbers::sqrt2;
}

// d cost / d (birth, death) of the first point.
std::array<double, 2> pair_cost_grad(const PlanePoint& p, const PlanePoint& q, GroundMetric g) {
  const double db = p.birth - q.birth;
  const double dd = p.death - q.death;
  if (g == GroundMetric::linf) {
    if (std::abs(db) >= std::abs(dd)) return {sign(db), 0.0};
    return {0.0, sign(dd)};
  }
  const double c = std::sqrt(db * db + dd * dd);
  if (c == 0.0) return {0.0, 0.0};
  return {db / c, dd / c};
}

std::array<double, 2> diagonal_cost_grad(const PlanePoint& p, GroundMetric g) {
  const double s = sign(p.death - p.birth) * (g == GroundMetric::linf ? 0.5 : 1.0 / std::numbers::sqrt2);
  return {-s, s};
}

// One matched pair with its cost, in canonical order: points of the first
// diagram by index, then target points matched to the diagonal by index.
struct MatchedPair {
  int a;  // position in the first point list or -1
  int b;  // position in the second point list or -1
  double cost;
};

std::vector<MatchedPair> canonical_pairs(const std::vector<PlanePoint>& a,
                                         const std::vector<PlanePoint>& b,
                                         const std::vector<int>& partner_of_a, GroundMetric g) {
  std::vector<MatchedPair> out;
  std::vector<bool> b_used(b.size(), false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = partner_of_a[i];
    if (j >= 0) {
      b_used[static_cast<std::size_t>(j)] = true;
      out.push_back({static_cast<int>(i), j, pair_cost(a[i], b[static_cast<std::size_t>(j)], g)});
    } else {
      out.push_back({static_cast<int>(i), -1, diagonal_cost(a[i], g)});
    }
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!b_used[j]) out.push_back({-1, static_cast<int>(j), diagonal_cost(b[j], g)});
  }
  return out;
}

Matching to_matching(const std::vector<MatchedPair>& pairs, const std::vector<PlanePoint>& a,
                     const std::vector<PlanePoint>& b) {
  Matching m;
  for (const MatchedPair& p : pairs) {
    m.pairs.emplace_back(p.a >= 0 ? a[static_cast<std::size_t>(p.a)].index : Matching::kDiagonal,
                         p.b >= 0 ? b[static_cast<std::size_t>(p.b)].index : Matching::kDiagonal);
  }
  return m;
}

std::array<double, 2> matched_grad(const MatchedPair& p, const std::vector<PlanePoint>& a,
                                   const std::vector<PlanePoint>& b, GroundMetric g) {
  const PlanePoint& pa = a[static_cast<std::size_t>(p.a)];
  return p.b >= 0 ? pair_cost_grad(pa, b[static_cast<std::size_t>(p.b)], g) : diagonal_cost_grad(pa, g);
}

// Rows: a points then diagonal slots of b; columns: b points then diagonal
// slots of a.  Returns the partner of every a point (-1: diagonal).
std::vector<int> partners_from_rows(const std::vector<int>& col_of_row, std::size_t n, std::size_t m) {
  std::vector<int> partner(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = col_of_row[i];
    partner[i] = (c >= 0 && static_cast<std::size_t>(c) < m) ? c : -1;
  }
  return partner;
}

// The L-inf cost of a matched pair as hi + lo without rounding.
std::array<double, 2> exact_cost(const MatchedPair& mp, const std::vector<PlanePoint>& a,
                                 const std::vector<PlanePoint>& b) {
  if (mp.a < 0 || mp.b < 0) {
    const PlanePoint& p = mp.a >= 0 ? a[static_cast<std::size_t>(mp.a)] : b[static_cast<std::size_t>(mp.b)];
    const auto pers = abs_diff(p.death, p.birth);
    return {0.5 * pers[0], 0.5 * pers[1]};
  }
  const PlanePoint& p = a[static_cast<std::size_t>(mp.a)];
  const PlanePoint& q = b[static_cast<std::size_t>(mp.b)];
  const auto db = abs_diff(p.birth, q.birth);
  const auto dd = abs_diff(p.death, q.death);
  const double cmp[] = {db[0], db[1], -dd[0], -dd[1]};
  return exact_sum(cmp) >= 0.0 ? db : dd;
}

}  // namespace

DistanceResult bottleneck(const Diagram& d, const Diagram& target, int dim, GroundMetric ground) {
  const auto a = off_diagonal(d, dim);
  const auto b = off_diagonal(target, dim);
  const std::size_t n = a.size();
  const std::size_t m = b.size();

  std::vector<double> candidates{0.0};
  for (const auto& p : a) candidates.push_back(diagonal_cost(p, ground));
  for (const auto& q : b) candidates.push_back(diagonal_cost(q, ground));
  for (const auto& p : a) {
    for (const auto& q : b) candidates.push_back(pair_cost(p, q, ground));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  auto match_at = [&](double r) {
    std::vector<std::vector<int>> adj(n + m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (pair_cost(a[i], b[j], ground) <= r) adj[i].push_back(static_cast<int>(j));
      }
      if (diagonal_cost(a[i], ground) <= r) adj[i].push_back(static_cast<int>(m + i));
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (diagonal_cost(b[j], ground) <= r) adj[n + j].push_back(static_cast<int>(j));
      for (std::size_t i = 0; i < n; ++i) adj[n + j].push_back(static_cast<int>(m + i));
    }
    return max_bipartite_matching(adj, static_cast<int>(n + m));
  };
  auto perfect = [&](const std::vector<int>& rows) {
    return std::none_of(rows.begin(), rows.end(), [](int c) { return c < 0; });
  };

  // The largest candidate is always feasible (match everything to the diagonal).
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfect(match_at(candidates[mid]))) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const auto rows = match_at(candidates[lo]);
  const auto pairs = canonical_pairs(a, b, partners_from_rows(rows, n, m), ground);

  DistanceResult out;
  out.matching = to_matching(pairs, a, b);
  out.loss.grad = DiagramGradient::zeros_like(d);
  const MatchedPair* worst = nullptr;
  for (const MatchedPair& p : pairs) {
    if (!worst || p.cost > worst->cost) worst = &p;
  }
  if (worst) {
    out.loss.value = worst->cost;
    if (worst->a >= 0 && worst->cost > 0.0) {
      const auto g = matched_grad(*worst, a, b, ground);
      out.loss.grad.regular[static_cast<std::size_t>(dim)]
                           [static_cast<std::size_t>(a[static_cast<std::size_t>(worst->a)].index)] = g;
    }
  }
  return out;
}

DistanceResult wasserstein_cost(const Diagram& d, const Diagram& target, int dim, int p,
                                GroundMetric ground) {
  if (p < 1) throw std::invalid_argument("wasserstein: p must be a positive integer");
  const auto a = off_diagonal(d, dim);
  const auto b = off_diagonal(target, dim);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  const auto power = [p](double c) { return p == 1 ? c : std::pow(c, p); };

  Matrix cost(n + m, n + m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cost(i, j) = power(pair_cost(a[i], b[j], ground));
    for (std::size_t k = 0; k < n; ++k) cost(i, m + k) = k == i ? power(diagonal_cost(a[i], ground)) : inf;
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) cost(n + j, k) = k == j ? power(diagonal_cost(b[j], ground)) : inf;
  }
  const auto rows = solve_assignment(cost);
  const auto pairs = canonical_pairs(a, b, partners_from_rows(rows, n, m), ground);

  DistanceResult out;
  out.matching = to_matching(pairs, a, b);
  out.loss.grad = DiagramGradient::zeros_like(d);
  std::vector<double> terms;
  for (const MatchedPair& mp : pairs) {
    if (ground == GroundMetric::linf) {
      push_power(terms, exact_cost(mp, a, b), p);
    } else {
      terms.push_back(power(mp.cost));
    }
    if (mp.a < 0 || mp.cost == 0.0) continue;
    const double scale = p == 1 ? 1.0 : p * std::pow(mp.cost, p - 1);
    const auto g = matched_grad(mp, a, b, ground);
    out.loss.grad.regular[static_cast<std::size_t>(dim)]
                         [static_cast<std::size_t>(a[static_cast<std::size_t>(mp.a)].index)] = {
        scale * g[0], scale * g[1]};
  }
  // Summing exactly makes the value that of the real-valued optimum, so
  // tied optimal matchings and point order cannot change it.
  out.loss.value = exact_sum(terms);
  return out;
}

DistanceResult wasserstein(const Diagram& d, const Diagram& target, int dim, int p,
                           GroundMetric ground) {
  DistanceResult out = wasserstein_cost(d, target, dim, p, ground);
  const double total = out.loss.value;
  if (p == 1 || total == 0.0) {
    if (total == 0.0) out.loss.grad *= 0.0;
    return out;
  }
  out.loss.value = std::pow(total, 1.0 / p);
  out.loss.grad *= std::pow(total, 1.0 / p - 1.0) / p;
  return out;
}

// ---------------------------------------------------------------------------
// Sliced Wasserstein

namespace {

struct SlicePoint {
  double birth;
  double death;
};

// Sum over directions of the sorted 1-D transport cost between a + diag(b)
// and b + diag(a).  Gradients (may be null) are accumulated per point.
double sliced_sum(const std::vector<SlicePoint>& a, const std::vector<SlicePoint>& b,
                  std::span<const double> thetas, std::vector<std::array<double, 2>>* grad_a,
                  std::vector<std::array<double, 2>>* grad_b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t total = n + m;
  // Entry e of each side: e < n is a point of `a` (left side: as itself,
  // right side: its diagonal projection), e >= n a point of `b`.
  std::vector<double> left(total), right(total);
  std::vector<std::size_t> left_idx(total), right_idx(total);
  double sum = 0.0;
  for (double theta : thetas) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t i = 0; i < n; ++i) {
      left[i] = a[i].birth * c + a[i].death * s;
      right[i] = 0.5 * (a[i].birth + a[i].death) * (c + s);
    }
    for (std::size_t j = 0; j < m; ++j) {
      left[n + j] = 0.5 * (b[j].birth + b[j].death) * (c + s);
      right[n + j] = b[j].birth * c + b[j].death * s;
    }
    std::iota(left_idx.begin(), left_idx.end(), std::size_t{0});
    std::iota(right_idx.begin(), right_idx.end(), std::size_t{0});
    std::stable_sort(left_idx.begin(), left_idx.end(),
                     [&](std::size_t x, std::size_t y) { return left[x] < left[y]; });
    std::stable_sort(right_idx.begin(), right_idx.end(),
                     [&](std::size_t x, std::size_t y) { return right[x] < right[y]; });
    for (std::size_t k = 0; k < total; ++k) {
      const std::size_t l = left_idx[k];
      const std::size_t r = right_idx[k];
      const double diff = left[l] - right[r];
      sum += std::abs(diff);
      const double sg = sign(diff);
      if (sg == 0.0) continue;
      // d|left - right| / d(birth, death) for the point behind each entry.
      if (l < n) {
        if (grad_a) {
          (*grad_a)[l][0] += sg * c;
          (*grad_a)[l][1] += sg * s;
        }
      } else if (grad_b) {
        (*grad_b)[l - n][0] += sg * 0.5 * (c + s);
        (*grad_b)[l - n][1] += sg * 0.5 * (c + s);
      }
      if (r < n) {
        if (grad_a) {
          (*grad_a)[r][0] -= sg * 0.5 * (c + s);
          (*grad_a)[r][1] -= sg * 0.5 * (c + s);
        }
      } else if (grad_b) {
        (*grad_b)[r - n][0] -= sg * c;
        (*grad_b)[r - n][1] -= sg * s;
      }
    }
  }
  return sum;
}

std::vector<double> directions(int n_dirs) {
  if (n_dirs < 1) throw std::invalid_argument("sliced_wasserstein: n_dirs must be >= 1");
  std::vector<double> thetas(static_cast<std::size_t>(n_dirs));
  for (int k = 0; k < n_dirs; ++k) {
    thetas[static_cast<std::size_t>(k)] = -std::numbers::pi / 2 + std::numbers::pi * k / n_dirs;
  }
  return thetas;
}

// Points of one diagram that enter a sliced computation, remembering where
// each came from so gradients can be written back.
struct SliceSource {
  std::vector<SlicePoint> points;
  std::vector<int> index;       // index into the regular or essential list
  std::vector<bool> essential;  // true: capped essential point
};

SliceSource slice_source(const Diagram& d, int dim, std::optional<double> cap) {
  SliceSource src;
  const auto& dd = d[dim];
  for (std::size_t i = 0; i < dd.regular.size(); ++i) {
    if (dd.regular[i].death == dd.regular[i].birth) continue;
    src.points.push_back({dd.regular[i].birth, dd.regular[i].death});
    src.index.push_back(static_cast<int>(i));
    src.essential.push_back(false);
  }
  if (cap) {
    for (std::size_t i = 0; i < dd.essential.size(); ++i) {
      if (dd.essential[i].birth == *cap) continue;
      src.points.push_back({dd.essential[i].birth, *cap});
      src.index.push_back(static_cast<int>(i));
      src.essential.push_back(true);
    }
  }
  return src;
}

void scatter(const SliceSource& src, const std::vector<std::array<double, 2>>& g, double scale,
             int dim, DiagramGradient& out) {
  const auto k = static_cast<std::size_t>(dim);
  for (std::size_t e = 0; e < src.points.size(); ++e) {
    const auto i = static_cast<std::size_t>(src.index[e]);
    if (src.essential[e]) {
      out.essential[k][i] += scale * g[e][0];
    } else {
      out.regular[k][i][0] += scale * g[e][0];
      out.regular[k][i][1] += scale * g[e][1];
    }
  }
}

}  // namespace

LossValue sliced_wasserstein(const Diagram& d, const Diagram& target, int dim, int n_dirs) {
  const auto thetas = directions(n_dirs);
  const SliceSource a = slice_source(d, dim, std::nullopt);
  const SliceSource b = slice_source(target, dim, std::nullopt);
  std::vector<std::array<double, 2>> ga(a.points.size(), {0.0, 0.0});
  LossValue out;
  out.value = sliced_sum(a.points, b.points, thetas, &ga, nullptr) / n_dirs;
  out.grad = DiagramGradient::zeros_like(d);
  if (dim < d.num_dims()) scatter(a, ga, 1.0 / n_dirs, dim, out.grad);
  return out;
}

double sliced_wasserstein_slice(const Diagram& d, const Diagram& target, int dim, double theta) {
  const SliceSource a = slice_source(d, dim, std::nullopt);
  const SliceSource b = slice_source(target, dim, std::nullopt);
  const double t[1] = {theta};
  return sliced_sum(a.points, b.points, t, nullptr, nullptr);
}

BatchLoss label_contrast_loss(const std::vector<Diagram>& diagrams, std::span<const int> labels,
                              int dim, int n_dirs, std::optional<double> essential_cap) {
  const std::size_t n = diagrams.size();
  if (labels.size() != n) throw std::invalid_argument("label_contrast_loss: one label per diagram");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw std::invalid_argument("label_contrast_loss: need at least two labels");

  const auto thetas = directions(n_dirs);
  std::vector<SliceSource> sources;
  sources.reserve(n);
  for (const Diagram& d : diagrams) sources.push_back(slice_source(d, dim, essential_cap));

  // Pairwise distances and their per-point gradients, i < j.
  struct PairTerm {
    std::size_t i, j;
    double value;
    std::vector<std::array<double, 2>> gi, gj;
  };
  std::vector<PairTerm> terms;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      PairTerm t{i, j, 0.0, {}, {}};
      t.gi.assign(sources[i].points.size(), {0.0, 0.0});
      t.gj.assign(sources[j].points.size(), {0.0, 0.0});
      t.value = sliced_sum(sources[i].points, sources[j].points, thetas, &t.gi, &t.gj) / n_dirs;
      for (auto& g : t.gi) g = {g[0] / n_dirs, g[1] / n_dirs};
      for (auto& g : t.gj) g = {g[0] / n_dirs, g[1] / n_dirs};
      terms.push_back(std::move(t));
    }
  }

  BatchLoss out;
  for (const Diagram& d : diagrams) out.grads.push_back(DiagramGradient::zeros_like(d));
  std::vector<double> coeff(terms.size(), 0.0);
  for (int cls : classes) {
    // Ordered pairs (i, j), i != j: each unordered term counts twice in the
    // numerator when both ends are in the class, and once per end in the
    // denominator.
    double num = 0.0;
    double den = 0.0;
    for (const PairTerm& t : terms) {
      const bool in_i = labels[t.i] == cls;
      const bool in_j = labels[t.j] == cls;
      if (in_i && in_j) num += 2.0 * t.value;
      den += (in_i ? t.value : 0.0) + (in_j ? t.value : 0.0);
    }
    if (den == 0.0) {
      out.warnings.push_back("label_contrast_loss: class " + std::to_string(cls) +
                             " has zero denominator, skipped");
      continue;
    }
    out.value += num / den;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const bool in_i = labels[terms[k].i] == cls;
      const bool in_j = labels[terms[k].j] == cls;
      const double dnum = (in_i && in_j) ? 2.0 : 0.0;
      const double dden = (in_i ? 1.0 : 0.0) + (in_j ? 1.0 : 0.0);
      coeff[k] += (dnum * den - num * dden) / (den * den);
    }
  }
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (coeff[k] == 0.0) continue;
    const PairTerm& t = terms[k];
    scatter(sources[t.i], t.gi, coeff[k], dim, out.grads[t.i]);
    scatter(sources[t.j], t.gj, coeff[k], dim, out.grads[t.j]);
  }
  return out;
}

}  // namespace persopt
