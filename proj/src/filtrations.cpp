#include "persopt/filtrations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace persopt {

namespace {

void require_vertex_count(const Complex& complex, std::size_t n, const char* who) {
  if (complex.num_vertices() != n) {
    throw std::invalid_argument(std::string(who) + ": complex has " +
                                std::to_string(complex.num_vertices()) + " vertices, input has " +
                                std::to_string(n));
  }
}

void require_finite(std::span<const double> values, const char* who) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite input");
  }
}

// d|x_i - x_j| / dx_i and dx_j, appended to the tape with a scale factor.
void add_distance_derivative(GradTape& tape, CellId cell, const PointCloud& x, std::size_t i,
                             std::size_t j, double dist, double scale) {
  if (dist == 0.0) return;
  const std::size_t d = x.dim();
  for (std::size_t k = 0; k < d; ++k) {
    const double u = (x(i, k) - x(j, k)) / dist * scale;
    tape.add(cell, static_cast<int>(i * d + k), u);
    tape.add(cell, static_cast<int>(j * d + k), -u);
  }
}

Matrix pairwise_distances(const PointCloud& x) {
  const std::size_t n = x.size();
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = x.distance(i, j);
    }
  }
  return dist;
}

struct ArgmaxPair {
  int i = -1;
  int j = -1;
  double value = 0.0;
};

// First pair (lexicographic on positions in the sorted vertex list) that
// attains the maximum of `value(i, j)`.
template <class F>
ArgmaxPair max_pair(std::span<const int> verts, F&& value) {
  ArgmaxPair best;
  for (std::size_t a = 0; a < verts.size(); ++a) {
    for (std::size_t b = a + 1; b < verts.size(); ++b) {
      const double v = value(verts[a], verts[b]);
      if (best.i < 0 || v > best.value) best = {verts[a], verts[b], v};
    }
  }
  return best;
}

}  // namespace

FiltrationWithTape rips_filtration(const PointCloud& points, const Complex& complex) {
  if (complex.kind() != ComplexKind::simplicial) {
    throw std::invalid_argument("rips_filtration: needs a simplicial complex");
  }
  require_vertex_count(complex, points.size(), "rips_filtration");
  const Matrix dist = pairwise_distances(points);
  FiltrationWithTape out{Filtration{std::vector<double>(complex.size(), 0.0)},
                         GradTape(complex.size(), points.size() * points.dim())};
  for (const Cell& c : complex.cells()) {
    if (c.dim == 0) continue;
    const ArgmaxPair best = max_pair(c.vertices, [&](int i, int j) {
      return dist(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    });
    out.filtration.values[static_cast<std::size_t>(c.id)] = best.value;
    add_distance_derivative(out.tape, c.id, points, static_cast<std::size_t>(best.i),
                            static_cast<std::size_t>(best.j), best.value, 1.0);
  }
  return out;
}

FiltrationWithTape rips_from_matrix(const Matrix& m, const Complex& complex) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("rips_from_matrix: matrix must be square");
  require_finite(m.data(), "rips_from_matrix");
  for (std::size_t i = 0; i < n; ++i) {
    if (m(i, i) != 0.0) throw std::invalid_argument("rips_from_matrix: diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (m(i, j) != m(j, i)) throw std::invalid_argument("rips_from_matrix: matrix not symmetric");
      if (m(i, j) < 0.0) throw std::invalid_argument("rips_from_matrix: negative entry");
    }
  }
  if (complex.kind() != ComplexKind::simplicial) {
    throw std::invalid_argument("rips_from_matrix: needs a simplicial complex");
  }
  require_vertex_count(complex, n, "rips_from_matrix");
  FiltrationWithTape out{Filtration{std::vector<double>(complex.size(), 0.0)},
                         GradTape(complex.size(), n * n)};
  for (const Cell& c : complex.cells()) {
    if (c.dim == 0) continue;
    const ArgmaxPair best = max_pair(c.vertices, [&](int i, int j) {
      return m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    });
    out.filtration.values[static_cast<std::size_t>(c.id)] = best.value;
    out.tape.add(c.id, best.i * static_cast<int>(n) + best.j, 1.0);
  }
  return out;
}

FiltrationWithTape weighted_rips_filtration(const PointCloud& points, const VertexFunction& weights,
                                            const Complex& complex, const GradTape* weight_tape) {
  const std::size_t n = points.size();
  const std::size_t d = points.dim();
  if (weights.size() != n) {
    throw std::invalid_argument("weighted_rips_filtration: one weight per point required");
  }
  require_finite(weights, "weighted_rips_filtration");
  if (complex.kind() != ComplexKind::simplicial) {
    throw std::invalid_argument("weighted_rips_filtration: needs a simplicial complex");
  }
  require_vertex_count(complex, n, "weighted_rips_filtration");
  if (weight_tape && (weight_tape->size() != n || weight_tape->num_params() != n * d)) {
    throw std::invalid_argument("weighted_rips_filtration: weight tape shape mismatch");
  }

  const Matrix dist = pairwise_distances(points);
  const auto weight_param = [&](std::size_t j) { return static_cast<int>(n * d + j); };
  FiltrationWithTape out{Filtration{std::vector<double>(complex.size(), 0.0)},
                         GradTape(complex.size(), n * d + n)};

  // Edge values first; higher simplices copy the record of their max edge.
  auto edge_value = [&](int i, int j) {
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    return std::max({2.0 * weights[ui], 2.0 * weights[uj], dist(ui, uj) + weights[ui] + weights[uj]});
  };
  for (const Cell& c : complex.cells()) {
    if (c.dim == 0) {
      const auto j = static_cast<std::size_t>(c.vertices[0]);
      out.filtration.values[static_cast<std::size_t>(c.id)] = 2.0 * weights[j];
      out.tape.add(c.id, weight_param(j), 2.0);
      continue;
    }
    const ArgmaxPair best = max_pair(c.vertices, edge_value);
    const auto i = static_cast<std::size_t>(best.i);
    const auto j = static_cast<std::size_t>(best.j);
    out.filtration.values[static_cast<std::size_t>(c.id)] = best.value;
    // Branch order as in the formula: 2 f_i, 2 f_j, then the distance term.
    const double branches[3] = {2.0 * weights[i], 2.0 * weights[j], dist(i, j) + weights[i] + weights[j]};
    const int branch = static_cast<int>(std::max_element(branches, branches + 3) - branches);
    if (branch == 0) {
      out.tape.add(c.id, weight_param(i), 2.0);
    } else if (branch == 1) {
      out.tape.add(c.id, weight_param(j), 2.0);
    } else {
      add_distance_derivative(out.tape, c.id, points, i, j, dist(i, j), 1.0);
      out.tape.add(c.id, weight_param(i), 1.0);
      out.tape.add(c.id, weight_param(j), 1.0);
    }
  }
  if (!weight_tape) return out;

  GradTape inner(n * d + n, n * d);
  for (std::size_t k = 0; k < n * d; ++k) inner.add(static_cast<CellId>(k), static_cast<int>(k), 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (const TapeEntry& e : weight_tape->entries(static_cast<CellId>(j))) {
      inner.add(static_cast<CellId>(n * d + j), e.param, e.coeff);
    }
  }
  out.tape = out.tape.compose(inner);
  return out;
}

VertexFunctionWithTape dtm_weights(const PointCloud& points, int k_nn) {
  const std::size_t n = points.size();
  if (k_nn < 1 || static_cast<std::size_t>(k_nn) >= n) {
    throw std::invalid_argument("dtm_weights: k_nn must be in [1, n)");
  }
  const Matrix dist = pairwise_distances(points);
  const auto k = static_cast<std::size_t>(k_nn);
  VertexFunctionWithTape out{VertexFunction(n, 0.0), GradTape(n, n * points.dim())};
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k), others.end(),
                      [&](std::size_t a, std::size_t b) {
                        return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
                      });
    double sum = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = others[r];
      sum += dist(i, j);
      add_distance_derivative(out.tape, static_cast<CellId>(i), points, i, j, dist(i, j),
                              1.0 / static_cast<double>(k));
    }
    out.values[i] = sum / static_cast<double>(k);
  }
  return out;
}

FiltrationWithTape lower_star_filtration(const VertexFunction& f, const Complex& complex) {
  if (f.size() != complex.num_vertices()) {
    throw std::invalid_argument("lower_star_filtration: expected " +
                                std::to_string(complex.num_vertices()) + " vertex values, got " +
                                std::to_string(f.size()));
  }
  require_finite(f, "lower_star_filtration");
  FiltrationWithTape out{Filtration{std::vector<double>(complex.size())},
                         GradTape(complex.size(), f.size())};
  for (const Cell& c : complex.cells()) {
    int best = c.vertices[0];
    for (int v : c.vertices) {
      if (f[static_cast<std::size_t>(v)] > f[static_cast<std::size_t>(best)]) best = v;
    }
    out.filtration.values[static_cast<std::size_t>(c.id)] = f[static_cast<std::size_t>(best)];
    out.tape.add(c.id, best, 1.0);
  }
  return out;
}

double height_background(int height, int width) { return 2.0 * (height + width); }

VertexFunctionWithTape height_filtration(const Image& binary_image, double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("height_filtration: theta must be finite");
  const int h = binary_image.height;
  const int w = binary_image.width;
  if (h < 1 || w < 1 || binary_image.pixels.size() != static_cast<std::size_t>(h * w)) {
    throw std::invalid_argument("height_filtration: malformed image");
  }
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double background = height_background(h, w);
  VertexFunctionWithTape out{VertexFunction(binary_image.pixels.size(), background),
                             GradTape(binary_image.pixels.size(), 1)};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double p = binary_image.at(r, c);
      if (p != 0.0 && p != 1.0) throw std::invalid_argument("height_filtration: image is not binary");
      if (p == 0.0) continue;
      const auto v = static_cast<CellId>(r * w + c);
      out.values[static_cast<std::size_t>(v)] = cos_t * c + sin_t * r;
      out.tape.add(v, 0, -sin_t * c + cos_t * r);
    }
  }
  return out;
}

}  // namespace persopt
