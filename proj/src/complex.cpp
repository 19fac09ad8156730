#include "persopt/complex.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace persopt {

namespace {

void check_cells(ComplexKind kind, const std::vector<Cell>& cells) {
  int prev_dim = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    if (c.id != static_cast<CellId>(i)) {
      throw std::invalid_argument("cell ids must be contiguous, got " + std::to_string(c.id) +
                                  " at position " + std::to_string(i));
    }
    if (c.dim < prev_dim) throw std::invalid_argument("cells must be sorted by dimension");
    prev_dim = c.dim;
    if (c.vertices.empty()) throw std::invalid_argument("cell without vertices");
    for (std::size_t k = 1; k < c.vertices.size(); ++k) {
      if (c.vertices[k - 1] >= c.vertices[k]) {
        throw std::invalid_argument("cell vertices must be strictly increasing");
      }
    }
    const std::size_t expected =
        c.dim == 0 ? 0
                   : (kind == ComplexKind::simplicial ? static_cast<std::size_t>(c.dim) + 1
                                                      : 2 * static_cast<std::size_t>(c.dim));
    if (c.boundary.size() != expected) {
      throw std::invalid_argument("cell " + std::to_string(c.id) + " has " +
                                  std::to_string(c.boundary.size()) + " boundary faces, expected " +
                                  std::to_string(expected));
    }
    for (CellId f : c.boundary) {
      if (f < 0 || static_cast<std::size_t>(f) >= cells.size() ||
          cells[static_cast<std::size_t>(f)].dim != c.dim - 1) {
        throw std::invalid_argument("cell " + std::to_string(c.id) + " has an invalid face");
      }
      const auto& fv = cells[static_cast<std::size_t>(f)].vertices;
      if (!std::includes(c.vertices.begin(), c.vertices.end(), fv.begin(), fv.end())) {
        throw std::invalid_argument("face vertices are not a subset of the cell");
      }
    }
  }
}

std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

// Builds a simplicial complex from a face-closed, (dim, lex)-sorted list.
Complex from_sorted_simplices(const std::vector<std::vector<int>>& simplices) {
  std::map<std::vector<int>, CellId> index;
  std::vector<Cell> cells;
  cells.reserve(simplices.size());
  std::vector<int> face;
  for (const auto& s : simplices) {
    Cell c;
    c.id = static_cast<CellId>(cells.size());
    c.dim = static_cast<int>(s.size()) - 1;
    c.vertices = s;
    if (c.dim > 0) {
      for (std::size_t drop = 0; drop < s.size(); ++drop) {
        face.clear();
        for (std::size_t k = 0; k < s.size(); ++k) {
          if (k != drop) face.push_back(s[k]);
        }
        c.boundary.push_back(index.at(face));
      }
    }
    index.emplace(s, c.id);
    cells.push_back(std::move(c));
  }
  return Complex(ComplexKind::simplicial, std::move(cells));
}

bool dim_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

Complex::Complex(ComplexKind kind, std::vector<Cell> cells, int grid_height, int grid_width)
    : kind_(kind), cells_(std::move(cells)), grid_height_(grid_height), grid_width_(grid_width) {
  check_cells(kind_, cells_);
  for (const Cell& c : cells_) {
    if (c.dim >= static_cast<int>(dim_counts_.size())) {
      dim_counts_.resize(static_cast<std::size_t>(c.dim) + 1, 0);
    }
    ++dim_counts_[static_cast<std::size_t>(c.dim)];
    max_dim_ = std::max(max_dim_, c.dim);
  }
  for (std::size_t v = 0; v < count_dim(0); ++v) {
    if (cells_[v].vertices.size() != 1 || cells_[v].vertices[0] != static_cast<int>(v)) {
      throw std::invalid_argument("vertex cells must be 0..n-1 in order");
    }
  }
  std::set<std::vector<int>> seen;
  for (const Cell& c : cells_) {
    if (!seen.insert(c.vertices).second) {
      throw std::invalid_argument("duplicate cell " + std::to_string(c.id));
    }
  }
}

std::size_t Complex::count_dim(int dim) const {
  if (dim < 0 || dim >= static_cast<int>(dim_counts_.size())) return 0;
  return dim_counts_[static_cast<std::size_t>(dim)];
}

long Complex::euler_characteristic() const {
  long chi = 0;
  for (std::size_t d = 0; d < dim_counts_.size(); ++d) {
    chi += (d % 2 == 0 ? 1 : -1) * static_cast<long>(dim_counts_[d]);
  }
  return chi;
}

std::optional<CellId> Complex::find(std::span<const int> vertices) const {
  const int dim = kind_ == ComplexKind::simplicial
                      ? static_cast<int>(vertices.size()) - 1
                      : static_cast<int>(std::log2(static_cast<double>(vertices.size())));
  std::size_t begin = 0;
  for (int d = 0; d < dim && d < static_cast<int>(dim_counts_.size()); ++d) {
    begin += dim_counts_[static_cast<std::size_t>(d)];
  }
  const std::size_t end = begin + count_dim(dim);
  auto first = cells_.begin() + static_cast<std::ptrdiff_t>(begin);
  auto last = cells_.begin() + static_cast<std::ptrdiff_t>(end);
  auto it = std::lower_bound(first, last, vertices, [](const Cell& c, std::span<const int> v) {
    return std::lexicographical_compare(c.vertices.begin(), c.vertices.end(), v.begin(), v.end());
  });
  if (it != last && std::equal(it->vertices.begin(), it->vertices.end(), vertices.begin(),
                               vertices.end())) {
    return it->id;
  }
  return std::nullopt;
}

Complex build_full_simplex(int n_vertices, int max_dim) {
  if (n_vertices < 1) throw std::invalid_argument("build_full_simplex: need at least one vertex");
  if (max_dim < 0 || max_dim >= n_vertices) {
    throw std::invalid_argument("build_full_simplex: max_dim must be in [0, n_vertices)");
  }
  std::vector<std::vector<int>> simplices;
  for (int k = 1; k <= max_dim + 1; ++k) {
    auto block = combinations(n_vertices, k);
    simplices.insert(simplices.end(), block.begin(), block.end());
  }
  return from_sorted_simplices(simplices);
}

Complex build_simplicial(const std::vector<std::vector<int>>& simplices) {
  std::set<std::vector<int>> closure;
  for (auto s : simplices) {
    if (s.empty()) throw std::invalid_argument("build_simplicial: empty simplex");
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
      throw std::invalid_argument("build_simplicial: repeated vertex in simplex");
    }
    if (s.front() < 0) throw std::invalid_argument("build_simplicial: negative vertex id");
    const std::size_t k = s.size();
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      std::vector<int> face;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) face.push_back(s[i]);
      }
      closure.insert(std::move(face));
    }
  }
  std::vector<std::vector<int>> sorted(closure.begin(), closure.end());
  std::stable_sort(sorted.begin(), sorted.end(), dim_lex_less);
  return from_sorted_simplices(sorted);
}

Complex build_path(int n_vertices) {
  if (n_vertices < 1) throw std::invalid_argument("build_path: need at least one vertex");
  std::vector<std::vector<int>> simplices;
  for (int v = 0; v < n_vertices; ++v) simplices.push_back({v});
  for (int v = 0; v + 1 < n_vertices; ++v) simplices.push_back({v, v + 1});
  return from_sorted_simplices(simplices);
}

Complex build_cubical_grid(int height, int width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("build_cubical_grid: dimensions must be positive");
  }
  std::vector<Cell> cells;
  auto push = [&](int dim, std::vector<int> verts, int anchor, unsigned extent,
                  std::vector<CellId> boundary) {
    Cell c;
    c.id = static_cast<CellId>(cells.size());
    c.dim = dim;
    c.vertices = std::move(verts);
    c.anchor = anchor;
    c.extent = extent;
    c.boundary = std::move(boundary);
    cells.push_back(std::move(c));
  };
  const int n = height * width;
  for (int p = 0; p < n; ++p) push(0, {p}, p, 0u, {});

  // Edges sorted by (first vertex, second vertex): the column step p+1
  // precedes the row step p+w whenever both exist.
  std::vector<CellId> h_edge(static_cast<std::size_t>(n), kNoCell);
  std::vector<CellId> v_edge(static_cast<std::size_t>(n), kNoCell);
  for (int p = 0; p < n; ++p) {
    const int r = p / width;
    const int c = p % width;
    const bool right = c + 1 < width;
    const bool down = r + 1 < height;
    if (right) {
      h_edge[static_cast<std::size_t>(p)] = static_cast<CellId>(cells.size());
      push(1, {p, p + 1}, p, 1u, {p, p + 1});
    }
    if (down) {
      v_edge[static_cast<std::size_t>(p)] = static_cast<CellId>(cells.size());
      push(1, {p, p + width}, p, 2u, {p, p + width});
    }
  }
  for (int p = 0; p < n; ++p) {
    const int r = p / width;
    const int c = p % width;
    if (c + 1 < width && r + 1 < height) {
      const auto up = static_cast<std::size_t>(p);
      push(2, {p, p + 1, p + width, p + width + 1}, p, 3u,
           {h_edge[up], v_edge[up], v_edge[up + 1], h_edge[up + static_cast<std::size_t>(width)]});
    }
  }
  return Complex(ComplexKind::cubical, std::move(cells), height, width);
}

bool validate_filtration(const Complex& complex, const Filtration& filtration) {
  if (filtration.size() != complex.size()) {
    throw std::invalid_argument("filtration has " + std::to_string(filtration.size()) +
                                " values for a complex of " + std::to_string(complex.size()) +
                                " cells");
  }
  for (double v : filtration.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("filtration contains a non-finite value");
  }
  for (const Cell& c : complex.cells()) {
    for (CellId f : c.boundary) {
      if (filtration[f] > filtration[c.id]) return false;
    }
  }
  return true;
}

GradTape::GradTape(std::size_t num_cells, std::size_t num_params)
    : entries_(num_cells), num_params_(num_params) {}

void GradTape::add(CellId cell, int param, double coeff) {
  if (param < 0 || static_cast<std::size_t>(param) >= num_params_) {
    throw std::out_of_range("GradTape: parameter index out of range");
  }
  if (cell < 0 || static_cast<std::size_t>(cell) >= entries_.size()) {
    throw std::out_of_range("GradTape: cell id out of range");
  }
  entries_[static_cast<std::size_t>(cell)].push_back({param, coeff});
}

GradTape GradTape::compose(const GradTape& inner) const {
  if (inner.size() != num_params_) {
    throw std::invalid_argument("GradTape::compose: inner tape must cover every outer parameter");
  }
  GradTape out(entries_.size(), inner.num_params());
  for (std::size_t cell = 0; cell < entries_.size(); ++cell) {
    for (const TapeEntry& outer : entries_[cell]) {
      for (const TapeEntry& e : inner.entries(outer.param)) {
        out.entries_[cell].push_back({e.param, outer.coeff * e.coeff});
      }
    }
  }
  return out;
}

}  // namespace persopt
