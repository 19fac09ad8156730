#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace persopt {

using CellId = std::int32_t;
inline constexpr CellId kNoCell = -1;

enum class ComplexKind { simplicial, cubical };

/// One cell of a finite complex.  For cubical cells `vertices` lists the
/// pixel-vertices of the cube, `anchor` is its lowest vertex and `extent`
/// has bit 0 set when the cube spans a column step and bit 1 for a row step.
struct Cell {
  CellId id = kNoCell;
  int dim = 0;
  std::vector<int> vertices;
  std::vector<CellId> boundary;
  int anchor = -1;
  unsigned extent = 0;
};

/// A finite simplicial or cubical complex, closed under faces.
///
/// Ids are contiguous and ordered by dimension, then lexicographically by
/// vertex list, so vertex `v` always has id `v`.  Immutable once built.
class Complex {
 public:
  Complex(ComplexKind kind, std::vector<Cell> cells, int grid_height = 0,
          int grid_width = 0);

  ComplexKind kind() const { return kind_; }
  std::size_t size() const { return cells_.size(); }
  const Cell& cell(CellId id) const { return cells_[static_cast<std::size_t>(id)]; }
  std::span<const Cell> cells() const { return cells_; }

  int max_dim() const { return max_dim_; }
  std::size_t num_vertices() const { return count_dim(0); }
  std::size_t count_dim(int dim) const;
  long euler_characteristic() const;

  /// Pixel grid shape of a cubical complex; zero for simplicial ones.
  int grid_height() const { return grid_height_; }
  int grid_width() const { return grid_width_; }

  /// Id of the cell with exactly these (sorted) vertices, if any.
  std::optional<CellId> find(std::span<const int> vertices) const;

 private:
  ComplexKind kind_;
  std::vector<Cell> cells_;
  std::vector<std::size_t> dim_counts_;
  int max_dim_ = -1;
  int grid_height_ = 0;
  int grid_width_ = 0;
};

/// All subsets of {0..n_vertices-1} with at most max_dim+1 elements.
Complex build_full_simplex(int n_vertices, int max_dim);

/// Closure of the given simplices (each a list of vertex ids).
Complex build_simplicial(const std::vector<std::vector<int>>& simplices);

/// Path graph 0 - 1 - ... - (n-1).
Complex build_path(int n_vertices);

/// Cubical complex of an h x w image where pixels are vertices, adjacent
/// pixels span edges and 2x2 pixel blocks span squares.
Complex build_cubical_grid(int height, int width);

/// One value per cell.
struct Filtration {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](CellId id) const { return values[static_cast<std::size_t>(id)]; }
};

/// True iff every cell's value is >= the values of its faces.  Throws
/// std::invalid_argument on a length mismatch or a NaN value.
bool validate_filtration(const Complex& complex, const Filtration& filtration);

struct TapeEntry {
  int param;
  double coeff;
};

/// Per-cell partial derivatives of a parametrized filtration at the current
/// parameter value: cell -> [(parameter index, d value / d parameter)].
class GradTape {
 public:
  GradTape() = default;
  GradTape(std::size_t num_cells, std::size_t num_params);

  std::size_t size() const { return entries_.size(); }
  std::size_t num_params() const { return num_params_; }

  void add(CellId cell, int param, double coeff);
  std::span<const TapeEntry> entries(CellId cell) const {
    return entries_[static_cast<std::size_t>(cell)];
  }

  /// Chain rule: this tape differentiates cells with respect to
  /// intermediate quantities, `inner` differentiates those quantities with
  /// respect to the final parameters.
  GradTape compose(const GradTape& inner) const;

 private:
  std::vector<std::vector<TapeEntry>> entries_;
  std::size_t num_params_ = 0;
};

}  // namespace persopt
