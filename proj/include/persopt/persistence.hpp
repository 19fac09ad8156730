#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "persopt/complex.hpp"
#include "json.hpp"

namespace persopt {

/// Cells sorted by (value, dimension, id).  `rank[id]` is the position of
/// cell `id` in `perm`.
struct TotalOrder {
  std::vector<CellId> perm;
  std::vector<std::size_t> rank;
};

/// Refines the preorder of a filtration into a total order.  Throws
/// std::invalid_argument when the filtration is not monotone.
TotalOrder total_order(const Complex& complex, const Filtration& filtration);

struct PersistencePair {
  CellId creator = kNoCell;
  CellId destroyer = kNoCell;
};

/// Persistence pairs and unpaired creators, indexed by the creator's
/// homology dimension.
struct PairSet {
  std::vector<std::vector<PersistencePair>> pairs;
  std::vector<std::vector<CellId>> essential;

  std::size_t num_pairs() const;
  std::size_t num_essential() const;
};

/// Boundary-matrix reduction over Z/2 with columns in filtration order.
/// Dimensions are processed top-down so that columns of creators already
/// known to be paired are skipped (twist/clearing).
PairSet compute_pairs(const Complex& complex, const TotalOrder& order);

struct RegularPoint {
  double birth = 0.0;
  double death = 0.0;
  CellId birth_cell = kNoCell;
  CellId death_cell = kNoCell;  // kNoCell: death is a constant, not a cell value

  double persistence() const { return death - birth; }
};

struct EssentialPoint {
  double birth = 0.0;
  CellId birth_cell = kNoCell;
};

struct DimensionDiagram {
  int dim = 0;
  std::vector<RegularPoint> regular;
  std::vector<EssentialPoint> essential;
};

/// Per-dimension persistence diagram.  Regular points are sorted by
/// (birth, death), essential points by birth; every coordinate keeps the
/// id of the cell whose filtration value it is.
class Diagram {
 public:
  Diagram() = default;
  explicit Diagram(std::vector<DimensionDiagram> dims);

  /// Diagram in dimension `dim`; an empty one when `dim` is not present.
  const DimensionDiagram& operator[](int dim) const;
  DimensionDiagram& at(int dim);
  int num_dims() const { return static_cast<int>(dims_.size()); }
  const std::vector<DimensionDiagram>& dims() const { return dims_; }

 private:
  std::vector<DimensionDiagram> dims_;
};

Diagram assemble_diagram(const Complex& complex, const Filtration& filtration, const PairSet& pairs);

/// total_order + compute_pairs + assemble_diagram.
Diagram compute_diagram(const Complex& complex, const Filtration& filtration);

/// Copy of `d` where the essential points of `dim` become regular points
/// dying at the constant `cap`.
Diagram cap_essential(const Diagram& d, int dim, double cap);

/// d loss / d coordinate for every point of a diagram, shaped like it.
struct DiagramGradient {
  std::vector<std::vector<std::array<double, 2>>> regular;  // (d/d birth, d/d death)
  std::vector<std::vector<double>> essential;

  static DiagramGradient zeros_like(const Diagram& d);
  DiagramGradient& operator+=(const DiagramGradient& other);
  DiagramGradient& operator*=(double s);
};

/// Routes diagram-coordinate gradients through their cells to the
/// parameters of the filtration family recorded in `tape`.
std::vector<double> pull_back_gradient(const Diagram& d, const DiagramGradient& grad,
                                       const GradTape& tape);

/// `[{"dim": k, "regular": [[b, d], ...], "essential": [b, ...]}, ...]`,
/// with a `"cells"` object holding routing ids when requested.
nlohmann::json diagram_to_json(const Diagram& d, bool with_cells = false);

}  // namespace persopt
