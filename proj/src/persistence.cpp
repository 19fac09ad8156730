#include "persopt/persistence.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace persopt {

TotalOrder total_order(const Complex& complex, const Filtration& filtration) {
  if (!validate_filtration(complex, filtration)) {
    throw std::invalid_argument("total_order: filtration is not monotone under the face relation");
  }
  TotalOrder order;
  order.perm.resize(complex.size());
  std::iota(order.perm.begin(), order.perm.end(), CellId{0});
  std::sort(order.perm.begin(), order.perm.end(), [&](CellId a, CellId b) {
    const double va = filtration[a];
    const double vb = filtration[b];
    if (va != vb) return va < vb;
    const int da = complex.cell(a).dim;
    const int db = complex.cell(b).dim;
    if (da != db) return da < db;
    return a < b;
  });
  order.rank.resize(complex.size());
  for (std::size_t r = 0; r < order.perm.size(); ++r) {
    order.rank[static_cast<std::size_t>(order.perm[r])] = r;
  }
  return order;
}

std::size_t PairSet::num_pairs() const {
  std::size_t n = 0;
  for (const auto& p : pairs) n += p.size();
  return n;
}

std::size_t PairSet::num_essential() const {
  std::size_t n = 0;
  for (const auto& e : essential) n += e.size();
  return n;
}

PairSet compute_pairs(const Complex& complex, const TotalOrder& order) {
  const std::size_t n = complex.size();
  if (order.perm.size() != n || order.rank.size() != n) {
    throw std::invalid_argument("compute_pairs: order does not match the complex");
  }
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const int top = complex.max_dim();

  // pivot_owner[row] = column whose lowest entry is `row` after reduction.
  std::vector<std::size_t> pivot_owner(n, kNone);
  std::vector<bool> cleared(n, false);
  std::vector<std::vector<std::size_t>> reduced(n);
  std::vector<std::size_t> column;
  std::vector<std::size_t> scratch;

  for (int dim = top; dim >= 1; --dim) {
    for (std::size_t j = 0; j < n; ++j) {
      const Cell& cell = complex.cell(order.perm[j]);
      if (cell.dim != dim || cleared[j]) continue;
      column.clear();
      for (CellId f : cell.boundary) column.push_back(order.rank[static_cast<std::size_t>(f)]);
      std::sort(column.begin(), column.end());
      while (!column.empty()) {
        const std::size_t low = column.back();
        const std::size_t owner = pivot_owner[low];
        if (owner == kNone) {
          pivot_owner[low] = j;
          cleared[low] = true;
          reduced[j] = column;
          break;
        }
        const auto& other = reduced[owner];
        scratch.clear();
        std::set_symmetric_difference(column.begin(), column.end(), other.begin(), other.end(),
                                      std::back_inserter(scratch));
        column.swap(scratch);
      }
    }
  }

  PairSet out;
  out.pairs.resize(static_cast<std::size_t>(std::max(top, 0)) + 1);
  out.essential.resize(static_cast<std::size_t>(std::max(top, 0)) + 1);
  std::vector<bool> destroyer(n, false);
  for (std::size_t row = 0; row < n; ++row) {
    if (pivot_owner[row] != kNone) destroyer[pivot_owner[row]] = true;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const CellId id = order.perm[j];
    const auto dim = static_cast<std::size_t>(complex.cell(id).dim);
    if (destroyer[j]) {
      const std::size_t low = reduced[j].back();
      out.pairs[dim - 1].push_back({order.perm[low], id});
    } else if (pivot_owner[j] == kNone) {
      out.essential[dim].push_back(id);
    }
  }
  return out;
}

Diagram::Diagram(std::vector<DimensionDiagram> dims) : dims_(std::move(dims)) {
  for (std::size_t k = 0; k < dims_.size(); ++k) dims_[k].dim = static_cast<int>(k);
}

const DimensionDiagram& Diagram::operator[](int dim) const {
  static const DimensionDiagram empty{};
  if (dim < 0 || dim >= num_dims()) return empty;
  return dims_[static_cast<std::size_t>(dim)];
}

DimensionDiagram& Diagram::at(int dim) {
  if (dim < 0) throw std::out_of_range("Diagram::at: negative dimension");
  while (dim >= num_dims()) {
    dims_.push_back(DimensionDiagram{});
    dims_.back().dim = num_dims() - 1;
  }
  return dims_[static_cast<std::size_t>(dim)];
}

namespace {

void sort_points(DimensionDiagram& dd) {
  std::sort(dd.regular.begin(), dd.regular.end(), [](const RegularPoint& a, const RegularPoint& b) {
    if (a.birth != b.birth) return a.birth < b.birth;
    if (a.death != b.death) return a.death < b.death;
    if (a.birth_cell != b.birth_cell) return a.birth_cell < b.birth_cell;
    return a.death_cell < b.death_cell;
  });
  std::sort(dd.essential.begin(), dd.essential.end(),
            [](const EssentialPoint& a, const EssentialPoint& b) {
              if (a.birth != b.birth) return a.birth < b.birth;
              return a.birth_cell < b.birth_cell;
            });
}

}  // namespace

Diagram assemble_diagram(const Complex& complex, const Filtration& filtration, const PairSet& pairs) {
  if (filtration.size() != complex.size()) {
    throw std::invalid_argument("assemble_diagram: filtration length mismatch");
  }
  std::vector<DimensionDiagram> dims(pairs.pairs.size());
  for (std::size_t k = 0; k < pairs.pairs.size(); ++k) {
    DimensionDiagram& dd = dims[k];
    for (const PersistencePair& p : pairs.pairs[k]) {
      dd.regular.push_back({filtration[p.creator], filtration[p.destroyer], p.creator, p.destroyer});
    }
    for (CellId c : pairs.essential[k]) dd.essential.push_back({filtration[c], c});
    sort_points(dd);
  }
  return Diagram(std::move(dims));
}

Diagram compute_diagram(const Complex& complex, const Filtration& filtration) {
  const TotalOrder order = total_order(complex, filtration);
  return assemble_diagram(complex, filtration, compute_pairs(complex, order));
}

Diagram cap_essential(const Diagram& d, int dim, double cap) {
  Diagram out = d;
  DimensionDiagram& dd = out.at(dim);
  for (const EssentialPoint& e : dd.essential) {
    dd.regular.push_back({e.birth, cap, e.birth_cell, kNoCell});
  }
  dd.essential.clear();
  sort_points(dd);
  return out;
}

DiagramGradient DiagramGradient::zeros_like(const Diagram& d) {
  DiagramGradient g;
  for (const DimensionDiagram& dd : d.dims()) {
    g.regular.emplace_back(dd.regular.size(), std::array<double, 2>{0.0, 0.0});
    g.essential.emplace_back(dd.essential.size(), 0.0);
  }
  return g;
}

DiagramGradient& DiagramGradient::operator+=(const DiagramGradient& other) {
  if (other.regular.size() != regular.size() || other.essential.size() != essential.size()) {
    throw std::invalid_argument("DiagramGradient: shape mismatch");
  }
  for (std::size_t k = 0; k < regular.size(); ++k) {
    if (regular[k].size() != other.regular[k].size() ||
        essential[k].size() != other.essential[k].size()) {
      throw std::invalid_argument("DiagramGradient: shape mismatch");
    }
    for (std::size_t i = 0; i < regular[k].size(); ++i) {
      regular[k][i][0] += other.regular[k][i][0];
      regular[k][i][1] += other.regular[k][i][1];
    }
    for (std::size_t i = 0; i < essential[k].size(); ++i) essential[k][i] += other.essential[k][i];
  }
  return *this;
}

DiagramGradient& DiagramGradient::operator*=(double s) {
  for (auto& dim : regular) {
    for (auto& g : dim) {
      g[0] *= s;
      g[1] *= s;
    }
  }
  for (auto& dim : essential) {
    for (auto& g : dim) g *= s;
  }
  return *this;
}

std::vector<double> pull_back_gradient(const Diagram& d, const DiagramGradient& grad,
                                       const GradTape& tape) {
  if (grad.regular.size() != static_cast<std::size_t>(d.num_dims()) ||
      grad.essential.size() != static_cast<std::size_t>(d.num_dims())) {
    throw std::invalid_argument("pull_back_gradient: gradient has the wrong number of dimensions");
  }
  std::vector<double> out(tape.num_params(), 0.0);
  auto route = [&](CellId cell, double g) {
    if (cell == kNoCell || g == 0.0) return;
    if (static_cast<std::size_t>(cell) >= tape.size()) {
      throw std::invalid_argument("pull_back_gradient: cell id outside the tape");
    }
    for (const TapeEntry& e : tape.entries(cell)) out[static_cast<std::size_t>(e.param)] += g * e.coeff;
  };
  for (const DimensionDiagram& dd : d.dims()) {
    const auto k = static_cast<std::size_t>(dd.dim);
    if (grad.regular[k].size() != dd.regular.size() || grad.essential[k].size() != dd.essential.size()) {
      throw std::invalid_argument("pull_back_gradient: point count mismatch in dimension " +
                                  std::to_string(dd.dim));
    }
    for (std::size_t i = 0; i < dd.regular.size(); ++i) {
      route(dd.regular[i].birth_cell, grad.regular[k][i][0]);
      route(dd.regular[i].death_cell, grad.regular[k][i][1]);
    }
    for (std::size_t i = 0; i < dd.essential.size(); ++i) {
      route(dd.essential[i].birth_cell, grad.essential[k][i]);
    }
  }
  return out;
}

nlohmann::json diagram_to_json(const Diagram& d, bool with_cells) {
  nlohmann::json out = nlohmann::json::array();
  for (const DimensionDiagram& dd : d.dims()) {
    nlohmann::json regular = nlohmann::json::array();
    nlohmann::json essential = nlohmann::json::array();
    nlohmann::json regular_cells = nlohmann::json::array();
    nlohmann::json essential_cells = nlohmann::json::array();
    for (const RegularPoint& p : dd.regular) {
      regular.push_back({p.birth, p.death});
      regular_cells.push_back({p.birth_cell, p.death_cell});
    }
    for (const EssentialPoint& e : dd.essential) {
      essential.push_back(e.birth);
      essential_cells.push_back(e.birth_cell);
    }
    nlohmann::json entry = {{"dim", dd.dim}, {"regular", regular}, {"essential", essential}};
    if (with_cells) entry["cells"] = {{"regular", regular_cells}, {"essential", essential_cells}};
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace persopt
