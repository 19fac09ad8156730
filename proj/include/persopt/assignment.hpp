#pragma once

#include <vector>

#include "persopt/data.hpp"

namespace persopt {

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method with potentials, O(n^3)).  Entries may be +infinity to forbid a
/// pairing as long as some finite assignment exists.  Returns, for every
/// row, the column assigned to it.
std::vector<int> solve_assignment(const Matrix& cost);

/// Maximum bipartite matching on a square 0/1 adjacency (Hopcroft-Karp).
/// Returns row -> column (or -1) for a maximum matching.
std::vector<int> max_bipartite_matching(const std::vector<std::vector<int>>& adjacency, int n_cols);

}  // namespace persopt
