#include "persopt/assignment.hpp"

#include <limits>
#include <queue>
#include <stdexcept>

namespace persopt {

std::vector<int> solve_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: cost matrix must be square");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based potentials formulation; column 0 is a virtual root.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = row_of[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0 || delta == kInf) {
        throw std::runtime_error("solve_assignment: no finite assignment exists");
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (std::size_t j = 1; j <= n; ++j) col_of_row[row_of[j] - 1] = static_cast<int>(j - 1);
  return col_of_row;
}

std::vector<int> max_bipartite_matching(const std::vector<std::vector<int>>& adjacency, int n_cols) {
  const int n_rows = static_cast<int>(adjacency.size());
  constexpr int kFree = -1;
  constexpr int kInfDist = std::numeric_limits<int>::max();
  std::vector<int> match_row(static_cast<std::size_t>(n_rows), kFree);
  std::vector<int> match_col(static_cast<std::size_t>(n_cols), kFree);
  std::vector<int> dist(static_cast<std::size_t>(n_rows));

  auto bfs = [&]() {
    std::queue<int> q;
    bool found = false;
    for (int r = 0; r < n_rows; ++r) {
      if (match_row[static_cast<std::size_t>(r)] == kFree) {
        dist[static_cast<std::size_t>(r)] = 0;
        q.push(r);
      } else {
        dist[static_cast<std::size_t>(r)] = kInfDist;
      }
    }
    while (!q.empty()) {
      const int r = q.front();
      q.pop();
      for (int c : adjacency[static_cast<std::size_t>(r)]) {
        const int r2 = match_col[static_cast<std::size_t>(c)];
        if (r2 == kFree) {
          found = true;
        } else if (dist[static_cast<std::size_t>(r2)] == kInfDist) {
          dist[static_cast<std::size_t>(r2)] = dist[static_cast<std::size_t>(r)] + 1;
          q.push(r2);
        }
      }
    }
    return found;
  };

  auto dfs = [&](auto&& self, int r) -> bool {
    for (int c : adjacency[static_cast<std::size_t>(r)]) {
      const int r2 = match_col[static_cast<std::size_t>(c)];
      if (r2 == kFree ||
          (dist[static_cast<std::size_t>(r2)] == dist[static_cast<std::size_t>(r)] + 1 && self(self, r2))) {
        match_row[static_cast<std::size_t>(r)] = c;
        match_col[static_cast<std::size_t>(c)] = r;
        return true;
      }
    }
    dist[static_cast<std::size_t>(r)] = kInfDist;
    return false;
  };

  while (bfs()) {
    for (int r = 0; r < n_rows; ++r) {
      if (match_row[static_cast<std::size_t>(r)] == kFree) dfs(dfs, r);
    }
  }
  return match_row;
}

}  // namespace persopt
