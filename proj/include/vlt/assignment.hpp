#pragma once

// Exact square assignment with lexicographic tie-breaking.
//
// Costs are integers so that dual feasibility and tightness are exact. The
// Hungarian pass yields optimal potentials; every perfect matching on the
// tight edges (reduced cost 0) is then optimal, and we walk rows in order
// picking the smallest tight column that still admits a perfect matching.

#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace vlt {

template <std::signed_integral Cost>
struct AssignmentResult {
  std::vector<std::size_t> column_of_row;
  Cost total = 0;
};

template <std::signed_integral Cost>
AssignmentResult<Cost> solve_assignment(const std::vector<std::vector<Cost>>& cost) {
  const std::size_t n = cost.size();
  AssignmentResult<Cost> result;
  if (n == 0) return result;

  constexpr Cost kInf = std::numeric_limits<Cost>::max() / 4;
  // 1-indexed potentials; p[j] is the row matched to column j.
  std::vector<Cost> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<Cost> minv(n + 1, kInf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      Cost delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Cost cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> col(n), row(n);
  for (std::size_t j = 1; j <= n; ++j) {
    col[p[j] - 1] = j - 1;
    row[j - 1] = p[j] - 1;
  }
  auto tight = [&](std::size_t i, std::size_t j) { return cost[i][j] - u[i + 1] - v[j + 1] == 0; };

  // Lexicographic repair over the tight graph.
  std::vector<char> fixed_row(n, false), fixed_col(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (fixed_col[j] || !tight(i, j)) continue;
      if (col[i] == j) break;
      // Re-route: row[j] must reach the column i currently holds.
      const std::size_t target = col[i];
      const std::size_t start = row[j];
      std::vector<char> seen(n, false);
      seen[j] = true;
      std::vector<std::size_t> path_cols;
      std::function<bool(std::size_t)> dfs = [&](std::size_t r) {
        for (std::size_t c = 0; c < n; ++c) {
          if (seen[c] || fixed_col[c] || !tight(r, c)) continue;
          seen[c] = true;
          path_cols.push_back(c);
          if (c == target || dfs(row[c])) return true;
          path_cols.pop_back();
        }
        return false;
      };
      if (!dfs(start)) continue;
      // Shift along the alternating path: start takes path_cols[0], and so on.
      std::size_t r = start;
      for (std::size_t c : path_cols) {
        const std::size_t next = row[c];
        col[r] = c;
        row[c] = r;
        r = next;
      }
      col[i] = j;
      row[j] = i;
      break;
    }
    fixed_row[i] = true;
    fixed_col[col[i]] = true;
  }

  result.column_of_row = col;
  for (std::size_t i = 0; i < n; ++i) result.total += cost[i][col[i]];
  return result;
}

}  // namespace vlt
