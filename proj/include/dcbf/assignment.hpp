#pragma once

// Kuhn-Munkres (Hungarian) minimum-cost assignment for rectangular matrices.

#include <dcbf/geometry.hpp>

#include <limits>
#include <vector>

namespace dcbf {

struct Assignment {
  /// Column assigned to each row, -1 when the row is left unassigned
  /// (only possible when rows > cols).
  std::vector<int> row_to_col;
  double total_cost = 0.0;
};

/// Minimum total cost matching of min(rows, cols) pairs. Shortest augmenting
/// path with dual potentials, O(n^2 m).
inline Assignment kuhn_munkres(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return out;
  if (!cost.allFinite()) throw Error("kuhn_munkres: non-finite cost");

  const bool transposed = rows > cols;
  const Eigen::MatrixXd c = transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
  const int n = static_cast<int>(c.rows());  // n <= m
  const int m = static_cast<int>(c.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based potentials; p[j] = row matched to column j (0 = free).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const int r = p[j] - 1, col = j - 1;
    if (transposed)
      out.row_to_col[static_cast<std::size_t>(col)] = r;
    else
      out.row_to_col[static_cast<std::size_t>(r)] = col;
    out.total_cost += c(r, col);
  }
  return out;
}

}  // namespace dcbf
