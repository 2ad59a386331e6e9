#pragma once

#include <dcbf/geometry.hpp>

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace dcbf {

struct Cluster {
  std::vector<Vec2> members;
};

struct DbscanResult {
  std::vector<Cluster> clusters;
  std::vector<Vec2> noise;
  /// Cluster index per input point, -1 for noise.
  std::vector<int> labels;
};

/// Density-based clustering. A point is core when at least `min_pts` points
/// (itself included) lie within `eps`; clusters are the density-connected
/// components grown from core points in input order.
inline DbscanResult dbscan(std::span<const Vec2> pts, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error("dbscan: eps must be positive");
  if (min_pts < 1) throw Error("dbscan: min_pts must be >= 1");

  const std::size_t n = pts.size();
  DbscanResult out;
  out.labels.assign(n, -1);
  if (n == 0) return out;

  // Sweep along x so each range query only touches a slab of width 2*eps.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pts[i].x() < pts[j].x(); });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = rank[i];
    for (std::size_t k = r + 1; k-- > 0;) {
      const std::size_t j = order[k];
      if (pts[i].x() - pts[j].x() > eps) break;
      if ((pts[i] - pts[j]).squaredNorm() <= eps2) nbrs[i].push_back(j);
    }
    for (std::size_t k = r + 1; k < n; ++k) {
      const std::size_t j = order[k];
      if (pts[j].x() - pts[i].x() > eps) break;
      if ((pts[i] - pts[j]).squaredNorm() <= eps2) nbrs[i].push_back(j);
    }
    std::sort(nbrs[i].begin(), nbrs[i].end());
  }

  auto is_core = [&](std::size_t i) {
    return static_cast<int>(nbrs[i].size()) >= min_pts;
  };

  int next = 0;
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != -1 || !is_core(i)) continue;
    const int id = next++;
    out.labels[i] = id;
    frontier.assign(1, i);
    while (!frontier.empty()) {
      const std::size_t p = frontier.back();
      frontier.pop_back();
      if (!is_core(p)) continue;
      for (std::size_t q : nbrs[p]) {
        if (out.labels[q] != -1) continue;
        out.labels[q] = id;
        frontier.push_back(q);
      }
    }
  }

  out.clusters.resize(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] < 0)
      out.noise.push_back(pts[i]);
    else
      out.clusters[static_cast<std::size_t>(out.labels[i])].members.push_back(pts[i]);
  }
  return out;
}

}  // namespace dcbf
