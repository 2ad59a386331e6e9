#pragma once

// One perception frame: cloud -> elevation grid -> obstacle mask -> clusters
// -> minimum bounding ellipses.

#include <dcbf/dbscan.hpp>
#include <dcbf/localmap.hpp>
#include <dcbf/min_bounding_ellipse.hpp>

#include <span>
#include <vector>

namespace dcbf {

struct PerceptionParams {
  LocalMapConfig map;
  TraversabilityThresholds thresholds;
  double dbscan_eps = 0.3;
  int dbscan_min_pts = 3;
};

struct PerceptionFrame {
  ElevationGrid grid;  // mask filled
  std::vector<Vec2> cells;
  DbscanResult clusters;
  std::vector<Ellipse> ellipses;  // one per cluster, same order
};

inline PerceptionFrame perceive(std::span<const Vec3> cloud, const RobotState& robot,
                                const PerceptionParams& p) {
  PerceptionFrame f;
  f.grid = obstacle_mask(build_grid(cloud, robot, p.map), p.thresholds);
  f.cells = f.grid.obstacle_cells();
  f.clusters = dbscan(f.cells, p.dbscan_eps, p.dbscan_min_pts);
  MbeOptions opt;
  opt.axis_floor = p.map.resolution;
  for (const Cluster& c : f.clusters.clusters) f.ellipses.push_back(min_bounding_ellipse(c.members, opt));
  return f;
}

}  // namespace dcbf
