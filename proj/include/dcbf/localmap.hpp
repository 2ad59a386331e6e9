#pragma once

// Robot-centered 2.5D elevation grid and its traversability threshold mask.

#include <dcbf/geometry.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace dcbf {

struct LocalMapConfig {
  double size_x = 10.0;      // m
  double size_y = 10.0;      // m
  double resolution = 0.1;   // m
  double ground_z = 0.0;     // elevation assumed for unknown cells
  double z_min = -1.0;       // passthrough limits on point height
  double z_max = 3.0;
};

struct TraversabilityThresholds {
  double s_max = 0.8;  // Sobel gradient magnitude
  double l_max = 0.8;  // Laplacian magnitude
  double h_max = 0.2;  // step height, m
};

struct Cell {
  int col = 0;
  int row = 0;
  bool operator==(const Cell&) const = default;
};

class ElevationGrid {
 public:
  ElevationGrid() = default;

  ElevationGrid(const Vec2& origin, double resolution, int width, int height,
                double ground_z = 0.0)
      : origin_(origin),
        resolution_(resolution),
        width_(width),
        height_(height),
        ground_z_(ground_z),
        elevation_(static_cast<std::size_t>(width) * height,
                   std::numeric_limits<double>::quiet_NaN()),
        mask_(static_cast<std::size_t>(width) * height, 0) {
    if (!(resolution > 0.0)) throw Error("grid resolution must be positive");
    if (width < 1 || height < 1) throw Error("grid must have at least one cell");
  }

  const Vec2& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double ground_z() const { return ground_z_; }
  std::size_t cell_count() const { return elevation_.size(); }

  bool contains(const Cell& c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
  }

  bool is_border(const Cell& c) const {
    return c.col == 0 || c.row == 0 || c.col == width_ - 1 || c.row == height_ - 1;
  }

  std::size_t index(const Cell& c) const {
    return static_cast<std::size_t>(c.row) * width_ + c.col;
  }

  /// Cell containing a world point; may lie outside the grid.
  Cell cell_of(const Vec2& p) const {
    return {static_cast<int>(std::floor((p.x() - origin_.x()) / resolution_ + 0.5 * width_)),
            static_cast<int>(std::floor((p.y() - origin_.y()) / resolution_ + 0.5 * height_))};
  }

  Vec2 cell_center(const Cell& c) const {
    return {origin_.x() + (c.col - 0.5 * width_ + 0.5) * resolution_,
            origin_.y() + (c.row - 0.5 * height_ + 0.5) * resolution_};
  }

  bool known(const Cell& c) const { return !std::isnan(elevation_[index(c)]); }

  /// Raw elevation; NaN when no point fell in the cell.
  double raw_elevation(const Cell& c) const { return elevation_[index(c)]; }

  /// Elevation with unknown cells imputed by the ground plane.
  double elevation(const Cell& c) const {
    const double z = elevation_[index(c)];
    return std::isnan(z) ? ground_z_ : z;
  }

  void raise(const Cell& c, double z) {
    double& e = elevation_[index(c)];
    if (std::isnan(e) || z > e) e = z;
  }

  void set_elevation(const Cell& c, double z) { elevation_[index(c)] = z; }

  bool obstacle(const Cell& c) const { return mask_[index(c)] != 0; }
  void set_obstacle(const Cell& c, bool v) { mask_[index(c)] = v ? 1 : 0; }

  std::span<const double> elevation_data() const { return elevation_; }
  std::span<const std::uint8_t> mask_data() const { return mask_; }

  /// World-frame centers of all masked cells, row-major order.
  std::vector<Vec2> obstacle_cells() const {
    std::vector<Vec2> out;
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c)
        if (mask_[index({c, r})]) out.push_back(cell_center({c, r}));
    return out;
  }

 private:
  Vec2 origin_ = Vec2::Zero();
  double resolution_ = 0.1;
  int width_ = 0;
  int height_ = 0;
  double ground_z_ = 0.0;
  std::vector<double> elevation_;
  std::vector<std::uint8_t> mask_;
};

/// Crops the cloud to the local window around the robot and keeps the
/// maximum z per cell.
inline ElevationGrid build_grid(std::span<const Vec3> points, const RobotState& robot,
                                const LocalMapConfig& cfg = {}) {
  if (!(cfg.resolution > 0.0)) throw Error("grid resolution must be positive");
  const int w = std::max(1, static_cast<int>(std::lround(cfg.size_x / cfg.resolution)));
  const int h = std::max(1, static_cast<int>(std::lround(cfg.size_y / cfg.resolution)));
  ElevationGrid grid(robot.position(), cfg.resolution, w, h, cfg.ground_z);
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw Error("build_grid: non-finite point");
    if (p.z() < cfg.z_min || p.z() > cfg.z_max) continue;
    const Cell c = grid.cell_of(p.head<2>());
    if (!grid.contains(c)) continue;
    grid.raise(c, p.z());
  }
  return grid;
}

struct GradientResponse {
  double g_s = 0.0;  // Sobel magnitude
  double g_l = 0.0;  // |Laplacian|
};

namespace detail {

inline std::array<double, 9> neighborhood(const ElevationGrid& g, const Cell& c) {
  std::array<double, 9> m{};
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc)
      m[(dr + 1) * 3 + (dc + 1)] = g.elevation({c.col + dc, c.row + dr});
  return m;
}

}  // namespace detail

/// 3x3 Sobel magnitude and 8-connected Laplacian at an interior cell.
inline GradientResponse sobel_laplace(const ElevationGrid& grid, const Cell& cell) {
  if (!grid.contains(cell) || grid.is_border(cell)) throw Error("no neighborhood");
  static constexpr std::array<double, 9> kSx{-1, 0, 1, -2, 0, 2, -1, 0, 1};
  static constexpr std::array<double, 9> kSy{-1, -2, -1, 0, 0, 0, 1, 2, 1};
  static constexpr std::array<double, 9> kLap{1, 1, 1, 1, -8, 1, 1, 1, 1};
  const auto m = detail::neighborhood(grid, cell);
  double sx = 0.0, sy = 0.0, lap = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    sx += kSx[i] * m[i];
    sy += kSy[i] * m[i];
    lap += kLap[i] * m[i];
  }
  return {std::hypot(sx, sy), std::abs(lap)};
}

/// Largest absolute elevation difference to the 8 adjacent cells.
inline double step_height(const ElevationGrid& grid, const Cell& cell) {
  if (!grid.contains(cell) || grid.is_border(cell)) throw Error("no neighborhood");
  const auto m = detail::neighborhood(grid, cell);
  double step = 0.0;
  for (std::size_t i = 0; i < 9; ++i) step = std::max(step, std::abs(m[i] - m[4]));
  return step;
}

/// Marks a cell when its gradient, curvature or step height exceeds the
/// robot's limits. Border cells stay free.
inline ElevationGrid obstacle_mask(ElevationGrid grid, const TraversabilityThresholds& th) {
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      const Cell cell{c, r};
      if (grid.is_border(cell)) {
        grid.set_obstacle(cell, false);
        continue;
      }
      const auto g = sobel_laplace(grid, cell);
      const bool hit = g.g_s > th.s_max || g.g_l > th.l_max || step_height(grid, cell) > th.h_max;
      grid.set_obstacle(cell, hit);
    }
  }
  return grid;
}

}  // namespace dcbf
