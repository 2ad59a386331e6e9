#pragma once

// Ground-truth world: scripted obstacle motion, planar ray casting with
// height tags, footprint distances and the reference path.

#include <dcbf/barrier.hpp>
#include <dcbf/sim/scenario.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace dcbf::sim {

/// Obstacle position at time t. Scripts are closed-form in t, so the
/// trajectory does not depend on the tick size.
inline Vec2 obstacle_position(const Motion& m, double t) {
  const double tau = std::max(0.0, t - m.start_time);
  switch (m.type) {
    case Motion::Type::kStatic:
      return m.start;
    case Motion::Type::kConstantVelocity:
      return m.start + m.velocity * tau;
    case Motion::Type::kSinusoidal:
      return m.start + m.amplitude * std::sin(2.0 * kPi * tau / m.period + m.phase);
    case Motion::Type::kWaypoint: {
      const auto& w = m.waypoints;
      if (w.size() == 1 || m.speed <= 0.0) return w.front();
      std::vector<double> cum{0.0};
      for (std::size_t i = 1; i < w.size(); ++i) cum.push_back(cum.back() + (w[i] - w[i - 1]).norm());
      const double total = cum.back();
      if (total <= 0.0) return w.front();
      double s = m.speed * tau;
      if (m.loop) {
        // Closed loop back to the first waypoint.
        const double lap = total + (w.front() - w.back()).norm();
        s = std::fmod(s, lap);
        if (s > total) {
          const double f = (s - total) / (lap - total);
          return w.back() + f * (w.front() - w.back());
        }
      } else if (s >= total) {
        return w.back();
      }
      std::size_t i = 1;
      while (i + 1 < w.size() && cum[i] < s) ++i;
      const double seg = cum[i] - cum[i - 1];
      const double f = seg > 0.0 ? (s - cum[i - 1]) / seg : 0.0;
      return w[i - 1] + f * (w[i] - w[i - 1]);
    }
  }
  return m.start;
}

struct ObstacleState {
  std::string id;
  bool dynamic = false;
  Footprint shape;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

inline std::vector<ObstacleState> obstacles_at(const Scenario& s, double t) {
  std::vector<ObstacleState> out;
  out.reserve(s.obstacles.size());
  constexpr double h = 1e-4;
  for (const ObstacleSpec& o : s.obstacles) {
    ObstacleState st;
    st.id = o.id;
    st.dynamic = o.dynamic;
    st.shape = o.shape;
    st.position = obstacle_position(o.motion, t);
    st.velocity = (obstacle_position(o.motion, t + h) - obstacle_position(o.motion, std::max(0.0, t - h))) /
                  (t + h - std::max(0.0, t - h));
    out.push_back(std::move(st));
  }
  return out;
}

/// Signed distance from p to the footprint boundary; negative inside.
inline double surface_distance(const ObstacleState& o, const Vec2& p) {
  if (o.shape.kind == Footprint::Kind::kCylinder) return (p - o.position).norm() - o.shape.radius;
  const double c = std::cos(o.shape.yaw), s = std::sin(o.shape.yaw);
  const Vec2 d = p - o.position;
  const Vec2 q(std::abs(c * d.x() + s * d.y()), std::abs(-s * d.x() + c * d.y()));
  const Vec2 e = q - o.shape.half_extent;
  const Vec2 outside = e.cwiseMax(0.0);
  return outside.norm() + std::min(std::max(e.x(), e.y()), 0.0);
}

/// Distance along the unit ray p + t*dir to the footprint, if hit.
inline std::optional<double> ray_hit(const ObstacleState& o, const Vec2& p, const Vec2& dir) {
  if (o.shape.kind == Footprint::Kind::kCylinder) {
    const Vec2 m = p - o.position;
    const double b = m.dot(dir);
    const double c = m.squaredNorm() - o.shape.radius * o.shape.radius;
    if (c <= 0.0) return 0.0;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double t = -b - std::sqrt(disc);
    if (t < 0.0) return std::nullopt;
    return t;
  }
  // Slab test in the box frame.
  const double c = std::cos(o.shape.yaw), s = std::sin(o.shape.yaw);
  const Vec2 d = p - o.position;
  const Vec2 lp(c * d.x() + s * d.y(), -s * d.x() + c * d.y());
  const Vec2 ld(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y());
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i) {
    const double h = o.shape.half_extent(i);
    if (std::abs(ld(i)) < 1e-15) {
      if (std::abs(lp(i)) > h) return std::nullopt;
      continue;
    }
    double ta = (-h - lp(i)) / ld(i), tb = (h - lp(i)) / ld(i);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t1 < 0.0) return std::nullopt;
  return std::max(t0, 0.0);
}

/// Planar scan from the robot pose. Each beam returns its first hit, tagged
/// with the obstacle height and with Gaussian range noise; ground points at
/// z = 0 are emitted every ring_step metres along the free part of the beam.
inline std::vector<Vec3> raycast(const std::vector<ObstacleState>& obstacles, const RobotState& pose,
                                 const SensorSpec& sensor, std::mt19937_64& rng) {
  if (sensor.beams < 1) throw Error("raycast: beam count must be >= 1");
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Vec3> cloud;
  const Vec2 origin = pose.position();
  for (int i = 0; i < sensor.beams; ++i) {
    const double ang = pose.heading + 2.0 * kPi * i / sensor.beams;
    const Vec2 dir(std::cos(ang), std::sin(ang));
    double best = sensor.max_range;
    double height = 0.0;
    bool hit = false;
    for (const ObstacleState& o : obstacles) {
      const auto t = ray_hit(o, origin, dir);
      if (t && *t <= best) {
        best = *t;
        height = o.shape.height;
        hit = true;
      }
    }
    for (double r = sensor.ring_step; r < best; r += sensor.ring_step) {
      const Vec2 g = origin + r * dir;
      cloud.emplace_back(g.x(), g.y(), 0.0);
    }
    if (hit) {
      const double range = best + sensor.noise * noise(rng);
      const Vec2 q = origin + range * dir;
      cloud.emplace_back(q.x(), q.y(), height);
    }
  }
  return cloud;
}

/// True when the footprint overlaps the axis-aligned local window around p.
inline bool in_window(const ObstacleState& o, const Vec2& center, double size_x, double size_y) {
  const double r = o.shape.kind == Footprint::Kind::kCylinder ? o.shape.radius
                                                              : o.shape.half_extent.norm();
  return std::abs(o.position.x() - center.x()) <= 0.5 * size_x + r &&
         std::abs(o.position.y() - center.y()) <= 0.5 * size_y + r;
}

/// Polyline reference with arc-length sampling.
class ReferencePath {
 public:
  explicit ReferencePath(std::vector<Vec2> pts) : pts_(std::move(pts)) {
    if (pts_.size() < 2) throw Error("reference path needs at least two points");
    cum_.push_back(0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) cum_.push_back(cum_.back() + (pts_[i] - pts_[i - 1]).norm());
    if (!(cum_.back() > 0.0)) throw Error("reference path has zero length");
  }

  double length() const { return cum_.back(); }

  Vec2 point(double s) const {
    const auto [i, f] = locate(s);
    return pts_[i] + f * (pts_[i + 1] - pts_[i]);
  }

  double heading(double s) const {
    const auto [i, f] = locate(s);
    (void)f;
    const Vec2 d = pts_[i + 1] - pts_[i];
    return std::atan2(d.y(), d.x());
  }

  /// Arc length of the closest point to p, searched over [s_min, s_min + span].
  double project(const Vec2& p, double s_min = 0.0, double span = 1e9) const {
    double best_s = s_min, best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const Vec2 a = pts_[i], b = pts_[i + 1];
      const double len = cum_[i + 1] - cum_[i];
      if (len <= 0.0) continue;
      double f = std::clamp((p - a).dot(b - a) / (len * len), 0.0, 1.0);
      double s = cum_[i] + f * len;
      s = std::clamp(s, s_min, std::min(s_min + span, length()));
      const double d = (point(s) - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
    return best_s;
  }

  /// N + 1 reference states starting at arc length s, spaced by speed * dt.
  std::vector<RobotState> horizon(double s, double speed, double dt, int n) const {
    std::vector<RobotState> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
      const double sk = std::min(s + k * speed * dt, length());
      const Vec2 p = point(sk);
      out.emplace_back(p.x(), p.y(), heading(sk));
    }
    return out;
  }

 private:
  std::pair<std::size_t, double> locate(double s) const {
    s = std::clamp(s, 0.0, length());
    std::size_t i = 0;
    while (i + 2 < pts_.size() && cum_[i + 1] < s) ++i;
    const double seg = cum_[i + 1] - cum_[i];
    return {i, seg > 0.0 ? (s - cum_[i]) / seg : 0.0};
  }

  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

struct WorldState {
  double t = 0.0;
  RobotState robot;
  std::vector<ObstacleState> obstacles;
  bool collided = false;
};

inline bool robot_collides(const std::vector<ObstacleState>& obs, const Vec2& p, double radius) {
  for (const ObstacleState& o : obs)
    if (surface_distance(o, p) < radius) return true;
  return false;
}

inline WorldState initial_world(const Scenario& s) {
  WorldState w;
  w.robot = s.robot.start;
  w.obstacles = obstacles_at(s, 0.0);
  w.collided = robot_collides(w.obstacles, w.robot.position(), s.robot.radius);
  return w;
}

/// Advances the robot by one control period and the obstacles to the new time.
inline WorldState step(const Scenario& s, const WorldState& w, const ControlInput& u) {
  WorldState n;
  n.t = w.t + s.sim.dt;
  n.robot = dynamics_step(w.robot, u, s.sim.dt);
  n.obstacles = obstacles_at(s, n.t);
  n.collided = w.collided || robot_collides(n.obstacles, n.robot.position(), s.robot.radius);
  return n;
}

}  // namespace dcbf::sim
