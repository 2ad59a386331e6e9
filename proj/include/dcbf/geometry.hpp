#pragma once

// Shared geometric primitives: ellipses, robot poses, trajectories and the
// center-to-periphery ray distance used by tracking and planning.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcbf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Thrown for violated preconditions and numerical breakdowns across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kPi = std::numbers::pi;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Wraps an axial angle (period pi) to [-pi/2, pi/2).
inline double wrap_half_angle(double a) {
  a = std::remainder(a, kPi);  // [-pi/2, pi/2]
  if (a >= kPi / 2.0) a -= kPi;
  return a;
}

/// Obstacle footprint [cx, cy, a, b, theta]. Always stored canonically:
/// a >= b > 0 and theta in [-pi/2, pi/2).
class Ellipse {
 public:
  Ellipse() = default;

  Ellipse(double cx, double cy, double a, double b, double theta) {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(a) ||
        !std::isfinite(b) || !std::isfinite(theta)) {
      throw Error("ellipse: non-finite parameter");
    }
    if (a <= 0.0 || b <= 0.0) throw Error("ellipse: axes must be positive");
    if (a < b) {
      std::swap(a, b);
      theta += kPi / 2.0;
    }
    cx_ = cx;
    cy_ = cy;
    a_ = a;
    b_ = b;
    theta_ = wrap_half_angle(theta);
  }

  Ellipse(const Vec2& center, double a, double b, double theta)
      : Ellipse(center.x(), center.y(), a, b, theta) {}

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  Vec2 center() const { return {cx_, cy_}; }
  double a() const { return a_; }
  double b() const { return b_; }
  double theta() const { return theta_; }
  double area() const { return kPi * a_ * b_; }

  /// Point in the ellipse's own frame (major axis along +x).
  Vec2 to_local(const Vec2& p) const {
    const double c = std::cos(theta_), s = std::sin(theta_);
    const Vec2 d = p - center();
    return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
  }

  Vec2 boundary_point(double t) const {
    const double c = std::cos(theta_), s = std::sin(theta_);
    const double u = a_ * std::cos(t), v = b_ * std::sin(t);
    return {cx_ + c * u - s * v, cy_ + s * u + c * v};
  }

  /// Same center and orientation, both axes grown by `sigma`.
  Ellipse grown(double sigma) const {
    return {cx_, cy_, a_ + sigma, b_ + sigma, theta_};
  }

  Ellipse translated(const Vec2& offset) const {
    return {cx_ + offset.x(), cy_ + offset.y(), a_, b_, theta_};
  }

  bool operator==(const Ellipse&) const = default;

 private:
  double cx_ = 0.0;
  double cy_ = 0.0;
  double a_ = 1.0;
  double b_ = 1.0;
  double theta_ = 0.0;
};

/// Differential-drive pose; heading kept in (-pi, pi].
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  RobotState() = default;
  RobotState(double x_, double y_, double heading_)
      : x(x_), y(y_), heading(wrap_angle(heading_)) {}

  Vec2 position() const { return {x, y}; }
  bool operator==(const RobotState&) const = default;
};

struct ControlInput {
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
  bool operator==(const ControlInput&) const = default;
};

/// Time-stamped pose sequence with strictly increasing timestamps.
class Pose2Trajectory {
 public:
  struct Sample {
    double t;
    RobotState state;
  };

  void push_back(double t, const RobotState& s) {
    if (!samples_.empty() && !(t > samples_.back().t)) {
      throw Error("trajectory timestamps must be strictly increasing");
    }
    samples_.push_back({t, s});
  }

  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

 private:
  std::vector<Sample> samples_;
};

/// Distance from the ellipse center to its periphery along the ray center -> p.
///
/// Uses l = ab / sqrt(b^2 cos^2(delta) + a^2 sin^2(delta)), which equals the
/// tan-based form wherever tan(delta) is finite and stays defined at
/// delta = +-pi/2. delta is the angle between the ray and the major axis.
inline double ray_ellipse_distance(const Ellipse& e, const Vec2& p) {
  const Vec2 local = e.to_local(p);
  const double rho = local.norm();
  if (!(rho > 1e-12)) throw Error("degenerate ray");
  const double cd = local.x() / rho;
  const double sd = local.y() / rho;
  const double a = e.a(), b = e.b();
  return a * b / std::sqrt(b * b * cd * cd + a * a * sd * sd);
}

inline bool point_in_ellipse(const Ellipse& e, const Vec2& p, double tol = 1e-9) {
  const Vec2 q = e.to_local(p);
  const double u = q.x() / e.a(), v = q.y() / e.b();
  return u * u + v * v <= 1.0 + tol;
}

}  // namespace dcbf
