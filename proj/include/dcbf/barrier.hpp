#pragma once

// Unicycle kinematics and the ellipse barrier h = |p - c| - l - d_safe.

#include <dcbf/geometry.hpp>

#include <cmath>

namespace dcbf {

/// Forward-Euler step of the differential-drive model.
inline RobotState dynamics_step(const RobotState& x, const ControlInput& u, double dt) {
  if (!(dt > 0.0)) throw Error("dynamics_step: dt must be positive");
  return {x.x + std::cos(x.heading) * u.v * dt, x.y + std::sin(x.heading) * u.v * dt,
          x.heading + u.omega * dt};
}

struct BarrierEval {
  double h = 0.0;        // barrier value, m
  double l = 0.0;        // center-to-periphery distance along the ray, m
  double center_distance = 0.0;
  Vec2 grad = Vec2::Zero();  // dh/dp
};

/// Barrier value and its gradient with respect to the robot position.
inline BarrierEval barrier(const Vec2& p, const Ellipse& ob, double d_safe) {
  const Vec2 q = ob.to_local(p);
  const double rho = q.norm();
  if (!(rho > 1e-12)) throw Error("barrier: robot coincides with obstacle center");
  const double a = ob.a(), b = ob.b();
  // In the ellipse frame l = ab rho / sqrt(b^2 u^2 + a^2 v^2).
  const double w = std::sqrt(b * b * q.x() * q.x() + a * a * q.y() * q.y());
  BarrierEval out;
  out.center_distance = rho;
  out.l = a * b * rho / w;
  out.h = rho - out.l - d_safe;

  // d(l)/dq = ab [q/rho / w - rho (b^2 u, a^2 v) / w^3]
  const Vec2 drho = q / rho;
  const Vec2 dw(b * b * q.x() / w, a * a * q.y() / w);
  const Vec2 dl = a * b * (drho / w - rho * dw / (w * w));
  const Vec2 dlocal = drho - dl;
  const double c = std::cos(ob.theta()), s = std::sin(ob.theta());
  out.grad = Vec2(c * dlocal.x() - s * dlocal.y(), s * dlocal.x() + c * dlocal.y());
  return out;
}

inline BarrierEval barrier(const RobotState& x, const Ellipse& ob, double d_safe) {
  return barrier(x.position(), ob, d_safe);
}

/// Discrete barrier condition h(k+1) - h(k) >= -gamma h(k), returned as the
/// residual h(k+1) - (1 - gamma) h(k); satisfied iff non-negative. The
/// obstacle at k+1 is the predicted one.
inline double cbf_constraint(const RobotState& x_k, const RobotState& x_k1, const Ellipse& ob_k,
                             const Ellipse& ob_k1, double gamma, double d_safe) {
  const double h0 = barrier(x_k, ob_k, d_safe).h;
  const double h1 = barrier(x_k1, ob_k1, d_safe).h;
  return h1 - (1.0 - gamma) * h0;
}

}  // namespace dcbf
