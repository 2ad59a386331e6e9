#pragma once

// Minimum-area enclosing ellipse of a planar point set.
//
// Khachiyan's barycentric coordinate ascent on the lifted points (x, y, 1),
// with Todd-Yildirim away steps so that weights on interior points can drop
// to zero. Converges linearly, which the plain Khachiyan update does not.

#include <dcbf/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace dcbf {

struct MbeOptions {
  double tolerance = 1e-7;
  int max_iterations = 1000;
  /// Lower bound on both semi-axes; degenerate sets get this thickness.
  double axis_floor = 0.1;
};

struct MbeReport {
  Ellipse ellipse;
  int iterations = 0;
  double gap = 0.0;  // final max(eps+, eps-)
  bool degenerate = false;
};

namespace detail {

inline Ellipse segment_ellipse(std::span<const Vec2> pts, const Vec2& mean, const Vec2& dir,
                               double floor) {
  double lo = 0.0, hi = 0.0;
  for (const Vec2& p : pts) {
    const double t = (p - mean).dot(dir);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  const Vec2 c = mean + 0.5 * (lo + hi) * dir;
  const double half = 0.5 * (hi - lo);
  // Offsets across the segment are below the degeneracy threshold, so the
  // floor thickness covers them.
  return {c, std::max(half, floor), floor, std::atan2(dir.y(), dir.x())};
}

}  // namespace detail

inline MbeReport min_bounding_ellipse_report(std::span<const Vec2> pts,
                                             const MbeOptions& opt = {}) {
  if (pts.empty()) throw Error("min_bounding_ellipse: empty point set");
  const double floor = opt.axis_floor > 0.0 ? opt.axis_floor : 1e-9;
  const std::size_t n = pts.size();

  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : pts) mean += p;
  mean /= static_cast<double>(n);

  double scale = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : pts) {
    const Vec2 d = p - mean;
    cov += d * d.transpose();
    scale = std::max(scale, d.norm());
  }

  MbeReport rep;
  if (n == 1 || scale < 1e-12) {
    rep.ellipse = Ellipse(mean, floor, floor, 0.0);
    rep.degenerate = true;
    return rep;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> cov_eig(cov / static_cast<double>(n));
  if (cov_eig.eigenvalues()(0) <= 1e-14 * scale * scale) {
    rep.ellipse = detail::segment_ellipse(pts, mean, cov_eig.eigenvectors().col(1), floor);
    rep.degenerate = true;
    return rep;
  }

  // Work in centered, unit-scaled coordinates for conditioning.
  std::vector<Vec3> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d = (pts[i] - mean) / scale;
    q[i] = Vec3(d.x(), d.y(), 1.0);
  }

  constexpr double kLift = 3.0;  // lifted dimension d + 1
  std::vector<double> u(n, 1.0 / static_cast<double>(n));
  std::vector<double> m(n);
  int it = 0;
  double gap = 0.0;
  for (; it < opt.max_iterations; ++it) {
    Eigen::Matrix3d x = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) x += u[i] * q[i] * q[i].transpose();
    const Eigen::Matrix3d xinv = x.inverse();

    std::size_t jmax = 0, kmin = n;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = q[i].dot(xinv * q[i]);
      if (m[i] > m[jmax]) jmax = i;
      if (u[i] > 0.0 && (kmin == n || m[i] < m[kmin])) kmin = i;
    }
    const double eps_plus = m[jmax] / kLift - 1.0;
    const double eps_minus = 1.0 - m[kmin] / kLift;
    gap = std::max(eps_plus, eps_minus);
    if (gap <= opt.tolerance) break;

    std::size_t idx;
    double beta;
    if (eps_plus >= eps_minus) {
      idx = jmax;
      beta = (m[jmax] - kLift) / (kLift * (m[jmax] - 1.0));
    } else {
      idx = kmin;
      // m <= 1 only happens at the centroid; drop the point entirely then.
      const double drop = u[kmin] < 1.0 ? -u[kmin] / (1.0 - u[kmin]) : 0.0;
      beta = m[kmin] > 1.0 + 1e-12 ? (m[kmin] - kLift) / (kLift * (m[kmin] - 1.0)) : drop;
      beta = std::max(beta, drop);
    }
    for (double& w : u) w *= (1.0 - beta);
    u[idx] += beta;
    if (u[idx] < 0.0) u[idx] = 0.0;
  }

  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) c += u[i] * q[i].head<2>();
  Eigen::Matrix2d s = -c * c.transpose();
  for (std::size_t i = 0; i < n; ++i) s += u[i] * q[i].head<2>() * q[i].head<2>().transpose();
  Eigen::Matrix2d shape = s.inverse() / 2.0;

  // Rescale so that every point is inside exactly.
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d = q[i].head<2>() - c;
    worst = std::max(worst, d.dot(shape * d));
  }
  if (worst > 0.0) shape /= worst;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(shape);
  const double lam_small = eig.eigenvalues()(0);
  const double lam_big = eig.eigenvalues()(1);
  const Vec2 major = eig.eigenvectors().col(0);
  const double a = scale / std::sqrt(lam_small);
  const double b = scale / std::sqrt(lam_big);

  rep.ellipse = Ellipse(mean + scale * c, std::max(a, floor), std::max(b, floor),
                        std::atan2(major.y(), major.x()));
  rep.iterations = it;
  rep.gap = gap;
  rep.degenerate = b < floor;
  return rep;
}

inline Ellipse min_bounding_ellipse(std::span<const Vec2> pts, const MbeOptions& opt = {}) {
  return min_bounding_ellipse_report(pts, opt).ellipse;
}

}  // namespace dcbf
