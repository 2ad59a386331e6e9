#pragma once

// Independent reference implementations used by the unit and acceptance
// tests, plus small shared fixtures.

#include <dcbf/geometry.hpp>
#include <dcbf/perception.hpp>
#include <dcbf/sim/world.hpp>
#include <dcbf/tracker.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dcbf::oracle {

/// Center-to-boundary distance along the ray towards p, by bisection on the
/// implicit equation of the rotated ellipse.
inline double ray_distance(double cx, double cy, double a, double b, double theta, Vec2 p) {
  const Vec2 d = (p - Vec2(cx, cy)).normalized();
  auto f = [&](double t) {
    const double x = t * d.x(), y = t * d.y();
    const double u = std::cos(theta) * x + std::sin(theta) * y;
    const double v = -std::sin(theta) * x + std::cos(theta) * y;
    return u * u / (a * a) + v * v / (b * b) - 1.0;
  };
  double lo = 0.0, hi = 2.0 * std::max(a, b);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Implicit-form membership of a rotated ellipse.
inline bool inside(double cx, double cy, double a, double b, double theta, Vec2 p, double tol = 1e-9) {
  const double x = p.x() - cx, y = p.y() - cy;
  const double u = std::cos(theta) * x + std::sin(theta) * y;
  const double v = -std::sin(theta) * x + std::cos(theta) * y;
  return u * u / (a * a) + v * v / (b * b) <= 1.0 + tol;
}

/// Minimum total cost over all injective assignments of the smaller side.
inline double brute_force_assignment(const Eigen::MatrixXd& c) {
  const bool flip = c.rows() > c.cols();
  const Eigen::MatrixXd m = flip ? Eigen::MatrixXd(c.transpose()) : c;
  std::vector<int> cols(static_cast<std::size_t>(m.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) s += m(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

/// Ellipse as {x : (x - c)' M (x - c) <= 1}.
struct QuadEllipse {
  Vec2 c;
  Eigen::Matrix2d M;
  double area() const { return kPi / std::sqrt(M.determinant()); }
  bool contains(const Vec2& p, double tol) const { return (p - c).dot(M * (p - c)) <= 1.0 + tol; }
};

/// Conic coefficients [A, B, C, D, E, F] of A x^2 + B xy + C y^2 + D x + E y + F.
using Conic = Eigen::Matrix<double, 6, 1>;

inline std::optional<QuadEllipse> conic_ellipse(const Conic& k) {
  Eigen::Matrix2d m2;
  m2 << k(0), 0.5 * k(1), 0.5 * k(1), k(2);
  if (m2.determinant() <= 1e-14 * m2.squaredNorm()) return std::nullopt;
  const Vec2 g(0.5 * k(3), 0.5 * k(4));
  const Vec2 c = -m2.inverse() * g;
  const double f = k(5) + g.dot(c);  // (x - c)' m2 (x - c) + f = 0
  Eigen::Matrix2d M = m2 / -f;
  if (!(M(0, 0) > 0.0) || !(M.determinant() > 0.0) || !std::isfinite(M.sum())) return std::nullopt;
  return QuadEllipse{c, M};
}

/// Steiner circumellipse: the smallest ellipse through three points.
inline std::optional<QuadEllipse> steiner(const Vec2& p1, const Vec2& p2, const Vec2& p3) {
  const Vec2 g = (p1 + p2 + p3) / 3.0;
  const double s = std::sqrt(3.0) / 2.0;
  Eigen::Matrix2d u;  // unit circle points at 90 and 210 degrees
  u << 0.0, -s, 1.0, -0.5;
  Eigen::Matrix2d v;
  v.col(0) = p1 - g;
  v.col(1) = p2 - g;
  const Eigen::Matrix2d a = v * u.inverse();
  if (std::abs(a.determinant()) < 1e-12) return std::nullopt;
  const Eigen::Matrix2d ai = a.inverse();
  return QuadEllipse{g, ai.transpose() * ai};
}

inline Conic line_pair(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  // l(x, y) = n.x x + n.y y + w through each pair
  auto line = [](const Vec2& p, const Vec2& q) {
    const Vec2 n(q.y() - p.y(), p.x() - q.x());
    return Eigen::Vector3d(n.x(), n.y(), -n.dot(p));
  };
  const Eigen::Vector3d l1 = line(a, b), l2 = line(c, d);
  Conic k;
  k << l1(0) * l2(0), l1(0) * l2(1) + l1(1) * l2(0), l1(1) * l2(1), l1(0) * l2(2) + l1(2) * l2(0),
      l1(1) * l2(2) + l1(2) * l2(1), l1(2) * l2(2);
  return k;
}

/// Smallest ellipse through four points in convex position, searched over
/// the pencil of conics spanned by the two pairs of opposite sides.
inline std::optional<QuadEllipse> four_point(std::array<Vec2, 4> p) {
  const Vec2 g = (p[0] + p[1] + p[2] + p[3]) / 4.0;
  std::sort(p.begin(), p.end(), [&](const Vec2& a, const Vec2& b) {
    return std::atan2(a.y() - g.y(), a.x() - g.x()) < std::atan2(b.y() - g.y(), b.x() - g.x());
  });
  const Conic k1 = line_pair(p[0], p[1], p[2], p[3]);
  const Conic k2 = line_pair(p[1], p[2], p[3], p[0]);
  // conic pencil cos(phi) k1 + sin(phi) k2 covers every member once
  auto member = [&](double phi) -> Conic { return std::cos(phi) * k1 + std::sin(phi) * k2; };
  auto area = [&](double phi) {
    const auto e = conic_ellipse(member(phi));
    return e ? e->area() : std::numeric_limits<double>::infinity();
  };
  // dense scan, then golden section around the best sample
  const int n = 8000;
  const double step = kPi / n;
  double best = 0.0, best_a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double a = area(i * step);
    if (a < best_a) {
      best_a = a;
      best = i * step;
    }
  }
  if (!std::isfinite(best_a)) return std::nullopt;
  double x0 = best - step, x1 = best + step;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 200; ++i) {
    const double a = x1 - gr * (x1 - x0), b = x0 + gr * (x1 - x0);
    if (area(a) < area(b))
      x1 = b;
    else
      x0 = a;
  }
  const auto e = conic_ellipse(member(0.5 * (x0 + x1)));
  return e ? e : conic_ellipse(member(best));
}

inline std::optional<QuadEllipse> five_point(const std::array<Vec2, 5>& p) {
  Eigen::Matrix<double, 5, 6> a;
  for (int i = 0; i < 5; ++i) {
    const double x = p[static_cast<std::size_t>(i)].x(), y = p[static_cast<std::size_t>(i)].y();
    a.row(i) << x * x, x * y, y * y, x, y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 6>> svd(a, Eigen::ComputeFullV);
  return conic_ellipse(svd.matrixV().col(5));
}

/// Area of the minimum enclosing ellipse of 3..8 points in general position,
/// by enumerating every support set of size 3, 4 and 5.
inline double min_enclosing_area(const std::vector<Vec2>& pts, double tol = 1e-9) {
  const std::size_t n = pts.size();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::optional<QuadEllipse>& e) {
    if (!e) return;
    for (const Vec2& q : pts)
      if (!e->contains(q, tol)) return;
    best = std::min(best, e->area());
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        consider(steiner(pts[i], pts[j], pts[k]));
        for (std::size_t l = k + 1; l < n; ++l) {
          consider(four_point({pts[i], pts[j], pts[k], pts[l]}));
          for (std::size_t m = l + 1; m < n; ++m) consider(five_point({pts[i], pts[j], pts[k], pts[l], pts[m]}));
        }
      }
  return best;
}

/// Connected components of the eps-graph over core points; border points
/// join the component of their first core neighbor in index order.
inline std::vector<std::vector<std::size_t>> dbscan_components(const std::vector<Vec2>& pts, double eps,
                                                               int min_pts) {
  const std::size_t n = pts.size();
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int c = 0;
    for (std::size_t j = 0; j < n; ++j) c += (pts[i] - pts[j]).norm() <= eps;
    core[i] = c >= min_pts;
  }
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || comp[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    comp[i] = next;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v)
        if (core[v] && comp[v] < 0 && (pts[u] - pts[v]).norm() <= eps) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      out[static_cast<std::size_t>(comp[i])].push_back(i);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (core[j] && (pts[i] - pts[j]).norm() <= eps) {
        out[static_cast<std::size_t>(comp[j])].push_back(i);
        break;
      }
  }
  return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Paired samples of the estimated and the true position confidence.
struct ConfidenceTrace {
  std::vector<double> estimated;  // kappa * xi_eta^gamma
  std::vector<double> truth;      // windowed squared error of the filtered centers
};

/// A 1 m cylinder seen by a static scanner at the origin, either at rest or
/// in uniform linear motion across the local window, tracked at 20 Hz.
inline ConfidenceTrace confidence_trace(double speed, std::uint64_t seed, int frames = 360) {
  using namespace sim;
  const double dt = 0.05;
  SensorSpec sensor;
  std::mt19937_64 rng(seed);
  PerceptionParams pp;
  TrackerParams tp;
  tp.T = dt;
  MultiTracker tracker(tp, {});
  const RobotState robot(0.0, 0.0, 0.0);
  std::vector<Vec2> est, truth;
  ConfidenceTrace out;
  for (int f = 0; f < frames; ++f) {
    ObstacleState o;
    o.id = "cylinder";
    o.dynamic = speed > 0.0;
    o.shape.radius = 0.5;
    o.shape.height = 1.5;
    o.position = Vec2(speed > 0.0 ? -4.5 + speed * dt * f : 0.5, 2.5);
    const auto cloud = raycast({o}, robot, sensor, rng);
    tracker.step(perceive(cloud, robot, pp).ellipses, dt * f);
    const TrackRecord* rec = nullptr;
    for (const auto& [label, r] : tracker.tracks())
      if (r.seen_this_frame && (!rec || (r.state.position() - o.position).norm() <
                                            (rec->state.position() - o.position).norm()))
        rec = &r;
    if (!rec || rec->updates < tp.window) continue;
    est.push_back(rec->state.position());
    truth.push_back(o.position);
    if (static_cast<int>(est.size()) < tp.window) continue;
    const std::vector<Vec2> e(est.end() - tp.window, est.end()), t(truth.end() - tp.window, truth.end());
    out.truth.push_back(position_confidence(e, t));
    out.estimated.push_back(rec->last_confidence.xi_p_hat);
  }
  return out;
}

}  // namespace dcbf::oracle
