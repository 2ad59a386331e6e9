#pragma once

// Obstacle state estimation: a 9-state constant-acceleration Kalman filter on
// ellipse measurements whose position noise adapts to how much the measured
// shape has been changing, plus N-step prediction with uncertainty inflation.

#include <dcbf/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace dcbf {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat59 = Eigen::Matrix<double, 5, 9>;

/// State layout: position, velocity, acceleration, then shape.
namespace state_index {
inline constexpr int kX = 0, kY = 1, kVx = 2, kVy = 3, kAx = 4, kAy = 5;
inline constexpr int kA = 6, kB = 7, kTheta = 8;
}  // namespace state_index

enum class InflationMode {
  kBoundingEquation,  // smallest root of the Minkowski bounding equation
  kConservative,      // sigma = r, i.e. the full disk radius
};

struct TrackerParams {
  double T = 0.1;  // filter period, s
  Mat9 process_noise = default_process_noise();
  double r_p_min = 0.005;  // position measurement variance bounds, m^2
  double r_p_max = 0.5;
  double r_shape = 0.05;  // shape measurement variance
  double xi_min_crit = 1e-3;
  double xi_max_crit = 0.1;
  double kappa = 5.5;
  double gamma_pow = 1.3;
  int window = 5;  // confidence history length m

  double init_pos_var = 1.0;
  double init_vel_var = 4.0;
  double init_acc_var = 4.0;
  double sigma_scale = 2.0;  // uncertainty radii are this many std devs
  double axis_floor = 0.1;   // minimum semi-axis when reading ellipses out of the state
  InflationMode inflation = InflationMode::kBoundingEquation;

  static Mat9 default_process_noise() {
    Vec9 d;
    d << 1e-4, 1e-4, 2e-3, 2e-3, 2e-2, 2e-2, 1e-4, 1e-4, 1e-3;
    return d.asDiagonal();
  }

  void validate() const {
    if (!(T > 0.0)) throw Error("tracker: T must be positive");
    if (!(r_p_min > 0.0) || !(r_p_min <= r_p_max)) throw Error("tracker: need 0 < r_p_min <= r_p_max");
    if (!(xi_min_crit > 0.0) || !(xi_min_crit < xi_max_crit))
      throw Error("tracker: need 0 < xi_min_crit < xi_max_crit");
    if (window < 2) throw Error("tracker: window must be >= 2");
    if (!(r_shape > 0.0)) throw Error("tracker: r_shape must be positive");
  }
};

struct TrackState {
  Vec9 mean = Vec9::Zero();
  Mat9 cov = Mat9::Identity();

  Vec2 position() const { return mean.head<2>(); }
  Vec2 velocity() const { return mean.segment<2>(state_index::kVx); }

  /// Ellipse estimate with axes floored at `floor`.
  Ellipse ellipse(double floor = 1e-3) const {
    using namespace state_index;
    return {mean(kX), mean(kY), std::max(mean(kA), floor), std::max(mean(kB), floor),
            mean(kTheta)};
  }
};

/// Initial state from a first measurement: at rest with broad kinematic covariance.
inline TrackState init_track(const Ellipse& meas, const TrackerParams& p) {
  using namespace state_index;
  TrackState s;
  s.mean << meas.cx(), meas.cy(), 0, 0, 0, 0, meas.a(), meas.b(), meas.theta();
  Vec9 d;
  d << p.init_pos_var, p.init_pos_var, p.init_vel_var, p.init_vel_var, p.init_acc_var,
      p.init_acc_var, p.r_shape, p.r_shape, p.r_shape;
  s.cov = d.asDiagonal();
  return s;
}

inline Mat9 transition_matrix(double T) {
  Mat9 a = Mat9::Identity();
  for (int i = 0; i < 4; ++i) a(i, i + 2) = T;
  a(0, 4) = a(1, 5) = 0.5 * T * T;
  return a;
}

inline Mat59 observation_matrix() {
  Mat59 h = Mat59::Zero();
  h(0, 0) = h(1, 1) = 1.0;
  h(2, 6) = h(3, 7) = h(4, 8) = 1.0;
  return h;
}

inline TrackState kf_predict(const TrackState& s, const TrackerParams& p) {
  const Mat9 a = transition_matrix(p.T);
  TrackState out;
  out.mean = a * s.mean;
  out.cov = a * s.cov * a.transpose() + p.process_noise;
  out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
  return out;
}

/// Linear update with measurement [cx, cy, a, b, theta] and covariance
/// diag(r_p, r_p, r_shape, r_shape, r_shape).
inline TrackState kf_update(const TrackState& s, const Ellipse& meas, double r_p,
                            const TrackerParams& p) {
  using namespace state_index;
  if (!(r_p > 0.0)) throw Error("kf_update: r_p must be positive");
  const Mat59 h = observation_matrix();
  Vec5 z;
  z << meas.cx(), meas.cy(), meas.a(), meas.b(), meas.theta();
  Vec5 y = z - h * s.mean;
  y(4) = -wrap_half_angle(-y(4));  // (-pi/2, pi/2]

  Vec5 rd;
  rd << r_p, r_p, p.r_shape, p.r_shape, p.r_shape;
  const Mat5 r = rd.asDiagonal();
  const Mat5 sm = h * s.cov * h.transpose() + r;
  const Eigen::LLT<Mat5> llt(0.5 * (sm + sm.transpose()));
  if (llt.info() != Eigen::Success) throw Error("filter divergence");
  const Eigen::Matrix<double, 9, 5> k = llt.solve(h * s.cov).transpose();

  TrackState out;
  out.mean = s.mean + k * y;
  out.mean(kTheta) = wrap_half_angle(out.mean(kTheta));
  const Mat9 ikh = Mat9::Identity() - k * h;
  out.cov = ikh * s.cov * ikh.transpose() + k * r * k.transpose();
  out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
  return out;
}

struct Confidence {
  double xi_eta = 0.0;    // shape-change indicator
  double xi_p_hat = 0.0;  // estimated position confidence
};

/// Shape-change indicator over a window of measured ellipses and the
/// position-confidence estimate kappa * xi_eta^gamma.
inline Confidence confidence(std::span<const Ellipse> history, const TrackerParams& p) {
  const std::size_t m = history.size();
  if (m < 2) throw Error("insufficient history");
  // Angles are axial; unwrap them around the first sample before averaging.
  std::vector<Vec3> eta(m);
  const double ref = history.front().theta();
  for (std::size_t i = 0; i < m; ++i) {
    const double dth = -wrap_half_angle(-(history[i].theta() - ref));
    eta[i] = Vec3(history[i].a(), history[i].b(), ref + dth);
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& e : eta) mean += e;
  mean /= static_cast<double>(m);
  double sum = 0.0;
  for (const Vec3& e : eta) sum += (e - mean).squaredNorm();
  Confidence c;
  c.xi_eta = sum / static_cast<double>(m - 1);
  c.xi_p_hat = p.kappa * std::pow(c.xi_eta, p.gamma_pow);
  return c;
}

/// Ground-truth position confidence: mean squared center error over the
/// window, normalized by (m - 1). Only computable where truth is known.
inline double position_confidence(std::span<const Vec2> measured, std::span<const Vec2> truth) {
  if (measured.size() != truth.size()) throw Error("position_confidence: size mismatch");
  if (measured.size() < 2) throw Error("insufficient history");
  double sum = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) sum += (measured[i] - truth[i]).squaredNorm();
  return sum / static_cast<double>(measured.size() - 1);
}

/// Geometric interpolation between the position variance bounds; the
/// log-ratio exponent is clamped to [0, 1].
inline double adapt_position_variance(double xi_p_hat, const TrackerParams& p) {
  double k = 0.0;
  if (xi_p_hat > 0.0) {
    k = std::log10(xi_p_hat / p.xi_min_crit) / std::log10(p.xi_max_crit / p.xi_min_crit);
    k = std::clamp(k, 0.0, 1.0);
  }
  return std::pow(p.r_p_max, k) * std::pow(p.r_p_min, 1.0 - k);
}

struct InflationResult {
  double sigma = 0.0;
  bool fallback = false;  // true when the conservative bound was used instead
};

/// Residual of the Minkowski bounding equation at sigma.
inline double inflation_residual(double a, double b, double r, double sigma) {
  const double s = a + b, t = sigma + r;
  return 2.0 * t * t * (s * t + 2.0 * a * b) / (s * (s + 2.0 * sigma + 2.0 * r)) - r * r;
}

/// Axis growth that bounds the ellipse grown by an uncertainty disk of
/// radius r. kBoundingEquation returns the smallest non-negative root of the
/// bounding equation by bisection; kConservative returns r.
inline InflationResult inflate(double a, double b, double r,
                               InflationMode mode = InflationMode::kBoundingEquation) {
  if (a < 0.0 || b < 0.0 || r < 0.0) throw Error("inflate: negative argument");
  if (mode == InflationMode::kConservative) return {r, false};
  if (r == 0.0 || a == b) return {0.0, false};
  if (a + b <= 0.0) return {r, true};

  double lo = 0.0, hi = a + b + 2.0 * r;
  double flo = inflation_residual(a, b, r, lo);
  const double fhi = inflation_residual(a, b, r, hi);
  if (flo >= 0.0) return {0.0, false};  // a == b makes sigma = 0 an exact root
  if (fhi < 0.0) return {r, true};
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = inflation_residual(a, b, r, mid);
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  const double fh = inflation_residual(a, b, r, hi);
  return {std::abs(flo) < std::abs(fh) ? lo : hi, false};
}

/// Predicted, inflated ellipse sequence for one obstacle.
struct PredictedObstacle {
  int label = -1;
  Ellipse current;               // inflated estimate at prediction time
  double current_radius = 0.0;
  std::vector<Ellipse> steps;    // k = 1..N
  std::vector<double> radius;    // r(k) for k = 1..N
  std::vector<Ellipse> nominal;  // uninflated predictions, k = 1..N

  /// Obstacle at planner step k (0 = now); clamps past the horizon.
  const Ellipse& at(std::size_t k) const {
    if (k == 0 || steps.empty()) return current;
    return steps[std::min(k, steps.size()) - 1];
  }
};

struct UncertaintyRadius {
  double position = 0.0;
  double shape = 0.0;
  double total() const { return position + shape; }
};

inline UncertaintyRadius uncertainty_radius(const Mat9& cov, double sigma_scale) {
  using namespace state_index;
  const Eigen::Matrix2d pc = cov.topLeftCorner<2, 2>();
  const double lam = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(pc, Eigen::EigenvaluesOnly)
                         .eigenvalues()(1);
  const double shape_var = std::max(cov(kA, kA), cov(kB, kB));
  return {sigma_scale * std::sqrt(std::max(lam, 0.0)),
          sigma_scale * std::sqrt(std::max(shape_var, 0.0))};
}

inline Ellipse inflate_estimate(const TrackState& s, double r, const TrackerParams& p) {
  const Ellipse e = s.ellipse(p.axis_floor);
  return e.grown(inflate(e.a(), e.b(), r, p.inflation).sigma);
}

inline PredictedObstacle predict_trajectory(const TrackState& s, const TrackerParams& p, int n,
                                            int label = -1) {
  if (n < 1) throw Error("predict_trajectory: horizon must be >= 1");
  PredictedObstacle out;
  out.label = label;
  out.current_radius = uncertainty_radius(s.cov, p.sigma_scale).total();
  out.current = inflate_estimate(s, out.current_radius, p);
  TrackState cur = s;
  double r_prev = out.current_radius;
  for (int k = 0; k < n; ++k) {
    cur = kf_predict(cur, p);
    // Radii only grow along the horizon.
    const double r = std::max(r_prev, uncertainty_radius(cur.cov, p.sigma_scale).total());
    r_prev = r;
    out.radius.push_back(r);
    out.nominal.push_back(cur.ellipse(p.axis_floor));
    out.steps.push_back(inflate_estimate(cur, r, p));
  }
  return out;
}

}  // namespace dcbf
