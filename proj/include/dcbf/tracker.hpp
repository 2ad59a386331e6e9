#pragma once

// Per-label filter bank fed by labeled ellipses, plus the polynomial
// curve-fit predictor used by the curve-fit baseline.

#include <dcbf/association.hpp>
#include <dcbf/tracking.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <span>
#include <vector>

namespace dcbf {

struct TrackRecord {
  int label = -1;
  TrackState state;
  std::deque<Ellipse> history;        // measured ellipses, newest last
  std::deque<double> history_time;
  Confidence last_confidence;
  double last_r_p = 0.0;
  int updates = 0;
  bool seen_this_frame = false;
};

/// Owns all track state for one perception stream. Not thread-safe; the
/// closed loop calls it from a single context.
class MultiTracker {
 public:
  MultiTracker(TrackerParams params, AssociationParams assoc)
      : params_(std::move(params)), labels_(assoc) {
    params_.validate();
  }

  /// Advances every track by one filter period and fuses this frame's
  /// ellipses. Returns the labeled measurements.
  std::vector<LabeledEllipse> step(std::span<const Ellipse> measurements, double t) {
    const auto upd = labels_.update(measurements, t);
    for (int label : upd.retired) tracks_.erase(label);
    for (auto& [label, rec] : tracks_) {
      rec.state = kf_predict(rec.state, params_);
      rec.seen_this_frame = false;
    }
    for (const LabeledEllipse& le : upd.current) {
      auto it = tracks_.find(le.label);
      if (it == tracks_.end()) {
        TrackRecord rec;
        rec.label = le.label;
        rec.state = init_track(le.ellipse, params_);
        rec.history.push_back(le.ellipse);
        rec.history_time.push_back(t);
        rec.last_r_p = params_.r_p_max;
        rec.updates = 1;
        rec.seen_this_frame = true;
        tracks_.emplace(le.label, std::move(rec));
        continue;
      }
      TrackRecord& rec = it->second;
      rec.history.push_back(le.ellipse);
      rec.history_time.push_back(t);
      while (rec.history.size() > history_capacity()) {
        rec.history.pop_front();
        rec.history_time.pop_front();
      }
      const std::vector<Ellipse> window(
          rec.history.end() - std::min<std::ptrdiff_t>(params_.window, static_cast<std::ptrdiff_t>(rec.history.size())),
          rec.history.end());
      rec.last_confidence = confidence(window, params_);
      rec.last_r_p = adapt_position_variance(rec.last_confidence.xi_p_hat, params_);
      rec.state = kf_update(rec.state, le.ellipse, rec.last_r_p, params_);
      rec.seen_this_frame = true;
      ++rec.updates;
    }
    return upd.current;
  }

  std::vector<PredictedObstacle> predict(int horizon) const {
    std::vector<PredictedObstacle> out;
    out.reserve(tracks_.size());
    for (const auto& [label, rec] : tracks_)
      out.push_back(predict_trajectory(rec.state, params_, horizon, label));
    return out;
  }

  const std::map<int, TrackRecord>& tracks() const { return tracks_; }
  const TrackerParams& params() const { return params_; }

  /// Measured ellipses kept per track; at least the confidence window.
  std::size_t history_capacity() const {
    return static_cast<std::size_t>(std::max(params_.window, kMinHistory));
  }

 private:
  static constexpr int kMinHistory = 10;

  TrackerParams params_;
  LabelManager labels_;
  std::map<int, TrackRecord> tracks_;
};

struct CurveFitParams {
  int degree = 2;
  int window = 10;
};

/// Least-squares polynomial fit of recent centers against time, extrapolated
/// over the horizon. Shape is held at the latest measurement.
inline PredictedObstacle curvefit_predict(std::span<const Ellipse> history,
                                          std::span<const double> times, double dt, int horizon,
                                          const CurveFitParams& cf = {}, int label = -1) {
  if (history.empty() || history.size() != times.size())
    throw Error("curvefit_predict: history and times must be non-empty and aligned");
  if (horizon < 1) throw Error("curvefit_predict: horizon must be >= 1");
  const std::size_t n = std::min<std::size_t>(history.size(), static_cast<std::size_t>(cf.window));
  const std::size_t first = history.size() - n;
  const int deg = std::min<int>(cf.degree, static_cast<int>(n) - 1);
  const double t0 = times.back();

  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), deg + 1);
  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = times[first + i] - t0;
    double pw = 1.0;
    for (int d = 0; d <= deg; ++d) {
      v(static_cast<Eigen::Index>(i), d) = pw;
      pw *= tau;
    }
    rhs(static_cast<Eigen::Index>(i), 0) = history[first + i].cx();
    rhs(static_cast<Eigen::Index>(i), 1) = history[first + i].cy();
  }
  const Eigen::MatrixXd coef = v.colPivHouseholderQr().solve(rhs);

  auto eval = [&](double tau) {
    Vec2 p = Vec2::Zero();
    double pw = 1.0;
    for (int d = 0; d <= deg; ++d) {
      p += pw * Vec2(coef(d, 0), coef(d, 1));
      pw *= tau;
    }
    return p;
  };

  const Ellipse& last = history.back();
  PredictedObstacle out;
  out.label = label;
  out.current = Ellipse(eval(0.0), last.a(), last.b(), last.theta());
  for (int k = 1; k <= horizon; ++k) {
    const Ellipse e(eval(k * dt), last.a(), last.b(), last.theta());
    out.steps.push_back(e);
    out.nominal.push_back(e);
    out.radius.push_back(0.0);
  }
  return out;
}

}  // namespace dcbf
