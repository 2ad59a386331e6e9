#include "support.hpp"

#include <dcbf/tracker.hpp>
#include <dcbf/tracking.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace dcbf;
using namespace dcbf::state_index;

namespace {

TrackState state(Vec2 pos, Vec2 vel, Vec2 acc, double a = 1.0, double b = 0.5, double th = 0.3) {
  TrackState s;
  s.mean << pos.x(), pos.y(), vel.x(), vel.y(), acc.x(), acc.y(), a, b, th;
  return s;
}

double min_eig(const Mat9& m) { return Eigen::SelfAdjointEigenSolver<Mat9>(m).eigenvalues().minCoeff(); }

bool symmetric(const Mat9& m) { return (m - m.transpose()).cwiseAbs().maxCoeff() < 1e-9; }

}  // namespace

TEST(KfPredict, ConstantVelocity) {
  TrackerParams p;
  p.T = 0.1;
  const auto s = kf_predict(state({0, 0}, {1, 0}, {0, 0}), p);
  EXPECT_NEAR(s.mean(kX), 0.1, 1e-15);
  EXPECT_NEAR(s.mean(kY), 0.0, 1e-15);
}

TEST(KfPredict, ConstantAcceleration) {
  TrackerParams p;
  p.T = 0.5;
  const auto s = kf_predict(state({0, 0}, {0, 0}, {2, 0}), p);
  // x += vT + aT^2/2, v += aT
  EXPECT_NEAR(s.mean(kX), 0.25, 1e-15);
  EXPECT_NEAR(s.mean(kVx), 1.0, 1e-15);
  EXPECT_NEAR(s.mean(kAx), 2.0, 1e-15);
}

TEST(KfPredict, ShapeUnchanged) {
  for (double T : {0.05, 0.1, 1.0, 3.0}) {
    TrackerParams p;
    p.T = T;
    const auto s = kf_predict(state({1, 2}, {3, 4}, {5, 6}, 1.0, 0.5, 0.3), p);
    EXPECT_EQ(s.mean(kA), 1.0);
    EXPECT_EQ(s.mean(kB), 0.5);
    EXPECT_EQ(s.mean(kTheta), 0.3);
  }
}

TEST(KfPredict, CovarianceAddsProcessNoise) {
  TrackerParams p;
  TrackState s = state({0, 0}, {0, 0}, {0, 0});
  s.cov = Mat9::Zero();
  const auto out = kf_predict(s, p);
  EXPECT_TRUE(out.cov.isApprox(p.process_noise, 1e-15));
}

TEST(KfUpdate, ZeroCovariancePriorEqualToMeasurementIsUnchanged) {
  TrackerParams p;
  TrackState s = state({1, 2}, {0.5, 0}, {0, 0}, 1.0, 0.5, 0.3);
  s.cov = Mat9::Zero();
  const auto out = kf_update(s, Ellipse(1, 2, 1.0, 0.5, 0.3), 0.1, p);
  EXPECT_LT((out.mean - s.mean).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KfUpdate, EqualWeightFusionGivesMidpoint) {
  TrackerParams p;
  TrackState s = state({0, 0}, {0, 0}, {0, 0});
  s.cov = Mat9::Identity();
  const auto out = kf_update(s, Ellipse(2, -4, 1.0, 0.5, 0.3), 1.0, p);
  EXPECT_NEAR(out.mean(kX), 1.0, 1e-12);
  EXPECT_NEAR(out.mean(kY), -2.0, 1e-12);
}

TEST(KfUpdate, AngleResidualWrapped) {
  TrackerParams p;
  TrackState s = state({0, 0}, {0, 0}, {0, 0}, 1.0, 0.5, 1.5);
  s.cov = Mat9::Identity();
  // measured -1.5 is 0.14 rad away across the axial wrap
  const auto out = kf_update(s, Ellipse(0, 0, 1.0, 0.5, -1.5), 1.0, p);
  const double d = std::abs(wrap_half_angle(out.mean(kTheta) - 1.5));
  EXPECT_LT(d, kPi - 3.0 + 1e-9);
}

TEST(KfUpdate, RejectsNonPositiveVariance) {
  TrackerParams p;
  EXPECT_THROW(kf_update(state({0, 0}, {0, 0}, {0, 0}), Ellipse(0, 0, 1, 1, 0), 0.0, p), Error);
}

TEST(KfUpdate, DivergenceOnIndefiniteInnovation) {
  TrackerParams p;
  TrackState s = state({0, 0}, {0, 0}, {0, 0});
  s.cov = -10.0 * Mat9::Identity();
  EXPECT_THROW(kf_update(s, Ellipse(0, 0, 1, 1, 0), 0.1, p), Error);
}

// measurement variance for noiseless positions
constexpr double kExact = 1e-6;

TEST(KfUpdate, ConstantVelocityConvergesWithExactMeasurements) {
  TrackerParams p;
  const Vec2 v(1.2, -0.4);
  TrackState s = init_track(Ellipse(0, 0, 0.5, 0.3, 0.2), p);
  for (int k = 1; k <= 20; ++k) {
    s = kf_predict(s, p);
    s = kf_update(s, Ellipse(v * (p.T * k), 0.5, 0.3, 0.2), kExact, p);
  }
  EXPECT_LT((s.position() - v * (p.T * 20)).norm(), 1e-6);
}

TEST(KfUpdate, ConstantAccelerationConvergesWithin30) {
  TrackerParams p;
  const Vec2 x0(1, -2), v0(0.5, 1.0), a0(0.8, -0.6);
  auto truth = [&](double t) -> Vec2 { return x0 + v0 * t + 0.5 * a0 * t * t; };
  TrackState s = init_track(Ellipse(truth(0), 0.5, 0.3, 0.2), p);
  for (int k = 1; k <= 30; ++k) {
    s = kf_predict(s, p);
    s = kf_update(s, Ellipse(truth(p.T * k), 0.5, 0.3, 0.2), kExact, p);
    EXPECT_TRUE(symmetric(s.cov));
    EXPECT_GE(min_eig(s.cov), -1e-9);
  }
  EXPECT_LT((s.position() - truth(p.T * 30)).norm(), 1e-6);
}

TEST(KfCycle, CovarianceStaysSymmetricPsd) {
  TrackerParams p;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0, 0.05);
  TrackState s = init_track(Ellipse(0, 0, 0.5, 0.3, 0.2), p);
  for (int k = 0; k < 500; ++k) {
    s = kf_predict(s, p);
    const double rp = adapt_position_variance(std::abs(n(rng)), p);
    s = kf_update(s, Ellipse(0.1 * k + n(rng), n(rng), 0.5 + std::abs(n(rng)), 0.3, 0.2 + n(rng)), rp, p);
    ASSERT_TRUE(symmetric(s.cov));
    ASSERT_GE(min_eig(s.cov), -1e-9);
  }
}

TEST(Confidence, ConstantShapeIsZero) {
  const std::vector<Ellipse> h(5, Ellipse(1, 2, 1.0, 0.5, 0.3));
  const auto c = confidence(h, TrackerParams{});
  EXPECT_EQ(c.xi_eta, 0.0);
  EXPECT_EQ(c.xi_p_hat, 0.0);
}

TEST(Confidence, EstimatorAtUnitIndicator) {
  TrackerParams p;
  EXPECT_DOUBLE_EQ(p.kappa, 5.5);
  EXPECT_DOUBLE_EQ(p.gamma_pow, 1.3);
  EXPECT_DOUBLE_EQ(p.kappa * std::pow(1.0, p.gamma_pow), 5.5);
  // a window whose xi_eta is exactly 1: a varies by +-1 around its mean
  const std::vector<Ellipse> h{Ellipse(0, 0, 2.0, 0.5, 0), Ellipse(0, 0, 3.0, 0.5, 0), Ellipse(0, 0, 4.0, 0.5, 0)};
  const auto c = confidence(h, p);
  EXPECT_NEAR(c.xi_eta, 1.0, 1e-12);
  EXPECT_NEAR(c.xi_p_hat, 5.5, 1e-12);
}

TEST(Confidence, DirectFormulaOnThreeShapes) {
  // shapes [1,1,0], [1,1,0], [1,1,0.3] with mean [1,1,0.1]
  const std::vector<Ellipse> h{Ellipse(0, 0, 1, 1, 0), Ellipse(0, 0, 1, 1, 0), Ellipse(0, 0, 1, 1, 0.3)};
  const double want = (0.1 * 0.1 + 0.1 * 0.1 + 0.2 * 0.2) / 2.0;
  const auto c = confidence(h, TrackerParams{});
  EXPECT_NEAR(c.xi_eta, want, 1e-12);
  EXPECT_NEAR(c.xi_p_hat, 5.5 * std::pow(want, 1.3), 1e-12);
}

TEST(Confidence, NeedsTwoSamples) {
  const std::vector<Ellipse> h{Ellipse(0, 0, 1, 1, 0)};
  EXPECT_THROW(confidence(h, TrackerParams{}), Error);
}

TEST(AdaptPositionVariance, Endpoints) {
  TrackerParams p;
  EXPECT_EQ(adapt_position_variance(p.xi_min_crit, p), p.r_p_min);
  EXPECT_EQ(adapt_position_variance(p.xi_max_crit, p), p.r_p_max);
}

TEST(AdaptPositionVariance, GeometricMidpoint) {
  TrackerParams p;
  const double mid = std::sqrt(p.xi_min_crit * p.xi_max_crit);
  EXPECT_NEAR(adapt_position_variance(mid, p), std::sqrt(p.r_p_min * p.r_p_max), 1e-15);
}

TEST(AdaptPositionVariance, ClampedAndMonotone) {
  TrackerParams p;
  EXPECT_EQ(adapt_position_variance(0.0, p), p.r_p_min);
  EXPECT_EQ(adapt_position_variance(-1.0, p), p.r_p_min);
  EXPECT_EQ(adapt_position_variance(1e3, p), p.r_p_max);
  double prev = 0.0;
  for (double x = 1e-6; x < 10.0; x *= 1.1) {
    const double r = adapt_position_variance(x, p);
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(Inflate, ZeroRadius) {
  EXPECT_EQ(inflate(2, 1, 0).sigma, 0.0);
  EXPECT_FALSE(inflate(2, 1, 0).fallback);
}

TEST(Inflate, CircleGivesZero) {
  for (double r : {0.1, 0.5, 2.0}) {
    EXPECT_EQ(inflate(1.3, 1.3, r).sigma, 0.0);
    EXPECT_NEAR(inflation_residual(1.3, 1.3, r, 0.0), 0.0, 1e-12);
  }
}

TEST(Inflate, RootMatchesDenseScan) {
  const double a = 2, b = 1, r = 0.5;
  // independent scan of the residual for its first sign change
  double lo = 0.0;
  const double step = 1e-6;
  while (inflation_residual(a, b, r, lo + step) < 0.0) lo += step;
  const auto res = inflate(a, b, r);
  EXPECT_FALSE(res.fallback);
  EXPECT_NEAR(res.sigma, lo, 2 * step);
  EXPECT_NEAR(res.sigma, 0.022, 5e-4);
  EXPECT_LT(std::abs(inflation_residual(a, b, r, res.sigma)), 1e-9);
}

TEST(Inflate, ConservativeReturnsRadius) {
  const auto res = inflate(2, 1, 0.37, InflationMode::kConservative);
  EXPECT_EQ(res.sigma, 0.37);
  EXPECT_FALSE(res.fallback);
}

TEST(Inflate, ResidualSmallOnRandomInputs) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> ax(0.05, 3), rr(0.01, 2);
  for (int i = 0; i < 500; ++i) {
    const double a = ax(rng), b = ax(rng), r = rr(rng);
    const auto res = inflate(a, b, r);
    if (res.fallback) continue;
    EXPECT_LT(std::abs(inflation_residual(a, b, r, res.sigma)), 1e-9);
    EXPECT_GE(res.sigma, 0.0);
  }
}

TEST(Inflate, RejectsNegative) { EXPECT_THROW(inflate(-1, 1, 1), Error); }

TEST(PredictTrajectory, ZeroNoiseZeroVelocityHoldsStill) {
  TrackerParams p;
  p.process_noise = Mat9::Zero();
  TrackState s = state({1, 1}, {0, 0}, {0, 0}, 1.0, 0.5, 0.3);
  s.cov = Mat9::Zero();
  const auto pr = predict_trajectory(s, p, 10);
  ASSERT_EQ(pr.steps.size(), 10u);
  for (std::size_t k = 0; k < pr.steps.size(); ++k) {
    EXPECT_EQ(pr.nominal[k], pr.nominal.front());
    EXPECT_NEAR(pr.steps[k].a(), 1.0, 1e-12);
    EXPECT_NEAR(pr.radius[k], 0.0, 1e-12);
  }
}

TEST(PredictTrajectory, RadiusGrowsWithHorizon) {
  TrackerParams p;
  TrackState s = state({1, 1}, {0, 0}, {0, 0}, 1.0, 0.5, 0.3);
  s.cov = 0.01 * Mat9::Identity();
  const auto pr = predict_trajectory(s, p, 10);
  for (std::size_t k = 1; k < pr.steps.size(); ++k) {
    EXPECT_GE(pr.radius[k], pr.radius[k - 1]);
    EXPECT_GE(pr.steps[k].a(), pr.steps[k - 1].a() - 1e-12);
  }
}

TEST(PredictTrajectory, ConstantVelocityCenters) {
  TrackerParams p;
  p.T = 0.1;
  const auto pr = predict_trajectory(state({0, 0}, {1, 0}, {0, 0}), p, 5);
  for (int k = 1; k <= 5; ++k) {
    EXPECT_NEAR(pr.steps[static_cast<std::size_t>(k - 1)].cx(), 0.1 * k, 1e-12);
    EXPECT_NEAR(pr.steps[static_cast<std::size_t>(k - 1)].cy(), 0.0, 1e-12);
  }
}

TEST(PredictTrajectory, RadiusStrictlyIncreasesWithProcessNoise) {
  TrackerParams p;
  TrackState s = state({0, 0}, {0.5, 0.5}, {0, 0});
  s.cov = 0.01 * Mat9::Identity();
  const auto pr = predict_trajectory(s, p, 25);
  double prev = pr.current_radius;
  for (double r : pr.radius) {
    EXPECT_GT(r, prev);
    prev = r;
  }
}

TEST(PredictTrajectory, InflatedContainsNominal) {
  TrackerParams p;
  p.inflation = InflationMode::kConservative;
  TrackState s = state({0, 0}, {0.5, 0.2}, {0.1, 0}, 1.2, 0.4, 0.7);
  const auto pr = predict_trajectory(s, p, 25);
  for (std::size_t k = 0; k < pr.steps.size(); ++k) {
    EXPECT_GE(pr.steps[k].a(), pr.nominal[k].a());
    EXPECT_GE(pr.steps[k].b(), pr.nominal[k].b());
    for (int i = 0; i < 64; ++i)
      EXPECT_TRUE(point_in_ellipse(pr.steps[k], pr.nominal[k].boundary_point(2 * kPi * i / 64), 1e-9));
  }
}

TEST(PredictTrajectory, RejectsEmptyHorizon) {
  EXPECT_THROW(predict_trajectory(TrackState{}, TrackerParams{}, 0), Error);
}

TEST(MultiTracker, TracksConstantVelocityObstacle) {
  TrackerParams p;
  MultiTracker tr(p, {});
  const Vec2 v(0.8, 0.3);
  for (int k = 0; k < 60; ++k) {
    const std::vector<Ellipse> m{Ellipse(Vec2(1, 1) + v * (0.1 * k), 0.5, 0.4, 0.1)};
    tr.step(m, 0.1 * k);
  }
  ASSERT_EQ(tr.tracks().size(), 1u);
  const TrackRecord& rec = tr.tracks().begin()->second;
  EXPECT_LT((rec.state.velocity() - v).norm(), 0.05);
  const auto pr = tr.predict(10);
  ASSERT_EQ(pr.size(), 1u);
  EXPECT_NEAR(pr.front().steps.back().cx(), 1 + 0.8 * 6.9, 0.05);
}

TEST(CurveFit, QuadraticHistoryExtrapolatesExactly) {
  std::vector<Ellipse> hist;
  std::vector<double> times;
  for (int k = 0; k < 10; ++k) {
    const double t = 0.1 * k;
    hist.emplace_back(1 + 2 * t + 0.5 * t * t, -t, 0.5, 0.3, 0.0);
    times.push_back(t);
  }
  const auto pr = curvefit_predict(hist, times, 0.1, 5, CurveFitParams{}, 3);
  EXPECT_EQ(pr.label, 3);
  for (int k = 1; k <= 5; ++k) {
    const double t = 0.9 + 0.1 * k;
    EXPECT_NEAR(pr.at(static_cast<std::size_t>(k)).cx(), 1 + 2 * t + 0.5 * t * t, 1e-9);
    EXPECT_NEAR(pr.at(static_cast<std::size_t>(k)).cy(), -t, 1e-9);
  }
}

TEST(ConfidenceTrace, ProducesEnoughFrames) {
  const auto tr = oracle::confidence_trace(0.0, 1, 260);
  EXPECT_GE(tr.truth.size(), 200u);
  for (double x : tr.estimated) EXPECT_GE(x, 0.0);
}
