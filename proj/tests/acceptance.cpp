// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "support.hpp"

#include <dcbf/assignment.hpp>
#include <dcbf/min_bounding_ellipse.hpp>
#include <dcbf/sim/log.hpp>
#include <dcbf/sim/run.hpp>
#include <dcbf/tracking.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace dcbf;
using namespace dcbf::sim;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kResidualTol = -1e-6;
constexpr double kAuditTol = -0.05;
constexpr double kEpisodeSeconds = 60.0;
constexpr double kEuclidMinDist = 0.1;
constexpr double kPearsonMin = 0.8;
constexpr int kMinFrames = 200;
constexpr double kMbeContainTol = 1e-7;
constexpr double kMbeAreaRel = 1e-5;
constexpr double kRayTol = 1e-9;
constexpr double kFilterTol = 1e-6;
constexpr double kRootTol = 1e-9;
constexpr double kTickBudgetMs = 100.0;

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string crossing_path() { return std::string(DCBF_SOURCE_DIR) + "/scenarios/crossing.json"; }

void safety(const ScenarioRun& r) {
  const bool ok = r.min_cbf_residual >= kResidualTol && r.min_audit_h >= kAuditTol && !r.metrics.collided &&
                  r.outcome == Outcome::kGoal && r.wall_seconds < kEpisodeSeconds;
  report("safety-invariance", ok,
         fmt("mpc-dcbf on %s: min residual %.3g (>= %g), min audited h %.4f m (>= %g), outcome %s, "
             "%d/%d solves optimal, %.2f s wall (< %g)",
             r.scenario.c_str(), r.min_cbf_residual, kResidualTol, r.min_audit_h, kAuditTol,
             std::string(to_string(r.outcome)).c_str(), r.optimal_solves, r.solves, r.wall_seconds,
             kEpisodeSeconds));
}

void table_ordering(const std::map<PlannerKind, ScenarioRun>& runs) {
  const RunMetrics& eu = runs.at(PlannerKind::kMpcEuclid).metrics;
  const RunMetrics& cbf = runs.at(PlannerKind::kMpcCbf).metrics;
  const RunMetrics& kf = runs.at(PlannerKind::kMpcKf).metrics;
  const RunMetrics& dc = runs.at(PlannerKind::kMpcDcbf).metrics;
  const bool a = eu.collided || eu.min_dist < kEuclidMinDist;
  const bool b = dc.min_dist > cbf.min_dist;
  const bool c = dc.speed_var < cbf.speed_var;
  const bool d = dc.reac_time < kf.reac_time;
  auto tag = [](bool x) { return x ? "ok" : "VIOLATED"; };
  report("table-ordering", a && b && c && d,
         fmt("(a) %s euclid collided=%d min_dist %.3f (< %g); (b) %s min_dist dcbf %.3f > cbf %.3f; "
             "(c) %s speed_var dcbf %.4f < cbf %.4f; (d) %s reac_time dcbf %.2f < kf %.2f",
             tag(a), eu.collided, eu.min_dist, kEuclidMinDist, tag(b), dc.min_dist, cbf.min_dist, tag(c),
             dc.speed_var, cbf.speed_var, tag(d), dc.reac_time, kf.reac_time));
}

void confidence_estimator() {
  const auto still = oracle::confidence_trace(0.0, 101);
  const auto moving = oracle::confidence_trace(0.5, 202);
  const double rs = oracle::pearson(still.estimated, still.truth);
  const double rm = oracle::pearson(moving.estimated, moving.truth);
  const bool ok = rs >= kPearsonMin && rm >= kPearsonMin && static_cast<int>(still.truth.size()) >= kMinFrames &&
                  static_cast<int>(moving.truth.size()) >= kMinFrames;
  report("confidence-estimator", ok,
         fmt("pearson static %.3f over %zu frames, moving 0.5 m/s %.3f over %zu frames (>= %g, >= %d frames)", rs,
             still.truth.size(), rm, moving.truth.size(), kPearsonMin, kMinFrames));
}

void oracle_equivalences() {
  std::mt19937_64 rng(20240601);
  // assignment
  int km_bad = 0;
  {
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> c(0, 10);
    for (int i = 0; i < 200; ++i) {
      Eigen::MatrixXd m(dim(rng), dim(rng));
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = c(rng);
      // exact up to summation order
      if (std::abs(kuhn_munkres(m).total_cost - oracle::brute_force_assignment(m)) > 1e-12) ++km_bad;
    }
  }
  // minimum bounding ellipse
  int mbe_contain_bad = 0, mbe_area_bad = 0;
  double worst_rel = 0.0;
  {
    std::uniform_int_distribution<int> count(3, 8);
    std::uniform_real_distribution<double> u(-3, 3);
    MbeOptions opt;
    opt.axis_floor = 1e-9;
    for (int i = 0; i < 100; ++i) {
      std::vector<Vec2> pts;
      const int n = count(rng);
      for (int k = 0; k < n; ++k) pts.emplace_back(u(rng), u(rng));
      const Ellipse e = min_bounding_ellipse(pts, opt);
      for (const Vec2& p : pts)
        if (!point_in_ellipse(e, p, kMbeContainTol)) ++mbe_contain_bad;
      const double want = oracle::min_enclosing_area(pts);
      const double rel = std::abs(e.area() - want) / want;
      worst_rel = std::max(worst_rel, rel);
      if (!(rel <= kMbeAreaRel)) ++mbe_area_bad;
    }
  }
  // ray-ellipse distance
  int ray_bad = 0;
  double worst_ray = 0.0;
  {
    std::uniform_real_distribution<double> u(-5, 5), ax(0.05, 3), th(-4, 4);
    for (int i = 0; i < 1000; ++i) {
      const Ellipse e(u(rng), u(rng), ax(rng), ax(rng), th(rng));
      const Vec2 p(u(rng), u(rng));
      const double err =
          std::abs(ray_ellipse_distance(e, p) - oracle::ray_distance(e.cx(), e.cy(), e.a(), e.b(), e.theta(), p));
      worst_ray = std::max(worst_ray, err);
      if (!(err <= kRayTol)) ++ray_bad;
    }
  }
  report("oracle-equivalences", km_bad == 0 && mbe_contain_bad == 0 && mbe_area_bad == 0 && ray_bad == 0,
         fmt("assignment %d/200 mismatches; ellipse %d uncontained points, %d/100 area mismatches "
             "(worst rel %.2g, tol %g); ray %d/1000 mismatches (worst %.2g, tol %g)",
             km_bad, mbe_contain_bad, mbe_area_bad, worst_rel, kMbeAreaRel, ray_bad, worst_ray, kRayTol));
}

void filter_correctness() {
  TrackerParams p;
  const Vec2 x0(1, -2), v0(0.5, 1.0), a0(0.8, -0.6);
  auto truth = [&](double t) -> Vec2 { return x0 + v0 * t + 0.5 * a0 * t * t; };
  // noiseless positions: measurement variance set to match
  const double r_exact = 1e-6;
  TrackState s = init_track(Ellipse(truth(0), 0.5, 0.3, 0.2), p);
  bool psd = true;
  int converged_at = -1;
  double err = 0.0;
  for (int k = 1; k <= 30; ++k) {
    s = kf_predict(s, p);
    s = kf_update(s, Ellipse(truth(p.T * k), 0.5, 0.3, 0.2), r_exact, p);
    psd = psd && (s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() == 0.0 &&
          Eigen::SelfAdjointEigenSolver<Mat9>(s.cov).eigenvalues().minCoeff() >= -1e-12;
    err = (s.position() - truth(p.T * k)).norm();
    if (err >= kFilterTol) converged_at = -1;
    else if (converged_at < 0) converged_at = k;
  }
  const bool ends = adapt_position_variance(p.xi_min_crit, p) == p.r_p_min &&
                    adapt_position_variance(p.xi_max_crit, p) == p.r_p_max;
  const double mid = adapt_position_variance(std::sqrt(p.xi_min_crit * p.xi_max_crit), p);
  const double mid_want = std::sqrt(p.r_p_min * p.r_p_max);
  const double mid_ulps = std::abs(mid - mid_want) / std::numeric_limits<double>::epsilon() / mid_want;
  const bool mid_ok = mid_ulps <= 2.0;
  report("filter-correctness", converged_at > 0 && converged_at <= 30 && err < kFilterTol && psd && ends && mid_ok,
         fmt("error stays < %g from update %d on, %.2g after 30; covariance symmetric PSD %s; variance endpoints %s, "
             "geometric midpoint within %.1f ulp",
             kFilterTol, converged_at, err, psd ? "yes" : "no", ends ? "exact" : "off", mid_ulps));
}

void root_solve() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ax(0.05, 3), rr(0.01, 2);
  double worst = 0.0;
  int fallbacks = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = ax(rng), b = ax(rng), r = rr(rng);
    const auto res = inflate(a, b, r);
    if (res.fallback) {
      ++fallbacks;
      continue;
    }
    worst = std::max(worst, std::abs(inflation_residual(a, b, r, res.sigma)));
  }
  bool circle = true, conservative = true;
  for (double r : {0.05, 0.3, 1.0, 2.5}) {
    circle = circle && inflate(0.8, 0.8, r).sigma == 0.0;
    conservative = conservative && inflate(1.7, 0.4, r, InflationMode::kConservative).sigma == r;
  }
  report("inflation-root", worst < kRootTol && circle && conservative,
         fmt("worst residual %.2g over %d solves (< %g, %d conservative fallbacks); circle gives 0: %s; "
             "conservative returns r: %s",
             worst, 1000 - fallbacks, kRootTol, fallbacks, circle ? "yes" : "no", conservative ? "yes" : "no"));
}

void performance(const ScenarioRun& r) {
  std::vector<double> ms;
  for (const TickRecord& t : r.ticks) ms.push_back(t.tick_ms);
  std::sort(ms.begin(), ms.end());
  const double median = ms.empty() ? 0.0 : ms[ms.size() / 2];
  const double worst = ms.empty() ? 0.0 : ms.back();
  report("performance-budget", !ms.empty() && median < kTickBudgetMs,
         fmt("median tick %.2f ms, max %.2f ms over %zu ticks (N = %d, %zu obstacles) (< %g ms)", median, worst,
             ms.size(), 25, r.ticks.empty() ? 0 : r.ticks.front().truth.size(), kTickBudgetMs));
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

void determinism(const Scenario& s, const ScenarioRun& first) {
  const fs::path root = fs::temp_directory_path() / "dcbf_acceptance_determinism";
  fs::remove_all(root);
  const ScenarioRun second = run(s, PlannerKind::kMpcDcbf);
  write_run_logs(root / "a", s, first);
  write_run_logs(root / "b", s, second);
  const auto a = read_dir(root / "a"), b = read_dir(root / "b");
  int differ = 0, compared = 0;
  for (const auto& [name, content] : a) {
    if (name == "timing.csv") continue;  // wall-clock measurements
    ++compared;
    if (!b.count(name) || b.at(name) != content) ++differ;
  }
  fs::remove_all(root);
  report("determinism", differ == 0 && a.size() == b.size(),
         fmt("%d of %d log and metric files differ between two identical runs (timing.csv excluded)", differ,
             compared));
}

}  // namespace

int main() {
  try {
    const Scenario s = load_scenario(crossing_path());
    std::map<PlannerKind, ScenarioRun> runs;
    for (PlannerKind k : kAllPlannerKinds) runs.emplace(k, run(s, k));
    const ScenarioRun& dcbf = runs.at(PlannerKind::kMpcDcbf);

    safety(dcbf);
    table_ordering(runs);
    confidence_estimator();
    oracle_equivalences();
    filter_correctness();
    root_solve();
    performance(dcbf);
    determinism(s, dcbf);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
