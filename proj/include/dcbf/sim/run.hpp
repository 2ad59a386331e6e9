#pragma once

// Closed perception -> tracking -> planning loop over a scenario, with the
// comparison metrics and a ground-truth barrier audit.

#include <dcbf/mpc.hpp>
#include <dcbf/perception.hpp>
#include <dcbf/sim/scenario.hpp>
#include <dcbf/sim/world.hpp>
#include <dcbf/tracker.hpp>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dcbf::sim {

enum class Outcome { kGoal, kCollision, kTimeout };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kGoal: return "goal";
    case Outcome::kCollision: return "collision";
    case Outcome::kTimeout: return "timeout";
  }
  return "unknown";
}

struct RunMetrics {
  double min_dist = std::numeric_limits<double>::infinity();  // m, infinity without obstacles
  double cons_time = std::numeric_limits<double>::quiet_NaN();  // s, NaN unless the goal was reached
  double reac_time = std::numeric_limits<double>::quiet_NaN();  // s, NaN without a reaction
  double speed_var = 0.0;  // (m/s)^2
  bool collided = false;
  bool complete = false;   // goal reached
};

struct AuditSample {
  std::string id;
  double h = 0.0;  // ground-truth surface distance minus d_safe
};

struct TickRecord {
  double t = 0.0;
  RobotState robot;
  ControlInput control;
  std::vector<ObstacleState> truth;
  std::vector<LabeledEllipse> ellipses;
  std::vector<PredictedObstacle> predictions;
  SolveStatus status = SolveStatus::kOptimal;
  int iterations = 0;
  double cost = 0.0;
  double min_residual = std::numeric_limits<double>::infinity();
  double slack = 0.0;
  std::vector<AuditSample> audit;
  std::optional<ControlInput> free_control;  // obstacle-free plan, while measuring reaction
  std::optional<ElevationGrid> grid;
  double solve_ms = 0.0;  // wall clock, kept out of the deterministic logs
  double tick_ms = 0.0;
};

struct ScenarioRun {
  std::string scenario;
  PlannerKind kind = PlannerKind::kMpcDcbf;
  std::uint64_t seed = 0;
  double dt = 0.1;
  double d_safe = 1.3;
  double gamma_cbf = 0.15;
  std::vector<TickRecord> ticks;
  RobotState final_robot;
  double final_time = 0.0;
  Outcome outcome = Outcome::kTimeout;
  RunMetrics metrics;
  double enter_time = std::numeric_limits<double>::quiet_NaN();
  int solves = 0;
  int optimal_solves = 0;
  double min_cbf_residual = std::numeric_limits<double>::infinity();
  double min_audit_h = std::numeric_limits<double>::infinity();
  double initial_audit_h = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;

  bool all_optimal() const { return solves == optimal_solves; }
};

inline PerceptionParams perception_params(const PerceptionSpec& p) {
  PerceptionParams out;
  out.map = p.map;
  out.thresholds = p.thresholds;
  out.dbscan_eps = p.dbscan_eps;
  out.dbscan_min_pts = p.dbscan_min_pts;
  return out;
}

/// Obstacles for the frozen-snapshot planners: the raw measured ellipse,
/// uninflated, held over the horizon.
inline std::vector<PredictedObstacle> snapshot_obstacles(std::span<const LabeledEllipse> ellipses) {
  std::vector<PredictedObstacle> out;
  for (const LabeledEllipse& le : ellipses) {
    PredictedObstacle p;
    p.label = le.label;
    p.current = le.ellipse;
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PredictedObstacle> curvefit_obstacles(const MultiTracker& tracker,
                                                         const CurveFitParams& cf, double dt, int n) {
  std::vector<PredictedObstacle> out;
  for (const auto& [label, rec] : tracker.tracks()) {
    const std::vector<Ellipse> hist(rec.history.begin(), rec.history.end());
    const std::vector<double> times(rec.history_time.begin(), rec.history_time.end());
    out.push_back(curvefit_predict(hist, times, dt, n, cf, label));
  }
  return out;
}

inline bool uses_tracker(PlannerKind k) {
  return k == PlannerKind::kMpcKf || k == PlannerKind::kMpcCbfCurvefit || k == PlannerKind::kMpcDcbf;
}

inline ScenarioRun run(const Scenario& s, PlannerKind kind) {
  using clock = std::chrono::steady_clock;
  s.validate();
  const auto wall0 = clock::now();

  ScenarioRun out;
  out.scenario = s.name;
  out.kind = kind;
  out.seed = s.seed;
  out.dt = s.sim.dt;
  out.d_safe = s.planner.d_safe;
  out.gamma_cbf = s.planner.gamma_cbf;

  std::mt19937_64 rng(s.seed);
  const PerceptionParams pp = perception_params(s.perception);
  const ReferencePath path(s.reference);
  TrackerParams tp = s.tracker;
  tp.T = s.sim.dt;
  MultiTracker tracker(tp, s.perception.association);
  LabelManager labels(s.perception.association);
  const PlannerParams& plan = s.planner;

  WorldState w = initial_world(s);
  WarmStart warm, warm_free;
  double arc = 0.0;
  bool reacted = false;
  std::vector<double> speeds;
  const long max_ticks = std::lround(s.sim.timeout / s.sim.dt);

  auto observe = [&](const WorldState& ws) {
    double worst = std::numeric_limits<double>::infinity();
    std::vector<AuditSample> audit;
    for (const ObstacleState& o : ws.obstacles) {
      const double d = surface_distance(o, ws.robot.position());
      out.metrics.min_dist = std::min(out.metrics.min_dist, std::max(0.0, d - s.robot.radius));
      audit.push_back({o.id, d - plan.d_safe});
      worst = std::min(worst, d - plan.d_safe);
    }
    out.min_audit_h = std::min(out.min_audit_h, worst);
    return audit;
  };

  for (const AuditSample& a : observe(w)) out.initial_audit_h = std::min(out.initial_audit_h, a.h);

  for (long tick = 0;; ++tick) {
    if (w.collided) {
      out.outcome = Outcome::kCollision;
      break;
    }
    if ((w.robot.position() - s.robot.goal).norm() < s.sim.goal_tolerance) {
      out.outcome = Outcome::kGoal;
      out.metrics.cons_time = w.t;
      break;
    }
    if (tick >= max_ticks) {
      out.outcome = Outcome::kTimeout;
      break;
    }
    const auto tick0 = clock::now();
    TickRecord rec;
    rec.t = w.t;
    rec.robot = w.robot;
    rec.truth = w.obstacles;
    rec.audit = observe(w);

    bool dynamic_in_window = false;
    for (const ObstacleState& o : w.obstacles)
      if (o.dynamic && in_window(o, w.robot.position(), pp.map.size_x, pp.map.size_y))
        dynamic_in_window = true;
    if (dynamic_in_window && std::isnan(out.enter_time)) out.enter_time = w.t;

    const std::vector<Vec3> cloud = raycast(w.obstacles, w.robot, s.sensor, rng);
    PerceptionFrame frame = perceive(cloud, w.robot, pp);

    std::vector<PredictedObstacle> preds;
    if (uses_tracker(kind)) {
      rec.ellipses = tracker.step(frame.ellipses, w.t);
      if (kind == PlannerKind::kMpcCbfCurvefit)
        preds = curvefit_obstacles(tracker, s.curvefit, plan.dt, plan.N);
      else
        preds = tracker.predict(plan.N);
    } else {
      rec.ellipses = labels.update(frame.ellipses, w.t).current;
      preds = snapshot_obstacles(rec.ellipses);
    }
    rec.predictions = preds;

    arc = path.project(w.robot.position(), arc, 2.0);
    const std::vector<RobotState> ref = path.horizon(arc, s.robot.speed, plan.dt, plan.N);

    const auto solve0 = clock::now();
    const MpcSolution sol = plan_variant(kind, w.robot, ref, preds, plan, warm);
    rec.solve_ms = std::chrono::duration<double, std::milli>(clock::now() - solve0).count();
    const ControlInput u = sol.controls.front();

    ++out.solves;
    if (sol.status == SolveStatus::kOptimal) ++out.optimal_solves;
    out.min_cbf_residual = std::min(out.min_cbf_residual, sol.min_residual);
    rec.control = u;
    rec.status = sol.status;
    rec.iterations = sol.iterations;
    rec.cost = sol.cost;
    rec.min_residual = sol.min_residual;
    rec.slack = sol.slack;

    if (!std::isnan(out.enter_time) && !reacted) {
      const MpcSolution free = solve_rows(w.robot, ref, {}, plan, warm_free);
      rec.free_control = free.controls.front();
      const double dv = u.v - free.controls.front().v;
      const double dw = u.omega - free.controls.front().omega;
      if (std::hypot(dv, dw) > s.sim.reaction_threshold) {
        reacted = true;
        out.metrics.reac_time = w.t - out.enter_time;
      }
      warm_free = shift_warm_start(free);
      warm_free.previous = u;
    }
    if (dynamic_in_window) speeds.push_back(u.v);
    if (s.log.grid_every > 0 && tick % s.log.grid_every == 0) rec.grid = std::move(frame.grid);

    warm = shift_warm_start(sol);
    w = step(s, w, u);
    rec.tick_ms = std::chrono::duration<double, std::milli>(clock::now() - tick0).count();
    out.ticks.push_back(std::move(rec));
  }
  observe(w);
  out.final_robot = w.robot;
  out.final_time = w.t;
  out.metrics.collided = out.outcome == Outcome::kCollision;
  out.metrics.complete = out.outcome == Outcome::kGoal;
  if (out.metrics.collided) out.metrics.min_dist = 0.0;
  if (speeds.size() > 1) {
    double mean = 0.0;
    for (double v : speeds) mean += v;
    mean /= static_cast<double>(speeds.size());
    double var = 0.0;
    for (double v : speeds) var += (v - mean) * (v - mean);
    out.metrics.speed_var = var / static_cast<double>(speeds.size());
  }
  out.wall_seconds = std::chrono::duration<double>(clock::now() - wall0).count();
  return out;
}

inline int exit_code(Outcome o) {
  switch (o) {
    case Outcome::kGoal: return 0;
    case Outcome::kCollision: return 2;
    case Outcome::kTimeout: return 3;
  }
  return 3;
}

}  // namespace dcbf::sim
