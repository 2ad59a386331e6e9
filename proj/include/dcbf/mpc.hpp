#pragma once

// Receding-horizon tracking MPC for the unicycle model with one discrete
// barrier constraint per obstacle and step, solved by trust-region SQP over
// the control sequence (states are always the exact rollout of the controls).

#include <dcbf/barrier.hpp>
#include <dcbf/geometry.hpp>
#include <dcbf/qp.hpp>
#include <dcbf/tracking.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcbf {

enum class PlannerKind { kMpcEuclid, kMpcCbf, kMpcKf, kMpcCbfCurvefit, kMpcDcbf };

inline constexpr std::array<PlannerKind, 5> kAllPlannerKinds{
    PlannerKind::kMpcEuclid, PlannerKind::kMpcCbf, PlannerKind::kMpcKf,
    PlannerKind::kMpcCbfCurvefit, PlannerKind::kMpcDcbf};

inline std::string_view to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::kMpcEuclid: return "mpc-euclid";
    case PlannerKind::kMpcCbf: return "mpc-cbf";
    case PlannerKind::kMpcKf: return "mpc-kf";
    case PlannerKind::kMpcCbfCurvefit: return "mpc-cbf-curvefit";
    case PlannerKind::kMpcDcbf: return "mpc-dcbf";
  }
  return "unknown";
}

inline std::optional<PlannerKind> parse_planner_kind(std::string_view s) {
  for (PlannerKind k : kAllPlannerKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::string planner_kind_list() {
  std::string out;
  for (PlannerKind k : kAllPlannerKinds) {
    if (!out.empty()) out += ", ";
    out += to_string(k);
  }
  return out;
}

struct StateBounds {
  double x_min = -1e3, x_max = 1e3;
  double y_min = -1e3, y_max = 1e3;
};

struct PlannerParams {
  int N = 25;
  double dt = 0.1;
  double gamma_cbf = 0.15;
  double d_safe = 1.3;
  Eigen::Vector3d weight_P{10.0, 10.0, 1.0};  // diagonal weights
  Eigen::Vector3d weight_Q{1.0, 1.0, 0.1};
  Eigen::Vector2d weight_R{0.1, 0.1};
  Eigen::Vector2d weight_S{1.0, 1.0};
  double v_min = 0.0;
  double v_max = 1.2;
  double omega_max = 1.5;
  double terminal_radius = 2.0;
  std::optional<StateBounds> state_bounds;
  double slack_penalty = 1e4;
  double terminal_penalty = 1e2;  // per metre outside the terminal ball
  int max_iterations = 30;
  double tolerance = 1e-6;
  double trust_radius = 0.5;

  void validate() const {
    if (N < 1) throw Error("planner: N must be >= 1");
    if (!(dt > 0.0)) throw Error("planner: dt must be positive");
    if (!(gamma_cbf > 0.0 && gamma_cbf <= 1.0)) throw Error("planner: gamma_cbf must be in (0, 1]");
    if (!(v_min <= v_max)) throw Error("planner: v_min > v_max");
    if (!(omega_max >= 0.0)) throw Error("planner: omega_max must be >= 0");
    if ((weight_P.array() < 0).any() || (weight_Q.array() < 0).any() ||
        (weight_R.array() < 0).any() || (weight_S.array() < 0).any())
      throw Error("planner: weights must be non-negative");
    if (!(terminal_radius > 0.0)) throw Error("planner: terminal_radius must be positive");
    if (!(slack_penalty > 0.0) || !(terminal_penalty >= 0.0))
      throw Error("planner: penalties must be positive");
  }
};

inline double cbf_constraint(const RobotState& x_k, const RobotState& x_k1, const Ellipse& ob_k,
                             const Ellipse& ob_k1, const PlannerParams& p) {
  return cbf_constraint(x_k, x_k1, ob_k, ob_k1, p.gamma_cbf, p.d_safe);
}

enum class SolveStatus { kOptimal, kSlackRelaxed, kInfeasible };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kSlackRelaxed: return "slack-relaxed";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

struct MpcSolution {
  std::vector<ControlInput> controls;             // u_0 .. u_{N-1}
  std::vector<RobotState> states;                 // x_0 .. x_N
  std::vector<std::vector<double>> cbf_residuals; // [obstacle][k], k = 0..N-1
  std::vector<std::vector<double>> barrier_values;// [obstacle][k], k = 0..N
  SolveStatus status = SolveStatus::kOptimal;
  int iterations = 0;
  double cost = 0.0;
  double min_residual = 0.0;  // over all barrier rows; +inf without obstacles
  double slack = 0.0;         // total violation of all softened rows
  bool converged = false;
};

struct WarmStart {
  std::vector<ControlInput> controls;
  std::optional<ControlInput> previous;  // last executed control, for the rate cost
};

/// Drops the first control of a solution and repeats the last one.
inline WarmStart shift_warm_start(const MpcSolution& sol) {
  WarmStart w;
  if (sol.controls.empty()) return w;
  w.controls.assign(sol.controls.begin() + 1, sol.controls.end());
  w.controls.push_back(sol.controls.back());
  w.previous = sol.controls.front();
  return w;
}

/// Obstacle sequence seen by one family of barrier rows:
/// residual_k = h(x_{k+1}, O_{k+1}) - decay * h(x_k, O_k), k = 0..N-1.
struct BarrierRows {
  int label = -1;
  std::vector<Ellipse> per_step;  // N + 1 ellipses
  double decay = 0.0;
};

namespace detail {

struct SafeBarrier {
  double h;
  Vec2 grad;
};

inline SafeBarrier safe_barrier(const Vec2& p, const Ellipse& e, double d_safe) {
  if ((p - e.center()).norm() < 1e-9) return {-d_safe - e.b(), Vec2::Zero()};
  const BarrierEval be = barrier(p, e, d_safe);
  return {be.h, be.grad};
}

class MpcProblem {
 public:
  MpcProblem(const RobotState& x0, std::span<const RobotState> ref,
             std::span<const BarrierRows> rows, const PlannerParams& p,
             std::optional<ControlInput> prev)
      : x0_(x0), ref_(ref.begin(), ref.end()), rows_(rows.begin(), rows.end()), p_(p), prev_(prev) {
    n_ = 2 * p.N;
  }

  Eigen::Index num_vars() const { return n_; }

  std::vector<RobotState> rollout(const Eigen::VectorXd& u) const {
    std::vector<RobotState> xs;
    xs.reserve(static_cast<std::size_t>(p_.N) + 1);
    xs.push_back(x0_);
    for (int k = 0; k < p_.N; ++k) xs.push_back(dynamics_step(xs.back(), {u(2 * k), u(2 * k + 1)}, p_.dt));
    return xs;
  }

  static Vec3 state_error(const RobotState& x, const RobotState& r) {
    return {x.x - r.x, x.y - r.y, wrap_angle(x.heading - r.heading)};
  }

  double cost(const Eigen::VectorXd& u, const std::vector<RobotState>& xs) const {
    double j = 0.0;
    for (int k = 0; k < p_.N; ++k) {
      const Vec3 e = state_error(xs[static_cast<std::size_t>(k)], ref_[static_cast<std::size_t>(k)]);
      j += e.dot(p_.weight_Q.cwiseProduct(e));
    }
    const Vec3 en = state_error(xs.back(), ref_.back());
    j += en.dot(p_.weight_P.cwiseProduct(en));
    for (int k = 0; k < p_.N; ++k) {
      const Eigen::Vector2d uk = u.segment<2>(2 * k);
      j += uk.dot(p_.weight_R.cwiseProduct(uk));
      if (k + 1 < p_.N) {
        const Eigen::Vector2d du = u.segment<2>(2 * k + 2) - uk;
        j += du.dot(p_.weight_S.cwiseProduct(du));
      }
    }
    if (prev_) {
      const Eigen::Vector2d du = u.segment<2>(0) - Eigen::Vector2d(prev_->v, prev_->omega);
      j += du.dot(p_.weight_S.cwiseProduct(du));
    }
    return j;
  }

  /// All softened rows: barrier rows first (obstacle-major), then terminal
  /// ball, then optional state bounds.
  Eigen::VectorXd constraints(const std::vector<RobotState>& xs) const {
    Eigen::VectorXd c(num_rows());
    Eigen::Index r = 0;
    for (const BarrierRows& br : rows_) {
      double hk = safe_barrier(xs[0].position(), br.per_step[0], p_.d_safe).h;
      for (int k = 0; k < p_.N; ++k) {
        const double hk1 = safe_barrier(xs[static_cast<std::size_t>(k) + 1].position(),
                                        br.per_step[static_cast<std::size_t>(k) + 1], p_.d_safe)
                               .h;
        c(r++) = hk1 - br.decay * hk;
        hk = hk1;
      }
    }
    c(r++) = terminal_scale() *
             (p_.terminal_radius - (xs.back().position() - ref_.back().position()).norm());
    if (p_.state_bounds) {
      const StateBounds& sb = *p_.state_bounds;
      for (int k = 1; k <= p_.N; ++k) {
        const RobotState& x = xs[static_cast<std::size_t>(k)];
        c(r++) = x.x - sb.x_min;
        c(r++) = sb.x_max - x.x;
        c(r++) = x.y - sb.y_min;
        c(r++) = sb.y_max - x.y;
      }
    }
    return c;
  }

  Eigen::Index num_rows() const {
    return static_cast<Eigen::Index>(rows_.size()) * p_.N + 1 + (p_.state_bounds ? 4 * p_.N : 0);
  }

  double terminal_scale() const { return p_.terminal_penalty / p_.slack_penalty; }

  Eigen::Index num_barrier_rows() const { return static_cast<Eigen::Index>(rows_.size()) * p_.N; }

  struct Linearization {
    Eigen::MatrixXd H;
    Eigen::VectorXd g;
    Eigen::MatrixXd A;  // constraint gradients
  };

  Linearization linearize(const Eigen::VectorXd& u, const std::vector<RobotState>& xs) const {
    const int N = p_.N;
    // Sensitivities dx_k/du, 3 x n each.
    std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(N) + 1, Eigen::MatrixXd::Zero(3, n_));
    for (int k = 0; k < N; ++k) {
      const RobotState& x = xs[static_cast<std::size_t>(k)];
      const double v = u(2 * k), c = std::cos(x.heading), s = std::sin(x.heading);
      const Eigen::MatrixXd& gk = G[static_cast<std::size_t>(k)];
      Eigen::MatrixXd& gn = G[static_cast<std::size_t>(k) + 1];
      gn = gk;
      gn.row(0) += -v * s * p_.dt * gk.row(2);
      gn.row(1) += v * c * p_.dt * gk.row(2);
      gn(0, 2 * k) += c * p_.dt;
      gn(1, 2 * k) += s * p_.dt;
      gn(2, 2 * k + 1) += p_.dt;
    }

    Linearization lin;
    lin.H = Eigen::MatrixXd::Zero(n_, n_);
    lin.g = Eigen::VectorXd::Zero(n_);
    for (int k = 1; k <= N; ++k) {
      const Eigen::Vector3d& w = k == N ? p_.weight_P : p_.weight_Q;
      const Vec3 e = state_error(xs[static_cast<std::size_t>(k)], ref_[static_cast<std::size_t>(k)]);
      const Eigen::MatrixXd& gk = G[static_cast<std::size_t>(k)];
      lin.H.noalias() += 2.0 * gk.transpose() * w.asDiagonal() * gk;
      lin.g.noalias() += 2.0 * gk.transpose() * w.cwiseProduct(e);
    }
    for (int k = 0; k < N; ++k) {
      for (int i = 0; i < 2; ++i) {
        lin.H(2 * k + i, 2 * k + i) += 2.0 * p_.weight_R(i);
        lin.g(2 * k + i) += 2.0 * p_.weight_R(i) * u(2 * k + i);
        if (k + 1 < N) {
          const int a = 2 * k + i, b = 2 * k + 2 + i;
          const double ws = p_.weight_S(i);
          lin.H(a, a) += 2.0 * ws;
          lin.H(b, b) += 2.0 * ws;
          lin.H(a, b) -= 2.0 * ws;
          lin.H(b, a) -= 2.0 * ws;
          lin.g(a) -= 2.0 * ws * (u(b) - u(a));
          lin.g(b) += 2.0 * ws * (u(b) - u(a));
        }
      }
    }
    if (prev_) {
      const double pv[2] = {prev_->v, prev_->omega};
      for (int i = 0; i < 2; ++i) {
        lin.H(i, i) += 2.0 * p_.weight_S(i);
        lin.g(i) += 2.0 * p_.weight_S(i) * (u(i) - pv[i]);
      }
    }
    lin.H.diagonal().array() += 1e-8;

    lin.A = Eigen::MatrixXd::Zero(num_rows(), n_);
    Eigen::Index r = 0;
    for (const BarrierRows& br : rows_) {
      Eigen::RowVectorXd grad_k = Eigen::RowVectorXd::Zero(n_);  // x_0 is fixed
      for (int k = 0; k < N; ++k) {
        const auto sb = safe_barrier(xs[static_cast<std::size_t>(k) + 1].position(),
                                     br.per_step[static_cast<std::size_t>(k) + 1], p_.d_safe);
        const Eigen::RowVectorXd grad_k1 =
            sb.grad.transpose() * G[static_cast<std::size_t>(k) + 1].topRows<2>();
        lin.A.row(r++) = grad_k1 - br.decay * grad_k;
        grad_k = grad_k1;
      }
    }
    const Vec2 dn = xs.back().position() - ref_.back().position();
    const double dnorm = dn.norm();
    if (dnorm > 1e-9)
      lin.A.row(r) = -terminal_scale() * (dn / dnorm).transpose() * G.back().topRows<2>();
    ++r;
    if (p_.state_bounds) {
      for (int k = 1; k <= N; ++k) {
        const Eigen::MatrixXd& gk = G[static_cast<std::size_t>(k)];
        lin.A.row(r++) = gk.row(0);
        lin.A.row(r++) = -gk.row(0);
        lin.A.row(r++) = gk.row(1);
        lin.A.row(r++) = -gk.row(1);
      }
    }
    return lin;
  }

  double merit(double cost, const Eigen::VectorXd& c) const {
    return cost + p_.slack_penalty * (-c.array()).max(0.0).sum();
  }

  const std::vector<BarrierRows>& rows() const { return rows_; }

 private:
  RobotState x0_;
  std::vector<RobotState> ref_;
  std::vector<BarrierRows> rows_;
  PlannerParams p_;
  std::optional<ControlInput> prev_;
  Eigen::Index n_ = 0;
};

inline Eigen::VectorXd initial_guess(std::span<const RobotState> ref, const WarmStart& warm,
                                     const PlannerParams& p) {
  Eigen::VectorXd u(2 * p.N);
  for (int k = 0; k < p.N; ++k) {
    ControlInput c;
    if (static_cast<std::size_t>(k) < warm.controls.size()) {
      c = warm.controls[static_cast<std::size_t>(k)];
    } else if (!warm.controls.empty()) {
      c = warm.controls.back();
    } else {
      const RobotState& a = ref[static_cast<std::size_t>(k)];
      const RobotState& b = ref[static_cast<std::size_t>(k) + 1];
      c.v = (b.position() - a.position()).norm() / p.dt;
      c.omega = wrap_angle(b.heading - a.heading) / p.dt;
    }
    u(2 * k) = std::clamp(c.v, p.v_min, p.v_max);
    u(2 * k + 1) = std::clamp(c.omega, -p.omega_max, p.omega_max);
  }
  return u;
}

}  // namespace detail

/// Maximal deceleration along the current heading, held over the horizon.
inline std::vector<ControlInput> braking_sequence(const PlannerParams& p) {
  return std::vector<ControlInput>(static_cast<std::size_t>(p.N),
                                   ControlInput{std::clamp(0.0, p.v_min, p.v_max), 0.0});
}

/// Core SQP over an explicit set of barrier rows. All planner variants
/// reduce to this with different obstacle sequences and decay factors.
inline MpcSolution solve_rows(const RobotState& x_t, std::span<const RobotState> reference,
                              std::span<const BarrierRows> rows, const PlannerParams& p,
                              const WarmStart& warm = {}) {
  p.validate();
  if (reference.size() != static_cast<std::size_t>(p.N) + 1)
    throw Error("solve: reference must hold N + 1 states");
  for (const BarrierRows& br : rows)
    if (br.per_step.size() != static_cast<std::size_t>(p.N) + 1)
      throw Error("solve: obstacle sequence must hold N + 1 ellipses");

  const detail::MpcProblem prob(x_t, reference, rows, p, warm.previous);
  const Eigen::Index n = prob.num_vars();
  Eigen::VectorXd lb(n), ub(n);
  for (int k = 0; k < p.N; ++k) {
    lb(2 * k) = p.v_min;
    ub(2 * k) = p.v_max;
    lb(2 * k + 1) = -p.omega_max;
    ub(2 * k + 1) = p.omega_max;
  }

  struct Pass {
    Eigen::VectorXd u;
    std::vector<RobotState> xs;
    double cost = 0.0;
    Eigen::VectorXd cons;
    int iterations = 0;
    bool converged = false;
    bool broken = false;
  };

  auto sqp = [&](Eigen::VectorXd u, int budget) {
    Pass r;
    std::vector<RobotState> xs = prob.rollout(u);
    double cost = prob.cost(u, xs);
    Eigen::VectorXd cons = prob.constraints(xs);
    double phi = prob.merit(cost, cons);
    double radius = p.trust_radius;
    int it = 0;
    for (; it < budget; ++it) {
      const auto lin = prob.linearize(u, xs);
      SoftQp qp;
      qp.H = lin.H;
      qp.g = lin.g;
      qp.lo = (lb - u).cwiseMax(-radius);
      qp.hi = (ub - u).cwiseMin(radius);
      qp.A = lin.A;
      qp.b = -cons;
      qp.rho = p.slack_penalty;
      const SoftQpResult sub = solve_soft_qp(qp);
      if (!sub.z.allFinite()) {
        r.broken = true;
        break;
      }
      const Eigen::VectorXd& du = sub.z;
      const double step = du.lpNorm<Eigen::Infinity>();
      const double model = cost + lin.g.dot(du) + 0.5 * du.dot(lin.H * du) +
                           p.slack_penalty * (-(cons + lin.A * du).array()).max(0.0).sum();
      const double predicted = phi - model;
      if (step <= p.tolerance || predicted <= 1e-12 * (1.0 + std::abs(phi))) {
        r.converged = true;
        break;
      }

      Eigen::VectorXd u_new = (u + du).cwiseMax(lb).cwiseMin(ub);
      std::vector<RobotState> xs_new = prob.rollout(u_new);
      double cost_new = prob.cost(u_new, xs_new);
      Eigen::VectorXd cons_new = prob.constraints(xs_new);
      double phi_new = prob.merit(cost_new, cons_new);
      double ratio = (phi - phi_new) / predicted;

      if (ratio < 0.25 && (cons_new.array() < 0.0).any()) {
        // Second-order correction: re-center the linearized rows on the trial point.
        SoftQp soc = qp;
        soc.b = -(cons_new - lin.A * du);
        const SoftQpResult corr = solve_soft_qp(soc);
        if (corr.z.allFinite()) {
          const Eigen::VectorXd u_soc = (u + corr.z).cwiseMax(lb).cwiseMin(ub);
          const std::vector<RobotState> xs_soc = prob.rollout(u_soc);
          const double cost_soc = prob.cost(u_soc, xs_soc);
          const Eigen::VectorXd cons_soc = prob.constraints(xs_soc);
          const double phi_soc = prob.merit(cost_soc, cons_soc);
          const double ratio_soc = (phi - phi_soc) / predicted;
          if (ratio_soc > ratio) {
            u_new = u_soc;
            xs_new = xs_soc;
            cost_new = cost_soc;
            cons_new = cons_soc;
            phi_new = phi_soc;
            ratio = ratio_soc;
          }
        }
      }

      if (ratio > 1e-4) {
        u = u_new;
        xs = xs_new;
        cost = cost_new;
        cons = cons_new;
        phi = phi_new;
      }
      if (ratio < 0.25)
        radius = 0.25 * step;
      else if (ratio > 0.75 && step >= 0.99 * radius)
        radius = std::min(2.0 * radius, 4.0 * p.trust_radius);
      if (radius < p.tolerance) {
        r.converged = true;
        break;
      }
    }
    r.u = std::move(u);
    r.xs = std::move(xs);
    r.cost = cost;
    r.cons = std::move(cons);
    r.iterations = it;
    return r;
  };

  const Eigen::Index nb = prob.num_barrier_rows();
  auto worst = [&](const Pass& r) {
    return nb > 0 ? r.cons.head(nb).minCoeff() : std::numeric_limits<double>::infinity();
  };

  Pass best = sqp(detail::initial_guess(reference, warm, p), p.max_iterations);
  int used = best.iterations;
  if (nb > 0 && worst(best) < -1e-6 && used < p.max_iterations) {
    // Holding still never decreases h, so restart from the braking sequence.
    Eigen::VectorXd brake(n);
    for (int k = 0; k < p.N; ++k) {
      brake(2 * k) = std::clamp(0.0, p.v_min, p.v_max);
      brake(2 * k + 1) = 0.0;
    }
    Pass again = sqp(brake, p.max_iterations - used);
    used += again.iterations;
    if (!again.broken && worst(again) > worst(best)) best = std::move(again);
  }
  Eigen::VectorXd u = best.u;
  std::vector<RobotState> xs = best.xs;
  double cost = best.cost;
  Eigen::VectorXd cons = best.cons;
  const bool converged = best.converged;
  const bool broken = best.broken;
  const int it = used;

  MpcSolution sol;
  sol.iterations = it;
  sol.converged = converged;
  sol.min_residual = nb > 0 ? cons.head(nb).minCoeff() : std::numeric_limits<double>::infinity();
  sol.slack = (-cons.array()).max(0.0).sum();
  const bool feasible = nb == 0 || sol.min_residual >= -1e-6;

  if (broken || (!converged && !feasible)) {
    sol.status = SolveStatus::kInfeasible;
    sol.controls = braking_sequence(p);
    for (int k = 0; k < p.N; ++k) {
      u(2 * k) = sol.controls[static_cast<std::size_t>(k)].v;
      u(2 * k + 1) = sol.controls[static_cast<std::size_t>(k)].omega;
    }
    xs = prob.rollout(u);
    cost = prob.cost(u, xs);
    cons = prob.constraints(xs);
    sol.min_residual = nb > 0 ? cons.head(nb).minCoeff() : std::numeric_limits<double>::infinity();
    sol.slack = (-cons.array()).max(0.0).sum();
  } else {
    sol.status = feasible ? SolveStatus::kOptimal : SolveStatus::kSlackRelaxed;
    sol.controls.reserve(static_cast<std::size_t>(p.N));
    for (int k = 0; k < p.N; ++k) sol.controls.push_back({u(2 * k), u(2 * k + 1)});
  }
  sol.states = xs;
  sol.cost = cost;

  const auto& rws = prob.rows();
  sol.cbf_residuals.resize(rws.size());
  sol.barrier_values.resize(rws.size());
  for (std::size_t i = 0; i < rws.size(); ++i) {
    for (int k = 0; k <= p.N; ++k)
      sol.barrier_values[i].push_back(
          detail::safe_barrier(xs[static_cast<std::size_t>(k)].position(),
                               rws[i].per_step[static_cast<std::size_t>(k)], p.d_safe)
              .h);
    for (int k = 0; k < p.N; ++k)
      sol.cbf_residuals[i].push_back(cons(static_cast<Eigen::Index>(i) * p.N + k));
  }
  return sol;
}

/// Obstacle sequences for each variant: frozen variants hold the current
/// ellipse over the horizon, distance variants use no decay.
inline std::vector<BarrierRows> barrier_rows_for(PlannerKind kind,
                                                 std::span<const PredictedObstacle> obstacles,
                                                 const PlannerParams& p) {
  const bool frozen = kind == PlannerKind::kMpcEuclid || kind == PlannerKind::kMpcCbf;
  const bool decay = kind == PlannerKind::kMpcCbf || kind == PlannerKind::kMpcCbfCurvefit ||
                     kind == PlannerKind::kMpcDcbf;
  std::vector<BarrierRows> rows;
  rows.reserve(obstacles.size());
  for (const PredictedObstacle& ob : obstacles) {
    BarrierRows br;
    br.label = ob.label;
    br.decay = decay ? 1.0 - p.gamma_cbf : 0.0;
    for (int k = 0; k <= p.N; ++k)
      br.per_step.push_back(frozen ? ob.at(0) : ob.at(static_cast<std::size_t>(k)));
    rows.push_back(std::move(br));
  }
  return rows;
}

inline MpcSolution plan_variant(PlannerKind kind, const RobotState& x_t,
                                std::span<const RobotState> reference,
                                std::span<const PredictedObstacle> obstacles,
                                const PlannerParams& p, const WarmStart& warm = {}) {
  const auto rows = barrier_rows_for(kind, obstacles, p);
  return solve_rows(x_t, reference, rows, p, warm);
}

/// Full method: discrete barrier constraints against the predicted,
/// uncertainty-inflated obstacle trajectories.
inline MpcSolution solve(const RobotState& x_t, std::span<const RobotState> reference,
                         std::span<const PredictedObstacle> obstacles, const PlannerParams& p,
                         const WarmStart& warm = {}) {
  return plan_variant(PlannerKind::kMpcDcbf, x_t, reference, obstacles, p, warm);
}

}  // namespace dcbf
