#pragma once

// Dense convex QP with box bounds and L1-softened linear inequalities:
//
//   min  1/2 z'Hz + g'z + rho * sum(s)
//   s.t. lo <= z <= hi,  A z + s >= b,  s >= 0
//
// Mehrotra predictor-corrector interior point. The slack variables s only
// couple to their own row, so they are eliminated and each Newton step is a
// single n x n Cholesky solve regardless of the number of soft rows.

#include <dcbf/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcbf {

struct SoftQp {
  Eigen::MatrixXd H;   // n x n, symmetric positive definite
  Eigen::VectorXd g;   // n
  Eigen::VectorXd lo;  // n, finite
  Eigen::VectorXd hi;  // n, finite, lo <= hi
  Eigen::MatrixXd A;   // m x n
  Eigen::VectorXd b;   // m
  double rho = 1e4;    // per-unit slack penalty
};

struct SoftQpResult {
  Eigen::VectorXd z;
  Eigen::VectorXd s;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

struct SoftQpOptions {
  int max_iterations = 60;
  double tolerance = 1e-9;
};

inline SoftQpResult solve_soft_qp(const SoftQp& qp, const SoftQpOptions& opt = {}) {
  using Eigen::VectorXd;
  const Eigen::Index n = qp.g.size();
  const Eigen::Index m = qp.b.size();
  if (qp.H.rows() != n || qp.H.cols() != n || qp.lo.size() != n || qp.hi.size() != n ||
      qp.A.rows() != m || (m > 0 && qp.A.cols() != n))
    throw Error("soft QP: dimension mismatch");
  if (((qp.hi - qp.lo).array() < 0.0).any()) throw Error("soft QP: empty box");

  // Inequality blocks, each with slack t and dual y:
  //   1: z - lo >= 0     2: hi - z >= 0     3: A z + s - b >= 0     4: s >= 0
  VectorXd z = (0.5 * (qp.lo + qp.hi)).eval();
  VectorXd s = VectorXd::Zero(m);
  if (m > 0) s = (qp.b - qp.A * z).cwiseMax(0.0).array() + 1.0;

  auto cons = [&](const VectorXd& zz, const VectorXd& ss, VectorXd& c1, VectorXd& c2,
                  VectorXd& c3, VectorXd& c4) {
    c1 = zz - qp.lo;
    c2 = qp.hi - zz;
    c3 = (m > 0 ? VectorXd(qp.A * zz + ss - qp.b) : VectorXd());
    c4 = ss;
  };

  VectorXd c1, c2, c3, c4;
  cons(z, s, c1, c2, c3, c4);
  VectorXd t1 = c1.cwiseMax(1.0), t2 = c2.cwiseMax(1.0), t3 = c3.cwiseMax(1.0),
           t4 = c4.cwiseMax(1.0);
  VectorXd y1 = VectorXd::Ones(n), y2 = VectorXd::Ones(n), y3 = VectorXd::Ones(m),
           y4 = VectorXd::Ones(m);
  const double total = static_cast<double>(2 * n + 2 * m);

  const double scale = 1.0 + std::max({qp.g.lpNorm<Eigen::Infinity>(), qp.rho,
                                       m > 0 ? qp.b.lpNorm<Eigen::Infinity>() : 0.0});

  SoftQpResult res;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    cons(z, s, c1, c2, c3, c4);
    // Dual residuals.
    VectorXd rdz = qp.H * z + qp.g - y1 + y2;
    if (m > 0) rdz -= qp.A.transpose() * y3;
    VectorXd rds = VectorXd::Constant(m, qp.rho) - y3 - y4;
    // Primal residuals c - t.
    const VectorXd rp1 = c1 - t1, rp2 = c2 - t2, rp3 = c3 - t3, rp4 = c4 - t4;
    const double mu = (t1.dot(y1) + t2.dot(y2) + t3.dot(y3) + t4.dot(y4)) / total;

    const double rd = std::max(rdz.lpNorm<Eigen::Infinity>(),
                               m > 0 ? rds.lpNorm<Eigen::Infinity>() : 0.0);
    const double rpn = std::max({rp1.lpNorm<Eigen::Infinity>(), rp2.lpNorm<Eigen::Infinity>(),
                                 m > 0 ? rp3.lpNorm<Eigen::Infinity>() : 0.0,
                                 m > 0 ? rp4.lpNorm<Eigen::Infinity>() : 0.0});
    if (rd <= opt.tolerance * scale && rpn <= opt.tolerance * scale && mu <= opt.tolerance) {
      res.converged = true;
      break;
    }

    const VectorXd d1 = y1.cwiseQuotient(t1), d2 = y2.cwiseQuotient(t2),
                   d3 = y3.cwiseQuotient(t3), d4 = y4.cwiseQuotient(t4);
    const VectorXd d34 = d3 + d4;
    // Schur complement onto z after eliminating s.
    const VectorXd dsch = d3.cwiseProduct(d4).cwiseQuotient(d34);
    Eigen::MatrixXd kkt = qp.H;
    kkt.diagonal() += d1 + d2;
    if (m > 0) kkt.noalias() += qp.A.transpose() * dsch.asDiagonal() * qp.A;
    const Eigen::LLT<Eigen::MatrixXd> llt(kkt);
    if (llt.info() != Eigen::Success) break;

    // Newton direction for complementarity targets rc_i (t_i y_i + ... = ...).
    // x-rhs = -r_d + C' (rc / t - D r_p).
    auto direction = [&](const VectorXd& rc1, const VectorXd& rc2, const VectorXd& rc3,
                         const VectorXd& rc4, VectorXd& dz, VectorXd& ds) {
      const VectorXd w1 = rc1.cwiseQuotient(t1) - d1.cwiseProduct(rp1);
      const VectorXd w2 = rc2.cwiseQuotient(t2) - d2.cwiseProduct(rp2);
      const VectorXd w3 = rc3.cwiseQuotient(t3) - d3.cwiseProduct(rp3);
      const VectorXd w4 = rc4.cwiseQuotient(t4) - d4.cwiseProduct(rp4);
      VectorXd rz = -rdz + w1 - w2;
      if (m > 0) rz += qp.A.transpose() * w3;
      const VectorXd rs = -rds + w3 + w4;
      // [K_zz  A'D3] [dz]   [rz]
      // [D3 A  D34 ] [ds] = [rs]
      VectorXd rhs = rz;
      if (m > 0) rhs -= qp.A.transpose() * d3.cwiseProduct(rs.cwiseQuotient(d34));
      dz = llt.solve(rhs);
      ds = (m > 0 ? VectorXd((rs - d3.cwiseProduct(qp.A * dz)).cwiseQuotient(d34)) : VectorXd());
    };

    auto recover = [&](const VectorXd& dz, const VectorXd& ds, const VectorXd& rc1,
                       const VectorXd& rc2, const VectorXd& rc3, const VectorXd& rc4,
                       VectorXd& dt1, VectorXd& dt2, VectorXd& dt3, VectorXd& dt4, VectorXd& dy1,
                       VectorXd& dy2, VectorXd& dy3, VectorXd& dy4) {
      dt1 = dz + rp1;
      dt2 = -dz + rp2;
      dt3 = (m > 0 ? VectorXd(qp.A * dz + ds + rp3) : VectorXd());
      dt4 = ds + rp4;
      dy1 = (rc1 - y1.cwiseProduct(dt1)).cwiseQuotient(t1);
      dy2 = (rc2 - y2.cwiseProduct(dt2)).cwiseQuotient(t2);
      dy3 = (rc3 - y3.cwiseProduct(dt3)).cwiseQuotient(t3);
      dy4 = (rc4 - y4.cwiseProduct(dt4)).cwiseQuotient(t4);
    };

    auto max_step = [](const VectorXd& v, const VectorXd& dv) {
      double a = 1.0;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
      return a;
    };

    // Predictor.
    VectorXd dz, ds, dt1, dt2, dt3, dt4, dy1, dy2, dy3, dy4;
    const VectorXd a1 = -t1.cwiseProduct(y1), a2 = -t2.cwiseProduct(y2),
                   a3 = -t3.cwiseProduct(y3), a4 = -t4.cwiseProduct(y4);
    direction(a1, a2, a3, a4, dz, ds);
    recover(dz, ds, a1, a2, a3, a4, dt1, dt2, dt3, dt4, dy1, dy2, dy3, dy4);
    const double ap = std::min({max_step(t1, dt1), max_step(t2, dt2), max_step(t3, dt3),
                                max_step(t4, dt4)});
    const double ad = std::min({max_step(y1, dy1), max_step(y2, dy2), max_step(y3, dy3),
                                max_step(y4, dy4)});
    const double mu_aff = ((t1 + ap * dt1).dot(y1 + ad * dy1) + (t2 + ap * dt2).dot(y2 + ad * dy2) +
                           (t3 + ap * dt3).dot(y3 + ad * dy3) + (t4 + ap * dt4).dot(y4 + ad * dy4)) /
                          total;
    const double sigma = std::pow(mu_aff / mu, 3.0);

    // Corrector.
    const VectorXd b1 = (a1 - dt1.cwiseProduct(dy1)).array() + sigma * mu;
    const VectorXd b2 = (a2 - dt2.cwiseProduct(dy2)).array() + sigma * mu;
    const VectorXd b3 = (a3 - dt3.cwiseProduct(dy3)).array() + sigma * mu;
    const VectorXd b4 = (a4 - dt4.cwiseProduct(dy4)).array() + sigma * mu;
    direction(b1, b2, b3, b4, dz, ds);
    recover(dz, ds, b1, b2, b3, b4, dt1, dt2, dt3, dt4, dy1, dy2, dy3, dy4);
    constexpr double kFrac = 0.995;
    const double sp = std::min(1.0, kFrac * std::min({max_step(t1, dt1), max_step(t2, dt2),
                                                      max_step(t3, dt3), max_step(t4, dt4)}));
    const double sd = std::min(1.0, kFrac * std::min({max_step(y1, dy1), max_step(y2, dy2),
                                                      max_step(y3, dy3), max_step(y4, dy4)}));
    z += sp * dz;
    if (m > 0) s += sp * ds;
    t1 += sp * dt1;
    t2 += sp * dt2;
    t3 += sp * dt3;
    t4 += sp * dt4;
    y1 += sd * dy1;
    y2 += sd * dy2;
    y3 += sd * dy3;
    y4 += sd * dy4;
  }

  // Tidy up: project onto the box and take the smallest feasible slacks.
  z = z.cwiseMax(qp.lo).cwiseMin(qp.hi);
  if (m > 0) s = (qp.b - qp.A * z).cwiseMax(0.0);
  res.z = z;
  res.s = s;
  res.objective = 0.5 * z.dot(qp.H * z) + qp.g.dot(z) + qp.rho * s.sum();
  return res;
}

}  // namespace dcbf
