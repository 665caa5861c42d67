#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"

namespace cfmaxmin {

/// Column l is user l's receive combining vector, unit norm.
using FilterSet = MatrixXd;

/// Coefficients of the inverse-SINR posynomials for a fixed filter set,
/// after the change of variables theta_i = log(omega p_i):
///   f_l(theta) = sum_{i!=l} a_li e^{theta_i-theta_l}
///              + sum_i b_li e^{theta_i-theta_l} + cbar_l e^{-theta_l}.
struct ReducedProblem {
  MatrixXd a;      // L x L coherent interference ratios, zero diagonal
  MatrixXd b;      // L x L per-antenna interference ratios
  VectorXd cbar;   // L, omega-scaled noise ratios, positive
  double omega = 1.0;
  double theta_bar = 0.0;  // feasible set is {theta <= theta_bar}
  MatrixXd ab;     // a + b, cached for the solver hot path

  int size() const { return static_cast<int>(cbar.size()); }

  void finalize() {
    const int l_count = size();
    if (a.rows() != l_count || a.cols() != l_count || b.rows() != l_count || b.cols() != l_count)
      throw std::invalid_argument("ReducedProblem: coefficient shapes disagree");
    if ((a.array() < 0).any() || (b.array() < 0).any() || (cbar.array() <= 0).any())
      throw std::invalid_argument("ReducedProblem: coefficients out of range");
    if (a.diagonal().cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument("ReducedProblem: a must have a zero diagonal");
    if (!(omega > 0)) throw std::invalid_argument("ReducedProblem: omega must be > 0");
    ab = a + b;
  }
};

inline VectorXd theta_from_power(const VectorXd& p, double omega) {
  return (omega * p.array()).log().matrix();
}

inline VectorXd power_from_theta(const VectorXd& theta, double omega) {
  return (theta.array().exp() / omega).matrix();
}

/// Achievable SINR of every user for powers p and filters q.
inline VectorXd sinr(const VectorXd& p, const FilterSet& q, const ChannelStats& stats, int k) {
  const int l_count = stats.num_users();
  const double inv_k = 1.0 / k;
  VectorXd gamma(l_count);
  for (int l = 0; l < l_count; ++l) {
    const VectorXd ql = q.col(l);
    const VectorXd q2 = ql.array().square().matrix();
    const VectorXd v = stats.gvec[l] * ql;          // v_i = q_l . g_li
    const VectorXd u = stats.gbar_diag[l] * q2;     // u_i = sum_m q_lm^2 g_ml zeta_mi
    const double noise = inv_k * stats.gtil_diag.row(l).dot(q2);
    double denom = inv_k * p.dot(u) + noise;
    for (int i = 0; i < l_count; ++i)
      if (i != l) denom += p(i) * v(i) * v(i);
    gamma(l) = p(l) * v(l) * v(l) / denom;
  }
  return gamma;
}

inline VectorXd rate(const VectorXd& gamma) {
  return ((1.0 + gamma.array()).log() / std::log(2.0)).matrix();
}

inline VectorXd rate(const VectorXd& gamma, double prelog) { return prelog * rate(gamma); }

/// Optimal unit-norm combining filters for fixed powers. Each filter solves a
/// symmetric positive-definite system; the cross terms appear only for user
/// pairs with correlated pilots, so orthogonal pilots reduce to a diagonal
/// solve. Zero-power users fall back to the matched-filter direction.
inline FilterSet update_filters(const VectorXd& p, const ChannelStats& stats, int k) {
  const int m_count = stats.num_aps();
  const int l_count = stats.num_users();
  const double inv_k = 1.0 / k;
  FilterSet q(m_count, l_count);
  for (int l = 0; l < l_count; ++l) {
    const VectorXd gll = stats.g.col(l);
    if (!(p(l) > 0)) {
      const double n = gll.norm();
      if (n == 0.0)
        throw std::runtime_error("update_filters: zero channel for user " + std::to_string(l));
      q.col(l) = gll / n;
      continue;
    }
    // diag(W_l) = (1/K)(sum_i p_i gbar_li + gtil_l)
    VectorXd diag =
        inv_k * (stats.gbar_diag[l].transpose() * p + stats.gtil_diag.row(l).transpose());
    std::vector<int> coherent;
    for (int i = 0; i < l_count; ++i)
      if (i != l && p(i) > 0 && stats.pilot_gram(l, i) != 0.0) coherent.push_back(i);

    VectorXd x;
    if (coherent.empty()) {
      x = (diag.array() > 0).select(gll.array() / diag.array(), 0.0).matrix();
    } else {
      MatrixXd w = diag.asDiagonal();
      for (int i : coherent)
        w.selfadjointView<Eigen::Lower>().rankUpdate(stats.gvec[l].row(i).transpose(), p(i));
      Eigen::LLT<MatrixXd> llt(w);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("update_filters: singular system for user " + std::to_string(l));
      x = llt.solve(gll);
    }
    const double n = x.norm();
    if (!(n > 0) || !x.allFinite())
      throw std::runtime_error("update_filters: degenerate filter for user " + std::to_string(l));
    q.col(l) = x / n;
  }
  return q;
}

/// Build the inverse-SINR coefficients for fixed filters.
inline ReducedProblem reduce(const ChannelStats& stats, const FilterSet& q, int k, double omega,
                             double pbar) {
  const int l_count = stats.num_users();
  const double inv_k = 1.0 / k;
  ReducedProblem rp;
  rp.a = MatrixXd::Zero(l_count, l_count);
  rp.b.resize(l_count, l_count);
  rp.cbar.resize(l_count);
  rp.omega = omega;
  rp.theta_bar = std::log(omega * pbar);
  for (int l = 0; l < l_count; ++l) {
    const VectorXd ql = q.col(l);
    const VectorXd q2 = ql.array().square().matrix();
    const VectorXd v = stats.gvec[l] * ql;
    const double den = v(l) * v(l);
    if (!(den > 0))
      throw std::runtime_error("reduce: vanishing signal term for user " + std::to_string(l));
    for (int i = 0; i < l_count; ++i)
      if (i != l) rp.a(l, i) = v(i) * v(i) / den;
    rp.b.row(l) = (inv_k / den) * (stats.gbar_diag[l] * q2).transpose();
    rp.cbar(l) = omega * inv_k * stats.gtil_diag.row(l).dot(q2) / den;
  }
  rp.finalize();
  return rp;
}

/// f_l(theta) for all l, evaluated with the largest exponent factored out so
/// feasible theta never overflow intermediates.
inline VectorXd f_values(const VectorXd& theta, const ReducedProblem& rp) {
  const double m = theta.maxCoeff();
  const VectorXd w = (theta.array() - m).exp().matrix();
  const VectorXd t = w.cwiseInverse();
  const VectorXd s = rp.ab * w;
  return (t.array() * (s.array() + rp.cbar.array() * std::exp(-m))).matrix();
}

/// Jacobian of f: row l holds the gradient of f_l.
inline MatrixXd grad_f(const VectorXd& theta, const ReducedProblem& rp) {
  const int l_count = rp.size();
  const double m = theta.maxCoeff();
  const double exp_nm = std::exp(-m);
  const VectorXd w = (theta.array() - m).exp().matrix();
  const VectorXd t = w.cwiseInverse();
  const VectorXd s = rp.ab * w;
  MatrixXd grad = rp.ab.cwiseProduct(t * w.transpose());
  for (int l = 0; l < l_count; ++l)
    grad(l, l) = -(s(l) - rp.ab(l, l) * w(l) + rp.cbar(l) * exp_nm) * t(l);
  return grad;
}

struct PhiEval {
  double phi = 0.0;
  VectorXd grad_theta;
  VectorXd grad_lambda;  // equals f(theta)
};

/// phi(theta, lambda) = sum_l lambda_l f_l(theta) and both partial gradients.
/// Costs two L x L matrix-vector products per call. Users with lambda_l = 0
/// contribute nothing even when their f_l overflows.
inline PhiEval phi_and_grads(const VectorXd& theta, const VectorXd& lambda,
                             const ReducedProblem& rp) {
  const int l_count = rp.size();
  const double m = theta.maxCoeff();
  const double exp_nm = std::exp(-m);
  const VectorXd w = (theta.array() - m).exp().matrix();
  const VectorXd t = w.cwiseInverse();
  const VectorXd s = rp.ab * w;

  PhiEval out;
  out.grad_lambda = (t.array() * (s.array() + rp.cbar.array() * exp_nm)).matrix();
  VectorXd u(l_count);
  for (int l = 0; l < l_count; ++l) {
    if (lambda(l) != 0.0) {
      out.phi += lambda(l) * out.grad_lambda(l);
      u(l) = lambda(l) * t(l);
    } else {
      u(l) = 0.0;
    }
  }
  out.grad_theta = (w.array() * (rp.ab.transpose() * u).array()).matrix();
  for (int l = 0; l < l_count; ++l)
    if (lambda(l) != 0.0) out.grad_theta(l) -= lambda(l) * out.grad_lambda(l);
  return out;
}

}  // namespace cfmaxmin
