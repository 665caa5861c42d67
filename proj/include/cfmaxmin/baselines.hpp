#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mirror_prox.hpp"
#include "problem.hpp"
#include "projection.hpp"

namespace cfmaxmin {

/// Simultaneous projected gradient descent-ascent with diminishing steps
/// mu0/sqrt(n). The answer is the step-weighted average of the visited
/// iterates, reported in the same shape as mp_solve.
inline MpReport gda_solve(const ReducedProblem& rp, const VectorXd& theta_init,
                          const VectorXd& lambda_init, const MpConfig& cfg) {
  cfg.validate();
  const int l_count = rp.size();
  if (theta_init.size() != l_count || lambda_init.size() != l_count)
    throw std::invalid_argument("gda_solve: initial point has the wrong dimension");
  if ((theta_init.array() > rp.theta_bar + 1e-12).any())
    throw std::invalid_argument("gda_solve: theta_init violates the power cap");
  if (lambda_init.minCoeff() < -1e-12 || std::abs(lambda_init.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("gda_solve: lambda_init is not in the simplex");

  VectorXd theta = theta_init;
  VectorXd lambda = lambda_init;
  VectorXd avg_theta_num = VectorXd::Zero(l_count);
  VectorXd avg_lambda_num = VectorXd::Zero(l_count);
  double avg_denom = 0.0;

  MpReport report;
  report.obj_trace.reserve(cfg.max_iter);
  report.accepted_steps.reserve(cfg.max_iter);
  report.iter_time_ms.reserve(cfg.max_iter);
  report.max_delta = 0.0;  // no line-search residual in plain descent-ascent
  const auto started = std::chrono::steady_clock::now();

  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  for (int n = 1; n <= cfg.max_iter; ++n) {
    const PhiEval at_z = phi_and_grads(theta, lambda, rp);
    if (!at_z.grad_theta.allFinite() || !at_z.grad_lambda.allFinite())
      throw std::runtime_error("gda_solve: non-finite gradient at iteration " + std::to_string(n));

    const double mu = cfg.mu0 / std::sqrt(static_cast<double>(n));
    avg_theta_num += mu * theta;
    avg_lambda_num += mu * lambda;
    avg_denom += mu;
    theta = project_box(theta - mu * at_z.grad_theta, rp.theta_bar);
    lambda = project_simplex(lambda + mu * at_z.grad_lambda);

    report.accepted_steps.push_back(mu);
    const double obj = f_values(avg_theta_num / avg_denom, rp).maxCoeff();
    report.obj_trace.push_back(obj);
    report.iter_time_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count());
    report.iterations = n;
    if (n >= 2 && std::abs(obj - prev_obj) < cfg.tol) {
      report.termination = MpTermination::tolerance;
      break;
    }
    prev_obj = obj;
  }

  report.theta_star = avg_theta_num / avg_denom;
  report.theta_last = theta;
  report.lambda_star = avg_lambda_num / avg_denom;
  return report;
}

/// Smoothing width giving accuracy ~tol once the smoothed problem is solved:
/// the surrogate overshoots max_l f_l by at most mu_s * ln(count).
inline double default_smoothing(double tol, int count) {
  return tol / std::log(static_cast<double>(std::max(count, 2)));
}

struct SmoothEval {
  double value = 0.0;   // mu_s * log-sum-exp(f / mu_s), max-shifted
  VectorXd f;           // per-user objectives
  VectorXd weights;     // softmax of f / mu_s, lives on the simplex
};

inline SmoothEval smoothed_objective(const VectorXd& theta, const ReducedProblem& rp,
                                     double mu_s) {
  SmoothEval out;
  out.f = f_values(theta, rp);
  const double shift = out.f.maxCoeff();
  const VectorXd u = ((out.f.array() - shift) / mu_s).exp().matrix();
  const double total = u.sum();
  out.value = shift + mu_s * std::log(total);
  out.weights = u / total;
  return out;
}

/// Accelerated projected gradient on the log-sum-exp smoothing of
/// max_l f_l over the power box. Momentum points may leave the box; every
/// reported iterate is projected back. theta_star is the final iterate and
/// lambda_star the softmax weights there.
inline MpReport apg_smoothed_solve(const ReducedProblem& rp, const VectorXd& theta_init,
                                   double mu_s, const MpConfig& cfg) {
  cfg.validate();
  if (!(mu_s > 0) || !std::isfinite(mu_s))
    throw std::invalid_argument("apg_smoothed_solve: smoothing width must be > 0");
  if (theta_init.size() != rp.size())
    throw std::invalid_argument("apg_smoothed_solve: initial point has the wrong dimension");
  if ((theta_init.array() > rp.theta_bar + 1e-12).any())
    throw std::invalid_argument("apg_smoothed_solve: theta_init violates the power cap");

  VectorXd x = project_box(theta_init, rp.theta_bar);
  VectorXd x_prev = x;
  VectorXd y = x;
  double momentum = 1.0;
  double lip = 1.0 / cfg.mu0;

  MpReport report;
  report.obj_trace.reserve(cfg.max_iter);
  report.accepted_steps.reserve(cfg.max_iter);
  report.iter_time_ms.reserve(cfg.max_iter);
  report.max_delta = 0.0;
  const auto started = std::chrono::steady_clock::now();

  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  for (int n = 1; n <= cfg.max_iter; ++n) {
    const SmoothEval at_y = smoothed_objective(y, rp, mu_s);
    const VectorXd grad = phi_and_grads(y, at_y.weights, rp).grad_theta;
    if (!std::isfinite(at_y.value) || !grad.allFinite())
      throw std::runtime_error("apg_smoothed_solve: non-finite surrogate at iteration " +
                               std::to_string(n));

    VectorXd cand;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      cand = project_box(y - (1.0 / lip) * grad, rp.theta_bar);
      const VectorXd diff = cand - y;
      const double bound = at_y.value + grad.dot(diff) + 0.5 * lip * diff.squaredNorm() +
                           1e-12 * std::max(1.0, std::abs(at_y.value));
      const double cand_value = smoothed_objective(cand, rp, mu_s).value;
      if (std::isfinite(cand_value) && cand_value <= bound) {
        accepted = true;
        break;
      }
      lip /= cfg.rho;
    }
    if (!accepted)
      throw std::runtime_error("apg_smoothed_solve: step size underflow after " +
                               std::to_string(cfg.max_backtracks) + " backtracks at iteration " +
                               std::to_string(n));

    x_prev = x;
    x = cand;
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = x + ((momentum - 1.0) / momentum_next) * (x - x_prev);
    momentum = momentum_next;

    report.accepted_steps.push_back(1.0 / lip);
    const double obj = f_values(x, rp).maxCoeff();
    report.obj_trace.push_back(obj);
    report.iter_time_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count());
    report.iterations = n;
    if (n >= 2 && std::abs(obj - prev_obj) < cfg.tol) {
      report.termination = MpTermination::tolerance;
      break;
    }
    prev_obj = obj;
  }

  report.theta_star = x;
  report.lambda_star = smoothed_objective(x, rp, mu_s).weights;
  report.theta_last = x;
  return report;
}

}  // namespace cfmaxmin
