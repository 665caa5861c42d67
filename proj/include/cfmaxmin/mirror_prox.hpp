#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "problem.hpp"
#include "projection.hpp"

namespace cfmaxmin {

/// Iterate of the saddle-point solver together with the running weighted
/// averages that form the returned solution.
struct SaddleState {
  VectorXd theta;
  VectorXd lambda;
  VectorXd theta_floor;  // optional lower box edge; empty means unbounded below
  double step = 0.0;
  VectorXd avg_theta_num;
  VectorXd avg_lambda_num;
  double avg_denom = 0.0;
  int iteration = 0;
};

struct MpConfig {
  double mu0 = 1.0;       // initial step
  double rho = 0.5;       // backtracking shrink factor in (0,1)
  int max_iter = 5000;
  double tol = 1e-4;      // objective-change stopping tolerance
  int max_backtracks = 60;

  void validate() const {
    if (!(mu0 > 0)) throw std::invalid_argument("MpConfig: mu0 must be > 0");
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("MpConfig: rho must be in (0,1)");
    if (!(tol > 0)) throw std::invalid_argument("MpConfig: tol must be > 0");
    if (max_iter < 1 || max_backtracks < 1)
      throw std::invalid_argument("MpConfig: iteration budgets must be >= 1");
  }
};

enum class MpTermination { tolerance, max_iter };

struct MpReport {
  VectorXd theta_star;
  VectorXd lambda_star;
  VectorXd theta_last;                 // final visited iterate, for diagnostics
  std::vector<double> obj_trace;       // max_l f_l at the running average
  std::vector<double> accepted_steps;  // accepted step size per iteration
  std::vector<double> iter_time_ms;    // cumulative wall time after each iteration
  int iterations = 0;
  MpTermination termination = MpTermination::max_iter;
  double max_delta = 0.0;  // largest accepted line-search residual, <= 0 when clean
};

struct ExtragradientResult {
  VectorXd theta_hat;
  VectorXd lambda_hat;
  VectorXd theta_next;
  VectorXd lambda_next;
  double delta = 0.0;
};

/// One extragradient trial with step mu from a precomputed gradient at the
/// current point. delta is the acceptance residual; the step is valid when
/// delta <= 0 and finite.
inline ExtragradientResult extragradient_trial(const SaddleState& state, const ReducedProblem& rp,
                                               double mu, const PhiEval& at_z) {
  const bool floored = state.theta_floor.size() > 0;
  ExtragradientResult out;
  out.theta_hat = floored
                      ? project_box(state.theta - mu * at_z.grad_theta, state.theta_floor,
                                    rp.theta_bar)
                      : project_box(state.theta - mu * at_z.grad_theta, rp.theta_bar);
  out.lambda_hat = project_simplex(state.lambda + mu * at_z.grad_lambda);
  const PhiEval at_hat = phi_and_grads(out.theta_hat, out.lambda_hat, rp);
  out.theta_next = floored
                       ? project_box(state.theta - mu * at_hat.grad_theta, state.theta_floor,
                                     rp.theta_bar)
                       : project_box(state.theta - mu * at_hat.grad_theta, rp.theta_bar);
  out.lambda_next = project_simplex(state.lambda + mu * at_hat.grad_lambda);
  out.delta = mu * at_hat.grad_theta.dot(out.theta_hat - out.theta_next) -
              mu * at_hat.grad_lambda.dot(out.lambda_hat - out.lambda_next) -
              0.5 * (out.theta_next - state.theta).squaredNorm() -
              0.5 * (out.lambda_next - state.lambda).squaredNorm();
  return out;
}

inline ExtragradientResult extragradient_step(const SaddleState& state, const ReducedProblem& rp,
                                              double mu) {
  const PhiEval at_z = phi_and_grads(state.theta, state.lambda, rp);
  if (!at_z.grad_theta.allFinite() || !at_z.grad_lambda.allFinite())
    throw std::runtime_error("extragradient_step: non-finite gradient at the current iterate");
  return extragradient_trial(state, rp, mu, at_z);
}

/// Run the saddle-point solver from a feasible starting pair. Each iteration
/// restarts the line search one rho-notch above the previously accepted step,
/// so the step can grow again after a conservative phase, then shrinks until
/// the acceptance residual is non-positive. The answer is the step-weighted
/// average of the visited iterates.
inline MpReport mp_solve(const ReducedProblem& rp, const VectorXd& theta_init,
                         const VectorXd& lambda_init, const MpConfig& cfg) {
  cfg.validate();
  const int l_count = rp.size();
  if (theta_init.size() != l_count || lambda_init.size() != l_count)
    throw std::invalid_argument("mp_solve: initial point has the wrong dimension");
  if ((theta_init.array() > rp.theta_bar + 1e-12).any())
    throw std::invalid_argument("mp_solve: theta_init violates the power cap");
  if (lambda_init.minCoeff() < -1e-12 || std::abs(lambda_init.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("mp_solve: lambda_init is not in the simplex");

  SaddleState state;
  state.theta = theta_init;
  state.lambda = lambda_init;
  state.avg_theta_num = VectorXd::Zero(l_count);
  state.avg_lambda_num = VectorXd::Zero(l_count);

  // Full power is feasible, so every minimizer obeys
  // cbar_l e^{-theta_l} <= f_l <= max_l f_l(theta_bar 1), and a floor at that
  // level (16x slack) excludes no optimum. Without it the set is unbounded
  // below and one overshooting step can park an exponential at a scale the
  // line search cannot climb back from. The cap is taken no smaller than the
  // value at theta_init so a warm start never begins outside the box.
  const double f_cap_bar =
      f_values(VectorXd::Constant(l_count, rp.theta_bar), rp).maxCoeff();
  const double f_cap_init = f_values(theta_init, rp).maxCoeff();
  const double f_cap =
      std::isfinite(f_cap_init) ? std::max(f_cap_bar, f_cap_init) : f_cap_bar;
  state.theta_floor = (rp.cbar.array().log() - std::log(16.0 * f_cap)).matrix();

  MpReport report;
  report.obj_trace.reserve(cfg.max_iter);
  report.accepted_steps.reserve(cfg.max_iter);
  report.iter_time_ms.reserve(cfg.max_iter);
  report.max_delta = -std::numeric_limits<double>::infinity();
  const auto started = std::chrono::steady_clock::now();

  double mu_prev = cfg.mu0;
  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  // A start at the power cap can leave the average projection-clamped in
  // place for many iterations while the dual weights reorganize; during that
  // plateau the objective change is zero up to summation roundoff. The
  // tolerance stop only arms once the averaged objective has changed by at
  // least the tolerance, so a plateau at the starting point never reads as
  // convergence.
  bool average_moved = false;
  for (int n = 1; n <= cfg.max_iter; ++n) {
    const PhiEval at_z = phi_and_grads(state.theta, state.lambda, rp);
    if (!at_z.grad_theta.allFinite() || !at_z.grad_lambda.allFinite())
      throw std::runtime_error("mp_solve: non-finite gradient at iteration " + std::to_string(n));

    // the ceiling keeps a zero-residual plateau from overflowing the step
    double mu = std::min(mu_prev / cfg.rho, 1e100);
    ExtragradientResult trial;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      trial = extragradient_trial(state, rp, mu, at_z);
      if (std::isfinite(trial.delta) && trial.delta <= 0.0) {
        accepted = true;
        break;
      }
      mu *= cfg.rho;
    }
    if (!accepted)
      throw std::runtime_error("mp_solve: step size underflow after " +
                               std::to_string(cfg.max_backtracks) + " backtracks at iteration " +
                               std::to_string(n));

    // an accepted step that moves nothing (up to projection roundoff, the
    // simplex projection wobbles in the last ulp on ties) is a fixed point
    // of the projected step map, i.e. the saddle pair itself; the running
    // average still carries the transient, so it is replaced by the point.
    // Material dual motion during a power-cap plateau is orders above this.
    const bool stationary =
        (trial.theta_next - state.theta).cwiseAbs().maxCoeff() <= 1e-14 &&
        (trial.lambda_next - state.lambda).cwiseAbs().maxCoeff() <= 1e-14;
    if (n >= 2 && stationary) {
      state.avg_theta_num = state.theta;
      state.avg_lambda_num = state.lambda;
      state.avg_denom = 1.0;
      report.accepted_steps.push_back(mu);
      report.max_delta = std::max(report.max_delta, trial.delta);
      report.obj_trace.push_back(f_values(state.theta, rp).maxCoeff());
      report.iter_time_ms.push_back(
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                    started)
              .count());
      report.termination = MpTermination::tolerance;
      report.iterations = n;
      break;
    }

    state.avg_theta_num += mu * state.theta;
    state.avg_lambda_num += mu * state.lambda;
    state.avg_denom += mu;
    state.theta = trial.theta_next;
    state.lambda = trial.lambda_next;
    state.step = mu_prev = mu;
    state.iteration = n;

    report.accepted_steps.push_back(mu);
    report.max_delta = std::max(report.max_delta, trial.delta);
    const double obj =
        f_values(state.avg_theta_num / state.avg_denom, rp).maxCoeff();
    report.obj_trace.push_back(obj);
    report.iter_time_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count());
    if (n >= 2 && std::abs(obj - prev_obj) >= cfg.tol) average_moved = true;
    if (average_moved && n >= 2 && std::abs(obj - prev_obj) < cfg.tol) {
      report.termination = MpTermination::tolerance;
      report.iterations = n;
      break;
    }
    prev_obj = obj;
    report.iterations = n;
  }

  report.theta_star = state.avg_theta_num / state.avg_denom;
  report.lambda_star = state.avg_lambda_num / state.avg_denom;
  report.theta_last = state.theta;
  return report;
}

}  // namespace cfmaxmin
