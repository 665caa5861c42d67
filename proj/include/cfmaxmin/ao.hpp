#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "channel.hpp"
#include "mirror_prox.hpp"
#include "problem.hpp"

namespace cfmaxmin {

struct AoConfig {
  std::optional<double> omega;  // power rescaling; empty selects the AP count
  double outer_tol = 1e-4;      // min-rate change stopping tolerance
  int outer_max = 50;

  void validate() const {
    if (omega && !(*omega > 0)) throw std::invalid_argument("AoConfig: omega must be > 0");
    if (!(outer_tol > 0)) throw std::invalid_argument("AoConfig: outer_tol must be > 0");
    if (outer_max < 1) throw std::invalid_argument("AoConfig: outer_max must be >= 1");
  }
};

enum class SolveMode { ao, power_only };

struct AoReport {
  std::vector<double> outer_trace;  // min rate after each outer iteration
  VectorXd p;
  FilterSet q;
  VectorXd rates;
  int outer_iterations = 0;
  std::vector<int> inner_iterations;  // power-solver iterations per outer step
  double filter_ms = 0.0;
  double reduce_ms = 0.0;
  double power_ms = 0.0;
  SolveMode mode = SolveMode::ao;
  double omega = 0.0;  // resolved value
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - from)
      .count();
}

}  // namespace detail

/// Alternate per-user optimal filter updates with saddle-point power updates
/// from full power. A power candidate is kept only if the minimum rate does
/// not drop; a rejected candidate ends the loop, so the trace never decreases.
inline AoReport ao_solve(const ChannelStats& stats, const NetworkConfig& net,
                         const AoConfig& ao, const MpConfig& mp_cfg) {
  ao.validate();
  mp_cfg.validate();
  const int l_count = stats.num_users();
  const int k = net.antennas_per_ap;
  const double pbar = net.normalized_max_power();
  const double omega = ao.omega.value_or(static_cast<double>(stats.num_aps()));
  const double pre = net.prelog();

  AoReport rep;
  rep.mode = SolveMode::ao;
  rep.omega = omega;
  rep.p = VectorXd::Constant(l_count, pbar);

  double prev_rate = 0.0;
  for (int outer = 1; outer <= ao.outer_max; ++outer) {
    try {
      auto t0 = std::chrono::steady_clock::now();
      FilterSet q_next = update_filters(rep.p, stats, k);
      rep.filter_ms += detail::elapsed_ms(t0);
      // identical filters reproduce the subproblem just solved; solving it
      // again from its own answer is a restart, not an alternation step
      if (outer >= 2 && (q_next.array() == rep.q.array()).all()) break;
      rep.q = std::move(q_next);
      const double held = rate(sinr(rep.p, rep.q, stats, k), pre).minCoeff();

      auto t1 = std::chrono::steady_clock::now();
      const ReducedProblem rp = reduce(stats, rep.q, k, omega, pbar);
      rep.reduce_ms += detail::elapsed_ms(t1);

      auto t2 = std::chrono::steady_clock::now();
      const MpReport inner =
          mp_solve(rp, theta_from_power(rep.p, omega),
                   VectorXd::Constant(l_count, 1.0 / l_count), mp_cfg);
      rep.power_ms += detail::elapsed_ms(t2);
      rep.inner_iterations.push_back(inner.iterations);

      const VectorXd p_cand = power_from_theta(inner.theta_star, omega);
      const double cand = rate(sinr(p_cand, rep.q, stats, k), pre).minCoeff();

      bool advanced = false;
      double reached = held;
      if (cand >= held) {
        rep.p = p_cand;
        reached = cand;
        advanced = true;
      }
      rep.outer_trace.push_back(reached);
      rep.outer_iterations = outer;
      if (!advanced) break;
      if (outer >= 2 && std::abs(reached - prev_rate) < ao.outer_tol) break;
      prev_rate = reached;
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("ao_solve outer iteration " + std::to_string(outer) + ": " +
                               e.what());
    }
  }

  rep.rates = rate(sinr(rep.p, rep.q, stats, k), pre);
  return rep;
}

/// Power control alone: every filter is the normalized all-ones vector, so
/// one reduction and one power solve produce the answer.
inline AoReport power_only_solve(const ChannelStats& stats, const NetworkConfig& net,
                                 const AoConfig& ao, const MpConfig& mp_cfg) {
  ao.validate();
  mp_cfg.validate();
  const int m = stats.num_aps();
  const int l_count = stats.num_users();
  const int k = net.antennas_per_ap;
  const double pbar = net.normalized_max_power();
  const double omega = ao.omega.value_or(static_cast<double>(m));
  const double pre = net.prelog();

  AoReport rep;
  rep.mode = SolveMode::power_only;
  rep.omega = omega;
  rep.q = MatrixXd::Constant(m, l_count, 1.0 / std::sqrt(static_cast<double>(m)));

  try {
    auto t1 = std::chrono::steady_clock::now();
    const ReducedProblem rp = reduce(stats, rep.q, k, omega, pbar);
    rep.reduce_ms += detail::elapsed_ms(t1);

    auto t2 = std::chrono::steady_clock::now();
    const MpReport inner = mp_solve(rp, VectorXd::Constant(l_count, rp.theta_bar),
                                    VectorXd::Constant(l_count, 1.0 / l_count), mp_cfg);
    rep.power_ms += detail::elapsed_ms(t2);
    rep.inner_iterations.push_back(inner.iterations);
    rep.p = power_from_theta(inner.theta_star, omega);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("power_only_solve: ") + e.what());
  }

  rep.rates = rate(sinr(rep.p, rep.q, stats, k), pre);
  rep.outer_trace.push_back(rep.rates.minCoeff());
  rep.outer_iterations = 1;
  return rep;
}

}  // namespace cfmaxmin
