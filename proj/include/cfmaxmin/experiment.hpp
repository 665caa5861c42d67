#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ao.hpp"
#include "baselines.hpp"
#include "channel.hpp"
#include "io.hpp"
#include "mirror_prox.hpp"
#include "oracle.hpp"
#include "problem.hpp"
#include "version.hpp"

namespace cfmaxmin {

namespace detail {

/// Run fn(0..n-1) across a worker pool. Each index is processed exactly once;
/// the first failure (by index) is rethrown after all workers finish.
inline void parallel_realizations(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int r = 0; r < n; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int r = next.fetch_add(1); r < n; r = next.fetch_add(1)) {
        try {
          fn(r);
        } catch (...) {
          failures[static_cast<std::size_t>(r)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : failures)
    if (e) std::rethrow_exception(e);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double ms_since(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - from)
      .count();
}

inline NetworkConfig shift_seed(NetworkConfig cfg, int offset) {
  cfg.rng_seed += static_cast<std::uint64_t>(offset);
  return cfg;
}

struct ConvergenceCurve {
  std::vector<double> min_rate;
  std::vector<double> cum_ms;
};

struct TimingRow {
  int l = 0;
  int m = 0;
  double total_ms = 0.0;
  long total_iters = 0;
  int completed = 0;
};

inline MpReport run_power_solver(const std::string& solver, const ReducedProblem& rp,
                                 const MpConfig& mp) {
  const int l_count = rp.size();
  const VectorXd theta0 = VectorXd::Constant(l_count, rp.theta_bar);
  const VectorXd lambda0 = VectorXd::Constant(l_count, 1.0 / l_count);
  if (solver == "mp") return mp_solve(rp, theta0, lambda0, mp);
  if (solver == "gda") return gda_solve(rp, theta0, lambda0, mp);
  if (solver == "apg")
    // smoothing tracks the accuracy scale of the plots, not the stopping
    // tolerance: trace collection often turns mp.tol far below any
    // meaningful smoothing target
    return apg_smoothed_solve(rp, theta0, default_smoothing(1e-3, l_count), mp);
  throw std::invalid_argument("unknown power solver '" + solver + "'");
}

}  // namespace detail

inline std::filesystem::path write_manifest(const Scenario& s, const std::string& command) {
  const std::filesystem::path dir(s.out_dir);
  std::filesystem::create_directories(dir);
  json manifest{{"command", command},
                {"scenario", scenario_to_json(s)},
                {"seed", s.network.rng_seed},
                {"version", kVersion}};
  const auto path = dir / "run.json";
  write_text_file(path, manifest.dump(2) + "\n");
  return path;
}

/// Per-iteration mean of the worst-user rate for every (solver, omega) pair,
/// with filters frozen at one update from full power. Traces shorter than the
/// longest one are padded with their final value before averaging.
inline std::filesystem::path run_convergence(const Scenario& scenario) {
  scenario.validate();
  for (const auto& s : scenario.solvers)
    if (s == "oracle")
      throw std::invalid_argument("run_convergence: the oracle has no iteration trace");

  const int reals = scenario.num_realizations;
  const int n_omega = static_cast<int>(scenario.omegas.size());
  const int n_solver = static_cast<int>(scenario.solvers.size());
  const double pre = scenario.network.prelog();

  using Curve = detail::ConvergenceCurve;
  std::vector<std::vector<Curve>> curves(static_cast<std::size_t>(reals));

  detail::parallel_realizations(reals, scenario.workers, [&](int r) {
    const NetworkConfig cfg = detail::shift_seed(scenario.network, r);
    const ChannelStats stats = make_channel_stats(cfg);
    const double pbar = cfg.normalized_max_power();
    const int l_count = stats.num_users();
    const FilterSet q =
        update_filters(VectorXd::Constant(l_count, pbar), stats, cfg.antennas_per_ap);

    auto& mine = curves[static_cast<std::size_t>(r)];
    mine.resize(static_cast<std::size_t>(n_omega * n_solver));
    for (int oi = 0; oi < n_omega; ++oi) {
      const double omega = scenario.omegas[static_cast<std::size_t>(oi)].resolve(cfg.num_aps);
      const ReducedProblem rp = reduce(stats, q, cfg.antennas_per_ap, omega, pbar);
      for (int si = 0; si < n_solver; ++si) {
        const MpReport rep =
            detail::run_power_solver(scenario.solvers[static_cast<std::size_t>(si)], rp,
                                     scenario.mp);
        Curve& c = mine[static_cast<std::size_t>(oi * n_solver + si)];
        c.min_rate.reserve(rep.obj_trace.size());
        for (double obj : rep.obj_trace) c.min_rate.push_back(pre * std::log2(1.0 + 1.0 / obj));
        c.cum_ms = rep.iter_time_ms;
      }
    }
  });

  std::string csv = "solver,omega,iteration,mean_min_rate,mean_cum_time_ms\n";
  for (int si = 0; si < n_solver; ++si) {
    for (int oi = 0; oi < n_omega; ++oi) {
      const double omega =
          scenario.omegas[static_cast<std::size_t>(oi)].resolve(scenario.network.num_aps);
      std::size_t longest = 0;
      for (int r = 0; r < reals; ++r)
        longest = std::max(longest,
                           curves[static_cast<std::size_t>(r)]
                               [static_cast<std::size_t>(oi * n_solver + si)].min_rate.size());
      for (std::size_t it = 0; it < longest; ++it) {
        double rate_sum = 0.0;
        double time_sum = 0.0;
        for (int r = 0; r < reals; ++r) {
          const Curve& c = curves[static_cast<std::size_t>(r)]
                                 [static_cast<std::size_t>(oi * n_solver + si)];
          const std::size_t idx = std::min(it, c.min_rate.size() - 1);
          rate_sum += c.min_rate[idx];
          time_sum += c.cum_ms[idx];
        }
        csv += scenario.solvers[static_cast<std::size_t>(si)] + "," + detail::fmt(omega) + "," +
               std::to_string(it + 1) + "," + detail::fmt(rate_sum / reals) + "," +
               detail::fmt(time_sum / reals) + "\n";
      }
    }
  }

  write_manifest(scenario, "convergence");
  const auto path = std::filesystem::path(scenario.out_dir) / "convergence.csv";
  write_text_file(path, csv);
  return path;
}

/// Empirical CDF of per-user rates pooled over users and realizations, one
/// curve per solve mode.
inline std::filesystem::path run_cdf(const Scenario& scenario) {
  scenario.validate();
  std::vector<SolveMode> modes;
  if (scenario.mode == RunMode::ao || scenario.mode == RunMode::both)
    modes.push_back(SolveMode::ao);
  if (scenario.mode == RunMode::power_only || scenario.mode == RunMode::both)
    modes.push_back(SolveMode::power_only);

  const int reals = scenario.num_realizations;
  AoConfig ao;
  ao.outer_tol = scenario.outer_tol;
  ao.outer_max = scenario.outer_max;

  std::vector<std::vector<VectorXd>> rates(static_cast<std::size_t>(reals));
  detail::parallel_realizations(reals, scenario.workers, [&](int r) {
    const NetworkConfig cfg = detail::shift_seed(scenario.network, r);
    const ChannelStats stats = make_channel_stats(cfg);
    AoConfig ao_r = ao;
    ao_r.omega = scenario.omegas.front().resolve(cfg.num_aps);
    auto& mine = rates[static_cast<std::size_t>(r)];
    for (SolveMode m : modes)
      mine.push_back(m == SolveMode::ao ? ao_solve(stats, cfg, ao_r, scenario.mp).rates
                                        : power_only_solve(stats, cfg, ao_r, scenario.mp).rates);
  });

  std::string csv = "scenario,mode,rate,empirical_cdf\n";
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    std::vector<double> pool;
    pool.reserve(static_cast<std::size_t>(reals) * scenario.network.num_users);
    for (int r = 0; r < reals; ++r) {
      const VectorXd& v = rates[static_cast<std::size_t>(r)][mi];
      pool.insert(pool.end(), v.data(), v.data() + v.size());
    }
    std::sort(pool.begin(), pool.end());
    const std::string mode_name = modes[mi] == SolveMode::ao ? "ao" : "power_only";
    for (std::size_t i = 0; i < pool.size(); ++i)
      csv += scenario.name + "," + mode_name + "," + detail::fmt(pool[i]) + "," +
             detail::fmt(static_cast<double>(i + 1) / pool.size()) + "\n";
  }

  write_manifest(scenario, "cdf");
  const auto path = std::filesystem::path(scenario.out_dir) / "cdf.csv";
  write_text_file(path, csv);
  return path;
}

/// Wall-time comparison of the power solvers over a list of problem sizes.
/// Runs sequentially regardless of the worker setting so measurements do not
/// contend for cores; channel generation stays outside the clock.
inline std::filesystem::path run_timing(const Scenario& scenario) {
  scenario.validate();
  using Row = detail::TimingRow;
  std::map<std::string, std::vector<Row>> rows;

  for (const auto& [l_count, m_count] : scenario.timing_sizes) {
    std::vector<ReducedProblem> problems;
    problems.reserve(static_cast<std::size_t>(scenario.timing_realizations));
    for (int rep = 0; rep < scenario.timing_realizations; ++rep) {
      NetworkConfig cfg = detail::shift_seed(scenario.network, rep);
      cfg.num_users = l_count;
      cfg.num_aps = m_count;
      const ChannelStats stats = make_channel_stats(cfg);
      const double pbar = cfg.normalized_max_power();
      const FilterSet q =
          update_filters(VectorXd::Constant(l_count, pbar), stats, cfg.antennas_per_ap);
      const double omega = scenario.omegas.front().resolve(m_count);
      problems.push_back(reduce(stats, q, cfg.antennas_per_ap, omega, pbar));
    }
    for (const auto& solver : scenario.solvers) {
      Row row;
      row.l = l_count;
      row.m = m_count;
      for (const ReducedProblem& rp : problems) {
        const auto t0 = std::chrono::steady_clock::now();
        // a diverging baseline forfeits its own row, not the comparison
        try {
          if (solver == "oracle") {
            const MaxminResult res = bisection_maxmin(rp, 1e-6);
            row.total_ms += detail::ms_since(t0);
            row.total_iters += res.probes;
          } else {
            const MpReport rep = detail::run_power_solver(solver, rp, scenario.mp);
            row.total_ms += detail::ms_since(t0);
            row.total_iters += rep.iterations;
          }
          ++row.completed;
        } catch (const std::runtime_error& e) {
          std::fprintf(stderr, "timing: %s at L=%d: %s\n", solver.c_str(), l_count,
                       e.what());
        }
      }
      rows[solver].push_back(row);
    }
  }

  std::string csv = "solver,L,M,mean_solve_ms,mean_iterations,per_iteration_us\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& solver : scenario.solvers) {
    for (const Row& row : rows[solver]) {
      const bool any = row.completed > 0;
      const double reals = any ? row.completed : 1;
      csv += solver + "," + std::to_string(row.l) + "," + std::to_string(row.m) + "," +
             detail::fmt(any ? row.total_ms / reals : nan) + "," +
             detail::fmt(any ? row.total_iters / reals : nan) + "," +
             detail::fmt(row.total_iters > 0
                             ? 1000.0 * row.total_ms / static_cast<double>(row.total_iters)
                             : nan) +
             "\n";
    }
  }

  write_manifest(scenario, "timing");
  const auto path = std::filesystem::path(scenario.out_dir) / "timing.csv";
  write_text_file(path, csv);
  return path;
}

/// One end-to-end solve of the scenario's network, reported as JSON.
inline std::filesystem::path run_solve(const Scenario& scenario) {
  scenario.validate();
  const ChannelStats stats = make_channel_stats(scenario.network);
  AoConfig ao;
  ao.outer_tol = scenario.outer_tol;
  ao.outer_max = scenario.outer_max;
  ao.omega = scenario.omegas.front().resolve(scenario.network.num_aps);

  json reports = json::array();
  if (scenario.mode == RunMode::ao || scenario.mode == RunMode::both)
    reports.push_back(ao_report_to_json(ao_solve(stats, scenario.network, ao, scenario.mp)));
  if (scenario.mode == RunMode::power_only || scenario.mode == RunMode::both)
    reports.push_back(
        ao_report_to_json(power_only_solve(stats, scenario.network, ao, scenario.mp)));

  write_manifest(scenario, "solve");
  const auto path = std::filesystem::path(scenario.out_dir) / "solve.json";
  write_text_file(path, json{{"scenario", scenario.name}, {"reports", reports}}.dump(2) + "\n");
  return path;
}

}  // namespace cfmaxmin
