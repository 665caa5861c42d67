#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

#include "problem.hpp"

namespace cfmaxmin {

/// SINRs of the reduced problem at powers p: gamma_l = p_l / ((ab p)_l + c_l)
/// with c = cbar / omega.
inline VectorXd gamma_reduced(const VectorXd& p, const ReducedProblem& rp) {
  const VectorXd denom = rp.ab * p + rp.cbar / rp.omega;
  return (p.array() / denom.array()).matrix();
}

inline double oracle_power_cap(const ReducedProblem& rp) {
  return std::exp(rp.theta_bar) / rp.omega;
}

struct FeasibilityResult {
  bool ok = false;
  VectorXd p;  // witness (capped fixed point)
  int iterations = 0;
  bool converged = false;
};

/// Decide whether every user can reach SINR target t under the power cap, by
/// iterating the capped standard-interference map p <- min(t (ab p + c), pbar)
/// from zero. The map is monotone, so the iteration climbs to the minimal
/// fixed point; the target is feasible exactly when that point meets it.
inline FeasibilityResult feasible(const ReducedProblem& rp, double t) {
  if (!(t > 0)) throw std::domain_error("feasible: target must be > 0");
  const int n = rp.size();
  const VectorXd c = rp.cbar / rp.omega;
  const double pbar = oracle_power_cap(rp);

  FeasibilityResult res;
  res.p = VectorXd::Zero(n);
  const int cap = 200000;
  for (res.iterations = 0; res.iterations < cap; ++res.iterations) {
    const VectorXd next = (t * (rp.ab * res.p + c)).cwiseMin(pbar);
    const double change = (next - res.p).cwiseAbs().maxCoeff();
    res.p = next;
    if (change <= 1e-12 * std::max(1.0, res.p.cwiseAbs().maxCoeff())) {
      res.converged = true;
      break;
    }
  }
  const VectorXd gamma = gamma_reduced(res.p, rp);
  res.ok = res.converged && (gamma.array() >= t * (1.0 - 1e-9)).all();
  return res;
}

/// Exact feasibility via the uncapped balance equations: the minimal fixed
/// point solves (I - t ab) x = t c, is nonnegative precisely when the spectral
/// radius of t ab is below one, and the target is feasible iff it also fits
/// under the cap. Used as the bisection backend; agrees with feasible() and
/// costs one LU solve per probe.
inline FeasibilityResult feasible_exact(const ReducedProblem& rp, double t) {
  if (!(t > 0)) throw std::domain_error("feasible_exact: target must be > 0");
  const int n = rp.size();
  const VectorXd c = rp.cbar / rp.omega;
  const double pbar = oracle_power_cap(rp);

  const MatrixXd lhs = MatrixXd::Identity(n, n) - t * rp.ab;
  const VectorXd rhs = t * c;
  const VectorXd x = Eigen::PartialPivLU<MatrixXd>(lhs).solve(rhs);

  FeasibilityResult res;
  res.converged = true;
  res.iterations = 1;
  const double scale = x.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff();
  const bool solved = x.allFinite() &&
                      (lhs * x - rhs).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, scale);
  res.ok = solved && x.minCoeff() >= 0.0 && (x.array() <= pbar * (1.0 + 1e-12)).all();
  res.p = res.ok ? VectorXd(x.cwiseMin(pbar)) : VectorXd::Zero(n);
  return res;
}

struct MaxminResult {
  double sinr = 0.0;
  VectorXd p;
  int probes = 0;
};

/// Max-min SINR by bisection on the target. The upper bracket max_l pbar/c_l
/// ignores interference and self-noise, so it is strictly infeasible; the
/// bracket shrinks until its width falls below eps relative to the feasible
/// end.
inline MaxminResult bisection_maxmin(const ReducedProblem& rp, double eps = 1e-9) {
  if (!(eps > 0)) throw std::invalid_argument("bisection_maxmin: eps must be > 0");
  const VectorXd c = rp.cbar / rp.omega;
  const double pbar = oracle_power_cap(rp);

  MaxminResult best;
  best.p = VectorXd::Constant(rp.size(), pbar);
  double lo = 0.0, hi = (pbar / c.array()).maxCoeff();
  for (best.probes = 0; best.probes < 200; ++best.probes) {
    if (lo > 0.0 && hi - lo < eps * lo) break;
    const double mid = 0.5 * (lo + hi);
    const FeasibilityResult probe = feasible_exact(rp, mid);
    if (probe.ok) {
      lo = mid;
      best.p = probe.p;
    } else {
      hi = mid;
    }
  }
  best.sinr = lo;
  return best;
}

/// Exhaustive max-min over a uniform power grid including the zero and cap
/// faces. Intended as a tiny-instance cross-check only.
inline MaxminResult grid_search_maxmin(const ReducedProblem& rp, int grid_n) {
  const int n = rp.size();
  if (n > 3) throw std::invalid_argument("grid_search_maxmin: supports at most 3 users");
  if (grid_n < 10) throw std::invalid_argument("grid_search_maxmin: need at least 10 points");
  const double pbar = oracle_power_cap(rp);
  const double step = pbar / (grid_n - 1);

  MaxminResult best;
  best.sinr = -1.0;
  VectorXd p(n);
  const int j_max = grid_n - 1;
  for (int j0 = 0; j0 <= j_max; ++j0) {
    p(0) = j0 * step;
    for (int j1 = 0; j1 <= (n > 1 ? j_max : 0); ++j1) {
      if (n > 1) p(1) = j1 * step;
      for (int j2 = 0; j2 <= (n > 2 ? j_max : 0); ++j2) {
        if (n > 2) p(2) = j2 * step;
        const double val = gamma_reduced(p, rp).minCoeff();
        if (val > best.sinr) {
          best.sinr = val;
          best.p = p;
        }
      }
    }
  }
  best.probes = static_cast<int>(std::pow(grid_n, n));
  return best;
}

}  // namespace cfmaxmin
