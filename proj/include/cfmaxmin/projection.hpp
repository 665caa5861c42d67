#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace cfmaxmin {

using Eigen::VectorXd;

/// Projection onto {x <= bound} componentwise. The feasible set has no lower
/// edge, so only the cap applies.
inline VectorXd project_box(const VectorXd& x, double bound) {
  return x.cwiseMin(bound);
}

/// Box with a per-coordinate lower edge.
inline VectorXd project_box(const VectorXd& x, const VectorXd& lower, double upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

/// Projection onto the probability simplex as [v - beta]_+ with beta chosen by
/// bisection so the result sums to one. The bracket [max(v)-1, max(v)] always
/// contains beta and has unit width, so a fixed iteration count reaches
/// machine-level accuracy independent of the input scale.
inline VectorXd project_simplex(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  if (n == 1) return VectorXd::Ones(1);
  if (v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) <= 1e-12) return v;  // already feasible

  const double top = v.maxCoeff();
  double lo = top - 1.0, hi = top;
  for (int it = 0; it < 64; ++it) {
    const double beta = 0.5 * (lo + hi);
    if (beta == lo || beta == hi) break;
    double mass = 0.0;
    for (int i = 0; i < n; ++i) mass += std::max(v(i) - beta, 0.0);
    (mass > 1.0 ? lo : hi) = beta;
  }
  const double beta = 0.5 * (lo + hi);
  return (v.array() - beta).max(0.0).matrix();
}

/// Exact sort-based simplex projection, used as a reference for the bisection.
inline VectorXd project_simplex_sorted(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, beta = 0.0;
  int rho = 0;
  for (int k = 0; k < n; ++k) {
    cumsum += u[k];
    const double candidate = (cumsum - 1.0) / (k + 1);
    if (u[k] - candidate > 0.0) {
      rho = k + 1;
      beta = candidate;
    }
  }
  (void)rho;
  return (v.array() - beta).max(0.0).matrix();
}

}  // namespace cfmaxmin
