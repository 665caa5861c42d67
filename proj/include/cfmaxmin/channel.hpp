#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfmaxmin {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Deployment and radio parameters for one network realization.
///
/// Distances are in km, configured powers in watts. Internally all transmit
/// powers are normalized by the thermal noise power, so the SINR and channel
/// estimation formulas hold with unit noise; use normalized_pilot_power() /
/// normalized_max_power() when feeding the optimization layer.
struct NetworkConfig {
  int num_aps = 150;             // M
  int num_users = 50;            // L
  int antennas_per_ap = 1;       // K
  double area_side = 1.0;        // D, km
  int pilot_len = 20;            // tau_p, symbols
  int coherence_len = 200;       // tau_c, symbols
  double pilot_power = 0.2;      // eta_p, W
  double max_power = 0.2;        // pbar, W
  double shadow_std = 8.0;       // sigma_sh, dB (0 disables shadowing)
  double noise_figure = 9.0;     // dB
  double bandwidth = 20e6;       // Hz
  double d0 = 0.01;              // km, inner path-loss breakpoint
  double d1 = 0.05;              // km, outer path-loss breakpoint
  double fixed_loss_db = 140.7;  // fixed-loss constant Lambda, dB
  std::uint64_t rng_seed = 1;
  bool pilot_reuse = false;  // round-robin pilot reuse instead of orthogonal pilots
  bool use_prelog = false;   // apply (1 - tau_p/tau_c) to rates

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("NetworkConfig: " + msg); };
    if (num_aps < 1) fail("num_aps must be >= 1");
    if (num_users < 1) fail("num_users must be >= 1");
    if (antennas_per_ap < 1) fail("antennas_per_ap must be >= 1");
    if (!(area_side > 0)) fail("area_side must be > 0");
    if (pilot_len < 1) fail("pilot_len must be >= 1");
    if (coherence_len < pilot_len) fail("coherence_len must be >= pilot_len");
    if (!(pilot_power > 0)) fail("pilot_power must be > 0");
    if (!(max_power > 0)) fail("max_power must be > 0");
    if (!(shadow_std >= 0)) fail("shadow_std must be >= 0");
    if (!(bandwidth > 0)) fail("bandwidth must be > 0");
    if (!(d0 > 0 && d0 < d1)) fail("breakpoints must satisfy 0 < d0 < d1");
  }

  /// Thermal noise power in watts: -174 dBm/Hz PSD plus bandwidth and noise figure.
  double noise_power_watts() const {
    const double dbm = -174.0 + 10.0 * std::log10(bandwidth) + noise_figure;
    return std::pow(10.0, (dbm - 30.0) / 10.0);
  }

  double normalized_pilot_power() const { return pilot_power / noise_power_watts(); }
  double normalized_max_power() const { return max_power / noise_power_watts(); }

  double prelog() const {
    return use_prelog ? 1.0 - static_cast<double>(pilot_len) / coherence_len : 1.0;
  }
};

/// AP/user coordinates on the [0,D)^2 torus and the M x L distance matrix.
struct Geometry {
  MatrixXd ap_positions;    // M x 2, km
  MatrixXd user_positions;  // L x 2, km
  MatrixXd distances;       // M x L, km, wrap-around metric with d0 floor
};

/// Large-scale statistics of one network realization, everything the
/// optimization layer consumes. Immutable after construction.
struct ChannelStats {
  MatrixXd zeta;        // M x L large-scale fading (linear)
  MatrixXd g;           // M x L MMSE estimate variances (linear)
  MatrixXd pilot_gram;  // L x L, |phi_i^H phi_l| in [0,1], unit diagonal
  // gvec[l](i, m): m-th entry of the cross-channel vector of users (l, i).
  std::vector<MatrixXd> gvec;  // L matrices of size L x M
  // gbar_diag[l](i, m): diagonal of the per-antenna interference matrix, g_ml * zeta_mi.
  std::vector<MatrixXd> gbar_diag;  // L matrices of size L x M
  MatrixXd gtil_diag;               // L x M, row l = diag of the estimation-noise matrix, g_ml

  int num_aps() const { return static_cast<int>(zeta.rows()); }
  int num_users() const { return static_cast<int>(zeta.cols()); }
};

/// Independent deterministic engine for (seed, stream) so geometry and
/// shadowing draws do not interleave.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

/// Torus distance on [0,D)^2.
inline double wrap_distance(double ax, double ay, double bx, double by, double side) {
  double dx = std::abs(ax - bx);
  double dy = std::abs(ay - by);
  dx = std::min(dx, side - dx);
  dy = std::min(dy, side - dy);
  return std::hypot(dx, dy);
}

/// Uniform i.i.d. AP and user positions; wrap-around distances floored at d0.
inline Geometry generate_geometry(const NetworkConfig& config) {
  config.validate();
  const int m_count = config.num_aps;
  const int l_count = config.num_users;
  std::mt19937_64 engine = make_engine(config.rng_seed, 0);
  std::uniform_real_distribution<double> coord(0.0, config.area_side);

  Geometry geo;
  geo.ap_positions.resize(m_count, 2);
  for (int m = 0; m < m_count; ++m) {
    geo.ap_positions(m, 0) = coord(engine);
    geo.ap_positions(m, 1) = coord(engine);
  }
  geo.user_positions.resize(l_count, 2);
  for (int l = 0; l < l_count; ++l) {
    geo.user_positions(l, 0) = coord(engine);
    geo.user_positions(l, 1) = coord(engine);
  }
  geo.distances.resize(m_count, l_count);
  for (int m = 0; m < m_count; ++m) {
    for (int l = 0; l < l_count; ++l) {
      const double d = wrap_distance(geo.ap_positions(m, 0), geo.ap_positions(m, 1),
                                     geo.user_positions(l, 0), geo.user_positions(l, 1),
                                     config.area_side);
      geo.distances(m, l) = std::max(d, config.d0);
    }
  }
  return geo;
}

/// Three-slope path loss, returned as a linear power gain.
///
/// Slopes: 3.5 beyond d1, 2 between d0 and d1, constant below d0; continuous
/// at both breakpoints.
inline double path_loss(double distance, const NetworkConfig& config) {
  if (!(distance > 0)) throw std::domain_error("path_loss: distance must be > 0");
  const double lam = config.fixed_loss_db;
  double pl_db;
  if (distance > config.d1) {
    pl_db = -lam - 35.0 * std::log10(distance);
  } else if (distance > config.d0) {
    pl_db = -lam - 15.0 * std::log10(config.d1) - 20.0 * std::log10(distance);
  } else {
    pl_db = -lam - 15.0 * std::log10(config.d1) - 20.0 * std::log10(config.d0);
  }
  return std::pow(10.0, pl_db / 10.0);
}

/// zeta_ml = PL(d_ml) * 10^(sigma_sh x_ml / 10) with x_ml ~ N(0,1), drawn
/// row-major from the shadowing stream of config.rng_seed.
inline MatrixXd large_scale_fading(const Geometry& geometry, const NetworkConfig& config) {
  const int m_count = static_cast<int>(geometry.distances.rows());
  const int l_count = static_cast<int>(geometry.distances.cols());
  std::mt19937_64 engine = make_engine(config.rng_seed, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  MatrixXd zeta(m_count, l_count);
  for (int m = 0; m < m_count; ++m) {
    for (int l = 0; l < l_count; ++l) {
      const double shadow_db = config.shadow_std * gauss(engine);
      zeta(m, l) = path_loss(geometry.distances(m, l), config) * std::pow(10.0, shadow_db / 10.0);
    }
  }
  return zeta;
}

/// Pilot inner-product magnitudes. Orthogonal pilots give the identity; the
/// reuse mode assigns pilot (l mod tau_p) round-robin, entries 1 within a
/// reuse group.
inline MatrixXd pilot_gram_matrix(const NetworkConfig& config) {
  const int l_count = config.num_users;
  if (!config.pilot_reuse) return MatrixXd::Identity(l_count, l_count);
  MatrixXd gram = MatrixXd::Zero(l_count, l_count);
  for (int l = 0; l < l_count; ++l)
    for (int i = 0; i < l_count; ++i)
      gram(l, i) = (l % config.pilot_len == i % config.pilot_len) ? 1.0 : 0.0;
  return gram;
}

/// MMSE channel-estimate variances:
///   g_ml = eta_p tau_p zeta_ml^2 / (eta_p tau_p sum_i zeta_mi |phi_i^H phi_l|^2 + 1).
/// eta_p is the noise-normalized pilot power.
inline MatrixXd estimate_variance(const MatrixXd& zeta, const MatrixXd& pilot_gram, double eta_p,
                                  int tau_p) {
  const int m_count = static_cast<int>(zeta.rows());
  const int l_count = static_cast<int>(zeta.cols());
  const double ep = eta_p * tau_p;
  MatrixXd g(m_count, l_count);
  for (int m = 0; m < m_count; ++m) {
    for (int l = 0; l < l_count; ++l) {
      double interference = 0.0;
      for (int i = 0; i < l_count; ++i) {
        const double corr = pilot_gram(i, l);
        interference += zeta(m, i) * corr * corr;
      }
      g(m, l) = ep * zeta(m, l) * zeta(m, l) / (ep * interference + 1.0);
    }
  }
  return g;
}

/// Assemble the derived per-user tensors:
///   gvec[l](i,m)      = |phi_l^H phi_i| g_ml zeta_mi / zeta_ml
///   gbar_diag[l](i,m) = g_ml zeta_mi
///   gtil_diag(l,m)    = g_ml
/// A zero-channel AP (zeta_ml = 0) contributes nothing: the gvec entry is 0.
inline ChannelStats derived_stats(MatrixXd zeta, MatrixXd g, MatrixXd pilot_gram) {
  const int m_count = static_cast<int>(zeta.rows());
  const int l_count = static_cast<int>(zeta.cols());
  ChannelStats stats;
  stats.gvec.resize(l_count);
  stats.gbar_diag.resize(l_count);
  stats.gtil_diag.resize(l_count, m_count);
  for (int l = 0; l < l_count; ++l) {
    stats.gvec[l].resize(l_count, m_count);
    stats.gbar_diag[l].resize(l_count, m_count);
    for (int i = 0; i < l_count; ++i) {
      const double corr = pilot_gram(l, i);
      for (int m = 0; m < m_count; ++m) {
        stats.gbar_diag[l](i, m) = g(m, l) * zeta(m, i);
        if (zeta(m, l) > 0.0) {
          stats.gvec[l](i, m) = corr * g(m, l) * zeta(m, i) / zeta(m, l);
        } else {
          stats.gvec[l](i, m) = 0.0;
        }
      }
    }
    stats.gtil_diag.row(l) = g.col(l).transpose();
  }
  stats.zeta = std::move(zeta);
  stats.g = std::move(g);
  stats.pilot_gram = std::move(pilot_gram);
  return stats;
}

/// Full pipeline: geometry -> fading -> estimation -> derived tensors.
inline ChannelStats make_channel_stats(const NetworkConfig& config) {
  const Geometry geo = generate_geometry(config);
  MatrixXd zeta = large_scale_fading(geo, config);
  MatrixXd gram = pilot_gram_matrix(config);
  MatrixXd g = estimate_variance(zeta, gram, config.normalized_pilot_power(), config.pilot_len);
  return derived_stats(std::move(zeta), std::move(g), std::move(gram));
}

}  // namespace cfmaxmin
