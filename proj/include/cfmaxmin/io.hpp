#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ao.hpp"
#include "channel.hpp"
#include "mirror_prox.hpp"
#include "version.hpp"

namespace cfmaxmin {

using nlohmann::json;

inline void require_known_keys(const json& obj, const std::set<std::string>& known,
                               const std::string& what) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw std::invalid_argument(what + ": unknown field '" + it.key() + "'");
}

inline NetworkConfig network_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("network config: expected a JSON object");
  static const std::set<std::string> known = {
      "num_aps",      "num_users",  "antennas_per_ap", "area_side",  "pilot_len",
      "coherence_len", "pilot_power", "max_power",       "shadow_std", "noise_figure",
      "bandwidth",    "d0",         "d1",              "fixed_loss_db", "rng_seed",
      "pilot_reuse",  "use_prelog"};
  require_known_keys(j, known, "network config");
  NetworkConfig c;
  c.num_aps = j.value("num_aps", c.num_aps);
  c.num_users = j.value("num_users", c.num_users);
  c.antennas_per_ap = j.value("antennas_per_ap", c.antennas_per_ap);
  c.area_side = j.value("area_side", c.area_side);
  c.pilot_len = j.value("pilot_len", c.pilot_len);
  c.coherence_len = j.value("coherence_len", c.coherence_len);
  c.pilot_power = j.value("pilot_power", c.pilot_power);
  c.max_power = j.value("max_power", c.max_power);
  c.shadow_std = j.value("shadow_std", c.shadow_std);
  c.noise_figure = j.value("noise_figure", c.noise_figure);
  c.bandwidth = j.value("bandwidth", c.bandwidth);
  c.d0 = j.value("d0", c.d0);
  c.d1 = j.value("d1", c.d1);
  c.fixed_loss_db = j.value("fixed_loss_db", c.fixed_loss_db);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.pilot_reuse = j.value("pilot_reuse", c.pilot_reuse);
  c.use_prelog = j.value("use_prelog", c.use_prelog);
  c.validate();
  return c;
}

inline json network_config_to_json(const NetworkConfig& c) {
  return json{{"num_aps", c.num_aps},
              {"num_users", c.num_users},
              {"antennas_per_ap", c.antennas_per_ap},
              {"area_side", c.area_side},
              {"pilot_len", c.pilot_len},
              {"coherence_len", c.coherence_len},
              {"pilot_power", c.pilot_power},
              {"max_power", c.max_power},
              {"shadow_std", c.shadow_std},
              {"noise_figure", c.noise_figure},
              {"bandwidth", c.bandwidth},
              {"d0", c.d0},
              {"d1", c.d1},
              {"fixed_loss_db", c.fixed_loss_db},
              {"rng_seed", c.rng_seed},
              {"pilot_reuse", c.pilot_reuse},
              {"use_prelog", c.use_prelog}};
}

/// A power rescaling request: either a fixed number or the AP count.
struct OmegaSpec {
  bool ap_count = true;
  double value = 0.0;

  static OmegaSpec fixed(double v) { return {false, v}; }
  static OmegaSpec from_ap_count() { return {true, 0.0}; }

  double resolve(int num_aps) const { return ap_count ? static_cast<double>(num_aps) : value; }

  static OmegaSpec from_json(const json& j) {
    if (j.is_string()) {
      if (j.get<std::string>() == "M") return from_ap_count();
      throw std::invalid_argument("omega: the only recognized string is \"M\"");
    }
    if (j.is_number()) {
      const double v = j.get<double>();
      if (!(v > 0)) throw std::invalid_argument("omega: must be > 0");
      return fixed(v);
    }
    throw std::invalid_argument("omega: expected a number or \"M\"");
  }

  json to_json() const {
    if (ap_count) return json("M");
    return json(value);
  }
};

inline MpConfig mp_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("mp config: expected a JSON object");
  static const std::set<std::string> known = {"mu0", "rho", "max_iter", "tol", "max_backtracks"};
  require_known_keys(j, known, "mp config");
  MpConfig c;
  c.mu0 = j.value("mu0", c.mu0);
  c.rho = j.value("rho", c.rho);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.tol = j.value("tol", c.tol);
  c.max_backtracks = j.value("max_backtracks", c.max_backtracks);
  c.validate();
  return c;
}

inline json mp_config_to_json(const MpConfig& c) {
  return json{{"mu0", c.mu0},
              {"rho", c.rho},
              {"max_iter", c.max_iter},
              {"tol", c.tol},
              {"max_backtracks", c.max_backtracks}};
}

enum class RunMode { ao, power_only, both };

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "ao") return RunMode::ao;
  if (s == "power_only") return RunMode::power_only;
  if (s == "both") return RunMode::both;
  throw std::invalid_argument("mode: expected ao, power_only, or both, got '" + s + "'");
}

inline std::string run_mode_to_string(RunMode m) {
  switch (m) {
    case RunMode::ao: return "ao";
    case RunMode::power_only: return "power_only";
    default: return "both";
  }
}

struct Scenario {
  std::string name = "scenario";
  NetworkConfig network;
  int num_realizations = 1;
  std::vector<std::string> solvers = {"mp"};
  RunMode mode = RunMode::ao;
  std::vector<OmegaSpec> omegas = {OmegaSpec::from_ap_count()};
  std::string out_dir = "out";
  MpConfig mp;
  double outer_tol = 1e-4;
  int outer_max = 50;
  std::vector<std::pair<int, int>> timing_sizes = {{100, 40}, {200, 40}, {400, 40}};  // (L, M)
  int timing_realizations = 3;
  int workers = 1;

  void validate() const {
    if (name.empty()) throw std::invalid_argument("scenario: name must be non-empty");
    if (num_realizations < 1)
      throw std::invalid_argument("scenario: num_realizations must be >= 1");
    if (solvers.empty()) throw std::invalid_argument("scenario: solver set must be non-empty");
    std::set<std::string> seen;
    for (const auto& s : solvers) {
      if (s != "mp" && s != "gda" && s != "apg" && s != "oracle")
        throw std::invalid_argument("scenario: unknown solver '" + s + "'");
      if (!seen.insert(s).second)
        throw std::invalid_argument("scenario: duplicate solver '" + s + "'");
    }
    if (omegas.empty()) throw std::invalid_argument("scenario: omega list must be non-empty");
    if (workers < 1) throw std::invalid_argument("scenario: workers must be >= 1");
    if (timing_realizations < 1)
      throw std::invalid_argument("scenario: timing_realizations must be >= 1");
    for (const auto& [l, m] : timing_sizes)
      if (l < 1 || m < 1) throw std::invalid_argument("scenario: timing sizes must be positive");
    if (!(outer_tol > 0)) throw std::invalid_argument("scenario: outer_tol must be > 0");
    if (outer_max < 1) throw std::invalid_argument("scenario: outer_max must be >= 1");
  }
};

inline Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("scenario: expected a JSON object");
  static const std::set<std::string> known = {
      "name",      "network", "num_realizations", "solvers",          "mode",
      "omega",     "out_dir", "mp",               "outer_tol",        "outer_max",
      "timing_sizes", "timing_realizations", "workers"};
  require_known_keys(j, known, "scenario");
  Scenario s;
  s.name = j.value("name", s.name);
  if (j.contains("network")) s.network = network_config_from_json(j.at("network"));
  s.num_realizations = j.value("num_realizations", s.num_realizations);
  if (j.contains("solvers")) s.solvers = j.at("solvers").get<std::vector<std::string>>();
  if (j.contains("mode")) s.mode = run_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("omega")) {
    s.omegas.clear();
    const json& o = j.at("omega");
    if (o.is_array())
      for (const auto& item : o) s.omegas.push_back(OmegaSpec::from_json(item));
    else
      s.omegas.push_back(OmegaSpec::from_json(o));
  }
  s.out_dir = j.value("out_dir", s.out_dir);
  if (j.contains("mp")) s.mp = mp_config_from_json(j.at("mp"));
  s.outer_tol = j.value("outer_tol", s.outer_tol);
  s.outer_max = j.value("outer_max", s.outer_max);
  if (j.contains("timing_sizes")) {
    s.timing_sizes.clear();
    for (const auto& pair : j.at("timing_sizes")) {
      if (!pair.is_array() || pair.size() != 2)
        throw std::invalid_argument("scenario: timing_sizes entries must be [users, aps] pairs");
      s.timing_sizes.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    }
  }
  s.timing_realizations = j.value("timing_realizations", s.timing_realizations);
  s.workers = j.value("workers", s.workers);
  s.validate();
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  json omegas = json::array();
  for (const auto& o : s.omegas) omegas.push_back(o.to_json());
  json sizes = json::array();
  for (const auto& [l, m] : s.timing_sizes) sizes.push_back(json::array({l, m}));
  return json{{"name", s.name},
              {"network", network_config_to_json(s.network)},
              {"num_realizations", s.num_realizations},
              {"solvers", s.solvers},
              {"mode", run_mode_to_string(s.mode)},
              {"omega", omegas},
              {"out_dir", s.out_dir},
              {"mp", mp_config_to_json(s.mp)},
              {"outer_tol", s.outer_tol},
              {"outer_max", s.outer_max},
              {"timing_sizes", sizes},
              {"timing_realizations", s.timing_realizations},
              {"workers", s.workers}};
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  try {
    return scenario_from_json(load_json_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

inline json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline json ao_report_to_json(const AoReport& rep) {
  json filters = json::array();
  for (Eigen::Index l = 0; l < rep.q.cols(); ++l) filters.push_back(vector_to_json(rep.q.col(l)));
  return json{{"mode", rep.mode == SolveMode::ao ? "ao" : "power_only"},
              {"omega", rep.omega},
              {"outer_iterations", rep.outer_iterations},
              {"outer_trace", rep.outer_trace},
              {"inner_iterations", rep.inner_iterations},
              {"min_rate", rep.rates.size() ? rep.rates.minCoeff() : 0.0},
              {"rates", vector_to_json(rep.rates)},
              {"power", vector_to_json(rep.p)},
              {"filters", filters},
              {"filter_ms", rep.filter_ms},
              {"reduce_ms", rep.reduce_ms},
              {"power_ms", rep.power_ms}};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace cfmaxmin
