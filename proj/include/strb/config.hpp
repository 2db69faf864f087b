// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "strb/common.hpp"
#include "strb/greedy.hpp"
#include "strb/problem.hpp"
#include "strb/sampling.hpp"

namespace strb {

/// key = value configuration text; '#' starts a comment. Unknown keys are
/// rejected so typos fail loudly. Schema documented in the README.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    return parse_stream(is, path.string());
  }

  static ConfigMap parse_stream(std::istream& is, const std::string& origin) {
    ConfigMap map;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
      if (map.values_.count(key))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                          key + "'");
      map.values_[key] = value;
    }
    return map;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert({key, true});
    return it->second;
  }

  double get_double(const std::string& key, double fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert({key, true});
    return parse_number<double>(key, it->second);
  }

  int get_int(const std::string& key, int fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert({key, true});
    return parse_number<int>(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert({key, true});
    return parse_number<std::uint64_t>(key, it->second);
  }

  void reject_unused() const {
    for (const auto& kv : values_)
      if (!used_.count(kv.first))
        throw ConfigError("unknown config key '" + kv.first + "'");
  }

 private:
  template <class T>
  static T parse_number(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    T out;
    ss >> out;
    if (ss.fail() || !ss.eof())
      throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    return out;
  }

  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, bool> used_;
};

/// Fully resolved run configuration. Precedence: profile defaults, then the
/// config file, then command-line overrides applied by the CLI.
struct RunConfig {
  ProblemSpec problem;
  int train_size = 500;
  std::uint64_t train_seed = 20260801;
  int validation_size = 20;
  std::uint64_t validation_seed = 977;
  double eps_tol = 1e-8;
  int L1 = 1;
  int L2 = 2;
  int L_max = 20;
  EstimatorKind selection = EstimatorKind::EtaCAbs;
  EstimatorKind certification = EstimatorKind::EtaCAbs;
  double solver_tol = 1e-10;
  std::string saddle_method = "schur";  // schur | direct
  int threads = 0;

  int max_rounds() const { return (L_max - 1 + L1 - 1) / L1; }

  SaddleOptions saddle_options() const {
    SaddleOptions opts;
    opts.tol = solver_tol;
    opts.cg_target = std::min(1e-13, solver_tol);
    if (saddle_method == "direct")
      opts.method = SaddleMethod::Direct;
    else if (saddle_method == "schur")
      opts.method = SaddleMethod::SchurCg;
    else
      throw ConfigError("saddle_method must be 'schur' or 'direct'");
    return opts;
  }
};

inline RunConfig profile_defaults(const std::string& profile) {
  RunConfig cfg;
  if (profile == "desk") {
    cfg.problem.vertices_per_side = 13;
    cfg.problem.time_elements = 30;
    cfg.train_size = 500;
    cfg.L_max = 20;
  } else if (profile == "paper") {
    cfg.problem.vertices_per_side = 22;
    cfg.problem.time_elements = 60;
    cfg.train_size = 5000;
    cfg.L_max = 20;
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected desk or paper)");
  }
  return cfg;
}

inline RunConfig apply_config(RunConfig cfg, ConfigMap& map) {
  cfg.problem.kind = map.get_string("problem", cfg.problem.kind);
  cfg.problem.vertices_per_side =
      map.get_int("vertices_per_side", cfg.problem.vertices_per_side);
  cfg.problem.time_elements = map.get_int("time_elements", cfg.problem.time_elements);
  cfg.problem.final_time = map.get_double("final_time", cfg.problem.final_time);
  cfg.problem.diffusivity_min =
      map.get_double("diffusivity_min", cfg.problem.diffusivity_min);
  cfg.problem.diffusivity_max =
      map.get_double("diffusivity_max", cfg.problem.diffusivity_max);
  cfg.problem.load_min = map.get_double("load_min", cfg.problem.load_min);
  cfg.problem.load_max = map.get_double("load_max", cfg.problem.load_max);
  cfg.train_size = map.get_int("train_size", cfg.train_size);
  cfg.train_seed = map.get_u64("train_seed", cfg.train_seed);
  cfg.validation_size = map.get_int("validation_size", cfg.validation_size);
  cfg.validation_seed = map.get_u64("validation_seed", cfg.validation_seed);
  cfg.eps_tol = map.get_double("eps_tol", cfg.eps_tol);
  cfg.L1 = map.get_int("L1", cfg.L1);
  cfg.L2 = map.get_int("L2", cfg.L2);
  cfg.L_max = map.get_int("L_max", cfg.L_max);
  cfg.selection =
      estimator_kind_from_string(map.get_string("selection", to_string(cfg.selection)));
  cfg.certification = estimator_kind_from_string(
      map.get_string("certification", to_string(cfg.certification)));
  cfg.solver_tol = map.get_double("solver_tol", cfg.solver_tol);
  cfg.saddle_method = map.get_string("saddle_method", cfg.saddle_method);
  cfg.threads = map.get_int("threads", cfg.threads);
  map.reject_unused();
  if (cfg.train_size < 1) throw ConfigError("train_size must be positive");
  if (cfg.L1 < 1 || cfg.L2 < 1) throw ConfigError("L1 and L2 must be positive");
  if (cfg.L_max < 1) throw ConfigError("L_max must be positive");
  if (cfg.eps_tol <= 0) throw ConfigError("eps_tol must be positive");
  return cfg;
}

}  // namespace strb
