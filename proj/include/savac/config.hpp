#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "savac/montecarlo.hpp"

namespace savac {

// Experiment presets.
//   moderate: alpha = 2, K = L = 10, tau_min = 5e-4, T = 4, Rademacher
//   strong:   alpha = 10, K = L = 3, tau_min = 5e-5, T = 2, Rademacher
//   desk:     the moderate noise model on a 64 x 64 cell mesh, T = 0.5,
//             16 paths; sized for a workstation.
inline ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.mesh = {4.0, 4.0, 256, 256};
  c.epsilon = 0.04;
  c.gamma = 1e-5;
  c.distribution = Distribution::Rademacher;
  if (name == "moderate") {
    c.alpha = 2.0;
    c.k_max = c.l_max = 10;
    c.tau_min = 5e-4;
    c.taus = {5e-4, 1e-3, 2e-3, 4e-3, 1e-2, 2e-2};
    c.horizon = 4.0;
    c.n_paths = 350;
    c.checkpoints = {2.0};
  } else if (name == "strong") {
    c.alpha = 10.0;
    c.k_max = c.l_max = 3;
    c.tau_min = 5e-5;
    c.taus = {5e-5, 1e-4, 2e-4, 4e-4, 1e-3, 2e-3};
    c.horizon = 2.0;
    c.n_paths = 350;
    c.checkpoints = {1.0};
  } else if (name == "desk") {
    c.mesh = {4.0, 4.0, 64, 64};
    c.alpha = 2.0;
    c.k_max = c.l_max = 10;
    c.tau_min = 5e-4;
    c.taus = {5e-4, 1e-3, 2e-3, 4e-3};
    c.horizon = 0.5;
    c.n_paths = 16;
    c.checkpoints = {0.2};
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "' (expected moderate|strong|desk)");
  }
  return c;
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!keys.count(k)) throw ConfigError(path.empty() ? k : path + "." + k, "unknown key");
  }
}

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("invalid value: ") + e.what());
  }
}

inline const json& require_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path, "expected an object");
  return v;
}

}  // namespace detail

/// Builds a configuration from a JSON document: the optional "preset" is
/// applied first and every other key overrides it.
inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
  using detail::get_as;
  using detail::require_object;
  require_object(doc, "");
  if (doc.empty()) throw ConfigError("", "empty configuration");
  detail::reject_unknown(doc, "",
                         {"preset", "mesh", "epsilon", "gamma", "alpha", "distribution",
                          "K_max", "L_max", "tau_min", "taus", "T", "paths", "seed",
                          "checkpoints", "schemes", "initial", "solver", "newton", "threads"});

  ExperimentConfig c;
  if (doc.contains("preset")) c = preset_config(get_as<std::string>(doc, "preset", "preset"));

  if (doc.contains("mesh")) {
    const auto& m = require_object(doc.at("mesh"), "mesh");
    detail::reject_unknown(m, "mesh", {"Lx", "Ly", "cells_x", "cells_y"});
    if (m.contains("Lx")) c.mesh.lx = get_as<double>(m, "Lx", "mesh.Lx");
    if (m.contains("Ly")) c.mesh.ly = get_as<double>(m, "Ly", "mesh.Ly");
    if (m.contains("cells_x")) c.mesh.cells_x = get_as<std::size_t>(m, "cells_x", "mesh.cells_x");
    if (m.contains("cells_y")) c.mesh.cells_y = get_as<std::size_t>(m, "cells_y", "mesh.cells_y");
  }
  if (doc.contains("epsilon")) c.epsilon = get_as<double>(doc, "epsilon", "epsilon");
  if (doc.contains("gamma")) c.gamma = get_as<double>(doc, "gamma", "gamma");
  if (doc.contains("alpha")) c.alpha = get_as<double>(doc, "alpha", "alpha");
  if (doc.contains("distribution")) {
    try {
      c.distribution = parse_distribution(get_as<std::string>(doc, "distribution", "distribution"));
    } catch (const std::invalid_argument& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      throw ConfigError("distribution", e.what());
    }
  }
  if (doc.contains("K_max")) c.k_max = get_as<int>(doc, "K_max", "K_max");
  if (doc.contains("L_max")) c.l_max = get_as<int>(doc, "L_max", "L_max");
  if (doc.contains("tau_min")) c.tau_min = get_as<double>(doc, "tau_min", "tau_min");
  if (doc.contains("taus")) c.taus = get_as<std::vector<double>>(doc, "taus", "taus");
  if (doc.contains("T")) c.horizon = get_as<double>(doc, "T", "T");
  if (doc.contains("paths")) c.n_paths = get_as<std::size_t>(doc, "paths", "paths");
  if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc, "seed", "seed");
  if (doc.contains("checkpoints")) {
    c.checkpoints = get_as<std::vector<double>>(doc, "checkpoints", "checkpoints");
  }
  if (doc.contains("schemes")) {
    const auto names = get_as<std::vector<std::string>>(doc, "schemes", "schemes");
    c.schemes.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        c.schemes.push_back(parse_scheme(names[i]));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("schemes[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  if (doc.contains("initial")) {
    const auto& m = require_object(doc.at("initial"), "initial");
    detail::reject_unknown(m, "initial", {"semi_axis_x", "semi_axis_y"});
    if (m.contains("semi_axis_x")) c.initial.semi_axis_x = get_as<double>(m, "semi_axis_x", "initial.semi_axis_x");
    if (m.contains("semi_axis_y")) c.initial.semi_axis_y = get_as<double>(m, "semi_axis_y", "initial.semi_axis_y");
  }
  if (doc.contains("solver")) {
    const auto& m = require_object(doc.at("solver"), "solver");
    detail::reject_unknown(m, "solver", {"tol", "max_iter_factor"});
    if (m.contains("tol")) c.solver.tol = get_as<double>(m, "tol", "solver.tol");
    if (m.contains("max_iter_factor")) c.solver.max_iter_factor = get_as<double>(m, "max_iter_factor", "solver.max_iter_factor");
  }
  if (doc.contains("newton")) {
    const auto& m = require_object(doc.at("newton"), "newton");
    detail::reject_unknown(m, "newton", {"tol", "max_iter", "max_halvings"});
    if (m.contains("tol")) c.newton.tol = get_as<double>(m, "tol", "newton.tol");
    if (m.contains("max_iter")) c.newton.max_iter = get_as<std::size_t>(m, "max_iter", "newton.max_iter");
    if (m.contains("max_halvings")) c.newton.max_halvings = get_as<int>(m, "max_halvings", "newton.max_halvings");
  }
  if (doc.contains("threads")) c.threads = get_as<std::size_t>(doc, "threads", "threads");

  c.validate();
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed configuration: ") + e.what());
  }
  return config_from_json(doc);
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

/// Full configuration echo; config_from_json(config_to_json(c)) == c.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  if (!c.preset.empty()) j["preset"] = c.preset;
  j["mesh"] = {{"Lx", c.mesh.lx}, {"Ly", c.mesh.ly}, {"cells_x", c.mesh.cells_x},
               {"cells_y", c.mesh.cells_y}};
  j["epsilon"] = c.epsilon;
  j["gamma"] = c.gamma;
  j["alpha"] = c.alpha;
  j["distribution"] = to_string(c.distribution);
  j["K_max"] = c.k_max;
  j["L_max"] = c.l_max;
  j["tau_min"] = c.tau_min;
  j["taus"] = c.taus;
  j["T"] = c.horizon;
  j["paths"] = c.n_paths;
  j["seed"] = c.seed;
  j["checkpoints"] = c.checkpoints;
  std::vector<std::string> names;
  for (auto s : c.schemes) names.emplace_back(to_string(s));
  j["schemes"] = names;
  j["initial"] = {{"semi_axis_x", c.initial.semi_axis_x}, {"semi_axis_y", c.initial.semi_axis_y}};
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter_factor", c.solver.max_iter_factor}};
  j["newton"] = {{"tol", c.newton.tol},
                 {"max_iter", c.newton.max_iter},
                 {"max_halvings", c.newton.max_halvings}};
  j["threads"] = c.threads;
  return j;
}

}  // namespace savac
