#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "savac/fem.hpp"
#include "savac/initial.hpp"
#include "savac/mesh.hpp"
#include "savac/noise.hpp"
#include "savac/potential.hpp"
#include "savac/schemes.hpp"

namespace savac {

/// Invalid experiment configuration; `key()` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct MeshSpec {
  double lx = 4.0;
  double ly = 4.0;
  std::size_t cells_x = 64;
  std::size_t cells_y = 64;

  bool operator==(const MeshSpec&) const = default;
};

struct ExperimentConfig {
  std::string preset;
  MeshSpec mesh;
  double epsilon = 0.04;
  double gamma = 1e-5;
  double alpha = 2.0;
  Distribution distribution = Distribution::Rademacher;
  int k_max = 10;
  int l_max = 10;
  double tau_min = 5e-4;
  std::vector<double> taus{5e-4, 1e-3, 2e-3, 4e-3};
  double horizon = 0.5;
  std::size_t n_paths = 16;
  std::uint64_t seed = 1;
  std::vector<double> checkpoints;
  std::vector<SchemeKind> schemes{SchemeKind::AugmentedSav, SchemeKind::StandardSav,
                                  SchemeKind::ImplicitNonlinear};
  EllipseDroplet initial;
  SolverOptions solver;
  NewtonOptions newton;
  std::size_t threads = 0;  // 0: hardware concurrency

  bool operator==(const ExperimentConfig&) const = default;

  PotentialParams potential() const { return {gamma, epsilon}; }

  /// n such that x = n * unit, or nullopt when x is not an integer multiple.
  static std::optional<std::size_t> multiple_of(double x, double unit) {
    const double q = x / unit;
    const double n = std::round(q);
    if (n < 1.0 || std::abs(q - n) > 1e-9 * std::max(1.0, n)) return std::nullopt;
    return static_cast<std::size_t>(n);
  }

  std::size_t fine_steps() const { return *multiple_of(horizon, tau_min); }
  std::size_t level(double tau) const { return *multiple_of(tau, tau_min); }

  /// Sorted checkpoint times, always including the horizon.
  std::vector<double> checkpoint_times() const {
    std::vector<double> t = checkpoints;
    t.push_back(horizon);
    std::sort(t.begin(), t.end());
    std::vector<double> out;
    for (double v : t) {
      if (out.empty() || std::abs(v - out.back()) > 1e-12 * std::max(1.0, v)) out.push_back(v);
    }
    return out;
  }

  std::vector<double> sorted_taus() const {
    std::vector<double> t = taus;
    std::sort(t.begin(), t.end());
    return t;
  }

  void validate() const {
    if (!(mesh.lx > 0.0) || !(mesh.ly > 0.0)) throw ConfigError("mesh", "side lengths must be positive");
    if (mesh.cells_x < 2 || mesh.cells_y < 2) throw ConfigError("mesh", "at least 2 cells per axis");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
    if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
    if (!(alpha >= 0.0)) throw ConfigError("alpha", "must be non-negative");
    if (k_max < 0 || l_max < 0) throw ConfigError("modes", "K_max and L_max must be >= 0");
    if (!(tau_min > 0.0)) throw ConfigError("tau_min", "must be positive");
    if (!(horizon > 0.0)) throw ConfigError("T", "must be positive");
    if (n_paths < 1) throw ConfigError("paths", "must be >= 1");
    if (schemes.empty()) throw ConfigError("schemes", "at least one scheme is required");
    if (taus.empty()) throw ConfigError("taus", "at least one time step is required");
    if (!multiple_of(horizon, tau_min)) {
      throw ConfigError("T", "horizon is not an integer multiple of tau_min");
    }
    auto sorted = sorted_taus();
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i] <= sorted[i - 1] * (1.0 + 1e-12)) throw ConfigError("taus", "duplicate time step");
    }
    for (std::size_t i = 0; i < taus.size(); ++i) {
      const std::string key = "taus[" + std::to_string(i) + "]";
      if (!multiple_of(taus[i], tau_min)) {
        throw ConfigError(key, "time step " + std::to_string(taus[i]) +
                                   " is not an integer multiple of tau_min");
      }
      if (!multiple_of(horizon, taus[i])) {
        throw ConfigError(key, "T / tau is not an integer for tau = " + std::to_string(taus[i]));
      }
    }
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const std::string key = "checkpoints[" + std::to_string(c) + "]";
      if (!(checkpoints[c] > 0.0) || checkpoints[c] > horizon * (1.0 + 1e-12)) {
        throw ConfigError(key, "checkpoint must lie in (0, T]");
      }
      for (double tau : taus) {
        if (!multiple_of(checkpoints[c], tau)) {
          throw ConfigError(key, "checkpoint is not a multiple of tau = " + std::to_string(tau));
        }
      }
    }
  }
};

struct EocEntry {
  double tau = 0.0;
  double error = 0.0;
  std::optional<double> rate;  // defined from the second row on
};

/// rate_i = log(e_i / e_{i-1}) / log(tau_i / tau_{i-1}) for consecutive pairs.
inline std::vector<std::pair<double, double>> eoc(
    const std::vector<std::pair<double, double>>& errors) {
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i].second > 0.0)) {
      throw std::invalid_argument("eoc: errors must be positive");
    }
    if (i > 0 && !(errors[i].first > errors[i - 1].first)) {
      throw std::invalid_argument("eoc: time steps must be strictly increasing");
    }
  }
  std::vector<std::pair<double, double>> rates;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const auto [t1, e1] = errors[i];
    const auto [t0, e0] = errors[i - 1];
    rates.emplace_back(t1, std::log(e1 / e0) / std::log(t1 / t0));
  }
  return rates;
}

inline std::vector<EocEntry> eoc_table(const std::vector<std::pair<double, double>>& errors) {
  std::vector<EocEntry> rows;
  for (const auto& [tau, e] : errors) rows.push_back({tau, e, std::nullopt});
  bool positive = std::all_of(errors.begin(), errors.end(), [](auto& p) { return p.second > 0.0; });
  if (positive && errors.size() > 1) {
    const auto rates = eoc(errors);
    for (std::size_t i = 0; i < rates.size(); ++i) rows[i + 1].rate = rates[i].second;
  }
  return rows;
}

/// sqrt( (1/P) sum_p ||a_p - b_p||_h^2 ), summed in path order.
inline double ensemble_rms(const std::vector<NodalField>& a, const std::vector<NodalField>& b,
                           const FemOperators& ops) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("ensemble_rms: path count mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw std::invalid_argument("ensemble_rms: empty ensemble");
  double sum = 0.0;
  NodalField diff(ops.node_count());
  for (std::size_t p = 0; p < a.size(); ++p) {
    require_same_size(a[p].size(), ops.node_count(), "ensemble_rms");
    require_same_size(b[p].size(), ops.node_count(), "ensemble_rms");
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a[p][i] - b[p][i];
    sum += inner_h(ops, diff, diff);
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

// Ensemble statistics for one (scheme, tau) pair.
struct LevelStats {
  SchemeKind scheme = SchemeKind::AugmentedSav;
  double tau = 0.0;
  std::size_t multiple = 1;
  std::vector<double> times;
  std::vector<double> mean_modified_energy;
  std::vector<double> mean_total_energy;
  std::vector<double> mean_sav_error;
  double mean_max_sav_error = 0.0;      // E[max_n |r^n - sqrt(E_h(phi^n))|]
  double xi_rms = 0.0;                  // sqrt(E[sum_n tau ||Xi^n||_h^2])
  std::vector<NodalField> expected_fields;  // one per checkpoint
  std::size_t newton_iterations_max = 0;
};

struct ErrorTable {
  SchemeKind scheme = SchemeKind::AugmentedSav;
  std::string reference;
  std::vector<EocEntry> rows;
};

struct PathFailure {
  std::size_t path = 0;
  SchemeKind scheme = SchemeKind::AugmentedSav;
  double tau = 0.0;
  std::size_t step = 0;
  std::string message;
};

struct EnsembleReport {
  std::vector<double> taus;
  std::vector<SchemeKind> schemes;
  std::vector<double> checkpoints;
  std::vector<LevelStats> levels;  // scheme-major, taus ascending
  std::vector<ErrorTable> self_convergence;
  std::vector<ErrorTable> comparison;
  std::size_t paths_completed = 0;
  std::vector<PathFailure> failures;

  const LevelStats& stats(SchemeKind s, double tau) const {
    for (const auto& l : levels) {
      if (l.scheme == s && std::abs(l.tau - tau) <= 1e-12 * tau) return l;
    }
    throw std::out_of_range("EnsembleReport: no statistics for " + std::string(to_string(s)));
  }
  const ErrorTable* self_table(SchemeKind s) const {
    for (const auto& t : self_convergence) if (t.scheme == s) return &t;
    return nullptr;
  }
  const ErrorTable* comparison_table(SchemeKind s) const {
    for (const auto& t : comparison) if (t.scheme == s) return &t;
    return nullptr;
  }
};

namespace detail {

struct PathTrack {
  std::vector<double> modified, total, sav_error;
  double max_sav_error = 0.0;
  double xi_sum = 0.0;
  std::vector<NodalField> checkpoint_fields;
  std::size_t newton_max = 0;
};

struct PathOutcome {
  std::vector<PathTrack> tracks;  // same layout as EnsembleReport::levels
  std::optional<PathFailure> failure;
};

// Shared read-only setup for all path workers.
struct EnsembleSetup {
  const ExperimentConfig& cfg;
  const Mesh& mesh;
  const FemOperators& ops;
  const SpectralBasis& basis;
  const std::vector<Integrator>& integrators;  // per tau level
  const std::vector<std::size_t>& multiples;
  const std::vector<double>& taus;
  const std::vector<std::vector<std::size_t>>& checkpoint_steps;  // per level
  const SavState& initial;
};

inline PathOutcome run_path(const EnsembleSetup& s, std::size_t path_index) {
  const auto& cfg = s.cfg;
  const std::size_t n_levels = s.taus.size();
  const std::size_t n_schemes = cfg.schemes.size();
  const std::size_t n_nodes = s.ops.node_count();
  const std::size_t n_fine = cfg.fine_steps();
  const PotentialParams pot = cfg.potential();
  const double e0 = s.initial.r * s.initial.r;

  PathOutcome out;
  out.tracks.resize(n_levels * n_schemes);
  std::vector<SavState> states(n_levels * n_schemes, s.initial);
  for (std::size_t k = 0; k < out.tracks.size(); ++k) {
    auto& t = out.tracks[k];
    const double m0 = modified_energy(pot, s.ops, s.initial.phi, s.initial.r);
    const double t0 = total_energy(pot, s.ops, s.initial.phi);
    t.modified.push_back(m0);
    t.total.push_back(t0);
    t.sav_error.push_back(std::abs(s.initial.r - std::sqrt(e0)));
    t.max_sav_error = t.sav_error.back();
  }

  const bool noisy = cfg.alpha != 0.0;
  NoisePath noise_path;
  if (noisy) {
    noise_path = sample_path(s.basis, n_fine, cfg.tau_min, cfg.distribution, cfg.seed, path_index);
  }
  NodalField fine(n_nodes, 0.0);
  std::vector<NodalField> acc(n_levels, NodalField(n_nodes, 0.0));
  std::vector<std::size_t> coarse_step(n_levels, 0), next_checkpoint(n_levels, 0);

  for (std::size_t n = 0; n < n_fine; ++n) {
    if (noisy) fine_increment(s.basis, noise_path, n, fine);
    for (std::size_t L = 0; L < n_levels; ++L) {
      if (noisy) {
        for (std::size_t i = 0; i < n_nodes; ++i) acc[L][i] += fine[i];
      }
      if ((n + 1) % s.multiples[L] != 0) continue;
      for (std::size_t sc = 0; sc < n_schemes; ++sc) {
        const std::size_t k = sc * n_levels + L;
        SavState& st = states[k];
        auto& track = out.tracks[k];
        try {
          const NoiseField nf = make_noise_field(st.phi, acc[L], cfg.alpha);
          StepResult res = s.integrators[L].step(cfg.schemes[sc], st, nf);
          track.modified.push_back(res.diag.modified_energy);
          track.total.push_back(res.diag.total_energy);
          track.sav_error.push_back(res.diag.sav_tracking_error);
          track.max_sav_error = std::max(track.max_sav_error, res.diag.sav_tracking_error);
          track.xi_sum += s.taus[L] * inner_h(s.ops, res.diag.xi_term, res.diag.xi_term);
          track.newton_max = std::max(track.newton_max, res.diag.newton_iterations);
          st = std::move(res.state);
        } catch (const NumericalError& e) {
          out.failure = PathFailure{path_index, cfg.schemes[sc], s.taus[L], coarse_step[L] + 1,
                                    e.what()};
          return out;
        }
      }
      ++coarse_step[L];
      const auto& cps = s.checkpoint_steps[L];
      if (next_checkpoint[L] < cps.size() && coarse_step[L] == cps[next_checkpoint[L]]) {
        for (std::size_t sc = 0; sc < n_schemes; ++sc) {
          const std::size_t k = sc * n_levels + L;
          out.tracks[k].checkpoint_fields.push_back(states[k].phi);
        }
        ++next_checkpoint[L];
      }
      std::fill(acc[L].begin(), acc[L].end(), 0.0);
    }
  }
  return out;
}

}  // namespace detail

using PathCallback = std::function<void(std::size_t path, bool ok)>;

/// Runs every configured scheme at every tau level on `n_paths` independent
/// sample paths. Each path draws one Wiener path on the tau_min grid and all
/// levels consume sums of its fine increments. The report is a deterministic
/// function of the configuration: paths run in parallel batches and are folded
/// into the statistics in path order.
inline EnsembleReport run_ensemble(const ExperimentConfig& cfg, const PathCallback& on_path = {}) {
  cfg.validate();
  const Mesh mesh(cfg.mesh.lx, cfg.mesh.ly, cfg.mesh.cells_x, cfg.mesh.cells_y);
  const FemOperators ops = assemble(mesh);
  const SpectralBasis basis(mesh, cfg.k_max, cfg.l_max);
  const PotentialParams pot = cfg.potential();
  const SavState initial =
      initial_state(pot, ops, ellipse_initial_field(mesh, cfg.initial, cfg.epsilon));

  EnsembleReport rep;
  rep.taus = cfg.sorted_taus();
  rep.schemes = cfg.schemes;
  rep.checkpoints = cfg.checkpoint_times();
  const std::size_t n_levels = rep.taus.size();
  const std::size_t n_schemes = rep.schemes.size();

  std::vector<Integrator> integrators;
  std::vector<std::size_t> multiples;
  std::vector<std::vector<std::size_t>> checkpoint_steps;
  for (double tau : rep.taus) {
    integrators.emplace_back(ops, pot, tau, cfg.solver, cfg.newton);
    multiples.push_back(cfg.level(tau));
    std::vector<std::size_t> steps;
    for (double t : rep.checkpoints) steps.push_back(*ExperimentConfig::multiple_of(t, tau));
    checkpoint_steps.push_back(std::move(steps));
  }
  const detail::EnsembleSetup setup{cfg,       mesh,   ops,          basis, integrators,
                                    multiples, rep.taus, checkpoint_steps, initial};

  rep.levels.resize(n_levels * n_schemes);
  for (std::size_t sc = 0; sc < n_schemes; ++sc) {
    for (std::size_t L = 0; L < n_levels; ++L) {
      auto& lv = rep.levels[sc * n_levels + L];
      lv.scheme = rep.schemes[sc];
      lv.tau = rep.taus[L];
      lv.multiple = multiples[L];
      const std::size_t steps = *ExperimentConfig::multiple_of(cfg.horizon, lv.tau);
      for (std::size_t k = 0; k <= steps; ++k) lv.times.push_back(static_cast<double>(k) * lv.tau);
      lv.mean_modified_energy.assign(steps + 1, 0.0);
      lv.mean_total_energy.assign(steps + 1, 0.0);
      lv.mean_sav_error.assign(steps + 1, 0.0);
      lv.expected_fields.assign(rep.checkpoints.size(), NodalField(ops.node_count(), 0.0));
    }
  }

  // Accumulators for the pathwise error tables: sum_p ||a_p - b_p||_h^2.
  auto scheme_index = [&](SchemeKind k) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < n_schemes; ++i) if (rep.schemes[i] == k) return i;
    return std::nullopt;
  };
  const auto implicit_idx = scheme_index(SchemeKind::ImplicitNonlinear);
  std::vector<double> self_sq(n_levels * n_schemes, 0.0), cmp_sq(n_levels * n_schemes, 0.0);
  std::vector<double> xi_sum(n_levels * n_schemes, 0.0);
  const std::size_t final_cp = rep.checkpoints.size() - 1;

  std::size_t threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::max<std::size_t>(1, std::min(threads, cfg.n_paths));

  NodalField diff(ops.node_count());
  auto fold = [&](const detail::PathOutcome& po) {
    for (std::size_t k = 0; k < po.tracks.size(); ++k) {
      const auto& t = po.tracks[k];
      auto& lv = rep.levels[k];
      for (std::size_t i = 0; i < t.modified.size(); ++i) {
        lv.mean_modified_energy[i] += t.modified[i];
        lv.mean_total_energy[i] += t.total[i];
        lv.mean_sav_error[i] += t.sav_error[i];
      }
      lv.mean_max_sav_error += t.max_sav_error;
      xi_sum[k] += t.xi_sum;
      lv.newton_iterations_max = std::max(lv.newton_iterations_max, t.newton_max);
      for (std::size_t c = 0; c < t.checkpoint_fields.size(); ++c) {
        axpy(1.0, t.checkpoint_fields[c], lv.expected_fields[c]);
      }
    }
    auto sq_dist = [&](const NodalField& a, const NodalField& b) {
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a[i] - b[i];
      return inner_h(ops, diff, diff);
    };
    for (std::size_t sc = 0; sc < n_schemes; ++sc) {
      const auto& ref = po.tracks[sc * n_levels].checkpoint_fields[final_cp];
      for (std::size_t L = 0; L < n_levels; ++L) {
        const auto& f = po.tracks[sc * n_levels + L].checkpoint_fields[final_cp];
        self_sq[sc * n_levels + L] += sq_dist(f, ref);
        if (implicit_idx) {
          const auto& g = po.tracks[*implicit_idx * n_levels + L].checkpoint_fields[final_cp];
          cmp_sq[sc * n_levels + L] += sq_dist(f, g);
        }
      }
    }
  };

  for (std::size_t first = 0; first < cfg.n_paths; first += threads) {
    const std::size_t last = std::min(cfg.n_paths, first + threads);
    std::vector<detail::PathOutcome> batch(last - first);
    std::vector<std::exception_ptr> errors(batch.size());
    auto work = [&](std::size_t j) {
      try {
        batch[j] = detail::run_path(setup, first + j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    };
    if (batch.size() == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t j = 0; j < batch.size(); ++j) pool.emplace_back(work, j);
      for (auto& th : pool) th.join();
    }
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (errors[j]) std::rethrow_exception(errors[j]);
      const bool ok = !batch[j].failure;
      if (ok) {
        fold(batch[j]);
        ++rep.paths_completed;
      } else {
        rep.failures.push_back(*batch[j].failure);
      }
      if (on_path) on_path(first + j, ok);
    }
  }

  const double P = static_cast<double>(rep.paths_completed);
  if (rep.paths_completed > 0) {
    for (std::size_t k = 0; k < rep.levels.size(); ++k) {
      auto& lv = rep.levels[k];
      for (auto* series : {&lv.mean_modified_energy, &lv.mean_total_energy, &lv.mean_sav_error}) {
        for (double& v : *series) v /= P;
      }
      lv.mean_max_sav_error /= P;
      lv.xi_rms = std::sqrt(xi_sum[k] / P);
      for (auto& f : lv.expected_fields) for (double& v : f) v /= P;
    }
    for (std::size_t sc = 0; sc < n_schemes; ++sc) {
      if (n_levels > 1) {
        std::vector<std::pair<double, double>> errs;
        for (std::size_t L = 1; L < n_levels; ++L) {
          errs.emplace_back(rep.taus[L], std::sqrt(self_sq[sc * n_levels + L] / P));
        }
        std::string ref = "self@" + std::to_string(rep.taus[0]);
        rep.self_convergence.push_back({rep.schemes[sc], ref, eoc_table(errs)});
      }
      if (implicit_idx && sc != *implicit_idx) {
        std::vector<std::pair<double, double>> errs;
        for (std::size_t L = 0; L < n_levels; ++L) {
          errs.emplace_back(rep.taus[L], std::sqrt(cmp_sq[sc * n_levels + L] / P));
        }
        rep.comparison.push_back({rep.schemes[sc], "implicit", eoc_table(errs)});
      }
    }
  }
  return rep;
}

}  // namespace savac
