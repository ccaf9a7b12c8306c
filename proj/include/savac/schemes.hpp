#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "savac/fem.hpp"
#include "savac/linsolve.hpp"
#include "savac/noise.hpp"
#include "savac/potential.hpp"

namespace savac {

enum class SchemeKind { AugmentedSav, StandardSav, ImplicitNonlinear };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::AugmentedSav: return "augmented_sav";
    case SchemeKind::StandardSav: return "standard_sav";
    case SchemeKind::ImplicitNonlinear: return "implicit";
  }
  return "unknown";
}

inline SchemeKind parse_scheme(const std::string& s) {
  if (s == "augmented_sav") return SchemeKind::AugmentedSav;
  if (s == "standard_sav") return SchemeKind::StandardSav;
  if (s == "implicit") return SchemeKind::ImplicitNonlinear;
  throw std::invalid_argument("unknown scheme '" + s +
                              "' (expected augmented_sav|standard_sav|implicit)");
}

struct SavState {
  NodalField phi;
  double r = 0.0;
  std::size_t time_index = 0;
};

/// phi^0 together with r^0 = sqrt(E_h(phi^0)).
inline SavState initial_state(const PotentialParams& params, const FemOperators& ops,
                              NodalField phi0) {
  const double e = discrete_energy(params, ops, phi0);
  return {std::move(phi0), std::sqrt(e), 0};
}

// Stochastic forcing for one step: the raw increment dW and
// Phi_h(phi^{n-1}) dW evaluated at the previous state.
struct NoiseField {
  NodalField increment;
  NodalField forcing;

  static NoiseField zero(std::size_t n) { return {NodalField(n, 0.0), NodalField(n, 0.0)}; }
};

inline NoiseField make_noise_field(std::span<const double> phi_prev, NodalField increment,
                                   double alpha) {
  NodalField forcing = apply_phi_h(phi_prev, increment, alpha);
  return {std::move(increment), std::move(forcing)};
}

struct StepDiagnostics {
  NodalField mu;
  NodalField xi_term;
  double modified_energy = 0.0;
  double sav_tracking_error = 0.0;
  double total_energy = 0.0;
  double residual = 0.0;  // relative algebraic residual of the phi equation
  std::size_t newton_iterations = 0;
};

struct StepResult {
  SavState state;
  StepDiagnostics diag;
};

struct NewtonOptions {
  double tol = 1e-10;
  std::size_t max_iter = 25;
  int max_halvings = 4;

  bool operator==(const NewtonOptions&) const = default;
};

/// epsilon/2 ||grad phi||^2 + r^2
inline double modified_energy(const PotentialParams& p, const FemOperators& ops,
                              std::span<const double> phi, double r) {
  return 0.5 * p.epsilon * std::max(0.0, ops.stiffness.quadratic_form(phi)) + r * r;
}

namespace detail {

struct SavCoefficients {
  double sqrt_energy = 0.0;
  double beta = 0.0;  // (F'(phi^{n-1})/eps, Phi_h dW)_h
  NodalField fprime;  // F'(phi^{n-1}) / eps
  NodalField fsecond; // F''(phi^{n-1}) / eps
};

inline SavCoefficients sav_coefficients(const FemOperators& ops, const PotentialParams& p,
                                        std::span<const double> phi_prev,
                                        std::span<const double> forcing) {
  SavCoefficients c;
  const double e = discrete_energy(p, ops, phi_prev);
  if (!(e > 0.0) || !std::isfinite(e)) {
    throw NumericalError("SAV step: E_h(phi^{n-1}) is not a positive finite number", e);
  }
  c.sqrt_energy = std::sqrt(e);
  c.fprime = nodal_apply([&](double x) { return Fp(p, x) / p.epsilon; }, phi_prev);
  c.fsecond = nodal_apply([&](double x) { return Fpp(p, x) / p.epsilon; }, phi_prev);
  c.beta = inner_h(ops, c.fprime, forcing);
  return c;
}

// Nodal coefficient of r^n in the chemical potential:
//   F'/S - [aug] beta F' / (4 S^3) + [aug] F'' dW_Phi / (2 S).
inline NodalField r_coefficient(const SavCoefficients& c, std::span<const double> forcing,
                                bool augmented) {
  const double s = c.sqrt_energy;
  NodalField v(c.fprime.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = c.fprime[i] / s;
    if (augmented) {
      v[i] += -c.beta * c.fprime[i] / (4.0 * s * s * s) + c.fsecond[i] * forcing[i] / (2.0 * s);
    }
  }
  return v;
}

inline double implicit_nonlinearity(double x, double x_prev) {
  return 0.5 * (x * x - 1.0) * (x + x_prev);
}

inline double implicit_nonlinearity_derivative(double x, double x_prev) {
  return x * (x + x_prev) + 0.5 * (x * x - 1.0);
}

}  // namespace detail

/// mu_h^n and Xi_h^n for the step (phi^{n-1}, r^{n-1}) -> (phi^n, r^n).
/// For the implicit scheme mu uses the nonlinear potential term and Xi = 0.
inline std::pair<NodalField, NodalField> chemical_potential(
    const FemOperators& ops, const PotentialParams& p, const SavState& prev,
    std::span<const double> phi_new, double r_new, const NoiseField& noise,
    SchemeKind kind = SchemeKind::AugmentedSav) {
  const std::size_t n = ops.node_count();
  require_same_size(phi_new.size(), n, "chemical_potential");
  require_same_size(prev.phi.size(), n, "chemical_potential");
  NodalField mu = discrete_laplacian(ops, phi_new);
  for (double& v : mu) v *= -p.epsilon;
  NodalField xi(n, 0.0);
  if (kind == SchemeKind::ImplicitNonlinear) {
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] += detail::implicit_nonlinearity(phi_new[i], prev.phi[i]) / p.epsilon;
    }
    return {std::move(mu), std::move(xi)};
  }
  const auto c = detail::sav_coefficients(ops, p, prev.phi, noise.forcing);
  const double s = c.sqrt_energy;
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == SchemeKind::AugmentedSav) {
      xi[i] = -r_new * c.beta / (4.0 * s * s * s) * c.fprime[i] +
              r_new / (2.0 * s) * c.fsecond[i] * noise.forcing[i];
    }
    mu[i] += r_new / s * c.fprime[i] + xi[i];
  }
  return {std::move(mu), std::move(xi)};
}

/// Left side minus right side of the modified-energy inequality:
///   E_mod^{n-1} - (E_mod^n + eps/2 ||grad(phi^n - phi^{n-1})||^2
///                  + |r^n - r^{n-1}|^2 + tau ||mu^n||_h^2).
/// Non-negative for noise-free SAV steps.
inline double energy_dissipation_slack(const FemOperators& ops, const PotentialParams& p,
                                       const SavState& prev, const StepResult& step,
                                       double tau) {
  NodalField dphi(prev.phi.size());
  for (std::size_t i = 0; i < dphi.size(); ++i) dphi[i] = step.state.phi[i] - prev.phi[i];
  const double dr = step.state.r - prev.r;
  const double mu2 = inner_h(ops, step.diag.mu, step.diag.mu);
  const double lhs = modified_energy(p, ops, step.state.phi, step.state.r) +
                     0.5 * p.epsilon * ops.stiffness.quadratic_form(dphi) + dr * dr +
                     tau * mu2;
  return modified_energy(p, ops, prev.phi, prev.r) - lhs;
}

// One-step integrators for a fixed time step. The SPD base operator
// M_L + tau eps K is assembled once and shared by all steps.
class Integrator {
 public:
  Integrator(const FemOperators& ops, PotentialParams params, double tau,
             SolverOptions solver = {}, NewtonOptions newton = {})
      : ops_(&ops), params_(params), tau_(tau), solver_(solver), newton_(newton) {
    params_.validate();
    if (!(tau > 0.0)) throw std::invalid_argument("Integrator: tau must be positive");
    if (!(newton.tol > 0.0) || newton.max_iter < 1) {
      throw std::invalid_argument("Integrator: Newton tol must be > 0 and max_iter >= 1");
    }
    base_ = SpdSystem(ops.stiffness.scaled_plus_diagonal(tau * params_.epsilon, ops.lumped_mass),
                      solver_);
  }

  double tau() const { return tau_; }
  const PotentialParams& params() const { return params_; }
  const SpdSystem& base_system() const { return base_; }

  StepResult step(SchemeKind kind, const SavState& s, const NoiseField& noise) const {
    switch (kind) {
      case SchemeKind::AugmentedSav: return sav_step(s, noise, true);
      case SchemeKind::StandardSav: return sav_step(s, noise, false);
      case SchemeKind::ImplicitNonlinear: return implicit_step(s, noise);
    }
    throw std::logic_error("Integrator: unknown scheme");
  }

  StepResult augmented_sav_step(const SavState& s, const NoiseField& noise) const {
    return sav_step(s, noise, true);
  }
  StepResult standard_sav_step(const SavState& s, const NoiseField& noise) const {
    return sav_step(s, noise, false);
  }

  // Linear SAV step. With the r-coefficient vector w_i = m_i v_i, the r update
  // reads r^n = r^{n-1} + w.(phi^n - phi^{n-1}) / 2, and substituting it into
  // the phi equation gives
  //   (M_L + tau eps K + (tau/2) w w^T) phi^n = M_L (phi^{n-1} + Phi dW)
  //                                            - tau (r^{n-1} - w.phi^{n-1}/2) w.
  StepResult sav_step(const SavState& s, const NoiseField& noise, bool augmented) const {
    const FemOperators& ops = *ops_;
    const std::size_t n = ops.node_count();
    check_inputs(s, noise);

    const auto c = detail::sav_coefficients(ops, params_, s.phi, noise.forcing);
    const NodalField v = detail::r_coefficient(c, noise.forcing, augmented);
    const Vector w = mass_times(ops, v);

    const double shift = s.r - 0.5 * dot(w, s.phi);
    Vector rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] = ops.lumped_mass[i] * (s.phi[i] + noise.forcing[i]) - tau_ * shift * w[i];
    }
    NodalField phi = rank_one_solve(base_, w, w, 0.5 * tau_, rhs);

    double dphi_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) dphi_w += w[i] * (phi[i] - s.phi[i]);
    const double r = s.r + 0.5 * dphi_w;

    // Residual of the phi equation against every basis function.
    Vector res = ops.stiffness.multiply(phi);
    for (std::size_t i = 0; i < n; ++i) {
      res[i] = ops.lumped_mass[i] * (phi[i] - s.phi[i] - noise.forcing[i]) +
               tau_ * params_.epsilon * res[i] + tau_ * r * w[i];
    }
    const double scale = std::max({norm2(rhs), norm2(mass_times(ops, s.phi)), 1e-300});
    const double rel = norm2(res) / scale;
    if (!(rel <= 1e-9)) {
      throw NumericalError("SAV step: phi-equation residual " + std::to_string(rel) +
                               " exceeds 1e-9",
                           rel);
    }

    StepResult out{{std::move(phi), r, s.time_index + 1}, {}};
    out.diag.residual = rel;
    fill_diagnostics(s, noise, augmented ? SchemeKind::AugmentedSav : SchemeKind::StandardSav,
                     out);
    return out;
  }

  /// R(phi) = M_L(phi - phi_prev - Phi dW) + tau eps K phi
  ///          + (tau/eps) M_L [ (phi^2 - 1)(phi + phi_prev) / 2 ]
  Vector implicit_residual(std::span<const double> phi, std::span<const double> phi_prev,
                           std::span<const double> forcing) const {
    const FemOperators& ops = *ops_;
    Vector res = ops.stiffness.multiply(phi);
    const double k = tau_ / params_.epsilon;
    for (std::size_t i = 0; i < res.size(); ++i) {
      res[i] = tau_ * params_.epsilon * res[i] +
               ops.lumped_mass[i] * (phi[i] - phi_prev[i] - forcing[i] +
                                     k * detail::implicit_nonlinearity(phi[i], phi_prev[i]));
    }
    return res;
  }

  /// dR/dphi at phi (symmetric).
  CsrMatrix implicit_jacobian(std::span<const double> phi,
                              std::span<const double> phi_prev) const {
    const FemOperators& ops = *ops_;
    const double k = tau_ / params_.epsilon;
    Vector d(phi.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = ops.lumped_mass[i] *
             (1.0 + k * detail::implicit_nonlinearity_derivative(phi[i], phi_prev[i]));
    }
    return ops.stiffness.scaled_plus_diagonal(tau_ * params_.epsilon, d);
  }

  StepResult implicit_step(const SavState& s, const NoiseField& noise) const {
    check_inputs(s, noise);
    NodalField phi = s.phi;
    Vector res = implicit_residual(phi, s.phi, noise.forcing);
    double rnorm = residual_norm(res);
    std::size_t it = 0;
    while (rnorm > newton_.tol) {
      if (it == newton_.max_iter) {
        throw NumericalError("Newton: no convergence after " + std::to_string(it) +
                                 " iterations (residual " + std::to_string(rnorm) + ")",
                             rnorm);
      }
      const SpdSystem jac(implicit_jacobian(phi, s.phi), solver_);
      for (double& v : res) v = -v;
      const Vector delta = spd_solve(jac, res);

      double step = 1.0;
      NodalField trial(phi.size());
      Vector trial_res;
      double trial_norm = 0.0;
      for (int halvings = 0;; ++halvings) {
        for (std::size_t i = 0; i < phi.size(); ++i) trial[i] = phi[i] + step * delta[i];
        trial_res = implicit_residual(trial, s.phi, noise.forcing);
        trial_norm = residual_norm(trial_res);
        if (trial_norm <= rnorm || halvings == newton_.max_halvings) break;
        step *= 0.5;
      }
      if (!std::isfinite(trial_norm)) {
        throw NumericalError("Newton: non-finite residual", trial_norm);
      }
      phi = std::move(trial);
      res = std::move(trial_res);
      rnorm = trial_norm;
      ++it;
    }
    const double r = std::sqrt(discrete_energy(params_, *ops_, phi));
    StepResult out{{std::move(phi), r, s.time_index + 1}, {}};
    out.diag.residual = rnorm;
    out.diag.newton_iterations = it;
    fill_diagnostics(s, noise, SchemeKind::ImplicitNonlinear, out);
    return out;
  }

 private:
  // ||M_L^{-1} R||_h
  double residual_norm(std::span<const double> res) const {
    double s = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) s += res[i] * res[i] / ops_->lumped_mass[i];
    return std::sqrt(s);
  }

  void check_inputs(const SavState& s, const NoiseField& noise) const {
    const std::size_t n = ops_->node_count();
    require_same_size(s.phi.size(), n, "time step");
    require_same_size(noise.forcing.size(), n, "time step");
    if (!std::isfinite(s.r)) throw NumericalError("time step: non-finite r", s.r);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.phi[i]) || !std::isfinite(noise.forcing[i])) {
        throw NumericalError("time step: non-finite input at node " + std::to_string(i), 0.0);
      }
    }
  }

  void fill_diagnostics(const SavState& prev, const NoiseField& noise, SchemeKind kind,
                        StepResult& out) const {
    auto [mu, xi] = chemical_potential(*ops_, params_, prev, out.state.phi, out.state.r,
                                       noise, kind);
    out.diag.mu = std::move(mu);
    out.diag.xi_term = std::move(xi);
    out.diag.modified_energy = modified_energy(params_, *ops_, out.state.phi, out.state.r);
    const double e = discrete_energy(params_, *ops_, out.state.phi);
    out.diag.sav_tracking_error = std::abs(out.state.r - std::sqrt(e));
    out.diag.total_energy = total_energy(params_, *ops_, out.state.phi);
  }

  const FemOperators* ops_;
  PotentialParams params_;
  double tau_;
  SolverOptions solver_;
  NewtonOptions newton_;
  SpdSystem base_;
};

inline StepResult augmented_sav_step(const FemOperators& ops, const PotentialParams& p,
                                     const SavState& s, const NoiseField& noise, double tau) {
  return Integrator(ops, p, tau).augmented_sav_step(s, noise);
}

inline StepResult standard_sav_step(const FemOperators& ops, const PotentialParams& p,
                                    const SavState& s, const NoiseField& noise, double tau) {
  return Integrator(ops, p, tau).standard_sav_step(s, noise);
}

inline StepResult implicit_step(const FemOperators& ops, const PotentialParams& p,
                                const SavState& s, const NoiseField& noise, double tau,
                                const NewtonOptions& newton = {}) {
  return Integrator(ops, p, tau, {}, newton).implicit_step(s, noise);
}

}  // namespace savac
