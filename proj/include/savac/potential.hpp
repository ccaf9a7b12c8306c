#pragma once

#include <span>
#include <stdexcept>

#include "savac/fem.hpp"

namespace savac {

// Shifted polynomial double well F(x) = (x^2 - 1)^2 / 4 + gamma.
//
// All scheme-level quantities use F / epsilon and epsilon * (stiffness form),
// so E_h carries the 1/epsilon factor.
struct PotentialParams {
  double gamma = 1e-5;
  double epsilon = 1.0;

  void validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("potential: gamma must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("potential: epsilon must be positive");
  }
};

inline double F(const PotentialParams& p, double x) {
  const double w = x * x - 1.0;
  return 0.25 * w * w + p.gamma;
}

inline double Fp(const PotentialParams&, double x) { return x * x * x - x; }

inline double Fpp(const PotentialParams&, double x) { return 3.0 * x * x - 1.0; }

/// E_h(phi) = (1/epsilon) int I_h[F(phi)]
inline double discrete_energy(const PotentialParams& p, const FemOperators& ops,
                              std::span<const double> phi) {
  require_same_size(phi.size(), ops.node_count(), "discrete_energy");
  double s = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) s += ops.lumped_mass[i] * F(p, phi[i]);
  return s / p.epsilon;
}

/// epsilon/2 ||grad phi||^2 + E_h(phi)
inline double total_energy(const PotentialParams& p, const FemOperators& ops,
                           std::span<const double> phi) {
  const double g = norm_grad(ops, phi);
  return 0.5 * p.epsilon * g * g + discrete_energy(p, ops, phi);
}

}  // namespace savac
