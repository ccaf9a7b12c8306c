#pragma once

// Dense reference solutions used by the unit and acceptance tests.

#include <Eigen/Dense>
#include <cmath>

#include "savac/fem.hpp"
#include "savac/potential.hpp"
#include "savac/schemes.hpp"

namespace savac::test {

struct DenseSavSolution {
  Eigen::VectorXd phi;
  double r = 0.0;
};

// Monolithic solve of the coupled linear SAV step in the unknowns
// (phi^n, r^n), assembled row by row from the weak form tested against every
// hat function and the scalar update:
//   m_i (phi_i - phi_i^{n-1}) + tau eps (K phi)_i
//     + tau r m_i [ F'_i / S - aug (beta / (4 S^3)) F'_i + aug F''_i g_i / (2 S) ]
//     = m_i g_i,
//   r - r^{n-1} - sum_i m_i [ F'_i / (2 S) - aug (beta / (8 S^3)) F'_i
//                              + aug F''_i g_i / (4 S) ] (phi_i - phi_i^{n-1}) = 0,
// with g = Phi_h dW, F' and F'' divided by eps, S = sqrt(E_h(phi^{n-1})) and
// beta = sum_i m_i F'_i g_i.
inline DenseSavSolution dense_sav_step(const FemOperators& ops, const PotentialParams& p,
                                       const SavState& prev, const NodalField& forcing,
                                       double tau, bool augmented) {
  const auto n = static_cast<Eigen::Index>(ops.node_count());
  double e = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) e += ops.lumped_mass[i] * F(p, prev.phi[i]);
  const double s = std::sqrt(e / p.epsilon);
  Eigen::VectorXd fp(n), fpp(n);
  double beta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    fp[i] = Fp(p, prev.phi[i]) / p.epsilon;
    fpp[i] = Fpp(p, prev.phi[i]) / p.epsilon;
    beta += ops.lumped_mass[i] * fp[i] * forcing[i];
  }
  const double aug = augmented ? 1.0 : 0.0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = ops.lumped_mass[i];
    a(i, i) += m;
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) += tau * p.epsilon * ops.stiffness.at(i, j);
    }
    a(i, n) = tau * m *
              (fp[i] / s - aug * beta / (4.0 * s * s * s) * fp[i] +
               aug * fpp[i] * forcing[i] / (2.0 * s));
    rhs[i] = m * (prev.phi[i] + forcing[i]);
  }
  a(n, n) = 1.0;
  rhs[n] = prev.r;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = ops.lumped_mass[j] *
                     (fp[j] / (2.0 * s) - aug * beta / (8.0 * s * s * s) * fp[j] +
                      aug * fpp[j] * forcing[j] / (4.0 * s));
    a(n, j) = -c;
    rhs[n] -= c * prev.phi[j];
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(rhs);
  return {x.head(n), x[n]};
}

}  // namespace savac::test
