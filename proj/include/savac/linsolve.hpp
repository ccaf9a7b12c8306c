#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "savac/sparse.hpp"

namespace savac {

/// A numerical failure inside a time step (solver breakdown, Newton
/// divergence, singular correction). Carries the last residual.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct SolverOptions {
  double tol = 1e-10;           // relative residual
  double max_iter_factor = 10;  // max_iter = factor * sqrt(n)

  bool operator==(const SolverOptions&) const = default;
};

// Symmetric positive definite system solved by Jacobi-preconditioned
// conjugate gradients.
struct SpdSystem {
  CsrMatrix base;
  Vector diag_inv;
  double tol = 1e-10;
  std::size_t max_iter = 0;

  SpdSystem() = default;
  SpdSystem(CsrMatrix a, const SolverOptions& opt = {}) : base(std::move(a)), tol(opt.tol) {
    const Vector d = base.diagonal();
    diag_inv.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(d[i] > 0.0)) {
        throw std::invalid_argument("SpdSystem: non-positive diagonal entry at row " +
                                    std::to_string(i));
      }
      diag_inv[i] = 1.0 / d[i];
    }
    max_iter = static_cast<std::size_t>(
        std::ceil(opt.max_iter_factor * std::sqrt(static_cast<double>(d.size()))));
    max_iter = std::max<std::size_t>(max_iter, 10);
  }

  std::size_t size() const { return base.size(); }
};

struct SolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// x with ||A x - b|| <= tol ||b||; b = 0 returns 0 exactly.
inline Vector spd_solve(const SpdSystem& sys, std::span<const double> b,
                        SolveStats* stats = nullptr) {
  const std::size_t n = sys.size();
  require_same_size(b.size(), n, "spd_solve");
  Vector x(n, 0.0);
  const double bnorm = norm2(b);
  if (!std::isfinite(bnorm)) throw NumericalError("spd_solve: non-finite right-hand side", bnorm);
  if (bnorm == 0.0) {
    if (stats) *stats = {};
    return x;
  }

  Vector r(b.begin(), b.end());
  Vector z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = sys.diag_inv[i] * r[i];
  p = z;
  double rz = dot(r, z);
  double rnorm = bnorm;
  std::size_t it = 0;
  while (rnorm > sys.tol * bnorm) {
    if (it == sys.max_iter) {
      throw NumericalError("spd_solve: no convergence after " + std::to_string(it) +
                               " iterations (relative residual " +
                               std::to_string(rnorm / bnorm) + ")",
                           rnorm / bnorm);
    }
    sys.base.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      throw NumericalError("spd_solve: operator is not positive definite", rnorm / bnorm);
    }
    const double alpha = rz / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    for (std::size_t i = 0; i < n; ++i) z[i] = sys.diag_inv[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = norm2(r);
    ++it;
  }
#ifndef NDEBUG
  {
    Vector check = sys.base.multiply(x);
    for (std::size_t i = 0; i < n; ++i) check[i] -= b[i];
    assert(norm2(check) <= 10.0 * sys.tol * bnorm + 1e-300);
  }
#endif
  if (stats) *stats = {it, rnorm / bnorm};
  return x;
}

/// Solves (A + scale * u a^T) x = b by Sherman-Morrison:
///   x = x0 - scale (a.x0) / (1 + scale (a.x1)) x1,  A x0 = b, A x1 = u.
inline Vector rank_one_solve(const SpdSystem& sys, std::span<const double> u,
                             std::span<const double> a, double scale,
                             std::span<const double> b) {
  require_same_size(u.size(), sys.size(), "rank_one_solve");
  require_same_size(a.size(), sys.size(), "rank_one_solve");
  Vector x = spd_solve(sys, b);
  if (scale == 0.0) return x;
  const Vector x1 = spd_solve(sys, u);
  const double denom = 1.0 + scale * dot(a, x1);
  if (!(std::abs(denom) >= 1e-14)) {
    throw NumericalError("rank_one_solve: singular rank-one correction (denominator " +
                             std::to_string(denom) + ")",
                         denom);
  }
  axpy(-scale * dot(a, x) / denom, x1, x);
  return x;
}

}  // namespace savac
