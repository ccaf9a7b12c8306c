#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "savac/mesh.hpp"
#include "savac/sparse.hpp"

namespace savac {

/// Nodal values of a piecewise-linear finite element function.
using NodalField = Vector;

// Lumped mass and P1 stiffness on a periodic mesh.
//
// The lumped mass realizes the nodal quadrature exactly:
//   int I_h[f g] = sum_i m_i f_i g_i.
struct FemOperators {
  Vector lumped_mass;
  CsrMatrix stiffness;
  double area = 0.0;

  std::size_t node_count() const { return lumped_mass.size(); }
};

inline FemOperators assemble(const Mesh& mesh) {
  const std::size_t n = mesh.node_count();
  FemOperators ops;
  ops.lumped_mass.assign(n, 0.0);
  ops.area = mesh.area();

  std::vector<Triplet> entries;
  entries.reserve(9 * mesh.triangles().size());
  for (const Triangle& t : mesh.triangles()) {
    const auto& v = t.vertices;
    const double area = t.area();
    double b[3], c[3];
    for (int k = 0; k < 3; ++k) {
      const Point& p1 = v[(k + 1) % 3];
      const Point& p2 = v[(k + 2) % 3];
      b[k] = p1.y - p2.y;
      c[k] = p2.x - p1.x;
    }
    for (int i = 0; i < 3; ++i) {
      ops.lumped_mass[t.nodes[i]] += area / 3.0;
      for (int j = 0; j < 3; ++j) {
        entries.push_back(
            {t.nodes[i], t.nodes[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area)});
      }
    }
  }
  ops.stiffness = CsrMatrix::from_triplets(n, std::move(entries));
  return ops;
}

/// (a, b)_h = int I_h[a b]
inline double inner_h(const FemOperators& ops, std::span<const double> a,
                      std::span<const double> b) {
  require_same_size(a.size(), ops.node_count(), "inner_h");
  require_same_size(b.size(), ops.node_count(), "inner_h");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += ops.lumped_mass[i] * a[i] * b[i];
  return s;
}

inline double norm_h(const FemOperators& ops, std::span<const double> z) {
  return std::sqrt(inner_h(ops, z, z));
}

/// ||grad z||_{L2}
inline double norm_grad(const FemOperators& ops, std::span<const double> z) {
  require_same_size(z.size(), ops.node_count(), "norm_grad");
  // Roundoff can make the form slightly negative for near-constant fields.
  return std::sqrt(std::max(0.0, ops.stiffness.quadratic_form(z)));
}

/// Delta_h z = -M_L^{-1} K z
inline NodalField discrete_laplacian(const FemOperators& ops,
                                     std::span<const double> z) {
  require_same_size(z.size(), ops.node_count(), "discrete_laplacian");
  NodalField out = ops.stiffness.multiply(z);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i] / ops.lumped_mass[i];
  return out;
}

/// I_h[f(z)] for a scalar function f.
template <class F>
NodalField nodal_apply(F&& f, std::span<const double> z) {
  NodalField out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = f(z[i]);
  return out;
}

/// I_h[u] for a function of position.
template <class F>
NodalField interpolate(const Mesh& mesh, F&& f) {
  NodalField out(mesh.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Point p = mesh.nodes()[i];
    out[i] = f(p.x, p.y);
  }
  return out;
}

/// M_L z
inline Vector mass_times(const FemOperators& ops, std::span<const double> z) {
  require_same_size(z.size(), ops.node_count(), "mass_times");
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = ops.lumped_mass[i] * z[i];
  return out;
}

}  // namespace savac
