#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "savac/fem.hpp"
#include "savac/mesh.hpp"
#include "savac/philox.hpp"

namespace savac {

enum class Distribution { Rademacher, Gaussian };

inline const char* to_string(Distribution d) {
  return d == Distribution::Rademacher ? "rademacher" : "gaussian";
}

inline Distribution parse_distribution(const std::string& s) {
  if (s == "rademacher") return Distribution::Rademacher;
  if (s == "gaussian") return Distribution::Gaussian;
  throw std::invalid_argument("unknown distribution '" + s +
                              "' (expected rademacher|gaussian)");
}

/// lambda(k) = k^-2 for k != 0, lambda(0) = 1
inline double mode_weight(int k) {
  return k == 0 ? 1.0 : 1.0 / (static_cast<double>(k) * k);
}

/// Periodic 1-D Laplacian eigenfunction on (-L/2, L/2): sqrt(2/L) cos for
/// k >= 1, sqrt(1/L) for k = 0, sqrt(2/L) sin for k <= -1.
inline double eigenfunction_1d(int k, double length, double x) {
  const double scale = std::sqrt(2.0 / length);
  if (k == 0) return scale / std::numbers::sqrt2;
  const double arg = 2.0 * std::numbers::pi * static_cast<double>(k) * x / length;
  return k > 0 ? scale * std::cos(arg) : scale * std::sin(arg);
}

// Tensor-product eigenbasis g_{l,m}(x, y) = g_l^x(x) g_m^y(y) truncated to
// |l| <= l_max (x direction), |m| <= k_max (y direction).
//
// Nodal values are cached per axis on the half-cell lattice of the crossed
// mesh, so a mode field costs one product per node and the full synthesis
// sum_{l,m} c_{lm} g_l(x) g_m(y) is evaluated separably.
class SpectralBasis {
 public:
  SpectralBasis(const Mesh& mesh, int k_max, int l_max)
      : lx_(mesh.lx()), ly_(mesh.ly()), k_max_(k_max), l_max_(l_max) {
    if (k_max < 0 || l_max < 0) {
      throw std::invalid_argument("noise: mode truncation bounds must be >= 0");
    }
    const std::size_t nxh = 2 * mesh.cells_x();
    const std::size_t nyh = 2 * mesh.cells_y();
    node_hx_.resize(mesh.node_count());
    node_hy_.resize(mesh.node_count());
    for (index_t i = 0; i < mesh.node_count(); ++i) {
      node_hx_[i] = mesh.half_x(i);
      node_hy_[i] = mesh.half_y(i);
    }
    gx_.assign(static_cast<std::size_t>(modes_x()) * nxh, 0.0);
    gy_.assign(static_cast<std::size_t>(modes_y()) * nyh, 0.0);
    hx_count_ = nxh;
    hy_count_ = nyh;
    for (int l = -l_max_; l <= l_max_; ++l) {
      for (std::size_t a = 0; a < nxh; ++a) {
        const double x = -0.5 * lx_ + 0.5 * mesh.cell_width() * static_cast<double>(a);
        gx_[slot_x(l) * nxh + a] = eigenfunction_1d(l, lx_, x);
      }
    }
    for (int m = -k_max_; m <= k_max_; ++m) {
      for (std::size_t b = 0; b < nyh; ++b) {
        const double y = -0.5 * ly_ + 0.5 * mesh.cell_height() * static_cast<double>(b);
        gy_[slot_y(m) * nyh + b] = eigenfunction_1d(m, ly_, y);
      }
    }
    weights_.resize(mode_count());
    for (int l = -l_max_; l <= l_max_; ++l) {
      for (int m = -k_max_; m <= k_max_; ++m) {
        weights_[mode_index(l, m)] = mode_weight(l) * mode_weight(m);
      }
    }
  }

  int k_max() const { return k_max_; }
  int l_max() const { return l_max_; }
  int modes_x() const { return 2 * l_max_ + 1; }
  int modes_y() const { return 2 * k_max_ + 1; }
  std::size_t mode_count() const {
    return static_cast<std::size_t>(modes_x()) * static_cast<std::size_t>(modes_y());
  }
  std::size_t node_count() const { return node_hx_.size(); }

  /// Flat mode index, x-mode major: (l + L) * (2K + 1) + (m + K).
  std::size_t mode_index(int l, int m) const {
    return slot_x(l) * static_cast<std::size_t>(modes_y()) + slot_y(m);
  }

  /// lambda(l) * lambda(m)
  double weight(std::size_t mode) const { return weights_.at(mode); }
  const std::vector<double>& weights() const { return weights_; }

  /// I_h[g_l^x g_m^y]
  NodalField mode_field(int l, int m) const {
    if (std::abs(l) > l_max_ || std::abs(m) > k_max_) {
      throw std::out_of_range("noise: mode outside truncation set");
    }
    NodalField out(node_count());
    const double* gx = &gx_[slot_x(l) * hx_count_];
    const double* gy = &gy_[slot_y(m) * hy_count_];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gx[node_hx_[i]] * gy[node_hy_[i]];
    return out;
  }

  /// out = sum_{l,m} coeff[(l,m)] * I_h[g_l^x g_m^y]
  void synthesize(std::span<const double> coeff, std::span<double> out) const {
    require_same_size(coeff.size(), mode_count(), "SpectralBasis::synthesize");
    require_same_size(out.size(), node_count(), "SpectralBasis::synthesize");
    const std::size_t mx = static_cast<std::size_t>(modes_x());
    const std::size_t my = static_cast<std::size_t>(modes_y());
    // partial[l][b] = sum_m coeff[l][m] g_m(y_b)
    std::vector<double> partial(mx * hy_count_, 0.0);
    for (std::size_t a = 0; a < mx; ++a) {
      double* row = &partial[a * hy_count_];
      for (std::size_t c = 0; c < my; ++c) {
        const double w = coeff[a * my + c];
        if (w == 0.0) continue;
        const double* gy = &gy_[c * hy_count_];
        for (std::size_t b = 0; b < hy_count_; ++b) row[b] += w * gy[b];
      }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t hx = node_hx_[i];
      const std::size_t hy = node_hy_[i];
      double s = 0.0;
      for (std::size_t a = 0; a < mx; ++a) s += gx_[a * hx_count_ + hx] * partial[a * hy_count_ + hy];
      out[i] = s;
    }
  }

  /// sum_{l,m} (lambda_l lambda_m)^2 ||I_h[g_lm]||_h^2: the expected
  /// ||increment||_h^2 per unit time.
  double isometry_constant(const FemOperators& ops) const {
    double s = 0.0;
    for (int l = -l_max_; l <= l_max_; ++l) {
      for (int m = -k_max_; m <= k_max_; ++m) {
        const double w = weights_[mode_index(l, m)];
        const double n = norm_h(ops, mode_field(l, m));
        s += w * w * n * n;
      }
    }
    return s;
  }

  /// sum (lambda_l lambda_m)^2 ||g_lm||_{W^{1,inf}}^2 with the analytic bound
  /// ||g||_inf + ||grad g||_inf.
  double color_constant() const {
    double s = 0.0;
    for (int l = -l_max_; l <= l_max_; ++l) {
      for (int m = -k_max_; m <= k_max_; ++m) {
        const double ax = amplitude(l, lx_), ay = amplitude(m, ly_);
        const double kx = 2.0 * std::numbers::pi * std::abs(l) / lx_;
        const double ky = 2.0 * std::numbers::pi * std::abs(m) / ly_;
        const double w1inf = ax * ay * (1.0 + std::hypot(kx, ky));
        const double w = weights_[mode_index(l, m)];
        s += w * w * w1inf * w1inf;
      }
    }
    return s;
  }

 private:
  static double amplitude(int k, double length) {
    return k == 0 ? std::sqrt(1.0 / length) : std::sqrt(2.0 / length);
  }
  std::size_t slot_x(int l) const { return static_cast<std::size_t>(l + l_max_); }
  std::size_t slot_y(int m) const { return static_cast<std::size_t>(m + k_max_); }

  double lx_, ly_;
  int k_max_, l_max_;
  std::size_t hx_count_ = 0, hy_count_ = 0;
  std::vector<std::size_t> node_hx_, node_hy_;
  std::vector<double> gx_, gy_;
  std::vector<double> weights_;
};

inline SpectralBasis build_basis(const Mesh& mesh, int k_max, int l_max) {
  return SpectralBasis(mesh, k_max, l_max);
}

// Standardized increments xi_{lm}^n on the finest time grid.
struct NoisePath {
  std::size_t n_steps = 0;
  std::size_t mode_count = 0;
  double tau_min = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Distribution distribution = Distribution::Rademacher;
  std::vector<double> xi;  // row-major [step][mode]

  std::span<const double> step(std::size_t n) const {
    return {xi.data() + n * mode_count, mode_count};
  }
};

/// One standardized draw addressed by (seed, stream, step, mode).
inline double noise_draw(Distribution dist, std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t step, std::uint64_t mode) {
  const Philox4x32::counter_type ctr{
      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
      static_cast<std::uint32_t>(mode), static_cast<std::uint32_t>(stream)};
  auto key = Philox4x32::key_from_seed(seed);
  key[1] ^= static_cast<std::uint32_t>(stream >> 32);
  const auto block = Philox4x32::generate(ctr, key);
  if (dist == Distribution::Rademacher) return (block[0] & 1u) ? 1.0 : -1.0;
  return standard_normal(block);
}

/// Draws an independent path; `stream` separates sample paths sharing a seed.
inline NoisePath sample_path(const SpectralBasis& basis, std::size_t n_steps_fine,
                             double tau_min, Distribution dist, std::uint64_t seed,
                             std::uint64_t stream = 0) {
  if (n_steps_fine < 1) throw std::invalid_argument("noise: n_steps_fine must be >= 1");
  if (!(tau_min > 0.0)) throw std::invalid_argument("noise: tau_min must be positive");
  NoisePath path;
  path.n_steps = n_steps_fine;
  path.mode_count = basis.mode_count();
  path.tau_min = tau_min;
  path.seed = seed;
  path.stream = stream;
  path.distribution = dist;
  path.xi.resize(n_steps_fine * path.mode_count);
  for (std::size_t n = 0; n < n_steps_fine; ++n) {
    for (std::size_t k = 0; k < path.mode_count; ++k) {
      path.xi[n * path.mode_count + k] = noise_draw(dist, seed, stream, n, k);
    }
  }
  return path;
}

/// sqrt(tau_min) sum_{l,m} lambda_l lambda_m I_h[g_lm] xi_{lm}^n
inline void fine_increment(const SpectralBasis& basis, const NoisePath& path,
                           std::size_t n, std::span<double> out) {
  if (n >= path.n_steps) throw std::out_of_range("noise: fine step beyond path horizon");
  require_same_size(path.mode_count, basis.mode_count(), "fine_increment");
  const double scale = std::sqrt(path.tau_min);
  std::vector<double> coeff(path.mode_count);
  const auto xi = path.step(n);
  for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = scale * basis.weight(k) * xi[k];
  basis.synthesize(coeff, out);
}

inline NodalField fine_increment(const SpectralBasis& basis, const NoisePath& path,
                                 std::size_t n) {
  NodalField out(basis.node_count());
  fine_increment(basis, path, n, out);
  return out;
}

/// Increment over coarse step `coarse_index` of size level * tau_min: the
/// left-to-right sum of the fine increments in that window, so every level is
/// driven by the same Wiener path.
inline NodalField wiener_increment(const SpectralBasis& basis, const NoisePath& path,
                                   std::size_t level, std::size_t coarse_index) {
  if (level < 1) throw std::invalid_argument("noise: coarsening level must be >= 1");
  if (level * (coarse_index + 1) > path.n_steps) {
    throw std::out_of_range("noise: coarse step " + std::to_string(coarse_index) +
                            " at level " + std::to_string(level) +
                            " exceeds the path horizon of " +
                            std::to_string(path.n_steps) + " fine steps");
  }
  NodalField sum(basis.node_count(), 0.0);
  NodalField fine(basis.node_count());
  for (std::size_t n = level * coarse_index; n < level * (coarse_index + 1); ++n) {
    fine_increment(basis, path, n, fine);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += fine[i];
  }
  return sum;
}

/// sigma(x) = alpha max{1 - x^2, 0}
inline double sigma(double alpha, double x) { return alpha * std::max(1.0 - x * x, 0.0); }

/// Phi_h(phi) increment: the nodal product I_h[sigma(phi) dW]. Exact because
/// the increment lies in the span of the truncated modes.
inline NodalField apply_phi_h(std::span<const double> phi, std::span<const double> increment,
                              double alpha) {
  require_same_size(phi.size(), increment.size(), "apply_phi_h");
  NodalField out(phi.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigma(alpha, phi[i]) * increment[i];
  return out;
}

namespace detail {
inline void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(bytes, 8);
}
inline std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw std::runtime_error("noise: truncated path file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}
}  // namespace detail

// Binary path dump: little-endian u64 header (n_steps, mode_count, seed)
// followed by n_steps * mode_count little-endian IEEE-754 doubles.
inline void write_path(const NoisePath& path, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("noise: cannot open '" + file + "' for writing");
  detail::put_u64(out, path.n_steps);
  detail::put_u64(out, path.mode_count);
  detail::put_u64(out, path.seed);
  for (double v : path.xi) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("noise: write failed for '" + file + "'");
}

inline NoisePath read_path(const std::string& file, double tau_min,
                           Distribution dist = Distribution::Rademacher) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("noise: cannot open '" + file + "'");
  NoisePath path;
  path.n_steps = detail::get_u64(in);
  path.mode_count = detail::get_u64(in);
  path.seed = detail::get_u64(in);
  path.tau_min = tau_min;
  path.distribution = dist;
  path.xi.resize(path.n_steps * path.mode_count);
  for (double& v : path.xi) v = std::bit_cast<double>(detail::get_u64(in));
  return path;
}

}  // namespace savac
