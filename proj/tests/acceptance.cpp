// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit status is non-zero when
// any criterion fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "savac/savac.hpp"

using namespace savac;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> outcomes;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
  outcomes.push_back({id, name, pass, detail});
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << " " << name << ": "
            << detail << std::endl;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

// 1. Noise-free modified-energy inequality on a 32 x 32 mesh.
void energy_stability() {
  const auto t0 = Clock::now();
  const Mesh mesh(4.0, 4.0, 32, 32);
  const auto ops = assemble(mesh);
  const PotentialParams pot{1e-5, 0.04};
  const SavState init =
      initial_state(pot, ops, ellipse_initial_field(mesh, EllipseDroplet{}, pot.epsilon));
  const auto zero = NoiseField::zero(ops.node_count());
  double worst = INFINITY;
  std::ostringstream per;
  for (auto kind : {SchemeKind::AugmentedSav, SchemeKind::StandardSav}) {
    for (double tau : {1e-3, 1e-2, 1e-1}) {
      const Integrator integ(ops, pot, tau);
      SavState s = init;
      double local = INFINITY;
      for (int n = 0; n < 200; ++n) {
        StepResult out = integ.step(kind, s, zero);
        local = std::min(local, energy_dissipation_slack(ops, pot, s, out, tau));
        s = std::move(out.state);
      }
      worst = std::min(worst, local);
      per << ' ' << to_string(kind) << "@" << tau << "=" << fmt(local, 3);
    }
  }
  const double t = seconds_since(t0);
  record(1, "energy stability", worst >= -1e-10 && t < 60.0,
         "min per-step slack " + fmt(worst, 3) + " (>= -1e-10);" + per.str() + "; runtime " +
             fmt(t, 3) + " s (< 60 s)");
}

// 2. SAV steps and rank-one solves against dense oracles.
void dense_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const PotentialParams pot{1e-5, 0.04};
  const std::vector<std::pair<std::size_t, std::size_t>> meshes{{2, 2}, {3, 4}, {5, 5}, {7, 7}};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_step = 0.0;
  int step_cases = 0;
  for (auto kind : {SchemeKind::AugmentedSav, SchemeKind::StandardSav}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto [nx, ny] = meshes[static_cast<std::size_t>(trial) % meshes.size()];
      const Mesh mesh(4.0, 4.0, nx, ny);
      const auto ops = assemble(mesh);
      const SpectralBasis basis(mesh, 3, 3);
      SavState s;
      s.phi.resize(ops.node_count());
      for (double& v : s.phi) v = -1.2 + 2.4 * unit(rng);
      s.r = std::sqrt(discrete_energy(pot, ops, s.phi)) * (0.8 + 0.4 * unit(rng));
      const double tau = std::pow(10.0, -4.0 + 3.0 * unit(rng));
      const auto path = sample_path(basis, 1, tau, Distribution::Gaussian, rng(), 0);
      const auto noise = make_noise_field(s.phi, fine_increment(basis, path, 0), 2.0);
      const auto out = Integrator(ops, pot, tau).step(kind, s, noise);
      const auto ref =
          test::dense_sav_step(ops, pot, s, noise.forcing, tau, kind == SchemeKind::AugmentedSav);
      double err = std::abs(out.state.r - ref.r);
      for (std::size_t i = 0; i < ops.node_count(); ++i) {
        err = std::max(err, std::abs(out.state.phi[i] - ref.phi[static_cast<Eigen::Index>(i)]));
      }
      worst_step = std::max(worst_step, err);
      ++step_cases;
    }
  }

  double worst_r1 = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + static_cast<int>(unit(rng) * 56);
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) for (int j = 0; j < n; ++j) b(i, j) = 2.0 * unit(rng) - 1.0;
    const Eigen::MatrixXd a = b * b.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    std::vector<Triplet> trip;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        trip.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), a(i, j)});
      }
    }
    const SpdSystem sys(CsrMatrix::from_triplets(static_cast<std::size_t>(n), trip));
    Vector u(n), w(n), rhs(n);
    for (int i = 0; i < n; ++i) {
      u[i] = 2.0 * unit(rng) - 1.0;
      w[i] = 2.0 * unit(rng) - 1.0;
      rhs[i] = 2.0 * unit(rng) - 1.0;
    }
    const double scale = unit(rng);
    const auto x = rank_one_solve(sys, u, w, scale, rhs);
    const Eigen::Map<const Eigen::VectorXd> ue(u.data(), n), we(w.data(), n), be(rhs.data(), n);
    const Eigen::MatrixXd full = a + scale * ue * we.transpose();
    const Eigen::VectorXd ref = full.partialPivLu().solve(be);
    for (int i = 0; i < n; ++i) worst_r1 = std::max(worst_r1, std::abs(x[i] - ref[i]));
  }
  const double t = seconds_since(t0);
  record(2, "dense-oracle agreement",
         worst_step <= 1e-8 && worst_r1 <= 1e-8 && t < 30.0,
         std::to_string(step_cases) + " SAV steps max error " + fmt(worst_step, 3) +
             ", 100 rank-one solves max error " + fmt(worst_r1, 3) + " (<= 1e-8); runtime " +
             fmt(t, 3) + " s (< 30 s)");
}

// 3 to 5 share one desk-scale ensemble.
void desk_criteria(const EnsembleReport& rep, double runtime) {
  const auto taus = rep.taus;  // ascending
  {
    bool ok = rep.failures.empty();
    std::ostringstream os;
    os << "augmented mean max|r - sqrt(E_h)| by tau ascending:";
    double prev = -1.0;
    for (double tau : taus) {
      const double v = rep.stats(SchemeKind::AugmentedSav, tau).mean_max_sav_error;
      os << ' ' << fmt(v);
      if (prev >= 0.0 && !(v > prev)) ok = false;
      prev = v;
    }
    os << "; standard (not asserted):";
    for (double tau : taus) os << ' ' << fmt(rep.stats(SchemeKind::StandardSav, tau).mean_max_sav_error);
    os << "; runtime " << fmt(runtime, 4) << " s (< 600 s)";
    record(3, "SAV tracking decay", ok && runtime < 600.0, os.str());
  }
  {
    bool ok = rep.failures.empty();
    std::ostringstream os;
    for (auto kind : {SchemeKind::AugmentedSav, SchemeKind::ImplicitNonlinear}) {
      const auto* t = rep.self_table(kind);
      os << to_string(kind) << " EOC:";
      if (!t) {
        ok = false;
        continue;
      }
      for (const auto& row : t->rows) {
        if (!row.rate) continue;
        os << ' ' << fmt(*row.rate, 3);
        if (!(*row.rate >= 0.6 && *row.rate <= 1.6)) ok = false;
      }
      os << "; ";
    }
    os << "in [0.6, 1.6]; runtime " << fmt(runtime, 4) << " s (< 900 s)";
    record(4, "self-convergence EOC", ok && runtime < 900.0, os.str());
  }
  {
    const auto* aug = rep.comparison_table(SchemeKind::AugmentedSav);
    const auto* std_ = rep.comparison_table(SchemeKind::StandardSav);
    bool ok = aug && std_ && rep.failures.empty();
    std::ostringstream os;
    if (ok) {
      const double fa = aug->rows.back().error / aug->rows.front().error;
      const double fs_ = std_->rows.back().error / std_->rows.front().error;
      ok = fa >= 3.0 && fs_ <= 2.0;
      os << "augmented rms vs implicit " << fmt(aug->rows.back().error) << " -> "
         << fmt(aug->rows.front().error) << " (factor " << fmt(fa) << " >= 3); standard "
         << fmt(std_->rows.back().error) << " -> " << fmt(std_->rows.front().error)
         << " (ratio " << fmt(fs_) << " <= 2)";
    }
    os << "; runtime " << fmt(runtime, 4) << " s (< 1200 s)";
    record(5, "augmentation necessity", ok && runtime < 1200.0, os.str());
  }
}

// 6. Moments of the standardized draws and exactness of coarsening.
void increment_statistics() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream os;
  const std::uint64_t draws = 1000000, modes = 100;
  for (auto dist : {Distribution::Rademacher, Distribution::Gaussian}) {
    double s = 0.0, s2 = 0.0;
    bool support = true;
    for (std::uint64_t k = 0; k < draws; ++k) {
      const double x = noise_draw(dist, 31337, 0, k / modes, k % modes);
      s += x;
      s2 += x * x;
      if (dist == Distribution::Rademacher && x != 1.0 && x != -1.0) support = false;
    }
    const double mean = s / static_cast<double>(draws);
    const double var = s2 / static_cast<double>(draws) - mean * mean;
    ok = ok && std::abs(mean) <= 0.005 && var >= 0.99 && var <= 1.01 && support;
    os << to_string(dist) << " mean " << fmt(mean, 3) << " var " << fmt(var, 5);
    if (dist == Distribution::Rademacher) os << (support ? " support {-1,+1}" : " support VIOLATED");
    os << "; ";
  }

  // Coarse increments are the left-to-right sums of their fine increments
  // (bitwise), and the streamed accumulation used by the ensemble driver
  // reproduces them bitwise. In coefficient space the Rademacher sums are
  // integers, so every level telescopes exactly to the fine cumulative sum.
  const Mesh mesh(4.0, 4.0, 16, 16);
  const SpectralBasis basis(mesh, 10, 10);
  const std::size_t n_fine = 32;
  const auto path = sample_path(basis, n_fine, 5e-4, Distribution::Rademacher, 99, 7);
  bool bitwise = true;
  double field_tele = 0.0;
  NodalField total(mesh.node_count(), 0.0);
  for (std::size_t n = 0; n < n_fine; ++n) axpy(1.0, fine_increment(basis, path, n), total);
  for (std::size_t level : {1u, 2u, 4u, 8u, 16u, 32u}) {
    NodalField streamed(mesh.node_count(), 0.0), tele(mesh.node_count(), 0.0);
    for (std::size_t n = 0; n < n_fine; ++n) {
      const auto f = fine_increment(basis, path, n);
      for (std::size_t i = 0; i < f.size(); ++i) streamed[i] += f[i];
      if ((n + 1) % level == 0) {
        const auto coarse = wiener_increment(basis, path, level, n / level);
        if (coarse != streamed) bitwise = false;
        axpy(1.0, coarse, tele);
        std::fill(streamed.begin(), streamed.end(), 0.0);
      }
    }
    for (std::size_t i = 0; i < tele.size(); ++i) {
      field_tele = std::max(field_tele, std::abs(tele[i] - total[i]));
    }
  }
  bool coeff_exact = true;
  for (std::size_t m = 0; m < path.mode_count; ++m) {
    double fine_sum = 0.0;
    for (std::size_t n = 0; n < n_fine; ++n) fine_sum += path.step(n)[m];
    for (std::size_t level : {2u, 4u, 8u}) {
      double tele = 0.0;
      for (std::size_t k = 0; k < n_fine / level; ++k) {
        double window = 0.0;
        for (std::size_t n = k * level; n < (k + 1) * level; ++n) window += path.step(n)[m];
        tele += window;
      }
      if (tele != fine_sum) coeff_exact = false;
    }
  }
  ok = ok && bitwise && coeff_exact;
  os << "coarse = sum of fine increments " << (bitwise ? "bitwise" : "MISMATCH")
     << ", coefficient telescoping " << (coeff_exact ? "exact" : "INEXACT")
     << ", field-space reassociation deviation " << fmt(field_tele, 3) << "; runtime "
     << fmt(seconds_since(t0), 3) << " s";
  record(6, "increment statistics", ok, os.str());
}

// 7. RMS of sqrt(sum_n tau ||Xi^n||^2) at two tau levels four apart.
void xi_scaling() {
  const auto t0 = Clock::now();
  auto cfg = preset_config("desk");
  cfg.schemes = {SchemeKind::AugmentedSav};
  cfg.taus = {5e-4, 2e-3};
  cfg.checkpoints.clear();
  cfg.n_paths = 32;
  const auto rep = run_ensemble(cfg);
  const double fine = rep.stats(SchemeKind::AugmentedSav, 5e-4).xi_rms;
  const double coarse = rep.stats(SchemeKind::AugmentedSav, 2e-3).xi_rms;
  const double factor = coarse / fine;
  record(7, "Xi scaling", rep.failures.empty() && factor >= 1.4 && factor <= 2.9,
         "32 paths, rms " + fmt(coarse) + " (tau 2e-3) -> " + fmt(fine) +
             " (tau 5e-4), factor " + fmt(factor) + " in [1.4, 2.9]; runtime " +
             fmt(seconds_since(t0), 4) + " s");
}

std::vector<std::pair<std::string, std::string>> csv_files(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out.emplace_back(e.path().filename().string(), ss.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// 8. Two full desk runs with one seed emit byte-identical CSV tables.
void determinism(const EnsembleReport& first, const ExperimentConfig& cfg, const fs::path& root) {
  const auto t0 = Clock::now();
  const auto second = run_ensemble(cfg);
  emit_report(first, cfg, root / "run_a");
  emit_report(second, cfg, root / "run_b");
  const auto a = csv_files(root / "run_a");
  const auto b = csv_files(root / "run_b");
  std::size_t differing = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] != b[i]) ++differing;
  }
  const bool ok = a.size() == b.size() && !a.empty() && differing == 0;
  record(8, "determinism", ok,
         std::to_string(a.size()) + " CSV files compared, " + std::to_string(differing) +
             " differ; rerun " + fmt(seconds_since(t0), 4) + " s");
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  energy_stability();
  dense_oracles();
  increment_statistics();

  const auto desk = preset_config("desk");
  std::cout << "running desk ensemble (" << desk.n_paths << " paths, 64x64 cells, T = "
            << desk.horizon << ")" << std::endl;
  const auto t0 = Clock::now();
  const auto rep = run_ensemble(desk);
  const double runtime = seconds_since(t0);
  desk_criteria(rep, runtime);
  xi_scaling();

  const auto root = fs::temp_directory_path() / "savac_acceptance";
  fs::remove_all(root);
  determinism(rep, desk, root);

  std::sort(outcomes.begin(), outcomes.end(), [](auto& a, auto& b) { return a.id < b.id; });
  int failed = 0;
  std::cout << "\nsummary\n";
  for (const auto& o : outcomes) {
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << o.id << " " << o.name << '\n';
    if (!o.pass) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
