#pragma once

#include <bit>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/crc.hpp>
#include <json.hpp>

#include "savac/config.hpp"
#include "savac/mesh.hpp"
#include "savac/montecarlo.hpp"

namespace savac {

inline constexpr const char* kVersion = "1.0.0";

struct ManifestEntry {
  std::string file;
  std::uintmax_t bytes = 0;
  std::uint32_t crc32 = 0;
};

struct RunManifest {
  nlohmann::json config;
  std::string version = kVersion;
  std::string started;
  std::string finished;
  std::size_t paths_completed = 0;
  std::size_t paths_failed = 0;
  std::vector<ManifestEntry> files;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["started"] = started;
    j["finished"] = finished;
    j["paths_completed"] = paths_completed;
    j["paths_failed"] = paths_failed;
    j["config"] = config;
    auto& arr = j["files"] = nlohmann::json::array();
    for (const auto& f : files) {
      std::ostringstream crc;
      crc << std::hex << std::setw(8) << std::setfill('0') << f.crc32;
      arr.push_back({{"file", f.file}, {"bytes", f.bytes}, {"crc32", crc.str()}});
    }
    return j;
  }
};

/// UTC wall-clock time in ISO 8601.
inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::uint32_t file_crc32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  boost::crc_32_type crc;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    crc.process_bytes(buf, static_cast<std::size_t>(in.gcount()));
  }
  return crc.checksum();
}

namespace detail {

// Short decimal label for file names: 0.0005 -> "0.0005", 2 -> "2".
inline std::string label(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_)) {
      throw std::runtime_error("cannot create output directory '" + root_.string() +
                               "': " + ec.message());
    }
  }

  std::ofstream open(const std::string& name, bool binary = false) {
    const auto path = root_ / name;
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    if (!binary) out << std::setprecision(17);
    written_.push_back(name);
    return out;
  }

  void close(std::ofstream& out, const std::string& name) {
    out.close();
    if (!out) throw std::runtime_error("write failed for '" + (root_ / name).string() + "'");
  }

  std::vector<ManifestEntry> entries() const {
    std::vector<ManifestEntry> out;
    for (const auto& name : written_) {
      const auto path = root_ / name;
      out.push_back({name, std::filesystem::file_size(path), file_crc32(path)});
    }
    return out;
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

inline void write_error_table(OutputDir& dir, const std::string& name, const ErrorTable& t) {
  auto out = dir.open(name);
  out << "tau,rms,eoc\n";
  for (const auto& row : t.rows) {
    out << row.tau << ',' << row.error << ',';
    if (row.rate) out << *row.rate;
    out << '\n';
  }
  dir.close(out, name);
}

inline void write_le_double(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

}  // namespace detail

/// Writes all tables, series, line plots and checkpoint fields of `report`
/// into `outdir`, then `manifest.json` listing every file with its CRC-32.
/// `started` is the run start timestamp recorded in the manifest.
inline RunManifest emit_report(const EnsembleReport& report, const ExperimentConfig& cfg,
                               const std::filesystem::path& outdir,
                               const std::string& started = utc_timestamp()) {
  detail::OutputDir dir(outdir);
  const Mesh mesh(cfg.mesh.lx, cfg.mesh.ly, cfg.mesh.cells_x, cfg.mesh.cells_y);
  const std::size_t nx = mesh.cells_x(), ny = mesh.cells_y();

  for (const auto& t : report.self_convergence) {
    detail::write_error_table(dir, "eoc_" + std::string(to_string(t.scheme)) + ".csv", t);
  }
  for (const auto& t : report.comparison) {
    detail::write_error_table(dir, "compare_" + std::string(to_string(t.scheme)) + ".csv", t);
  }

  for (const auto& lv : report.levels) {
    const std::string name =
        "energy_" + std::string(to_string(lv.scheme)) + "_" + detail::label(lv.tau) + ".csv";
    auto out = dir.open(name);
    out << "t,modified_energy,total_energy,sav_error\n";
    for (std::size_t k = 0; k < lv.times.size(); ++k) {
      out << lv.times[k] << ',' << lv.mean_modified_energy[k] << ',' << lv.mean_total_energy[k]
          << ',' << lv.mean_sav_error[k] << '\n';
    }
    dir.close(out, name);
  }

  {
    const std::string name = "summary.csv";
    auto out = dir.open(name);
    out << "scheme,tau,mean_max_sav_error,xi_rms,newton_iterations_max\n";
    for (const auto& lv : report.levels) {
      out << to_string(lv.scheme) << ',' << lv.tau << ',' << lv.mean_max_sav_error << ','
          << lv.xi_rms << ',' << lv.newton_iterations_max << '\n';
    }
    dir.close(out, name);
  }

  {
    const std::string name = "failures.csv";
    auto out = dir.open(name);
    out << "path,scheme,tau,step,message\n";
    for (const auto& f : report.failures) {
      std::string msg = f.message;
      for (char& ch : msg) if (ch == ',' || ch == '\n') ch = ';';
      out << f.path << ',' << to_string(f.scheme) << ',' << f.tau << ',' << f.step << ',' << msg
          << '\n';
    }
    dir.close(out, name);
  }

  // Line plots along y = 0 (the grid row nearest to it for an odd cell
  // count), closed periodically so the segment runs from x = -Lx/2 to Lx/2.
  const std::size_t j0 = ny / 2;
  for (std::size_t c = 0; c < report.checkpoints.size() && !report.levels.empty(); ++c) {
    const std::string name = "lineplot_" + detail::label(report.checkpoints[c]) + ".csv";
    auto out = dir.open(name);
    out << "x";
    for (const auto& lv : report.levels) {
      out << ',' << to_string(lv.scheme) << "_tau_" << detail::label(lv.tau);
    }
    out << '\n';
    for (std::size_t i = 0; i <= nx; ++i) {
      const index_t node = mesh.grid_node(i % nx, j0);
      const double x = i == nx ? mesh.nodes()[mesh.grid_node(0, j0)].x + mesh.lx()
                               : mesh.nodes()[node].x;
      out << x;
      for (const auto& lv : report.levels) out << ',' << lv.expected_fields[c][node];
      out << '\n';
    }
    dir.close(out, name);
  }

  // Expected fields at the grid nodes as row-major little-endian doubles
  // (row j holds y_j, column i holds x_i), one sidecar CSV describing the layout.
  {
    const std::string sidecar = "fields.csv";
    auto meta = dir.open(sidecar);
    meta << "file,scheme,tau,time,rows,cols,x0,dx,y0,dy,dtype\n";
    for (const auto& lv : report.levels) {
      for (std::size_t c = 0; c < report.checkpoints.size(); ++c) {
        const std::string name = "field_" + std::string(to_string(lv.scheme)) + "_" +
                                 detail::label(lv.tau) + "_t" +
                                 detail::label(report.checkpoints[c]) + ".bin";
        auto out = dir.open(name, true);
        for (std::size_t j = 0; j < ny; ++j) {
          for (std::size_t i = 0; i < nx; ++i) {
            detail::write_le_double(out, lv.expected_fields[c][mesh.grid_node(i, j)]);
          }
        }
        dir.close(out, name);
        const Point p0 = mesh.nodes()[mesh.grid_node(0, 0)];
        meta << name << ',' << to_string(lv.scheme) << ',' << lv.tau << ','
             << report.checkpoints[c] << ',' << ny << ',' << nx << ',' << p0.x << ','
             << mesh.cell_width() << ',' << p0.y << ',' << mesh.cell_height() << ",float64le\n";
      }
    }
    dir.close(meta, sidecar);
  }

  {
    const std::string name = "config.json";
    auto out = dir.open(name);
    out << config_to_json(cfg).dump(2) << '\n';
    dir.close(out, name);
  }

  RunManifest manifest;
  manifest.config = config_to_json(cfg);
  manifest.started = started;
  manifest.finished = utc_timestamp();
  manifest.paths_completed = report.paths_completed;
  manifest.paths_failed = report.failures.size();
  manifest.files = dir.entries();

  const auto path = dir.root() / "manifest.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  return manifest;
}

}  // namespace savac
