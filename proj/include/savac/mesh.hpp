#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

namespace savac {

using index_t = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Triangle with logical (periodic) node indices and the unwrapped vertex
// coordinates used for element geometry.
struct Triangle {
  std::array<index_t, 3> nodes{};
  std::array<Point, 3> vertices{};

  double area() const {
    const auto& [a, b, c] = vertices;
    return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }

  double diameter() const {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Point& p = vertices[i];
      const Point& q = vertices[(i + 1) % 3];
      d = std::max(d, std::hypot(p.x - q.x, p.y - q.y));
    }
    return d;
  }
};

// Crossed ("criss-cross") triangulation of the torus
// (-Lx/2, Lx/2) x (-Ly/2, Ly/2): every square cell is split into four
// triangles through its center.
//
// Node ordering: grid nodes first (row-major, j * nx + i), then cell centers
// (row-major). Periodicity is realized by index wrapping; there are no ghost
// nodes.
class Mesh {
 public:
  Mesh(double lx, double ly, std::size_t cells_x, std::size_t cells_y)
      : lx_(lx), ly_(ly), nx_(cells_x), ny_(cells_y) {
    if (!(lx > 0.0) || !(ly > 0.0)) {
      throw std::invalid_argument("mesh: domain side lengths must be positive");
    }
    if (cells_x < 2 || cells_y < 2) {
      throw std::invalid_argument("mesh: at least 2 cells per axis are required");
    }
    sx_ = lx_ / static_cast<double>(nx_);
    sy_ = ly_ / static_cast<double>(ny_);
    build();
  }

  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double area() const { return lx_ * ly_; }
  std::size_t cells_x() const { return nx_; }
  std::size_t cells_y() const { return ny_; }
  double cell_width() const { return sx_; }
  double cell_height() const { return sy_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t grid_node_count() const { return nx_ * ny_; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  /// Maximum element diameter.
  double h() const { return h_; }

  index_t grid_node(std::size_t i, std::size_t j) const {
    return (j % ny_) * nx_ + (i % nx_);
  }
  index_t center_node(std::size_t i, std::size_t j) const {
    return nx_ * ny_ + (j % ny_) * nx_ + (i % nx_);
  }
  bool is_center(index_t node) const { return node >= nx_ * ny_; }

  // Position on the half-cell lattice: grid nodes sit at even offsets,
  // centers at odd ones. x = -Lx/2 + half_x * sx / 2.
  std::size_t half_x(index_t node) const {
    const std::size_t local = node % (nx_ * ny_);
    return 2 * (local % nx_) + (is_center(node) ? 1 : 0);
  }
  std::size_t half_y(index_t node) const {
    const std::size_t local = node % (nx_ * ny_);
    return 2 * (local / nx_) + (is_center(node) ? 1 : 0);
  }

  /// Canonical coordinate of a logical node inside [-Lx/2, Lx/2) x [-Ly/2, Ly/2).
  Point node_coordinates(index_t node) const {
    if (node >= node_count()) {
      throw std::out_of_range("mesh: node index " + std::to_string(node) +
                              " out of range (node_count = " +
                              std::to_string(node_count()) + ")");
    }
    return nodes_[node];
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("mesh: cannot open '" + path + "' for writing");
    }
    out << "node,x,y\n" << std::setprecision(17);
    for (index_t k = 0; k < nodes_.size(); ++k) {
      out << k << ',' << nodes_[k].x << ',' << nodes_[k].y << '\n';
    }
  }

 private:
  void build() {
    const double x0 = -0.5 * lx_;
    const double y0 = -0.5 * ly_;
    nodes_.resize(2 * nx_ * ny_);
    for (std::size_t j = 0; j < ny_; ++j) {
      for (std::size_t i = 0; i < nx_; ++i) {
        nodes_[grid_node(i, j)] = {x0 + static_cast<double>(i) * sx_,
                                   y0 + static_cast<double>(j) * sy_};
        nodes_[center_node(i, j)] = {x0 + (static_cast<double>(i) + 0.5) * sx_,
                                     y0 + (static_cast<double>(j) + 0.5) * sy_};
      }
    }

    triangles_.reserve(4 * nx_ * ny_);
    for (std::size_t j = 0; j < ny_; ++j) {
      for (std::size_t i = 0; i < nx_; ++i) {
        const double xa = x0 + static_cast<double>(i) * sx_;
        const double ya = y0 + static_cast<double>(j) * sy_;
        const Point p00{xa, ya}, p10{xa + sx_, ya}, p11{xa + sx_, ya + sy_},
            p01{xa, ya + sy_}, pc{xa + 0.5 * sx_, ya + 0.5 * sy_};
        const index_t n00 = grid_node(i, j), n10 = grid_node(i + 1, j),
                      n11 = grid_node(i + 1, j + 1), n01 = grid_node(i, j + 1),
                      nc = center_node(i, j);
        // counterclockwise: bottom, right, top, left
        triangles_.push_back({{n00, n10, nc}, {p00, p10, pc}});
        triangles_.push_back({{n10, n11, nc}, {p10, p11, pc}});
        triangles_.push_back({{n11, n01, nc}, {p11, p01, pc}});
        triangles_.push_back({{n01, n00, nc}, {p01, p00, pc}});
      }
    }

    h_ = 0.0;
    for (const auto& t : triangles_) h_ = std::max(h_, t.diameter());
  }

  double lx_, ly_;
  std::size_t nx_, ny_;
  double sx_ = 0.0, sy_ = 0.0;
  double h_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
};

inline Mesh build_torus_mesh(double lx, double ly, std::size_t cells_x,
                             std::size_t cells_y) {
  return Mesh(lx, ly, cells_x, cells_y);
}

}  // namespace savac
