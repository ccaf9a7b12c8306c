#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "savac/fem.hpp"
#include "savac/mesh.hpp"

namespace savac {

// Origin-centered elliptical droplet, phi = +1 inside and -1 outside, with a
// tanh interface profile across the ellipse boundary:
//   phi(x, y) = tanh((1 - rho) sqrt(a b) / (sqrt(2) eps)),
//   rho = sqrt((x/a)^2 + (y/b)^2).
// (1 - rho) sqrt(a b) approximates the signed distance to the boundary and
// sqrt(2) eps is the width of the one-dimensional equilibrium profile.
struct EllipseDroplet {
  double semi_axis_x = 0.75;
  double semi_axis_y = 0.5;

  bool operator==(const EllipseDroplet&) const = default;

  double operator()(double x, double y, double epsilon) const {
    const double rho = std::hypot(x / semi_axis_x, y / semi_axis_y);
    const double dist = (1.0 - rho) * std::sqrt(semi_axis_x * semi_axis_y);
    return std::tanh(dist / (std::numbers::sqrt2 * epsilon));
  }
};

inline NodalField ellipse_initial_field(const Mesh& mesh, const EllipseDroplet& drop,
                                        double epsilon) {
  if (!(drop.semi_axis_x > 0.0) || !(drop.semi_axis_y > 0.0)) {
    throw std::invalid_argument("initial datum: ellipse semi-axes must be positive");
  }
  return interpolate(mesh, [&](double x, double y) { return drop(x, y, epsilon); });
}

}  // namespace savac
