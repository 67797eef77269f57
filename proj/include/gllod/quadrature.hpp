#pragma once

#include <array>

#include "gllod/mesh.hpp"

namespace gllod {

// Six-point, degree-4 symmetric rule on the reference triangle
// {(0,0),(1,0),(0,1)}.  Weights sum to the reference area 1/2.  Every
// integral in the library (forms, loads, energies) goes through this one
// rule so that assembled operators are exact derivatives of the quadrature
// energy: finite differences of the energy then match residual vectors to
// machine precision instead of only up to a quadrature-mismatch term.
struct QuadRule {
  static constexpr int npts = 6;
  std::array<std::array<double, 3>, npts> lam;  // barycentric coordinates
  std::array<double, npts> w;                   // weights, sum = 1/2
};

inline const QuadRule& quad_deg4() {
  static const QuadRule rule = [] {
    QuadRule r;
    const double w1 = 0.223381589678011, a1 = 0.445948490915965;
    const double w2 = 0.109951743655322, a2 = 0.091576213509771;
    int k = 0;
    for (int i = 0; i < 3; ++i, ++k) {
      r.w[k] = 0.5 * w1;
      for (int j = 0; j < 3; ++j) r.lam[k][j] = (i == j) ? 1.0 - 2.0 * a1 : a1;
    }
    for (int i = 0; i < 3; ++i, ++k) {
      r.w[k] = 0.5 * w2;
      for (int j = 0; j < 3; ++j) r.lam[k][j] = (i == j) ? 1.0 - 2.0 * a2 : a2;
    }
    return r;
  }();
  return rule;
}

// Physical quadrature point q of triangle `tri`.
inline Eigen::Vector2d quad_point(const DyadicMesh& mesh, int tri, int q) {
  const auto& r = quad_deg4();
  const auto& tv = mesh.triangles[tri];
  Eigen::Vector2d p(0, 0);
  for (int a = 0; a < 3; ++a) p += r.lam[q][a] * mesh.nodes[tv[a]];
  return p;
}

// Physical weight: \int_T f ≈ sum_q (2|T| w_q) f(x_q).
inline double quad_weight(const DyadicMesh& mesh, int q) {
  return 2.0 * mesh.tri_area() * quad_deg4().w[q];
}

}  // namespace gllod
