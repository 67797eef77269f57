#include <catch2/catch_amalgamated.hpp>

#include "gllod/mesh.hpp"
#include "gllod/quadrature.hpp"
#include "gllod/util.hpp"

using namespace gllod;

TEST_CASE("mesh counts and geometry") {
  DyadicMesh m1 = build_mesh(1);
  CHECK(m1.num_nodes() == 9);
  CHECK(m1.num_tris() == 8);

  DyadicMesh m3 = build_mesh(3);
  CHECK(m3.num_nodes() == 81);
  CHECK(m3.num_tris() == 128);

  // All triangles congruent, area 2^(-2j-1); they tile the unit square.
  DyadicMesh m2 = build_mesh(2);
  CHECK(m2.tri_area() == 0.03125);
  double total = 0;
  for (int t = 0; t < m2.num_tris(); ++t) total += m2.tri_area();
  CHECK(total == 1.0);  // exact in binary arithmetic

  CHECK_THROWS_AS(build_mesh(0), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(13), std::invalid_argument);
}

TEST_CASE("boundary tags") {
  DyadicMesh m = build_mesh(3);
  int corners = 0, ex1 = 0, ex2 = 0, interior = 0;
  for (int i = 0; i < m.num_nodes(); ++i) {
    switch (m.tags[i]) {
      case BoundaryTag::corner: ++corners; break;
      case BoundaryTag::edge_x1: ++ex1; break;
      case BoundaryTag::edge_x2: ++ex2; break;
      case BoundaryTag::interior: ++interior; break;
    }
  }
  CHECK(corners == 4);
  CHECK(ex1 == 2 * (m.n - 1));  // x1 = 0 or 1, excluding corners
  CHECK(ex2 == 2 * (m.n - 1));
  CHECK(interior == (m.n - 1) * (m.n - 1));
  CHECK(m.tags[m.node_index(0, 0)] == BoundaryTag::corner);
  CHECK(m.tags[m.node_index(0, 3)] == BoundaryTag::edge_x1);
  CHECK(m.tags[m.node_index(3, 8)] == BoundaryTag::edge_x2);
}

TEST_CASE("locate and barycentric coordinates") {
  DyadicMesh m = build_mesh(2);
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    double x = rng.uniform(), y = rng.uniform();
    auto loc = m.locate(x, y);
    REQUIRE(loc.tri >= 0);
    REQUIRE(loc.tri < m.num_tris());
    double s = 0;
    Eigen::Vector2d rec(0, 0);
    for (int a = 0; a < 3; ++a) {
      CHECK(loc.lam[a] >= -1e-14);
      CHECK(loc.lam[a] <= 1 + 1e-14);
      s += loc.lam[a];
      rec += loc.lam[a] * m.nodes[m.triangles[loc.tri][a]];
    }
    CHECK(s == Catch::Approx(1.0).margin(1e-14));
    CHECK(rec[0] == Catch::Approx(x).margin(1e-14));
    CHECK(rec[1] == Catch::Approx(y).margin(1e-14));
    // barycentric() agrees with the coordinates locate produced
    auto lam2 = m.barycentric(loc.tri, x, y);
    for (int a = 0; a < 3; ++a) CHECK(lam2[a] == loc.lam[a]);
  }

  // Points on a cell diagonal resolve to the lower triangle.
  DyadicMesh c = build_mesh(1);
  auto loc = c.locate(0.5, 0.5);
  CHECK(loc.tri == 6);  // lower triangle of cell (1,1)
  CHECK(loc.lam[0] == 1.0);
  // Top-right corner stays inside the mesh.
  auto corner = c.locate(1.0, 1.0);
  CHECK(corner.tri < c.num_tris());
}

TEST_CASE("ancestor triangles") {
  // A triangle is its own ancestor at its own level.
  DyadicMesh m2 = build_mesh(2);
  for (int t = 0; t < m2.num_tris(); ++t) CHECK(m2.ancestor_tri(t, 2) == t);

  // The ancestor must contain the fine triangle; centroids of fine triangles
  // never sit on coarse edges, so locating the centroid identifies the
  // containing coarse triangle unambiguously.
  DyadicMesh fine = build_mesh(3);
  for (int cl = 1; cl <= 2; ++cl) {
    DyadicMesh coarse = build_mesh(cl);
    for (int t = 0; t < fine.num_tris(); ++t) {
      const auto& tv = fine.triangles[t];
      Eigen::Vector2d cen = (fine.nodes[tv[0]] + fine.nodes[tv[1]] + fine.nodes[tv[2]]) / 3.0;
      CHECK(fine.ancestor_tri(t, cl) == coarse.locate(cen[0], cen[1]).tri);
    }
  }
  // Every coarse triangle owns exactly 4^d descendants.
  std::vector<int> cnt(build_mesh(1).num_tris(), 0);
  for (int t = 0; t < fine.num_tris(); ++t) cnt[fine.ancestor_tri(t, 1)]++;
  for (int c : cnt) CHECK(c == 16);
}

TEST_CASE("patch growth") {
  DyadicMesh m = build_mesh(2);

  // Zero layers: the support of the nodal hat.
  Patch interior = expand_patch(m, m, m.node_index(2, 2), 0);
  CHECK(interior.elements.size() == 6);
  CHECK(interior.coarse_elements.size() == 6);
  CHECK_FALSE(interior.covers_all);

  // Corner nodes touch one or two triangles depending on the diagonal.
  Patch c00 = expand_patch(m, m, m.node_index(0, 0), 0);
  CHECK(c00.elements.size() == 2);
  Patch c10 = expand_patch(m, m, m.node_index(m.n, 0), 0);
  CHECK(c10.elements.size() == 1);

  // Growth is monotone and saturates to the whole mesh.
  std::size_t prev = 0;
  for (int l = 0; l <= 2 * m.n; ++l) {
    Patch p = expand_patch(m, m, m.node_index(0, 0), l);
    CHECK(p.elements.size() >= prev);
    prev = p.elements.size();
  }
  CHECK(expand_patch(m, m, m.node_index(0, 0), 2 * m.n).covers_all);

  // Monotone set inclusion, not just counts.
  Patch p1 = expand_patch(m, m, m.node_index(1, 1), 1);
  Patch p2 = expand_patch(m, m, m.node_index(1, 1), 2);
  CHECK(std::includes(p2.elements.begin(), p2.elements.end(), p1.elements.begin(),
                      p1.elements.end()));
}

TEST_CASE("patch on a finer mesh") {
  DyadicMesh coarse = build_mesh(1);
  DyadicMesh fine = build_mesh(3);
  Patch p = expand_patch(coarse, fine, coarse.node_index(1, 1), 0);
  CHECK(p.coarse_elements.size() == 6);
  CHECK(p.elements.size() == 6 * 16);  // every coarse triangle refines into 4^2 fine ones

  // The fine elements are exactly the descendants of the coarse region.
  for (int t : p.elements) {
    int anc = fine.ancestor_tri(t, coarse.level);
    CHECK(std::binary_search(p.coarse_elements.begin(), p.coarse_elements.end(), anc));
  }

  // Interior flags: set iff every incident fine triangle lies in the patch.
  std::vector<std::uint8_t> in_patch(fine.num_tris(), 0);
  for (int t : p.elements) in_patch[t] = 1;
  REQUIRE(p.nodes.size() == p.node_is_interior.size());
  int n_free = 0, n_clamped = 0;
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    bool all_in = true;
    for (int t : fine.node_to_tris()[p.nodes[k]])
      if (!in_patch[t]) all_in = false;
    CHECK(int(all_in) == int(p.node_is_interior[k]));
    (all_in ? n_free : n_clamped)++;
  }
  CHECK(n_free > 0);
  CHECK(n_clamped > 0);
}

TEST_CASE("scalar prolongation reproduces the coarse function") {
  // Hat at the center of the level-1 mesh, prolonged to level 2: value 1 at
  // the center, 1/2 at edge midpoints of its support along mesh edges, 0
  // across the anti-diagonal (supports only touch along y = x diagonals).
  VecXc hat = VecXc::Zero(9);
  hat[4] = 1.0;  // node (1,1) = (1/2,1/2)
  VecXc fine = prolongate_scalar(hat, 1, 2);
  DyadicMesh m2 = build_mesh(2);
  auto at = [&](int ix, int iy) { return fine[m2.node_index(ix, iy)].real(); };
  CHECK(at(2, 2) == 1.0);
  CHECK(at(1, 2) == 0.5);
  CHECK(at(3, 2) == 0.5);
  CHECK(at(2, 1) == 0.5);
  CHECK(at(2, 3) == 0.5);
  CHECK(at(1, 1) == 0.5);
  CHECK(at(3, 3) == 0.5);
  CHECK(at(1, 3) == 0.0);
  CHECK(at(3, 1) == 0.0);

  // Same-level prolongation is the identity.
  VecXc same = prolongate_scalar(hat, 1, 1);
  CHECK((same - hat).norm() == 0.0);

  // A random coarse function is reproduced exactly after prolongation.
  Rng rng(11);
  DyadicMesh c = build_mesh(2);
  VecXc u(c.num_nodes());
  for (int i = 0; i < c.num_nodes(); ++i) u[i] = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
  VecXc up = prolongate_scalar(u, 2, 5);
  DyadicMesh f = build_mesh(5);
  for (int k = 0; k < 100; ++k) {
    double x = rng.uniform(), y = rng.uniform();
    Complex a = eval_scalar_p1(c, u, x, y);
    Complex b = eval_scalar_p1(f, up, x, y);
    CHECK(std::abs(a - b) <= 1e-13);
  }

  // The prolongation matrix encodes the same map.
  SpMatD P = scalar_p1_prolongation_matrix(2, 5);
  VecXc up2 = P.cast<Complex>() * u;
  CHECK((up2 - up).norm() <= 1e-14);
}

TEST_CASE("vector evaluation and prolongation") {
  Rng rng(23);

  // Degree 2 reproduces quadratics exactly: set Lagrange values of
  // u = (x^2, x y) and evaluate anywhere.
  DyadicMesh m = build_mesh(2);
  DyadicMesh lag = build_mesh(3);  // P2 Lagrange nodes live on the refined grid
  VecXd full(2 * lag.num_nodes());
  for (int i = 0; i < lag.num_nodes(); ++i) {
    double x = lag.nodes[i][0], y = lag.nodes[i][1];
    full[2 * i] = x * x;
    full[2 * i + 1] = x * y;
  }
  for (int k = 0; k < 100; ++k) {
    double x = rng.uniform(), y = rng.uniform();
    Eigen::Vector2d v = eval_vector(m, 2, full, x, y);
    CHECK(v[0] == Catch::Approx(x * x).margin(1e-14));
    CHECK(v[1] == Catch::Approx(x * y).margin(1e-14));
  }

  // P1 -> P2 embedding at the same level preserves point values.
  DyadicMesh c = build_mesh(2);
  VecXd p1(2 * c.num_nodes());
  for (int i = 0; i < 2 * c.num_nodes(); ++i) p1[i] = rng.uniform(-1, 1);
  VecXd p2 = prolongate_vector(p1, 2, 1, 2, 2);
  REQUIRE(p2.size() == 2 * lag.num_nodes());
  for (int k = 0; k < 100; ++k) {
    double x = rng.uniform(), y = rng.uniform();
    Eigen::Vector2d a = eval_vector(c, 1, p1, x, y);
    Eigen::Vector2d b = eval_vector(c, 2, p2, x, y);
    CHECK((a - b).norm() <= 1e-13);
  }

  // P2 -> P2 across levels.
  VecXd fine2 = prolongate_vector(p2, 2, 2, 4, 2);
  DyadicMesh f = build_mesh(4);
  for (int k = 0; k < 100; ++k) {
    double x = rng.uniform(), y = rng.uniform();
    Eigen::Vector2d a = eval_vector(c, 2, p2, x, y);
    Eigen::Vector2d b = eval_vector(f, 2, fine2, x, y);
    CHECK((a - b).norm() <= 1e-13);
  }
}

TEST_CASE("quadrature rule integrates degree-4 polynomials exactly") {
  const auto& r = quad_deg4();
  double wsum = 0;
  for (int q = 0; q < r.npts; ++q) wsum += r.w[q];
  CHECK(wsum == Catch::Approx(0.5).epsilon(1e-15));

  // Reference-triangle monomial integrals: \int x^p y^q = p! q! / (p+q+2)!.
  auto fact = [](int k) { double f = 1; for (int i = 2; i <= k; ++i) f *= i; return f; };
  for (int p = 0; p + 0 <= 4; ++p) {
    for (int q = 0; p + q <= 4; ++q) {
      double exact = fact(p) * fact(q) / fact(p + q + 2);
      double approx = 0;
      for (int k = 0; k < r.npts; ++k) {
        double x = r.lam[k][1], y = r.lam[k][2];
        approx += r.w[k] * std::pow(x, p) * std::pow(y, q);
      }
      CHECK(approx == Catch::Approx(exact).margin(1e-15));
    }
  }

  // Physical points/weights integrate over the mesh: \int_[0,1]^2 x y = 1/4.
  DyadicMesh m = build_mesh(2);
  double integral = 0;
  for (int t = 0; t < m.num_tris(); ++t)
    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d p = quad_point(m, t, q);
      integral += quad_weight(m, q) * p[0] * p[1];
    }
  CHECK(integral == Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("hat gradients match finite differences of barycentrics") {
  DyadicMesh m = build_mesh(3);
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    double x = rng.uniform(0.1, 0.9), y = rng.uniform(0.1, 0.9);
    auto loc = m.locate(x, y);
    auto g = m.hat_gradients(m.tri_is_upper(loc.tri));
    const double t = 1e-6;
    for (int a = 0; a < 3; ++a) {
      // Stay inside the triangle: central differences around an interior point.
      double cx0 = m.barycentric(loc.tri, x + t, y)[a], cx1 = m.barycentric(loc.tri, x - t, y)[a];
      double cy0 = m.barycentric(loc.tri, x, y + t)[a], cy1 = m.barycentric(loc.tri, x, y - t)[a];
      CHECK((cx0 - cx1) / (2 * t) == Catch::Approx(g[a][0]).margin(1e-6));
      CHECK((cy0 - cy1) / (2 * t) == Catch::Approx(g[a][1]).margin(1e-6));
    }
  }
}
