#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <Eigen/Dense>

#include "gllod/lod.hpp"
#include "gllod/model.hpp"

using namespace gllod;

namespace {

VecXc random_complex(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VecXc v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(dist(rng), dist(rng));
  return v;
}

VecXd random_real(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VecXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

// Random element of W = ker(projection) on the fine mesh.
VecXc random_w(const CoarseProjection& proj, unsigned seed) {
  VecXc r = random_complex(Eigen::Index(proj.fine_mesh.num_nodes()), seed);
  return r - proj.iota.cast<Complex>() * proj.project_coeffs(r);
}

bool bitwise_equal(const SpMatC& a, const SpMatC& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  if (std::memcmp(a.innerIndexPtr(), b.innerIndexPtr(), sizeof(int) * std::size_t(a.nonZeros())))
    return false;
  if (std::memcmp(a.outerIndexPtr(), b.outerIndexPtr(), sizeof(int) * std::size_t(a.cols() + 1)))
    return false;
  return std::memcmp(a.valuePtr(), b.valuePtr(), sizeof(Complex) * std::size_t(a.nonZeros())) == 0;
}

}  // namespace

TEST_CASE("projection reproduces coarse functions and is idempotent") {
  CoarseProjection proj = build_projection(2, 4);
  Eigen::Index nc = Eigen::Index(proj.coarse_mesh.num_nodes());

  // Prolongated coarse hat projects back to itself.
  for (int z : {0, 7, 12, 24}) {
    VecXc hat = VecXc::Zero(nc);
    hat[z] = 1.0;
    VecXc fine = proj.iota.cast<Complex>() * hat;
    VecXc back = proj.project_coeffs(fine);
    REQUIRE((back - hat).norm() <= 1e-12);
  }

  // Constants are coarse functions.
  VecXc ones = VecXc::Constant(Eigen::Index(proj.fine_mesh.num_nodes()), 1.0);
  VecXc pc = proj.project_coeffs(ones);
  REQUIRE((pc - VecXc::Constant(nc, 1.0)).norm() <= 1e-12);

  // Idempotence on random fine fields.
  for (unsigned seed : {1u, 2u, 3u}) {
    VecXc phi = random_complex(Eigen::Index(proj.fine_mesh.num_nodes()), seed);
    VecXc once = proj.project_coeffs(phi);
    VecXc twice = proj.project_coeffs(VecXc(proj.iota.cast<Complex>() * once));
    REQUIRE((twice - once).norm() <= 1e-12 * (1.0 + once.norm()));
  }
}

TEST_CASE("projection of a fine hat matches a dense solve") {
  CoarseProjection proj = build_projection(2, 4);
  // A fine node that is not a coarse node: (1/16, 1/16) is fine node 18 on level 4.
  int fine_node = proj.fine_mesh.node_index(1, 1);
  VecXc phi = VecXc::Zero(Eigen::Index(proj.fine_mesh.num_nodes()));
  phi[fine_node] = 1.0;

  Eigen::MatrixXd dense_mass = Eigen::MatrixXd(proj.coarse_mass);
  Eigen::VectorXd rhs = proj.mixed * phi.real();
  Eigen::VectorXd oracle = dense_mass.fullPivLu().solve(rhs);

  VecXc got = proj.project_coeffs(phi);
  REQUIRE((got.real() - oracle).norm() <= 1e-12);
  REQUIRE(got.imag().norm() <= 1e-14);
}

TEST_CASE("equal-level corrector vanishes") {
  CoarseProjection proj = build_projection(3, 3);
  VectorSpace aspace = make_vector_space(2, 1);
  VecXd a0 = VecXd::Zero(aspace.full_size());
  LodSpace s = build_corrector(proj, aspace, a0, 4.0, 2 * 8 + 2, 2.0);
  // W is trivial when coarse and fine spaces agree, so C phi = 0.
  REQUIRE(Eigen::MatrixXcd(s.C).norm() <= 1e-10);
  for (unsigned seed : {1u, 2u}) {
    VecXc phi = random_complex(Eigen::Index(proj.coarse_mesh.num_nodes()), seed);
    VecXc corr = s.C * phi;
    REQUIRE(proj.project_coeffs(corr).norm() <= 1e-10 * (1.0 + phi.norm()));
  }
}

TEST_CASE("global corrector satisfies the variational identity") {
  // Saturating layer count on the (2,4) pair makes every patch global.
  CoarseProjection proj = build_projection(2, 4);
  VectorSpace aspace = make_vector_space(2, 1);
  const double kappa = 8.0;
  VecXd a0 = VecXd::Zero(aspace.full_size());
  LodSpace s = build_corrector(proj, aspace, a0, kappa, 16, 2.0);
  REQUIRE(s.patches[0].covers_all);

  SpMatC K = assemble_covariant_form(proj.fine_mesh, kappa, aspace, a0);

  for (unsigned seed = 1; seed <= 20; ++seed) {
    VecXc phi = random_complex(Eigen::Index(proj.coarse_mesh.num_nodes()), seed);
    VecXc lod = s.B * phi;  // phi_H - C phi_H on the fine mesh
    VecXc w = random_w(proj, 1000 + seed);
    Complex a_val = (w.adjoint() * (K * lod))(0);
    double scale = std::sqrt(std::abs((lod.adjoint() * (K * lod))(0).real()) *
                             std::abs((w.adjoint() * (K * w))(0).real()));
    REQUIRE(std::abs(a_val) <= 1e-10 * (1.0 + scale));
  }

  // Kernel invariant: corrections carry no coarse-scale component.
  for (unsigned seed = 1; seed <= 20; ++seed) {
    VecXc phi = random_complex(Eigen::Index(proj.coarse_mesh.num_nodes()), seed);
    VecXc corr = s.C * phi;
    double num = (proj.iota.cast<Complex>() * proj.project_coeffs(corr)).norm();
    REQUIRE(num <= 1e-10 * (1.0 + corr.norm() + phi.norm()));
  }

  // The multiscale space has full coarse dimension: projecting the basis map
  // recovers the identity.
  for (int z = 0; z < int(proj.coarse_mesh.num_nodes()); ++z) {
    VecXc e = VecXc::Zero(Eigen::Index(proj.coarse_mesh.num_nodes()));
    e[z] = 1.0;
    VecXc back = proj.project_coeffs(VecXc(s.B * e));
    REQUIRE((back - e).norm() <= 1e-10);
  }
}

TEST_CASE("corrector with a nonzero potential keeps the kernel property") {
  CoarseProjection proj = build_projection(2, 4);
  VectorSpace aspace = make_vector_space(2, 2);
  VecXd a = VecXd::Zero(aspace.full_size());
  VecXd rnd = random_real(Eigen::Index(aspace.num_free), 5);
  a = aspace.to_full(rnd * 0.5);
  const double kappa = 4.0;
  LodSpace s = build_corrector(proj, aspace, a, kappa, 16, 2.0);

  SpMatC K = assemble_covariant_form(proj.fine_mesh, kappa, aspace, a);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    VecXc phi = random_complex(Eigen::Index(proj.coarse_mesh.num_nodes()), seed);
    VecXc lod = s.B * phi;
    VecXc w = random_w(proj, 2000 + seed);
    Complex a_val = (w.adjoint() * (K * lod))(0);
    double scale = std::sqrt(std::abs((lod.adjoint() * (K * lod))(0).real()) *
                             std::abs((w.adjoint() * (K * w))(0).real()));
    REQUIRE(std::abs(a_val) <= 1e-10 * (1.0 + scale));
    REQUIRE(proj.project_coeffs(VecXc(s.C * phi)).norm() <= 1e-10 * (1.0 + phi.norm()));
  }
}

TEST_CASE("localization error decays with the layer count") {
  CoarseProjection proj = build_projection(3, 6);
  VectorSpace aspace = make_vector_space(2, 1);
  VecXd a0 = VecXd::Zero(aspace.full_size());
  const double kappa = 8.0;

  SpMatD M = assemble_scalar_mass(proj.fine_mesh);
  SpMatD S = assemble_scalar_stiffness(proj.fine_mesh);

  // Hat at the coarse node closest to the center.
  VecXc phi = VecXc::Zero(Eigen::Index(proj.coarse_mesh.num_nodes()));
  phi[proj.coarse_mesh.node_index(4, 4)] = 1.0;

  LodSpace full = build_corrector(proj, aspace, a0, kappa, 32, 1.0);
  REQUIRE(full.patches[0].covers_all);
  VecXc ref = full.C * phi;

  std::vector<double> err;
  for (int ell : {0, 1, 2, 3}) {
    LodSpace s = build_corrector(proj, aspace, a0, kappa, ell, 1.0);
    VecXc diff = VecXc(s.C * phi) - ref;
    err.push_back(std::sqrt(norm_h1k_sq(M, S, diff, kappa)));

    // Column locality: the column is structurally confined to its patch.
    std::vector<char> allowed(proj.fine_mesh.num_nodes(), 0);
    const Patch& pat = s.patches[std::size_t(proj.coarse_mesh.node_index(4, 4))];
    for (std::size_t i = 0; i < pat.nodes.size(); ++i)
      if (pat.node_is_interior[i]) allowed[std::size_t(pat.nodes[i])] = 1;
    for (SpMatC::InnerIterator it(s.C, proj.coarse_mesh.node_index(4, 4)); it; ++it)
      REQUIRE(allowed[std::size_t(it.row())] == 1);
  }
  CAPTURE(err);
  REQUIRE(err[0] > err[1]);
  REQUIRE(err[1] > err[2]);
  REQUIRE(err[2] > err[3]);
  REQUIRE(err[3] > 0.0);
  // The tail should have shrunk substantially by three layers.
  REQUIRE(err[3] <= 0.5 * err[0]);
}

TEST_CASE("update_corrector reproduces and responds continuously") {
  CoarseProjection proj = build_projection(2, 4);
  VectorSpace aspace = make_vector_space(2, 1);
  const double kappa = 4.0;
  VecXd base = aspace.to_full(random_real(Eigen::Index(aspace.num_free), 9) * 0.3);
  LodSpace s = build_corrector(proj, aspace, base, kappa, 16, 2.0);

  SECTION("same potential gives a bitwise-identical corrector") {
    LodSpace again = update_corrector(s, base);
    REQUIRE(bitwise_equal(s.C, again.C));
    REQUIRE(bitwise_equal(s.B, again.B));
    REQUIRE(bitwise_equal(s.K_H, again.K_H));
  }

  SECTION("corrector change scales down with the potential change") {
    SpMatD M = assemble_scalar_mass(proj.fine_mesh);
    SpMatD S = assemble_scalar_stiffness(proj.fine_mesh);
    VecXd dir = aspace.to_full(random_real(Eigen::Index(aspace.num_free), 10));
    VecXc phi = random_complex(Eigen::Index(proj.coarse_mesh.num_nodes()), 11);

    auto change = [&](double t) {
      LodSpace upd = update_corrector(s, VecXd(base + t * dir));
      VecXc diff = VecXc(upd.C * phi) - VecXc(s.C * phi);
      return std::sqrt(norm_h1k_sq(M, S, diff, kappa));
    };
    double d1 = change(0.2), d2 = change(0.1), d3 = change(0.05);
    CAPTURE(d1, d2, d3);
    REQUIRE(d1 > d2);
    REQUIRE(d2 > d3);
    REQUIRE(d3 <= 0.4 * d1);  // roughly first order in the potential gap
  }
}

TEST_CASE("coarse Galerkin restriction preserves structure") {
  CoarseProjection proj = build_projection(2, 4);
  VectorSpace aspace = make_vector_space(2, 1);
  const double kappa = 6.0;
  VecXd a = aspace.to_full(random_real(Eigen::Index(aspace.num_free), 3) * 0.4);
  LodSpace s = build_corrector(proj, aspace, a, kappa, 16, 2.0);

  SpMatC K = assemble_covariant_form(proj.fine_mesh, kappa, aspace, a);
  SpMatC K_H = coarse_galerkin(s, K);
  REQUIRE(bitwise_equal(K_H, s.K_H));

  Eigen::Index nc = Eigen::Index(proj.coarse_mesh.num_nodes());

  // Hermitian and PSD via Rayleigh quotients.
  for (unsigned seed = 1; seed <= 50; ++seed) {
    VecXc x = random_complex(nc, seed);
    Complex q = (x.adjoint() * (K_H * x))(0);
    REQUIRE(std::abs(q.imag()) <= 1e-10 * (1.0 + std::abs(q.real())));
    REQUIRE(q.real() >= -1e-12 * x.squaredNorm());
  }

  // Quadratic-form values agree with direct evaluation on the fine mesh.
  for (unsigned seed = 1; seed <= 10; ++seed) {
    VecXc x = random_complex(nc, seed);
    Complex via_coarse = (x.adjoint() * (K_H * x))(0);
    VecXc fine = s.B * x;
    Complex via_fine = (fine.adjoint() * (K * fine))(0);
    REQUIRE(std::abs(via_coarse - via_fine) <= 1e-12 * (1.0 + std::abs(via_fine)));
  }

  // Mass consistency against pairwise inner products of the basis columns.
  Eigen::MatrixXcd mh = Eigen::MatrixXcd(s.M_H);
  SpMatD M = assemble_scalar_mass(proj.fine_mesh);
  for (int y = 0; y < nc; y += 7)
    for (int z = 0; z < nc; z += 5) {
      VecXc by = s.B.col(y), bz = s.B.col(z);
      Complex direct = (by.adjoint() * (M.cast<Complex>() * bz))(0);
      REQUIRE(std::abs(mh(y, z) - direct) <= 1e-12 * (1.0 + std::abs(direct)));
    }

  SECTION("dimension mismatch is rejected") {
    SpMatC wrong(3, 3);
    REQUIRE_THROWS_AS(coarse_galerkin(s, wrong), std::invalid_argument);
  }
}

TEST_CASE("fluctuation coercivity witness") {
  // In the resolved regime the covariant form dominates the kappa-weighted
  // norm on the fluctuation space.
  CoarseProjection proj = build_projection(5, 6);
  VectorSpace aspace = make_vector_space(2, 1);
  VecXd a0 = VecXd::Zero(aspace.full_size());
  const double kappa = 6.0;
  SpMatC K = assemble_covariant_form(proj.fine_mesh, kappa, aspace, a0);
  SpMatD M = assemble_scalar_mass(proj.fine_mesh);
  SpMatD S = assemble_scalar_stiffness(proj.fine_mesh);

  double worst = 1e300;
  for (unsigned seed = 1; seed <= 50; ++seed) {
    VecXc w = random_w(proj, seed);
    double a_ww = (w.adjoint() * (K * w))(0).real();
    double nrm = norm_h1k_sq(M, S, w, kappa);
    worst = std::min(worst, a_ww / nrm);
  }
  CAPTURE(worst);
  REQUIRE(worst > 0.0);
  if (worst < 0.5) {
    WARN("coercivity ratio below 1/2: " << worst);
  }
}

TEST_CASE("resolution guard warns or throws") {
  CoarseProjection proj = build_projection(2, 3);  // H = 1/4
  VectorSpace aspace = make_vector_space(2, 1);
  VecXd a0 = VecXd::Zero(aspace.full_size());
  // kappa = 8 violates H <= 1/kappa.
  REQUIRE_THROWS_WITH(build_corrector(proj, aspace, a0, 8.0, 2, 1.0, true),
                      Catch::Matchers::ContainsSubstring("resolution"));
  // Non-strict builds still succeed (warning only).
  LodSpace s = build_corrector(proj, aspace, a0, 8.0, 2, 1.0, false);
  REQUIRE(s.C.cols() == Eigen::Index(proj.coarse_mesh.num_nodes()));
}
