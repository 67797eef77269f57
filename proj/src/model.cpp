#include "gllod/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace gllod {

std::function<double(double, double)> ModelParams::external_field() const {
  if (field_preset == "zero") return [](double, double) { return 0.0; };
  if (field_preset == "sine") {
    double amp = field_amplitude;
    return [amp](double x, double y) {
      return amp * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
    };
  }
  throw std::invalid_argument("unknown external field preset: " + field_preset);
}

EnergyBreakdown energy(const DyadicMesh& umesh, const VecXc& u, const VectorSpace& aspace,
                       const VecXd& a_full, const ModelParams& p) {
  const auto& r = quad_deg4();
  const DyadicMesh& am = umesh.level >= aspace.mesh.level ? umesh : aspace.mesh;
  auto H = p.external_field();
  const double kappa = p.kappa;

  EnergyBreakdown e;
  int aln[6];
  double aval[6];
  Eigen::Vector2d agrad[6];
  for (int t = 0; t < am.num_tris(); ++t) {
    int tu = am.ancestor_tri(t, umesh.level);
    int ta = am.ancestor_tri(t, aspace.mesh.level);
    const auto& tv = umesh.triangles[tu];
    auto hg = umesh.hat_gradients(umesh.tri_is_upper(tu));
    Eigen::Vector2cd du = Eigen::Vector2cd::Zero();
    for (int a = 0; a < 3; ++a) du += hg[a] * u[tv[a]];
    aspace.element_lnodes(ta, aln);
    const int anloc = aspace.local_count();

    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d x = quad_point(am, t, q);
      double w = quad_weight(am, q);
      auto lu = umesh.barycentric(tu, x[0], x[1]);
      Complex uq = lu[0] * u[tv[0]] + lu[1] * u[tv[1]] + lu[2] * u[tv[2]];
      auto la = aspace.mesh.barycentric(ta, x[0], x[1]);
      aspace.basis(la, aspace.mesh.tri_is_upper(ta), aval, agrad);
      Eigen::Vector2d A(0, 0);
      double curl = 0, div = 0;
      for (int k = 0; k < anloc; ++k) {
        double a0 = a_full[2 * aln[k]], a1 = a_full[2 * aln[k] + 1];
        A[0] += aval[k] * a0;
        A[1] += aval[k] * a1;
        curl += agrad[k][0] * a1 - agrad[k][1] * a0;
        div += agrad[k][0] * a0 + agrad[k][1] * a1;
      }
      Eigen::Vector2cd cov = Complex(0, 1.0 / kappa) * du + A * uq;
      e.kinetic += 0.5 * w * cov.squaredNorm();
      double one_m = 1.0 - std::norm(uq);
      e.condensation += 0.25 * w * one_m * one_m;
      double cmh = curl - H(x[0], x[1]);
      e.field += 0.5 * w * cmh * cmh;
      e.div_penalty += 0.5 * w * div * div;
    }
  }
  return e;
}

VecXc grad_u(const DyadicMesh& umesh, const VecXc& u, const VectorSpace& aspace,
             const VecXd& a_full, const ModelParams& p) {
  SpMatC K = assemble_covariant_form(umesh, p.kappa, aspace, a_full);
  VecXc r = K * u;

  // n(u)_a = int (|u|^2 - 1) u lam_a; degree 4 per element, rule exact.
  const auto& rule = quad_deg4();
  for (int t = 0; t < umesh.num_tris(); ++t) {
    const auto& tv = umesh.triangles[t];
    for (int q = 0; q < rule.npts; ++q) {
      Complex uq = rule.lam[q][0] * u[tv[0]] + rule.lam[q][1] * u[tv[1]] +
                   rule.lam[q][2] * u[tv[2]];
      Complex c = quad_weight(umesh, q) * (std::norm(uq) - 1.0) * uq;
      for (int a = 0; a < 3; ++a) r[tv[a]] += c * rule.lam[q][a];
    }
  }
  return r;
}

VecXd grad_A(const DyadicMesh& umesh, const VecXc& u, const VectorSpace& aspace,
             const VecXd& a_full, const ModelParams& p) {
  const auto& r = quad_deg4();
  const DyadicMesh& am = umesh.level >= aspace.mesh.level ? umesh : aspace.mesh;

  SpMatD Sb = assemble_b(aspace);
  VecXd wq(Eigen::Index(am.num_tris()) * r.npts);
  for (int t = 0; t < am.num_tris(); ++t) {
    int tu = am.ancestor_tri(t, umesh.level);
    const auto& tv = umesh.triangles[tu];
    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d x = quad_point(am, t, q);
      auto lu = umesh.barycentric(tu, x[0], x[1]);
      wq[t * r.npts + q] =
          std::norm(lu[0] * u[tv[0]] + lu[1] * u[tv[1]] + lu[2] * u[tv[2]]);
    }
  }
  SpMatD Mw = assemble_weighted_vector_mass(aspace, am, wq);
  VecXd J = assemble_current_load(aspace, p.kappa, umesh, u);
  VecXd L = assemble_external_load(aspace, p.external_field(), am);

  VecXd a_free = aspace.to_free(a_full);
  return Sb * a_free + Mw * a_free + J - L;
}

void gauge_transform(const DyadicMesh& umesh, VecXc& u, const VectorSpace& aspace, VecXd& a_full,
                     const DyadicMesh& phimesh, const VecXd& phi, double kappa) {
  // Rotate u nodally by the pointwise phase.
  VecXc phic = phi.cast<Complex>();
  for (int i = 0; i < umesh.num_nodes(); ++i) {
    double ph = std::real(eval_scalar_p1(phimesh, phic, umesh.nodes[i][0], umesh.nodes[i][1]));
    u[i] *= std::exp(Complex(0, kappa * ph));
  }

  // Lift grad phi (piecewise constant) into the constrained vector space by
  // L2 projection: solve Mv x = (grad phi, basis).
  const auto& r = quad_deg4();
  const DyadicMesh& am = phimesh.level >= aspace.mesh.level ? phimesh : aspace.mesh;
  VecXd rhs = VecXd::Zero(aspace.num_free);
  int aln[6];
  double aval[6];
  Eigen::Vector2d agrad[6];
  const int anloc = aspace.local_count();
  for (int t = 0; t < am.num_tris(); ++t) {
    int tp = am.ancestor_tri(t, phimesh.level);
    int ta = am.ancestor_tri(t, aspace.mesh.level);
    const auto& tv = phimesh.triangles[tp];
    auto hg = phimesh.hat_gradients(phimesh.tri_is_upper(tp));
    Eigen::Vector2d gphi(0, 0);
    for (int a = 0; a < 3; ++a) gphi += hg[a] * phi[tv[a]];
    aspace.element_lnodes(ta, aln);
    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d x = quad_point(am, t, q);
      auto la = aspace.mesh.barycentric(ta, x[0], x[1]);
      aspace.basis(la, aspace.mesh.tri_is_upper(ta), aval, agrad);
      double w = quad_weight(am, q);
      for (int s = 0; s < anloc; ++s)
        for (int c = 0; c < 2; ++c) {
          int row = aspace.free_of_full[2 * aln[s] + c];
          if (row >= 0) rhs[row] += w * aval[s] * gphi[c];
        }
    }
  }
  if (rhs.norm() > 0) {
    SpMatD Mv = assemble_vector_mass(aspace);
    Eigen::SimplicialLDLT<SpMatD> ldlt(Mv);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("gauge lift: mass factorization failed");
    VecXd x = ldlt.solve(rhs);
    a_full += aspace.to_full(x);
  }
}

PhaseAlignment phase_align(const DyadicMesh& mesh, const VecXc& u_ref, const VecXc& u) {
  SpMatD M = assemble_scalar_mass(mesh);
  // z = int u_ref conj(u): Eigen's dot conjugates its left argument.
  Complex z = u.dot(M.cast<Complex>() * u_ref);
  if (z == Complex(0, 0)) throw std::runtime_error("phase alignment undefined: orthogonal fields");
  PhaseAlignment out;
  out.omega = std::arg(z);
  out.aligned = std::exp(Complex(0, out.omega)) * u;
  return out;
}

double norm_l2_sq(const SpMatD& M, const VecXc& u) {
  VecXc Mu = M.cast<Complex>() * u;
  return std::real(u.dot(Mu));
}

double norm_h1k_sq(const SpMatD& M, const SpMatD& S, const VecXc& u, double kappa) {
  VecXc Su = S.cast<Complex>() * u;
  return std::real(u.dot(Su)) / (kappa * kappa) + norm_l2_sq(M, u);
}

double vnorm_l2_sq(const SpMatD& Mv, const VecXd& a_free) { return a_free.dot(Mv * a_free); }

double vnorm_h1_sq(const SpMatD& Mv, const SpMatD& Gv, const VecXd& a_free) {
  return a_free.dot(Mv * a_free) + a_free.dot(Gv * a_free);
}

}  // namespace gllod
