#include "gllod/fem.hpp"

#include <stdexcept>

namespace gllod {

namespace {

// Resolve which of two nested meshes is finer; assembly loops run over it.
const DyadicMesh& finer(const DyadicMesh& a, const DyadicMesh& b) {
  return a.level >= b.level ? a : b;
}

}  // namespace

// ---------------------------------------------------------------------------
// VectorSpace

VectorSpace make_vector_space(int level, int degree) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("vector space degree must be 1 or 2");
  VectorSpace s;
  s.degree = degree;
  s.mesh = build_mesh(level);
  s.lagrange_mesh = degree == 1 ? s.mesh : build_mesh(level + 1);

  s.free_of_full.assign(s.full_size(), -1);
  for (int i = 0; i < s.num_lnodes(); ++i) {
    BoundaryTag tag = s.lagrange_mesh.tags[i];
    bool c0 = (tag == BoundaryTag::edge_x1 || tag == BoundaryTag::corner);
    bool c1 = (tag == BoundaryTag::edge_x2 || tag == BoundaryTag::corner);
    if (!c0) {
      s.free_of_full[2 * i] = s.num_free++;
      s.full_of_free.push_back(2 * i);
    }
    if (!c1) {
      s.free_of_full[2 * i + 1] = s.num_free++;
      s.full_of_free.push_back(2 * i + 1);
    }
  }
  return s;
}

VecXd VectorSpace::to_full(const VecXd& free) const {
  VecXd full = VecXd::Zero(full_size());
  for (int k = 0; k < num_free; ++k) full[full_of_free[k]] = free[k];
  return full;
}

VecXd VectorSpace::to_free(const VecXd& full) const {
  VecXd free(num_free);
  for (int k = 0; k < num_free; ++k) free[k] = full[full_of_free[k]];
  return free;
}

void VectorSpace::element_lnodes(int tri, int out[6]) const {
  if (degree == 1) {
    for (int a = 0; a < 3; ++a) out[a] = mesh.triangles[tri][a];
  } else {
    auto ln = p2_lagrange_nodes(mesh, tri);
    for (int a = 0; a < 6; ++a) out[a] = ln[a];
  }
}

void VectorSpace::basis(const std::array<double, 3>& lam, bool upper, double val[6],
                        Eigen::Vector2d grad[6]) const {
  auto hg = mesh.hat_gradients(upper);
  if (degree == 1) {
    for (int a = 0; a < 3; ++a) {
      val[a] = lam[a];
      grad[a] = hg[a];
    }
  } else {
    p2_basis_values(lam, val);
    p2_basis_grads(lam, hg, grad);
  }
}

// ---------------------------------------------------------------------------
// Scalar-space forms

SpMatD assemble_scalar_mass(const DyadicMesh& mesh) {
  const auto& r = quad_deg4();
  // One element matrix serves both congruence classes: values are barycentric.
  Eigen::Matrix3d el = Eigen::Matrix3d::Zero();
  for (int q = 0; q < r.npts; ++q)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) el(a, b) += quad_weight(mesh, q) * r.lam[q][a] * r.lam[q][b];

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(mesh.num_tris()) * 9);
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto& tv = mesh.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trips.emplace_back(tv[a], tv[b], el(a, b));
  }
  SpMatD M(mesh.num_nodes(), mesh.num_nodes());
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

SpMatD assemble_scalar_stiffness(const DyadicMesh& mesh) {
  Eigen::Matrix3d el[2];
  for (int cls = 0; cls < 2; ++cls) {
    auto g = mesh.hat_gradients(cls == 1);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) el[cls](a, b) = mesh.tri_area() * g[a].dot(g[b]);
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(mesh.num_tris()) * 9);
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto& tv = mesh.triangles[t];
    const auto& e = el[mesh.tri_is_upper(t) ? 1 : 0];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trips.emplace_back(tv[a], tv[b], e(a, b));
  }
  SpMatD S(mesh.num_nodes(), mesh.num_nodes());
  S.setFromTriplets(trips.begin(), trips.end());
  S.makeCompressed();
  return S;
}

SpMatD assemble_weighted_scalar_mass(const DyadicMesh& mesh, const VecXd& wq) {
  const auto& r = quad_deg4();
  if (wq.size() != Eigen::Index(mesh.num_tris()) * r.npts)
    throw std::invalid_argument("weighted scalar mass: sample vector size mismatch");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(mesh.num_tris()) * 9);
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto& tv = mesh.triangles[t];
    Eigen::Matrix3d el = Eigen::Matrix3d::Zero();
    for (int q = 0; q < r.npts; ++q) {
      double w = quad_weight(mesh, q) * wq[t * r.npts + q];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) el(a, b) += w * r.lam[q][a] * r.lam[q][b];
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trips.emplace_back(tv[a], tv[b], el(a, b));
  }
  SpMatD M(mesh.num_nodes(), mesh.num_nodes());
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

SpMatC assemble_covariant_form(const DyadicMesh& mesh, double kappa, const VectorSpace& aspace,
                               const VecXd& a_full) {
  const auto& r = quad_deg4();
  const DyadicMesh& am = finer(mesh, aspace.mesh);
  const double ik2 = 1.0 / (kappa * kappa);

  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(std::size_t(am.num_tris()) * 9);
  int aln[6];
  double aval[6];
  Eigen::Vector2d agrad[6];
  for (int t = 0; t < am.num_tris(); ++t) {
    int tu = am.ancestor_tri(t, mesh.level);
    int ta = am.ancestor_tri(t, aspace.mesh.level);
    const auto& tv = mesh.triangles[tu];
    auto hg = mesh.hat_gradients(mesh.tri_is_upper(tu));
    aspace.element_lnodes(ta, aln);
    const int anloc = aspace.local_count();

    Eigen::Matrix3cd el = Eigen::Matrix3cd::Zero();
    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d x = quad_point(am, t, q);
      auto lu = mesh.barycentric(tu, x[0], x[1]);
      auto la = aspace.mesh.barycentric(ta, x[0], x[1]);
      aspace.basis(la, aspace.mesh.tri_is_upper(ta), aval, agrad);
      Eigen::Vector2d A(0, 0);
      for (int k = 0; k < anloc; ++k) {
        A[0] += aval[k] * a_full[2 * aln[k]];
        A[1] += aval[k] * a_full[2 * aln[k] + 1];
      }
      double w = quad_weight(am, q);
      double A2 = A.squaredNorm();
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double re = ik2 * hg[a].dot(hg[b]) + A2 * lu[a] * lu[b];
          double im = (lu[a] * hg[b].dot(A) - lu[b] * hg[a].dot(A)) / kappa;
          el(a, b) += w * Complex(re, im);
        }
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trips.emplace_back(tv[a], tv[b], el(a, b));
  }
  SpMatC K(mesh.num_nodes(), mesh.num_nodes());
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

// ---------------------------------------------------------------------------
// Vector-space forms

namespace {

// Generic class-matrix assembly over the space's own mesh: entry(k, k') with
// local dofs k = 2 s + c.  The kernel fills one nloc2 x nloc2 matrix per
// congruence class; integrands here are polynomial of degree <= 4, so the
// rule is exact and class matrices are shared by all elements of the class.
template <class Kernel>
SpMatD assemble_class_form(const VectorSpace& sp, Kernel&& kernel) {
  const auto& r = quad_deg4();
  const int nloc = sp.local_count(), nloc2 = 2 * nloc;
  Eigen::MatrixXd el[2];
  double val[6];
  Eigen::Vector2d grad[6];
  for (int cls = 0; cls < 2; ++cls) {
    el[cls] = Eigen::MatrixXd::Zero(nloc2, nloc2);
    for (int q = 0; q < r.npts; ++q) {
      sp.basis(r.lam[q], cls == 1, val, grad);
      double w = quad_weight(sp.mesh, q);
      for (int k = 0; k < nloc2; ++k)
        for (int l = 0; l < nloc2; ++l)
          el[cls](k, l) += w * kernel(k / 2, k % 2, l / 2, l % 2, val, grad);
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(sp.mesh.num_tris()) * nloc2 * nloc2);
  int ln[6];
  for (int t = 0; t < sp.mesh.num_tris(); ++t) {
    sp.element_lnodes(t, ln);
    const auto& e = el[sp.mesh.tri_is_upper(t) ? 1 : 0];
    for (int k = 0; k < nloc2; ++k) {
      int row = sp.free_of_full[2 * ln[k / 2] + k % 2];
      if (row < 0) continue;
      for (int l = 0; l < nloc2; ++l) {
        int col = sp.free_of_full[2 * ln[l / 2] + l % 2];
        if (col >= 0) trips.emplace_back(row, col, e(k, l));
      }
    }
  }
  SpMatD M(sp.num_free, sp.num_free);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

inline double curl_of(int s, int c, const Eigen::Vector2d grad[6]) {
  return c == 1 ? grad[s][0] : -grad[s][1];
}

}  // namespace

SpMatD assemble_b(const VectorSpace& aspace) {
  return assemble_class_form(aspace, [](int s, int c, int s2, int c2, const double*,
                                        const Eigen::Vector2d* g) {
    return curl_of(s, c, g) * curl_of(s2, c2, g) + g[s][c] * g[s2][c2];
  });
}

SpMatD assemble_vector_mass(const VectorSpace& aspace) {
  return assemble_class_form(aspace, [](int s, int c, int s2, int c2, const double* v,
                                        const Eigen::Vector2d*) {
    return c == c2 ? v[s] * v[s2] : 0.0;
  });
}

SpMatD assemble_vector_h1_semi(const VectorSpace& aspace) {
  return assemble_class_form(aspace, [](int s, int c, int s2, int c2, const double*,
                                        const Eigen::Vector2d* g) {
    return c == c2 ? g[s].dot(g[s2]) : 0.0;
  });
}

SpMatD assemble_weighted_vector_mass(const VectorSpace& aspace, const DyadicMesh& wmesh,
                                     const VecXd& wq) {
  const auto& r = quad_deg4();
  if (wmesh.level < aspace.mesh.level)
    throw std::invalid_argument("weighted vector mass: sample mesh coarser than the space");
  if (wq.size() != Eigen::Index(wmesh.num_tris()) * r.npts)
    throw std::invalid_argument("weighted vector mass: sample vector size mismatch");
  if (wq.minCoeff() < 0.0)
    throw std::invalid_argument("weighted vector mass: negative weight sample");

  const int nloc = aspace.local_count(), nloc2 = 2 * nloc;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(wmesh.num_tris()) * nloc2 * nloc2 / 2);
  int ln[6];
  double val[6];
  Eigen::Vector2d grad[6];
  Eigen::MatrixXd el(nloc, nloc);  // scalar block; tensorized by component
  for (int t = 0; t < wmesh.num_tris(); ++t) {
    int ta = wmesh.ancestor_tri(t, aspace.mesh.level);
    aspace.element_lnodes(ta, ln);
    el.setZero();
    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d x = quad_point(wmesh, t, q);
      auto la = aspace.mesh.barycentric(ta, x[0], x[1]);
      aspace.basis(la, aspace.mesh.tri_is_upper(ta), val, grad);
      double w = quad_weight(wmesh, q) * wq[t * r.npts + q];
      for (int s = 0; s < nloc; ++s)
        for (int s2 = 0; s2 < nloc; ++s2) el(s, s2) += w * val[s] * val[s2];
    }
    for (int s = 0; s < nloc; ++s)
      for (int c = 0; c < 2; ++c) {
        int row = aspace.free_of_full[2 * ln[s] + c];
        if (row < 0) continue;
        for (int s2 = 0; s2 < nloc; ++s2) {
          int col = aspace.free_of_full[2 * ln[s2] + c];
          if (col >= 0) trips.emplace_back(row, col, el(s, s2));
        }
      }
  }
  SpMatD M(aspace.num_free, aspace.num_free);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

VecXd assemble_current_load(const VectorSpace& aspace, double kappa, const DyadicMesh& umesh,
                            const VecXc& u) {
  const auto& r = quad_deg4();
  const DyadicMesh& am = finer(umesh, aspace.mesh);
  VecXd load = VecXd::Zero(aspace.num_free);
  const int nloc = aspace.local_count();
  int ln[6];
  double val[6];
  Eigen::Vector2d grad[6];
  for (int t = 0; t < am.num_tris(); ++t) {
    int tu = am.ancestor_tri(t, umesh.level);
    int ta = am.ancestor_tri(t, aspace.mesh.level);
    const auto& tv = umesh.triangles[tu];
    auto hg = umesh.hat_gradients(umesh.tri_is_upper(tu));
    // grad u is constant on the u-element
    Complex du0 = 0, du1 = 0;
    for (int a = 0; a < 3; ++a) {
      du0 += hg[a][0] * u[tv[a]];
      du1 += hg[a][1] * u[tv[a]];
    }
    aspace.element_lnodes(ta, ln);
    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d x = quad_point(am, t, q);
      auto lu = umesh.barycentric(tu, x[0], x[1]);
      Complex uq = lu[0] * u[tv[0]] + lu[1] * u[tv[1]] + lu[2] * u[tv[2]];
      Eigen::Vector2d g(std::imag(std::conj(uq) * du0), std::imag(std::conj(uq) * du1));
      g *= -quad_weight(am, q) / kappa;
      auto la = aspace.mesh.barycentric(ta, x[0], x[1]);
      aspace.basis(la, aspace.mesh.tri_is_upper(ta), val, grad);
      for (int s = 0; s < nloc; ++s)
        for (int c = 0; c < 2; ++c) {
          int row = aspace.free_of_full[2 * ln[s] + c];
          if (row >= 0) load[row] += g[c] * val[s];
        }
    }
  }
  return load;
}

VecXd assemble_external_load(const VectorSpace& aspace,
                             const std::function<double(double, double)>& H,
                             const DyadicMesh& fine) {
  const auto& r = quad_deg4();
  if (fine.level < aspace.mesh.level)
    throw std::invalid_argument("external load: sample mesh coarser than the space");
  VecXd load = VecXd::Zero(aspace.num_free);
  const int nloc = aspace.local_count();
  int ln[6];
  double val[6];
  Eigen::Vector2d grad[6];
  for (int t = 0; t < fine.num_tris(); ++t) {
    int ta = fine.ancestor_tri(t, aspace.mesh.level);
    aspace.element_lnodes(ta, ln);
    for (int q = 0; q < r.npts; ++q) {
      Eigen::Vector2d x = quad_point(fine, t, q);
      double hw = quad_weight(fine, q) * H(x[0], x[1]);
      if (hw == 0.0) continue;
      auto la = aspace.mesh.barycentric(ta, x[0], x[1]);
      aspace.basis(la, aspace.mesh.tri_is_upper(ta), val, grad);
      for (int s = 0; s < nloc; ++s)
        for (int c = 0; c < 2; ++c) {
          int row = aspace.free_of_full[2 * ln[s] + c];
          if (row >= 0) load[row] += hw * curl_of(s, c, grad);
        }
    }
  }
  return load;
}

}  // namespace gllod
