#include "gllod/lod.hpp"

#include <iostream>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace gllod {

// ---------------------------------------------------------------------------
// Projection

VecXc CoarseProjection::project_coeffs(const VecXc& fine) const {
  if (fine.size() != Eigen::Index(fine_mesh.num_nodes()))
    throw std::invalid_argument("project_coeffs: size mismatch");
  VecXd re = mass_solver->solve(mixed * fine.real());
  VecXd im = mass_solver->solve(mixed * fine.imag());
  return re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
}

VecXd CoarseProjection::project_coeffs(const VecXd& fine) const {
  if (fine.size() != Eigen::Index(fine_mesh.num_nodes()))
    throw std::invalid_argument("project_coeffs: size mismatch");
  return mass_solver->solve(mixed * fine);
}

VecXc CoarseProjection::project_field(const VecXc& fine) const {
  VecXc c = project_coeffs(fine);
  return iota.cast<Complex>() * c;
}

CoarseProjection build_projection(int coarse_level, int fine_level) {
  if (coarse_level > fine_level)
    throw std::invalid_argument("build_projection: coarse_level must be <= fine_level");
  CoarseProjection p;
  p.coarse_mesh = build_mesh(coarse_level);
  p.fine_mesh = build_mesh(fine_level);
  p.iota = scalar_p1_prolongation_matrix(coarse_level, fine_level);
  SpMatD m_fine = assemble_scalar_mass(p.fine_mesh);
  // Coarse hats are exactly representable on the fine mesh, so the mixed mass
  // is the fine mass filtered through the inclusion.
  p.mixed = SpMatD(p.iota.transpose() * m_fine);
  p.coarse_mass = assemble_scalar_mass(p.coarse_mesh);
  p.mass_solver = std::make_shared<Eigen::SimplicialLDLT<SpMatD>>();
  p.mass_solver->compute(p.coarse_mass);
  if (p.mass_solver->info() != Eigen::Success)
    throw std::runtime_error("build_projection: coarse mass factorization failed");
  return p;
}

// ---------------------------------------------------------------------------
// Corrector columns

namespace {

// Solves every patch problem for the potential in s.a_hat and fills C, B and
// the coarse Galerkin operators.  Deterministic: columns are processed in
// coarse-node order, patch unknowns in ascending fine-node order, and the
// sparse LU pivoting depends only on the assembled matrix.
void build_columns(LodSpace& s) {
  const DyadicMesh& fine = s.proj->fine_mesh;
  const int nf_total = int(fine.num_nodes());
  const int nc_total = int(s.proj->coarse_mesh.num_nodes());

  SpMatC K = assemble_covariant_form(fine, s.kappa, *s.aspace, s.a_hat);
  SpMatC iota_c = s.proj->iota.cast<Complex>();
  SpMatC R = K * iota_c;  // column z = covariant load of the coarse hat at z

  std::vector<int> fine_local(nf_total, -1);
  std::vector<int> coarse_local(nc_total, -1);
  std::vector<Eigen::Triplet<Complex>> c_trips;
  std::shared_ptr<Eigen::SparseLU<SpMatC>> shared_lu;  // for saturated patches

  std::vector<Eigen::Triplet<Complex>> sys_trips;
  for (int z = 0; z < nc_total; ++z) {
    const Patch& pat = s.patches[std::size_t(z)];

    // Free unknowns: patch nodes away from the patch boundary (domain-boundary
    // nodes stay free), in ascending global order.
    std::vector<int> free_nodes;
    free_nodes.reserve(pat.nodes.size());
    for (std::size_t i = 0; i < pat.nodes.size(); ++i)
      if (pat.node_is_interior[i]) free_nodes.push_back(pat.nodes[i]);
    const int nf = int(free_nodes.size());
    for (int i = 0; i < nf; ++i) fine_local[free_nodes[std::size_t(i)]] = i;

    // Constraint rows: coarse hats with mass against some free node.
    std::vector<int> hats;
    for (int gj : free_nodes)
      for (SpMatD::InnerIterator it(s.proj->mixed, gj); it; ++it)
        if (coarse_local[it.row()] < 0) {
          coarse_local[it.row()] = 0;  // mark
          hats.push_back(int(it.row()));
        }
    std::sort(hats.begin(), hats.end());
    const int nh = int(hats.size());
    for (int a = 0; a < nh; ++a) coarse_local[hats[std::size_t(a)]] = a;

    const int dim = nf + nh;
    sys_trips.clear();
    for (int j = 0; j < nf; ++j) {
      const int gj = free_nodes[std::size_t(j)];
      for (SpMatC::InnerIterator it(K, gj); it; ++it) {
        int li = fine_local[it.row()];
        if (li >= 0) sys_trips.emplace_back(li, j, it.value());
      }
      for (SpMatD::InnerIterator it(s.proj->mixed, gj); it; ++it) {
        int la = coarse_local[it.row()];
        Complex v(it.value(), 0.0);
        sys_trips.emplace_back(nf + la, j, v);  // P
        sys_trips.emplace_back(j, nf + la, v);  // P^T
      }
    }
    SpMatC sys(dim, dim);
    sys.setFromTriplets(sys_trips.begin(), sys_trips.end());

    VecXc rhs = VecXc::Zero(dim);
    for (SpMatC::InnerIterator it(R, z); it; ++it) {
      int li = fine_local[it.row()];
      if (li >= 0) rhs[li] = it.value();
    }

    Eigen::SparseLU<SpMatC>* lu = nullptr;
    Eigen::SparseLU<SpMatC> local_lu;
    if (pat.covers_all) {
      // Saturated patches all assemble the same matrix; factor it once.
      if (!shared_lu) {
        shared_lu = std::make_shared<Eigen::SparseLU<SpMatC>>();
        shared_lu->compute(sys);
        if (shared_lu->info() != Eigen::Success)
          throw std::runtime_error("build_corrector: singular saddle system at patch " +
                                   std::to_string(z));
      }
      lu = shared_lu.get();
    } else {
      local_lu.compute(sys);
      if (local_lu.info() != Eigen::Success)
        throw std::runtime_error("build_corrector: singular saddle system at patch " +
                                 std::to_string(z));
      lu = &local_lu;
    }
    VecXc sol = lu->solve(rhs);

    for (int i = 0; i < nf; ++i) {
      Complex v = sol[i];
      if (v != Complex(0, 0)) c_trips.emplace_back(free_nodes[std::size_t(i)], z, v);
    }

    for (int g : free_nodes) fine_local[g] = -1;
    for (int c : hats) coarse_local[c] = -1;
  }

  s.C = SpMatC(nf_total, nc_total);
  s.C.setFromTriplets(c_trips.begin(), c_trips.end());
  s.B = iota_c - s.C;
  SpMatC bh = s.B.adjoint();
  s.M_H = bh * SpMatC(s.fine_mass.cast<Complex>() * s.B);
  s.K_H = bh * SpMatC(K * s.B);
}

}  // namespace

LodSpace build_corrector(const CoarseProjection& proj, const VectorSpace& aspace,
                         const VecXd& a_full, double kappa, int layers, double c_res,
                         bool strict_resolution) {
  if (kappa <= 0) throw std::invalid_argument("build_corrector: kappa must be positive");
  if (layers < 0) throw std::invalid_argument("build_corrector: layers must be >= 0");
  const double H = proj.coarse_mesh.h();
  if (H > c_res / kappa) {
    std::string msg = "coarse mesh size " + std::to_string(H) +
                      " exceeds the resolution bound c_res/kappa = " +
                      std::to_string(c_res / kappa);
    if (strict_resolution) throw std::runtime_error("build_corrector: " + msg);
    std::cerr << "[gllod] warning: " << msg << "\n";
  }

  LodSpace s;
  s.proj = &proj;
  s.aspace = &aspace;
  s.kappa = kappa;
  s.layers = layers;
  s.a_hat = a_full;
  s.patches.reserve(std::size_t(proj.coarse_mesh.num_nodes()));
  for (int z = 0; z < int(proj.coarse_mesh.num_nodes()); ++z)
    s.patches.push_back(expand_patch(proj.coarse_mesh, proj.fine_mesh, z, layers));
  s.fine_mass = assemble_scalar_mass(proj.fine_mesh);
  build_columns(s);
  return s;
}

LodSpace update_corrector(const LodSpace& space, const VecXd& a_new_full) {
  if (a_new_full.size() != space.a_hat.size())
    throw std::invalid_argument("update_corrector: potential size mismatch");
  LodSpace s = space;
  s.a_hat = a_new_full;
  build_columns(s);
  return s;
}

SpMatC coarse_galerkin(const LodSpace& space, const SpMatC& fine_op) {
  if (fine_op.rows() != space.B.rows() || fine_op.cols() != space.B.rows())
    throw std::invalid_argument("coarse_galerkin: dimension mismatch");
  SpMatC bh = space.B.adjoint();
  return bh * SpMatC(fine_op * space.B);
}

SpMatC coarse_galerkin(const LodSpace& space, const SpMatD& fine_op) {
  return coarse_galerkin(space, SpMatC(fine_op.cast<Complex>()));
}

}  // namespace gllod
