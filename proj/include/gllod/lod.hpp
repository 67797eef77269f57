#pragma once

// Localized orthogonal decomposition of the scalar P1 space: the L²-projection
// onto the coarse mesh, the covariant-form corrector C built from patch-local
// saddle-point problems, and the resulting multiscale basis map B = ι − C used
// to Galerkin-restrict fine-mesh operators.

#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "gllod/fem.hpp"
#include "gllod/mesh.hpp"

namespace gllod {

// ---------------------------------------------------------------------------
// L²-projection fine P1 -> coarse P1.

struct CoarseProjection {
  DyadicMesh coarse_mesh;  // level J
  DyadicMesh fine_mesh;    // level j >= J
  SpMatD iota;             // fine x coarse inclusion (coarse hats in fine basis)
  SpMatD mixed;            // coarse x fine: (coarse hat, fine hat)_{L²}
  SpMatD coarse_mass;      // coarse x coarse P1 mass
  std::shared_ptr<Eigen::SimplicialLDLT<SpMatD>> mass_solver;

  // Coarse coefficients of the projection of a fine field.
  VecXc project_coeffs(const VecXc& fine) const;
  VecXd project_coeffs(const VecXd& fine) const;
  // Projection expressed back on the fine mesh (iota * coefficients).
  VecXc project_field(const VecXc& fine) const;
};

// Precondition: 1 <= coarse_level <= fine_level.
CoarseProjection build_projection(int coarse_level, int fine_level);

// ---------------------------------------------------------------------------
// Corrector and multiscale space.

struct LodSpace {
  // Non-owning: the projection and vector space must outlive the LodSpace.
  const CoarseProjection* proj = nullptr;
  const VectorSpace* aspace = nullptr;
  double kappa = 0;
  int layers = 0;
  VecXd a_hat;                 // potential (full layout) the corrector was built with
  std::vector<Patch> patches;  // one per coarse node, reused by update_corrector
  SpMatC C;                    // fine x coarse corrector
  SpMatC B;                    // fine x coarse basis map, B = iota - C
  SpMatD fine_mass;            // fine scalar P1 mass (cached)
  SpMatC M_H;                  // B^H M_fine B
  SpMatC K_H;                  // B^H K_A B for the stored potential

  int num_coarse() const { return int(proj->coarse_mesh.num_nodes()); }
  int num_fine() const { return int(proj->fine_mesh.num_nodes()); }
};

// Builds the corrector for the potential a_full (full layout on aspace).  Each
// coarse node z gets a saddle-point problem on its `layers`-layer patch:
// minimize the covariant energy of q_z - lambda_z subject to zero L² moments
// against every coarse hat meeting the patch and zero values on patch-boundary
// fine nodes off the domain boundary.  Emits a warning (or throws when
// strict_resolution) if the coarse mesh violates H <= c_res / kappa.
// Throws std::runtime_error naming the patch if a saddle system is singular.
LodSpace build_corrector(const CoarseProjection& proj, const VectorSpace& aspace,
                         const VecXd& a_full, double kappa, int layers, double c_res = 1.0,
                         bool strict_resolution = false);

// Rebuilds every corrector column for a new potential on the same vector
// space, reusing the patches and projection.  Identical input potentials give
// bitwise-identical correctors.
LodSpace update_corrector(const LodSpace& space, const VecXd& a_new_full);

// B^H (fine operator) B.  Throws std::invalid_argument on dimension mismatch.
SpMatC coarse_galerkin(const LodSpace& space, const SpMatC& fine_op);
SpMatC coarse_galerkin(const LodSpace& space, const SpMatD& fine_op);

}  // namespace gllod
