#pragma once
// Finite element spaces and assembly.
//
// Scalar fields (the order parameter) are complex P1 on a dyadic mesh with no
// essential conditions; their coefficient vector is simply the nodal values.
// Vector fields (the potential) are real P1 or P2 Lagrange with the
// perfect-conductor constraints built in by free-dof elimination:
// the x1-component vanishes where x1 is 0 or 1, the x2-component where x2 is
// 0 or 1, both at corners.  "Full" layout stores 2 doubles per Lagrange node
// (node-major, constrained entries zero); operators act on the free layout.
//
// Every integral is evaluated with the single degree-4 rule from
// quadrature.hpp, looping over the finest mesh involved in the integrand and
// evaluating coarser-mesh fields through ancestor lookup.  Assembled
// operators are therefore exact derivatives of the quadrature energy; forms
// whose integrands are polynomials of degree <= 4 per element (mass,
// stiffness, curl/div) are also exact integrals.

#include <functional>

#include "gllod/mesh.hpp"
#include "gllod/quadrature.hpp"

namespace gllod {

struct VectorSpace {
  int degree = 1;           // 1 or 2
  DyadicMesh mesh;          // polynomial pieces live on this mesh
  DyadicMesh lagrange_mesh; // holds the Lagrange nodes: = mesh for P1, level+1 for P2

  int num_lnodes() const { return lagrange_mesh.num_nodes(); }
  int full_size() const { return 2 * num_lnodes(); }
  int local_count() const { return degree == 1 ? 3 : 6; }  // scalar basis per element

  std::vector<int> free_of_full;  // full index -> free index, -1 if constrained
  std::vector<int> full_of_free;  // free index -> full index
  int num_free = 0;

  VecXd to_full(const VecXd& free) const;
  VecXd to_free(const VecXd& full) const;

  // Global Lagrange node ids of a triangle's scalar basis (3 or 6 entries).
  void element_lnodes(int tri, int out[6]) const;

  // Scalar basis values and gradients at barycentric lam within a triangle of
  // the given congruence class.
  void basis(const std::array<double, 3>& lam, bool upper, double val[6],
             Eigen::Vector2d grad[6]) const;
};

VectorSpace make_vector_space(int level, int degree);

// --- scalar-space forms (complex P1 nodal basis on `mesh`) -----------------

// L2 mass, symmetric positive definite.
SpMatD assemble_scalar_mass(const DyadicMesh& mesh);

// Gradient stiffness \int grad.grad.
SpMatD assemble_scalar_stiffness(const DyadicMesh& mesh);

// Mass weighted by samples wq (one value per quadrature point, element-major:
// wq[6*t + q]).  The weight may change sign.
SpMatD assemble_weighted_scalar_mass(const DyadicMesh& mesh, const VecXd& wq);

// Covariant form for wavenumber kappa and potential a_full (full layout on
// aspace): K = kappa^-2 S + M_{|A|^2} + (i/kappa) C with
// C_ab = \int (lam_a grad lam_b - lam_b grad lam_a) . A   (real antisymmetric),
// so K is Hermitian and psi^dagger K phi is the sesquilinear covariant form.
// Assembled on the finer of the two meshes.
SpMatC assemble_covariant_form(const DyadicMesh& mesh, double kappa, const VectorSpace& aspace,
                               const VecXd& a_full);

// --- vector-space forms (free-dof layout) ----------------------------------

// b(A,B) = \int curl A curl B + div A div B.
SpMatD assemble_b(const VectorSpace& aspace);

// Plain L2 mass.
SpMatD assemble_vector_mass(const VectorSpace& aspace);

// Componentwise H1 seminorm \int grad A : grad B (for error norms).
SpMatD assemble_vector_h1_semi(const VectorSpace& aspace);

// L2 mass weighted by nonnegative samples wq on quadrature points of wmesh
// (element-major as above; wmesh.level >= aspace.mesh.level).  Throws
// std::invalid_argument if any sample is negative.
SpMatD assemble_weighted_vector_mass(const VectorSpace& aspace, const DyadicMesh& wmesh,
                                     const VecXd& wq);

// Current load J(u)_b = -(1/kappa) \int Im(conj(u) grad u) . phi_b with u
// complex P1 on umesh; assembled on the finer of the two meshes.
VecXd assemble_current_load(const VectorSpace& aspace, double kappa, const DyadicMesh& umesh,
                            const VecXc& u);

// External-field load L_b = \int H curl phi_b, H sampled on the quadrature
// points of `fine` (fine.level >= aspace.mesh.level).
VecXd assemble_external_load(const VectorSpace& aspace,
                             const std::function<double(double, double)>& H,
                             const DyadicMesh& fine);

}  // namespace gllod
