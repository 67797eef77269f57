#pragma once

// Linearized implicit-Euler L²-gradient flow for the Ginzburg-Landau energy:
// the order parameter evolves in a coarse trial space (plain P1 or the
// corrected multiscale space), the potential in its constrained Lagrange
// space.  Each step solves two independent linear systems that read only
// step-n data; the multiscale space is refreshed on a warmup/period schedule.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

#include "gllod/io.hpp"
#include "gllod/lod.hpp"
#include "gllod/model.hpp"

namespace gllod {

struct FlowState {
  int n = 0;               // steps taken
  VecXc u_coarse;          // trial-space coefficients
  VecXc u_fine;            // fine-mesh P1 representation, u_fine = B u_coarse
  VecXd a_free;            // potential on free dofs
  std::vector<EnergyBreakdown> energies;  // energies[k] at step k; size n+1
  std::string terminated;  // "", "eps_tol", or "max_steps"
};

class Flow {
 public:
  // Builds meshes, spaces and operators, and initializes the state per
  // cfg.init: "random" draws coarse nodal values r e^{i theta} (r in [0,1],
  // theta in [-pi,pi)) from cfg.seed; "constant:<c>" sets u = c; and
  // "file:<prefix>" reads <prefix>u.glf (plus <prefix>A.glf when present,
  // otherwise A = 0).
  explicit Flow(const RunConfig& cfg);
  ~Flow();

  const RunConfig& config() const { return cfg_; }
  const ModelParams& params() const { return p_; }
  const FlowState& state() const { return st_; }
  const DyadicMesh& fine_mesh() const { return proj_->fine_mesh; }
  const DyadicMesh& coarse_mesh() const { return proj_->coarse_mesh; }
  const CoarseProjection& projection() const { return *proj_; }
  const VectorSpace& aspace() const { return *aspace_; }
  const LodSpace* lod_space() const { return lod_.get(); }
  const SpMatC& basis_map() const;  // corrected basis when multiscale, else inclusion
  VecXd a_full() const { return aspace_->to_full(st_.a_free); }

  // One step: refresh the multiscale space if the schedule says so, then
  // solve (M + tau(K_{A^n} + N(u^n))) u^{n+1} = M u^n restricted to the trial
  // space and (M_A + tau(S_b + M_{|u^n|^2})) A^{n+1} = M_A A^n - tau(J(u^n) -
  // L_H) on the free dofs, and record the energy.
  void step();

  // Steps until |Delta E_GL| <= eps_tol or max_steps, writing checkpoints
  // every cfg.checkpoint_every steps when configured; returns the
  // termination reason and leaves it in state().terminated.
  std::string run();

  // Euclidean norms of the energy gradients restricted to the trial spaces:
  // {||B^H grad_u||, ||grad_A||}.
  std::pair<double, double> projected_residuals() const;

 private:
  void init_state();
  void prepare_step_operators(bool refresh);
  void write_checkpoint() const;

  RunConfig cfg_;
  ModelParams p_;
  std::unique_ptr<CoarseProjection> proj_;
  std::unique_ptr<VectorSpace> aspace_;
  std::unique_ptr<LodSpace> lod_;  // null when cfg.lod is off
  SpMatC iota_c_;                  // inclusion as a complex map (baseline basis)
  SpMatC bh_;                      // adjoint of the current basis map
  SpMatD m_fine_;                  // scalar P1 mass on the fine mesh
  SpMatD ma_, sb_;                 // vector mass and b-form (free dofs)
  VecXd lh_;                       // external-field load
  SpMatC fine_op_;                 // M + tau (K_{A^n} + N(u^n)), per step
  SpMatD a_op_;                    // M_A + tau (S_b + M_{|u^n|^2}), per step
  std::unique_ptr<Eigen::SparseLU<SpMatC>> prec_u_;  // coarse-system preconditioner
  std::unique_ptr<Eigen::SimplicialLDLT<SpMatD>> prec_a_;
  FlowState st_;
};

// Hermitian/symmetric sparse solve with the residual contract
// ||op x - rhs|| <= tol ||rhs||.  Positive-definite operators go through a
// symmetric factorization; indefinite ones fall back to sparse LU.  Throws
// std::runtime_error (naming the operator size) when the contract cannot be
// met.
VecXc solve_linear(const SpMatC& op, const VecXc& rhs, double tol);
VecXd solve_linear(const SpMatD& op, const VecXd& rhs, double tol);

}  // namespace gllod
