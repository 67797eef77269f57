#pragma once
// Convergence experiments: reference-solution management behind a
// content-addressed cache, phase-aligned error computation between nested
// discretizations, log-log rate fitting with an asymptotic-window heuristic,
// and resolution sweeps in the trial mesh (H) or the potential mesh (h) with
// kappa-collapse residuals.

#include <string>
#include <utility>
#include <vector>

#include "gllod/flow.hpp"

namespace gllod {

// A finished run: the fine-mesh order parameter, the full-layout potential,
// and the terminal Ginzburg-Landau energy, with the configuration that
// produced them.
struct Solution {
  RunConfig cfg;
  VecXc u_fine;   // P1 coefficients on cfg.fine_level
  VecXd a_full;   // full layout on (cfg.A_level, cfg.A_degree)
  double energy_gl = 0;
  int steps = 0;
  std::string terminated;
};

// FNV-1a hash (16 hex digits) of the canonical config rendering; the cache
// key.  Two configs share a key exactly when their solution-affecting
// parameters agree.
std::string config_hash(const RunConfig& cfg);

// Runs the flow at cfg, or loads the stored result when cache_dir already
// holds this configuration (the stored rendering is compared, so a hash
// collision cannot alias).  A fresh converged run persists its fields, its
// energy history, and the rendered config under the hash key; runs that stop
// at max_steps are never cached and throw std::runtime_error unless
// require_converged is false.
Solution run_cached(const RunConfig& cfg, const std::string& cache_dir,
                    bool require_converged = true);

// run_cached for a run meant to serve as the reference of a sweep; always
// requires convergence.
Solution run_reference(const RunConfig& cfg, const std::string& cache_dir);

struct ErrorRecord {
  double l2_u = 0;    // ||u - u_ref||_L2 after global phase alignment
  double h1k_u = 0;   // kappa-weighted H1 norm of the aligned difference
  double l2_a = 0;    // ||A - A_ref||_L2 (no alignment: the potential is
  double h1_a = 0;    // unaffected by constant phases), and full H1 norm
  double energy = 0;  // |E_GL - E_GL_ref|
};

// Reference operators assembled once so many candidates can be measured
// against the same reference cheaply.  Const and safely shared across
// threads.
class ErrorContext {
 public:
  explicit ErrorContext(const Solution& ref);

  // Prolongates the candidate to the reference spaces (meshes are nested and
  // the prolongation exact), aligns the global phase of u to the reference,
  // and evaluates the norms through the assembled operators.  Throws
  // std::invalid_argument on kappa mismatch or a candidate finer than the
  // reference, and std::runtime_error when the alignment is undefined
  // (L2-orthogonal order parameters).
  ErrorRecord errors(const Solution& cand) const;

  const DyadicMesh& mesh() const { return rmesh_; }
  const VectorSpace& aspace() const { return raspace_; }

 private:
  RunConfig rcfg_;
  VecXc u_ref_;
  VecXd a_ref_;
  double energy_ref_;
  DyadicMesh rmesh_;
  VectorSpace raspace_;
  SpMatD m_, s_, mv_, gv_;
};

// One-shot convenience around ErrorContext.
ErrorRecord compute_errors(const Solution& cand, const Solution& ref);

struct FitOptions {
  bool window = true;           // apply the asymptotic-window heuristic
  double pre_factor = 0.5;      // drop errors above pre_factor * coarsest error
  double floor_factor = 3.0;    // with a stagnating tail, drop errors within
                                // floor_factor * the smallest error
  double tail_slope_min = 0.5;  // a finest-pair slope below this flags stagnation
};

struct Fit {
  double slope = 0;
  double intercept = 0;          // log err ~ intercept + slope log size
  std::vector<int> used;         // indices into the size-descending ordering
  bool window_fallback = false;  // window kept < 2 points; all points used
};

// Least-squares slope of log(error) against log(mesh size).  Needs at least
// two points, all sizes and errors positive and the sizes not all equal
// (std::invalid_argument otherwise).  With the window enabled, points that
// have not yet decayed below pre_factor times the coarsest error are dropped
// as pre-asymptotic, and when the finest pair decays slower than
// tail_slope_min the points within floor_factor of the smallest error are
// dropped as stagnating; if fewer than two points survive, the fit falls
// back to all points and says so.
Fit fit_rate(std::vector<std::pair<double, double>> points, const FitOptions& opt = {});

struct SweepSpec {
  RunConfig base;           // sweep-point template (kappa/level overridden)
  RunConfig reference;      // reference template (kappa overridden)
  char axis = 'H';          // 'H' sweeps u_level, 'h' sweeps A_level
  std::vector<int> levels;  // swept levels, each strictly below the reference's
  std::vector<double> kappas;
  bool baseline = false;    // H sweeps: also run the plain-P1 trial space
  std::string cache_dir = "cache";
  FitOptions fit;
};

// Spec from a parsed config: the config itself describes the reference run,
// sweep_levels/sweep_axis/kappa_list/sweep_baseline describe the sweep.
SweepSpec make_sweep_spec(const RunConfig& cfg, const std::string& cache_dir);

// One (kappa, space, norm) error curve with its fitted rate.
struct SweepCurve {
  double kappa = 0;
  bool baseline = false;
  std::string norm;  // "L2_u" | "H1k_u" | "L2_A" | "H1_A" | "energy"
  std::vector<std::pair<double, double>> points;  // (size, error), size descending
  Fit fit;
};

struct RateReport {
  std::vector<RateRow> rows;           // multiscale rows, sorted by (kappa, level)
  std::vector<RateRow> baseline_rows;  // plain-P1 rows, same order
  std::vector<SweepCurve> curves;      // every curve with >= 2 points
  double collapse_h1k = 0;  // max relative pairwise gap of the scaled curves
  double collapse_l2 = 0;   // (kappa^-3 / kappa^-4 in H sweeps, raw in h sweeps)
  bool partial = false;     // some run failed; see failures
  std::vector<std::string> failures;
};

// Runs the flow at the reference settings and at every sweep point, all from
// the same starting state (the reference's init mode and seed): the energy
// has many local minima, and the shared start keeps each discrete minimizer
// in the basin the reference resolves, while spaces too coarse to hold that
// basin surface as pre-asymptotic outliers that the fit window drops.
// Errors are measured
// against the per-kappa reference, rates fitted per curve, and collapse
// residuals reported across kappas.  A failed point is recorded in failures
// and its row omitted; a failed reference throws (no errors are computable
// without it).  Points run concurrently when GLLOD_WORKERS allows.
RateReport sweep(const SweepSpec& spec);

// Max over level-matched pairs of same-norm curves (differing kappa) of
// |c1 - c2| / max(c1, c2), after scaling errors by kappa^-exponent, compared
// inside the intersection of the fitted windows (all shared sizes when the
// windows do not overlap).  0 when fewer than two curves carry the norm.
double collapse_residual(const std::vector<SweepCurve>& curves, const std::string& norm,
                         double exponent);

}  // namespace gllod
