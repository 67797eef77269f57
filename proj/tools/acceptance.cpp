// Acceptance harness: runs the 12 release criteria and prints one
// PASS/FAIL/WARN/SKIP line per criterion.  Exit code 0 when no criterion
// FAILs (WARN and SKIP do not fail the run), 1 otherwise.
//
// Heavy criteria (the convergence sweeps) cache their runs under the cache
// directory (default ./acceptance_cache), so the first invocation is slow and
// later invocations re-verify from cached fields in seconds.
//
// Usage: gllod_acceptance [--cache DIR] [--only N[,M...]]

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gllod/fem.hpp"
#include "gllod/mesh.hpp"
#include "gllod/flow.hpp"
#include "gllod/io.hpp"
#include "gllod/lab.hpp"
#include "gllod/lod.hpp"
#include "gllod/model.hpp"
#include "gllod/util.hpp"

namespace fs = std::filesystem;
using namespace gllod;

namespace {

struct Outcome {
  std::string status;  // PASS | FAIL | WARN | SKIP
  std::string detail;
};

double now_s() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Random admissible pair: u nodal values in the unit disc, A free
// coefficients uniform in [-1, 1].
struct RandState {
  VecXc u;
  VecXd a_free;
};
RandState random_state(const DyadicMesh& umesh, const VectorSpace& aspace, std::uint64_t seed) {
  Rng rng(seed);
  RandState s;
  s.u.resize(Eigen::Index(umesh.num_nodes()));
  for (Eigen::Index i = 0; i < s.u.size(); ++i) s.u[i] = rng.unit_disc();
  s.a_free.resize(aspace.num_free);
  for (Eigen::Index i = 0; i < s.a_free.size(); ++i) s.a_free[i] = rng.uniform(-1, 1);
  return s;
}

// --------------------------------------------------------------------------
// 1. Gauge/phase invariance: E_GL(e^{i omega} u, A) = E_GL(u, A).
Outcome crit_gauge() {
  const double tol = 1e-12;
  DyadicMesh mesh = build_mesh(4);
  VectorSpace aspace = make_vector_space(4, 2);
  ModelParams p;
  p.kappa = 6.0;
  Rng rng(20260822);
  double worst = 0;
  for (int s = 0; s < 10; ++s) {
    RandState st = random_state(mesh, aspace, 1000 + std::uint64_t(s));
    VecXd a_full = aspace.to_full(st.a_free);
    const double e0 = energy(mesh, st.u, aspace, a_full, p).total_gl();
    for (int k = 0; k < 10; ++k) {
      const double omega = rng.uniform(-3.141592653589793, 3.141592653589793);
      const VecXc u2 = std::polar(1.0, omega) * st.u;
      const double e1 = energy(mesh, u2, aspace, a_full, p).total_gl();
      worst = std::max(worst, std::abs(e1 - e0) / (1.0 + std::abs(e0)));
    }
  }
  return {worst <= tol ? "PASS" : "FAIL",
          fmt("max relative |dE_GL| %.3e over 10 states x 10 phases (tol %.0e)", worst, tol)};
}

// --------------------------------------------------------------------------
// 2. Gradient consistency: central differences of the energy along a joint
// (u, A) direction converge to the residual pairing at observed order >= 1.9
// over halvings of t from 1e-3 down past 1e-5; the pure-A quotient is exact
// to the rounding floor because the energy is quadratic in A.
Outcome crit_gradient() {
  const double min_order = 1.9;
  DyadicMesh mesh = build_mesh(4);
  VectorSpace aspace = make_vector_space(4, 2);
  ModelParams p;
  p.kappa = 6.0;
  double worst_order = 1e30;
  double worst_a = 0;
  for (int s = 0; s < 5; ++s) {
    RandState st = random_state(mesh, aspace, 7000 + std::uint64_t(s));
    // Scale the potential so its field strength (curl/div ~ coeff/h) is O(1):
    // raw unit coefficients on a level-4 P2 space give energies ~1e3 whose
    // cancellation floor eps*E/t would bury the second-order FD signal the
    // criterion measures.
    st.a_free *= 0.0625;
    VecXd a_full = aspace.to_full(st.a_free);
    Rng rng(9000 + std::uint64_t(s));
    VecXc du(st.u.size());
    for (Eigen::Index i = 0; i < du.size(); ++i) du[i] = rng.unit_disc();
    VecXd da(st.a_free.size());
    for (Eigen::Index i = 0; i < da.size(); ++i) da[i] = rng.uniform(-1, 1);
    const VecXd da_full = aspace.to_full(da);

    const double gu = std::real(du.dot(grad_u(mesh, st.u, aspace, a_full, p)));
    const double ga = da.dot(grad_A(mesh, st.u, aspace, a_full, p));

    std::vector<std::pair<double, double>> pts;  // (t, joint FD error)
    std::vector<double> floors;                  // per-point cancellation floor
    for (int k = 0; k < 7; ++k) {
      const double t = 1e-3 / double(1 << k);
      const double ep =
          energy(mesh, VecXc(st.u + t * du), aspace, VecXd(a_full + t * da_full), p).total();
      const double em =
          energy(mesh, VecXc(st.u - t * du), aspace, VecXd(a_full - t * da_full), p).total();
      pts.push_back({t, std::abs((ep - em) / (2 * t) - gu - ga)});
      floors.push_back(64.0 * 2.220446049250313e-16 * (std::abs(ep) + std::abs(em)) / (2 * t));
      // pure-A quotient: exact (quadratic energy) up to the cancellation
      // floor of the energy difference itself
      const double eap = energy(mesh, st.u, aspace, VecXd(a_full + t * da_full), p).total();
      const double eam = energy(mesh, st.u, aspace, VecXd(a_full - t * da_full), p).total();
      const double qa = (eap - eam) / (2 * t);
      const double a_floor =
          64.0 * 2.220446049250313e-16 * (std::abs(eap) + std::abs(eam)) / (2 * t);
      worst_a = std::max(worst_a, std::abs(qa - ga) / a_floor);
    }
    // least-squares slope of log err vs log t over the points confidently
    // above the cancellation floor of the energy difference
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto [t, e] = pts[k];
      if (e <= floors[k]) continue;
      const double x = std::log(t), y = std::log(e);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      ++n;
    }
    const double order = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
    worst_order = std::min(worst_order, order);
  }
  const bool ok = worst_order >= min_order && worst_a <= 1.0;
  return {ok ? "PASS" : "FAIL",
          fmt("min observed order %.3f (need >= %.1f); pure-A quotient exact to %.2fx the "
              "cancellation floor (need <= 1)",
              worst_order, min_order, worst_a)};
}

// --------------------------------------------------------------------------
// 3. Corrector correctness, unlocalized, on the (2,4) level pair at kappa=8:
// corrections carry no coarse component and the corrected space is
// a-orthogonal to the detail space, for A = 0 and a random bounded A.
Outcome crit_corrector() {
  const double tol = 1e-10;
  CoarseProjection proj = build_projection(2, 4);
  VectorSpace aspace = make_vector_space(2, 2);
  const double kappa = 8.0;
  double worst_pi = 0, worst_a = 0;
  for (int variant = 0; variant < 2; ++variant) {
    VecXd a_full = VecXd::Zero(aspace.full_size());
    if (variant == 1) {
      Rng rng(31);
      VecXd a_free(aspace.num_free);
      for (Eigen::Index i = 0; i < a_free.size(); ++i) a_free[i] = rng.uniform(-1, 1);
      a_full = aspace.to_full(a_free);
    }
    // saturating layer count: every patch covers the whole domain
    LodSpace s = build_corrector(proj, aspace, a_full, kappa, 64, 2.0);
    SpMatC K = assemble_covariant_form(proj.fine_mesh, kappa, aspace, a_full);
    const Eigen::Index nc = Eigen::Index(proj.coarse_mesh.num_nodes());
    for (unsigned seed = 1; seed <= 20; ++seed) {
      Rng rng(seed * 97 + unsigned(variant));
      VecXc phi(nc);
      for (Eigen::Index i = 0; i < nc; ++i) phi[i] = rng.unit_disc();
      // kernel property: pi_H(C phi) = 0
      const VecXc corr = s.C * phi;
      const double num = (proj.iota.cast<Complex>() * proj.project_coeffs(corr)).norm();
      worst_pi = std::max(worst_pi, num / (1e-300 + phi.norm()));
      // detail-space orthogonality: a(phi - C phi, w) = 0 for w in W
      VecXc r(Eigen::Index(proj.fine_mesh.num_nodes()));
      for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = rng.unit_disc();
      const VecXc w = r - proj.iota.cast<Complex>() * proj.project_coeffs(r);
      const VecXc lod = s.B * phi;
      const double a_val = std::abs((w.adjoint() * (K * lod))(0));
      const double scale = std::sqrt(std::abs((lod.adjoint() * (K * lod))(0).real()) *
                                     std::abs((w.adjoint() * (K * w))(0).real()));
      worst_a = std::max(worst_a, a_val / (1.0 + scale));
    }
  }
  const bool ok = worst_pi <= tol && worst_a <= tol;
  return {ok ? "PASS" : "FAIL",
          fmt("max ||pi_H(C phi)||/||phi|| %.2e, max |a(phi - C phi, w)| %.2e (tol %.0e; A=0 and "
              "random A)",
              worst_pi, worst_a, tol)};
}

// --------------------------------------------------------------------------
// 4. Coercivity witness on the detail space at kappa=6, coarse level 5
// (fine level 6): a(w,w)/||w||_{H1k}^2 >= 0.5 for 50 random w.  Warn-level:
// the constant in the underlying coercivity statement is unquantified, so a
// miss warns instead of failing.
Outcome crit_coercivity() {
  CoarseProjection proj = build_projection(5, 6);
  VectorSpace aspace = make_vector_space(5, 2);
  const double kappa = 6.0;
  const VecXd a0 = VecXd::Zero(aspace.full_size());
  SpMatC K = assemble_covariant_form(proj.fine_mesh, kappa, aspace, a0);
  SpMatD M = assemble_scalar_mass(proj.fine_mesh);
  SpMatD S = assemble_scalar_stiffness(proj.fine_mesh);
  double worst = 1e30;
  for (unsigned seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    VecXc r(Eigen::Index(proj.fine_mesh.num_nodes()));
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = rng.unit_disc();
    const VecXc w = r - proj.iota.cast<Complex>() * proj.project_coeffs(r);
    const double a_val = (w.adjoint() * (K * w))(0).real();
    const double h1k = norm_h1k_sq(M, S, w, kappa);
    worst = std::min(worst, a_val / h1k);
  }
  return {worst >= 0.5 ? "PASS" : "WARN",
          fmt("min Rayleigh ratio %.4f over 50 random detail functions (witness bound 0.5)", worst)};
}

// --------------------------------------------------------------------------
// 5. Fixed point: zero external field from u=1, A=0 terminates after one
// step with (numerically) zero energy.
Outcome crit_fixed_point() {
  RunConfig cfg;
  cfg.kappa = 6.0;
  cfg.field_amplitude = 0.0;
  cfg.u_level = 2;
  cfg.A_level = 2;
  cfg.fine_level = 3;
  cfg.lod = false;
  cfg.A_degree = 1;
  cfg.tau = 1.0;
  cfg.eps_tol = 1e-8;
  cfg.init = "constant:1";
  Flow flow(cfg);
  flow.run();
  const FlowState& st = flow.state();
  const double e = st.energies.back().total_gl();
  const bool ok = st.n == 1 && e <= 1e-13;
  return {ok ? "PASS" : "FAIL", fmt("terminated after n=%d step(s), E_GL %.3e (need n=1, <= 1e-13)",
                                    st.n, e)};
}

// --------------------------------------------------------------------------
// 6. Energy monotonicity on the model problem (kappa=6, tau=1, J=5, j_h=6):
// E_GL non-increasing after step 5 until termination at eps_tol=1e-8.  The
// multiscale space is refreshed only during the first 10 steps; the
// energy-diminishing property holds for a fixed space, and a mid-flight space
// swap can bump the energy at the rebuild step.
Outcome crit_monotone() {
  RunConfig cfg;
  cfg.kappa = 6.0;
  cfg.u_level = 5;
  cfg.A_level = 6;
  cfg.fine_level = 6;
  cfg.lod = true;
  cfg.layers = 4;
  cfg.A_degree = 2;
  cfg.tau = 1.0;
  cfg.eps_tol = 1e-8;
  cfg.seed = 1;
  cfg.init = "random";
  cfg.lod_warmup = 10;
  cfg.lod_period = 0;
  Flow flow(cfg);
  flow.run();
  const FlowState& st = flow.state();
  double worst = -1e30;
  int violations = 0;
  for (std::size_t n = 5; n + 1 < st.energies.size(); ++n) {
    const double inc = st.energies[n + 1].total_gl() - st.energies[n].total_gl();
    worst = std::max(worst, inc);
    if (inc > 1e-12) ++violations;
  }
  const bool ok = violations == 0 && st.terminated == "eps_tol";
  return {ok ? "PASS" : "FAIL",
          fmt("%d violation(s) after step 5 over %d steps, max increment %.3e (tol 1e-12), "
              "terminated=%s",
              violations, st.n, worst, st.terminated.c_str())};
}

// --------------------------------------------------------------------------
// Sweep machinery shared by criteria 7, 8, 9 and 11.

RunConfig sweep_base() {
  RunConfig cfg;
  cfg.kappa = 6.0;
  cfg.A_level = 7;
  cfg.fine_level = 7;
  cfg.lod = true;
  cfg.layers = 6;
  cfg.A_degree = 2;
  cfg.tau = 1.0;
  cfg.eps_tol = 1e-10;
  cfg.max_steps = 4000;
  cfg.seed = 1;
  cfg.init = "random";
  cfg.lod_warmup = 2;
  cfg.lod_period = 100;
  return cfg;
}

const SweepCurve* find_curve(const RateReport& rep, double kappa, bool baseline,
                             const std::string& norm) {
  for (const SweepCurve& c : rep.curves)
    if (c.kappa == kappa && c.baseline == baseline && c.norm == norm) return &c;
  return nullptr;
}

std::string curve_note(const SweepCurve* c) {
  if (!c) return "missing";
  return fmt("%.2f over %zu pts%s", c->fit.slope, c->fit.used.size(),
             c->fit.window_fallback ? " (window fallback)" : "");
}

// The H-sweep (criteria 7, 9 and the kappa=6 half of 11) and the h-sweep
// (criterion 8) reports are computed once and shared.
struct SweepReports {
  RateReport h_sweep;       // axis H, kappa 6, with P1 baselines
  RateReport a_sweep;       // axis h, kappa 6
  RateReport collapse;      // axis H, kappa {6, 12}
  bool ready = false;
  std::string error;
};

SweepReports g_sweeps;

void run_sweeps(const std::string& cache_dir) {
  if (g_sweeps.ready || !g_sweeps.error.empty()) return;
  try {
    SweepSpec s7;
    s7.base = sweep_base();
    s7.reference = sweep_base();
    s7.reference.u_level = 6;
    s7.axis = 'H';
    s7.levels = {2, 3, 4, 5};
    s7.kappas = {6.0};
    s7.baseline = true;
    s7.cache_dir = cache_dir;
    g_sweeps.h_sweep = sweep(s7);

    SweepSpec s8;
    s8.base = sweep_base();
    s8.base.u_level = 5;
    s8.reference = s8.base;
    s8.reference.A_level = 7;
    s8.axis = 'h';
    s8.levels = {2, 3, 4, 5, 6};
    s8.kappas = {6.0};
    s8.baseline = false;
    s8.cache_dir = cache_dir;
    g_sweeps.a_sweep = sweep(s8);

    SweepSpec s11 = s7;
    s11.baseline = false;
    s11.kappas = {6.0, 12.0};
    g_sweeps.collapse = sweep(s11);

    g_sweeps.ready = true;
  } catch (const std::exception& e) {
    g_sweeps.error = e.what();
  }
}

// 7. H-sweep rates at desk scale.
Outcome crit_h_rates(const std::string& cache_dir) {
  run_sweeps(cache_dir);
  if (!g_sweeps.error.empty()) return {"FAIL", "sweep failed: " + g_sweeps.error};
  const RateReport& rep = g_sweeps.h_sweep;
  const SweepCurve* h1k = find_curve(rep, 6.0, false, "H1k_u");
  const SweepCurve* l2 = find_curve(rep, 6.0, false, "L2_u");
  const SweepCurve* base = find_curve(rep, 6.0, true, "H1k_u");
  const bool ok_h1k = h1k && h1k->fit.slope >= 2.5;
  const bool ok_l2 = l2 && l2->fit.slope >= 3.3;
  const bool ok_base = base && base->fit.slope >= 0.6 && base->fit.slope <= 1.4;
  std::string d = fmt("LOD H1k slope %s (need >= 2.5), L2 %s (need >= 3.3), P1 H1k %s (need "
                      "[0.6, 1.4])%s",
                      curve_note(h1k).c_str(), curve_note(l2).c_str(), curve_note(base).c_str(),
                      rep.partial ? "; PARTIAL" : "");
  return {(ok_h1k && ok_l2 && ok_base && !rep.partial) ? "PASS" : "FAIL", d};
}

// 8. h-sweep rates at desk scale (P2 potential space).
Outcome crit_a_rates(const std::string& cache_dir) {
  run_sweeps(cache_dir);
  if (!g_sweeps.error.empty()) return {"FAIL", "sweep failed: " + g_sweeps.error};
  const RateReport& rep = g_sweeps.a_sweep;
  const SweepCurve* h1 = find_curve(rep, 6.0, false, "H1_A");
  const SweepCurve* l2 = find_curve(rep, 6.0, false, "L2_A");
  const bool ok_h1 = h1 && h1->fit.slope >= 1.6 && h1->fit.slope <= 2.4;
  const bool ok_l2 = l2 && l2->fit.slope >= 2.5 && l2->fit.slope <= 3.5;
  std::string d = fmt("A H1 slope %s (need [1.6, 2.4]), L2 %s (need [2.5, 3.5])%s",
                      curve_note(h1).c_str(), curve_note(l2).c_str(),
                      rep.partial ? "; PARTIAL" : "");
  return {(ok_h1 && ok_l2 && !rep.partial) ? "PASS" : "FAIL", d};
}

// 9. Energy-error rate on the H-sweep.
Outcome crit_energy_rate(const std::string& cache_dir) {
  run_sweeps(cache_dir);
  if (!g_sweeps.error.empty()) return {"FAIL", "sweep failed: " + g_sweeps.error};
  const SweepCurve* en = find_curve(g_sweeps.h_sweep, 6.0, false, "energy");
  const bool ok = en && en->fit.slope >= 5.0;
  return {ok ? "PASS" : "FAIL",
          fmt("|dE_GL| slope %s (need >= 5)", curve_note(en).c_str())};
}

// 10. Full-scale reference energy (stretch; hours).  Gated behind
// GLLOD_FULL_SCALE=1; a miss warns (minimizers are non-unique local minima)
// rather than failing.
Outcome crit_full_scale() {
  const char* env = std::getenv("GLLOD_FULL_SCALE");
  if (!env || std::string(env) != "1")
    return {"SKIP", "set GLLOD_FULL_SCALE=1 to run the hours-scale reference (E_GL 0.393563 "
                    "+- 5e-3 expected)"};
  RunConfig cfg;
  cfg.kappa = 6.0;
  cfg.u_level = 7;
  cfg.A_level = 9;
  cfg.fine_level = 9;
  cfg.lod = true;
  cfg.layers = 10;
  cfg.A_degree = 2;
  cfg.tau = 1.0;
  cfg.eps_tol = 1e-10;
  cfg.max_steps = 20000;
  cfg.seed = 1;
  cfg.init = "random";
  Flow flow(cfg);
  flow.run();
  const double e = flow.state().energies.back().total_gl();
  const double target = 0.393563, tol = 5e-3;
  const bool ok = std::abs(e - target) <= tol;
  return {ok ? "PASS" : "WARN",
          fmt("E_GL %.6f vs %.6f +- %.0e after %d steps%s", e, target, tol, flow.state().n,
              ok ? "" : "; inspect the vortex configuration (minimizers are non-unique)")};
}

// 11. kappa-collapse of the kappa^-3-scaled H1k curves.
Outcome crit_collapse(const std::string& cache_dir) {
  run_sweeps(cache_dir);
  if (!g_sweeps.error.empty()) return {"FAIL", "sweep failed: " + g_sweeps.error};
  const RateReport& rep = g_sweeps.collapse;
  const bool ok = !rep.partial && rep.collapse_h1k <= 0.5;
  return {ok ? "PASS" : "FAIL",
          fmt("max scaled-curve gap %.3f of curve magnitude (need <= 0.5)%s", rep.collapse_h1k,
              rep.partial ? "; PARTIAL" : "")};
}

// --------------------------------------------------------------------------
// 12. Plumbing: field-file bitwise round trip, CSV round trip, deterministic
// re-runs.
Outcome crit_plumbing() {
  fs::path dir = fs::path("acceptance_scratch");
  fs::create_directories(dir);
  // GLF1 bitwise round trip
  Rng rng(55);
  FieldData f;
  f.kind = 1;
  f.level = 3;
  f.degree = 1;
  f.scalar.resize(81);
  for (Eigen::Index i = 0; i < f.scalar.size(); ++i) f.scalar[i] = rng.unit_disc();
  const std::string fp = (dir / "rt_u.glf").string();
  write_field(fp, f);
  FieldData g = read_field(fp);
  bool field_ok = g.kind == f.kind && g.level == f.level && g.degree == f.degree &&
                  g.scalar.size() == f.scalar.size() &&
                  std::memcmp(g.scalar.data(), f.scalar.data(),
                              sizeof(Complex) * std::size_t(f.scalar.size())) == 0;
  FieldData v;
  v.kind = 2;
  v.level = 2;
  v.degree = 2;
  v.vector_full.resize(2 * 81);
  for (Eigen::Index i = 0; i < v.vector_full.size(); ++i) v.vector_full[i] = rng.uniform(-2, 2);
  const std::string vp = (dir / "rt_A.glf").string();
  write_field(vp, v);
  FieldData w = read_field(vp);
  field_ok = field_ok && w.kind == v.kind && w.level == v.level && w.degree == v.degree &&
             w.vector_full.size() == v.vector_full.size() &&
             std::memcmp(w.vector_full.data(), v.vector_full.data(),
                         sizeof(double) * std::size_t(v.vector_full.size())) == 0;

  // CSV round trips (%.17g is bit-faithful for doubles)
  std::vector<RateRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i] = {6.0 + i, i + 2, std::ldexp(1.0, -(i + 2)), rng.uniform(), rng.uniform(),
               rng.uniform() * 1e-7, rng.uniform() * 1e5, rng.uniform() * 1e-13};
  }
  const std::string rp = (dir / "rt_rates.csv").string();
  write_csv(rp, rows);
  std::vector<RateRow> rows2 = read_csv(rp);
  bool csv_ok = rows2.size() == rows.size();
  for (std::size_t i = 0; csv_ok && i < rows.size(); ++i)
    csv_ok = rows2[i].kappa == rows[i].kappa && rows2[i].level == rows[i].level &&
             rows2[i].mesh_size == rows[i].mesh_size && rows2[i].err_L2_u == rows[i].err_L2_u &&
             rows2[i].err_H1k_u == rows[i].err_H1k_u && rows2[i].err_L2_A == rows[i].err_L2_A &&
             rows2[i].err_H1_A == rows[i].err_H1_A && rows2[i].err_energy == rows[i].err_energy;
  std::vector<EnergyBreakdown> hist(4);
  for (auto& e : hist) {
    e.kinetic = rng.uniform();
    e.condensation = rng.uniform();
    e.field = rng.uniform();
    e.div_penalty = rng.uniform() * 1e-6;
  }
  const std::string ep = (dir / "rt_energy.csv").string();
  write_energy_csv(ep, hist);
  std::vector<EnergyBreakdown> hist2 = read_energy_csv(ep);
  csv_ok = csv_ok && hist2.size() == hist.size();
  for (std::size_t i = 0; csv_ok && i < hist.size(); ++i)
    csv_ok = hist2[i].kinetic == hist[i].kinetic && hist2[i].condensation == hist[i].condensation &&
             hist2[i].field == hist[i].field && hist2[i].div_penalty == hist[i].div_penalty;

  // Deterministic re-runs: identical config -> bitwise-identical state and
  // byte-identical serialized fields.
  RunConfig cfg;
  cfg.kappa = 5.0;
  cfg.u_level = 2;
  cfg.A_level = 2;
  cfg.fine_level = 3;
  cfg.lod = true;
  cfg.layers = 2;
  cfg.A_degree = 2;
  cfg.tau = 0.5;
  cfg.eps_tol = 1e-6;
  cfg.max_steps = 25;
  cfg.seed = 12;
  cfg.init = "random";
  auto run_once = [&](const std::string& tag) {
    Flow flow(cfg);
    flow.run();
    FieldData out;
    out.kind = 1;
    out.level = std::uint16_t(cfg.fine_level);
    out.degree = 1;
    out.scalar = flow.state().u_fine;
    const std::string path = (dir / (tag + "_u.glf")).string();
    write_field(path, out);
    return path;
  };
  const std::string p1 = run_once("rerun1"), p2 = run_once("rerun2");
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  const bool det_ok = b1.str().size() > 0 && b1.str() == b2.str();

  const bool ok = field_ok && csv_ok && det_ok;
  return {ok ? "PASS" : "FAIL",
          fmt("field round trip %s, csv round trip %s, deterministic rerun %s",
              field_ok ? "bitwise" : "MISMATCH", csv_ok ? "exact" : "MISMATCH",
              det_ok ? "byte-identical" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cache_dir = "acceptance_cache";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cache" && i + 1 < argc) {
      cache_dir = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: %s [--cache DIR] [--only N[,M...]]\n", argv[0]);
      return 1;
    }
  }

  struct Crit {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Crit> crits = {
      {1, "gauge-phase-invariance", [] { return crit_gauge(); }},
      {2, "gradient-consistency", [] { return crit_gradient(); }},
      {3, "corrector-correctness", [] { return crit_corrector(); }},
      {4, "coercivity-witness", [] { return crit_coercivity(); }},
      {5, "fixed-point", [] { return crit_fixed_point(); }},
      {6, "energy-monotonicity", [] { return crit_monotone(); }},
      {7, "H-sweep-rates", [&] { return crit_h_rates(cache_dir); }},
      {8, "h-sweep-rates", [&] { return crit_a_rates(cache_dir); }},
      {9, "energy-error-rate", [&] { return crit_energy_rate(cache_dir); }},
      {10, "full-scale-reference", [] { return crit_full_scale(); }},
      {11, "kappa-collapse", [&] { return crit_collapse(cache_dir); }},
      {12, "plumbing", [] { return crit_plumbing(); }},
  };

  int failures = 0;
  for (const Crit& c : crits) {
    if (!only.empty() && !only.count(c.id)) continue;
    const double t0 = now_s();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {"FAIL", std::string("exception: ") + e.what()};
    }
    if (out.status == "FAIL") ++failures;
    std::printf("%-4s criterion-%02d %-24s %s [%.1fs]\n", out.status.c_str(), c.id, c.name,
                out.detail.c_str(), now_s() - t0);
    std::fflush(stdout);
  }
  if (failures) std::printf("ACCEPTANCE: %d criterion(s) FAILED\n", failures);
  else std::printf("ACCEPTANCE: ok\n");
  return failures ? 1 : 0;
}
