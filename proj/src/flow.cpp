#include "gllod/flow.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "gllod/quadrature.hpp"

namespace gllod {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Deterministic uniform double in [0,1) from the top 53 bits of the stream.
double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// |u(x_q)|^2 per quadrature point of the mesh carrying u, element-major.
VecXd sample_abs2(const DyadicMesh& mesh, const VecXc& u) {
  const QuadRule& qr = quad_deg4();
  VecXd out(Eigen::Index(mesh.num_tris()) * 6);
  for (int t = 0; t < int(mesh.num_tris()); ++t) {
    const auto& tri = mesh.triangles[std::size_t(t)];
    Complex u0 = u[tri[0]], u1 = u[tri[1]], u2 = u[tri[2]];
    for (int q = 0; q < 6; ++q) {
      Complex v = qr.lam[q][0] * u0 + qr.lam[q][1] * u1 + qr.lam[q][2] * u2;
      out[6 * t + q] = std::norm(v);
    }
  }
  return out;
}

struct PcgOutcome {
  bool converged = false;
  bool indefinite = false;
  int iters = 0;
};

// Preconditioned conjugate gradient for a Hermitian positive-definite
// operator, warm-started at x.  Converged means the true residual satisfies
// ||b - A x|| <= tol ||b||.  Reports indefiniteness (p^H A p <= 0) so the
// caller can fall back to a direct factorization.  When repeated true-residual
// checks stop improving, the iterate has hit the rounding floor for this
// system: return unconverged and let the caller judge the result rather than
// spending the full budget on noise.
template <class Vec, class Apply, class Prec>
PcgOutcome pcg(const Apply& apply, const Prec& prec, const Vec& b, Vec& x, double tol,
               int maxit) {
  PcgOutcome out;
  const double bn = b.norm();
  if (bn == 0.0) {
    x.setZero();
    out.converged = true;
    return out;
  }
  const double target = tol * bn;
  Vec r = b - apply(x);
  if (r.norm() <= target) {
    out.converged = true;
    return out;
  }
  Vec z = prec(r);
  Vec p = z;
  double rz = std::real(r.dot(z));
  double best_true = std::numeric_limits<double>::infinity();
  int stalls = 0;
  for (int k = 0; k < maxit; ++k) {
    Vec ap = apply(p);
    double pap = std::real(p.dot(ap));
    if (!(pap > 0.0)) {
      out.indefinite = true;
      out.iters = k;
      return out;
    }
    double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    ++out.iters;
    if (r.norm() <= target) {
      // Trust only the true residual before declaring victory.
      r = b - apply(x);
      const double tn = r.norm();
      if (tn <= target) {
        out.converged = true;
        return out;
      }
      if (tn > 0.5 * best_true) {
        if (++stalls >= 2) return out;
      } else {
        stalls = 0;
      }
      best_true = std::min(best_true, tn);
    }
    z = prec(r);
    double rz_next = std::real(r.dot(z));
    double beta = rz_next / rz;
    rz = rz_next;
    p = z + beta * p;
  }
  return out;
}

// Componentwise backward error |b - A x|_i / (|A||x| + |b|)_i.  A value at the
// scale of machine epsilon certifies the iterate is a backward-stable solution:
// the exact answer of a system indistinguishable from (A, b) in double
// precision, which is the best any solver can deliver.
template <class Mat, class Vec>
double backward_error(const Mat& op, const Vec& rhs, const Vec& x) {
  const Vec r = rhs - op * x;
  VecXd xa = x.cwiseAbs();
  VecXd s = rhs.cwiseAbs();
  for (int k = 0; k < op.outerSize(); ++k)
    for (typename Mat::InnerIterator it(op, k); it; ++it)
      s[it.row()] += std::abs(it.value()) * xa[it.col()];
  double berr = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (s[i] > 0.0) berr = std::max(berr, std::abs(r[i]) / s[i]);
  return berr;
}

constexpr double kBackwardStable = 64.0 * std::numeric_limits<double>::epsilon();

// Accept an iterate that meets the residual contract, or whose componentwise
// backward error is at the double-precision floor (no solver can do better;
// the contract may be unattainable relative to a small right-hand side).
template <class Mat, class Vec>
bool residual_acceptable(const Mat& op, const Vec& rhs, const Vec& x, double tol) {
  if ((op * x - rhs).norm() <= tol * rhs.norm()) return true;
  return backward_error(op, rhs, x) <= kBackwardStable;
}

// Factor-solve followed by up to three rounds of iterative refinement;
// accepts via the residual contract or the backward-stability floor.
template <class Fac, class Mat, class Vec>
bool refine_solve(const Fac& fac, const Mat& op, const Vec& rhs, double tol, Vec& x) {
  const double bn = rhs.norm();
  x = fac.solve(rhs);
  for (int round = 0; round < 3; ++round) {
    const Vec r = rhs - op * x;
    if (r.norm() <= tol * bn) return true;
    x += fac.solve(r).eval();
  }
  return residual_acceptable(op, rhs, x, tol);
}

template <class Mat, class Vec>
Vec solve_linear_impl(const Mat& op, const Vec& rhs, double tol) {
  if (op.rows() != op.cols()) throw std::invalid_argument("solve_linear: operator not square");
  if (rhs.size() != op.rows()) throw std::invalid_argument("solve_linear: rhs size mismatch");
  const double bn = rhs.norm();
  if (bn == 0.0) return Vec::Zero(rhs.size());

  Vec x;
  Eigen::SimplicialLDLT<Mat> ldlt(op);
  if (ldlt.info() == Eigen::Success && refine_solve(ldlt, op, rhs, tol, x)) return x;
  Eigen::SparseLU<Mat> lu(op);
  if (lu.info() == Eigen::Success && refine_solve(lu, op, rhs, tol, x)) return x;

  double rel = std::numeric_limits<double>::quiet_NaN();
  double berr = std::numeric_limits<double>::quiet_NaN();
  if (x.size() == rhs.size()) {
    rel = (op * x - rhs).norm() / bn;
    berr = backward_error(op, rhs, x);
  }
  char msg[256];
  std::snprintf(msg, sizeof(msg),
                "solve_linear: residual contract %g not met for operator of size %lld "
                "(relative residual %.3g, backward error %.3g)",
                tol, static_cast<long long>(op.rows()), rel, berr);
  throw std::runtime_error(msg);
}

int worker_count() {
  const char* env = std::getenv("GLLOD_WORKERS");
  if (!env) return 1;
  int w = std::atoi(env);
  return w > 1 ? w : 1;
}

}  // namespace

VecXc solve_linear(const SpMatC& op, const VecXc& rhs, double tol) {
  return solve_linear_impl<SpMatC, VecXc>(op, rhs, tol);
}

VecXd solve_linear(const SpMatD& op, const VecXd& rhs, double tol) {
  return solve_linear_impl<SpMatD, VecXd>(op, rhs, tol);
}

// ---------------------------------------------------------------------------

Flow::Flow(const RunConfig& cfg) : cfg_(cfg) {
  p_.kappa = cfg_.kappa;
  p_.field_preset = "sine";
  p_.field_amplitude = cfg_.field_amplitude;

  proj_ = std::make_unique<CoarseProjection>(build_projection(cfg_.u_level, cfg_.fine_level));
  aspace_ = std::make_unique<VectorSpace>(make_vector_space(cfg_.A_level, cfg_.A_degree));
  iota_c_ = proj_->iota.cast<Complex>();
  m_fine_ = assemble_scalar_mass(proj_->fine_mesh);
  ma_ = assemble_vector_mass(*aspace_);
  sb_ = assemble_b(*aspace_);
  lh_ = assemble_external_load(*aspace_, p_.external_field(), proj_->fine_mesh);

  st_.a_free = VecXd::Zero(aspace_->num_free);
  if (cfg_.init.rfind("file:", 0) == 0) {
    // Load the potential before the corrector so the multiscale space is
    // built around the resumed field, not around zero.
    std::string apath = cfg_.init.substr(5) + "A.glf";
    if (std::filesystem::exists(apath)) {
      FieldData fa = read_field(apath);
      if (fa.kind != 2 || fa.degree != cfg_.A_degree || fa.level != cfg_.A_level)
        throw std::runtime_error("init file " + apath + " does not match the potential space");
      if (fa.vector_full.size() != Eigen::Index(aspace_->full_size()))
        throw std::runtime_error("init file " + apath + " has the wrong length");
      st_.a_free = aspace_->to_free(fa.vector_full);
    }
  }
  if (cfg_.lod) {
    lod_ = std::make_unique<LodSpace>(build_corrector(*proj_, *aspace_, a_full(), cfg_.kappa,
                                                      cfg_.layers, cfg_.c_res,
                                                      cfg_.strict_resolution));
  }
  bh_ = basis_map().adjoint();
  init_state();
  st_.energies.push_back(energy(proj_->fine_mesh, st_.u_fine, *aspace_, a_full(), p_));
}

Flow::~Flow() = default;

const SpMatC& Flow::basis_map() const { return cfg_.lod ? lod_->B : iota_c_; }

void Flow::init_state() {
  const Eigen::Index nc = Eigen::Index(proj_->coarse_mesh.num_nodes());
  if (cfg_.init == "random") {
    // Draw at a fixed level no finer than the trial space and prolongate, so
    // runs that differ only in resolution start from the same continuous
    // field: sweep points sharing a seed then target the same minimizer
    // basin (the minimizer is a non-unique local minimum).
    const int draw_level = std::min(cfg_.u_level, 2);
    const DyadicMesh draw_mesh = build_mesh(draw_level);
    std::mt19937_64 rng(cfg_.seed);
    VecXc draw(draw_mesh.num_nodes());
    for (Eigen::Index i = 0; i < draw.size(); ++i) {
      double r = uniform01(rng);
      double theta = (2.0 * uniform01(rng) - 1.0) * kPi;
      draw[i] = Complex(r * std::cos(theta), r * std::sin(theta));
    }
    st_.u_coarse = prolongate_scalar(draw, draw_level, cfg_.u_level);
  } else if (cfg_.init.rfind("constant:", 0) == 0) {
    double c = std::strtod(cfg_.init.c_str() + 9, nullptr);
    st_.u_coarse = VecXc::Constant(nc, Complex(c, 0.0));
  } else if (cfg_.init.rfind("file:", 0) == 0) {
    std::string prefix = cfg_.init.substr(5);
    FieldData fu = read_field(prefix + "u.glf");
    if (fu.kind != 1 || fu.degree != 1)
      throw std::runtime_error("init file " + prefix + "u.glf is not a scalar P1 field");
    if (fu.level > cfg_.fine_level)
      throw std::runtime_error("init file " + prefix + "u.glf is finer than the flow mesh");
    VecXc uf = prolongate_scalar(fu.scalar, fu.level, cfg_.fine_level);
    st_.u_coarse = proj_->project_coeffs(uf);
    // The potential file, when present, was already loaded before the
    // multiscale space was built.
  } else {
    throw std::invalid_argument("unknown init mode '" + cfg_.init + "'");
  }
  st_.u_fine = basis_map() * st_.u_coarse;
}

void Flow::prepare_step_operators(bool refresh) {
  const DyadicMesh& fine = proj_->fine_mesh;
  VecXd su = sample_abs2(fine, st_.u_fine);
  SpMatC k = assemble_covariant_form(fine, p_.kappa, *aspace_, a_full());
  SpMatD mr = m_fine_ + cfg_.tau * assemble_weighted_scalar_mass(fine, VecXd(su.array() - 1.0));
  fine_op_ = SpMatC(mr.cast<Complex>()) + SpMatC(cfg_.tau * k);
  a_op_ = ma_ + cfg_.tau * SpMatD(sb_ + assemble_weighted_vector_mass(*aspace_, fine, su));

  if (refresh || !prec_u_ || !prec_a_) {
    SpMatC coarse_op = bh_ * SpMatC(fine_op_ * basis_map());
    prec_u_ = std::make_unique<Eigen::SparseLU<SpMatC>>();
    prec_u_->compute(coarse_op);
    if (prec_u_->info() != Eigen::Success)
      throw std::runtime_error(
          "flow: order-parameter system factorization failed at step " + std::to_string(st_.n) +
          "; consider reducing tau");
    prec_a_ = std::make_unique<Eigen::SimplicialLDLT<SpMatD>>();
    prec_a_->compute(a_op_);
    if (prec_a_->info() != Eigen::Success)
      throw std::runtime_error("flow: potential system factorization failed at step " +
                               std::to_string(st_.n));
  }
}

void Flow::step() {
  const int n = st_.n;
  const bool scheduled = (n < cfg_.lod_warmup) || (cfg_.lod_period > 0 && n % cfg_.lod_period == 0);
  if (scheduled && cfg_.lod) {
    VecXd af = a_full();
    if (af.size() != lod_->a_hat.size() || af != lod_->a_hat) {
      lod_ = std::make_unique<LodSpace>(update_corrector(*lod_, af));
      bh_ = lod_->B.adjoint();
      // The current fine-space state is kept as this step's data rather than
      // being re-expanded through the refreshed basis: re-expansion would
      // discard the detail the old correctors carried and kick the energy
      // upward.  The solve below writes the new iterate in the new space.
    }
  }
  prepare_step_operators(scheduled);

  const DyadicMesh& fine = proj_->fine_mesh;
  VecXc rhs_u = bh_ * VecXc(m_fine_.cast<Complex>() * st_.u_fine);
  VecXd ju = assemble_current_load(*aspace_, p_.kappa, fine, st_.u_fine);
  VecXd rhs_a = ma_ * st_.a_free - cfg_.tau * VecXd(ju - lh_);

  VecXc u_next = st_.u_coarse;
  VecXd a_next = st_.a_free;
  std::exception_ptr a_error;

  auto do_u_solve = [&] {
    auto apply = [&](const VecXc& x) {
      return VecXc(bh_ * VecXc(fine_op_ * VecXc(basis_map() * x)));
    };
    auto prec = [&](const VecXc& r) { return VecXc(prec_u_->solve(r)); };
    PcgOutcome out = pcg(apply, prec, rhs_u, u_next, cfg_.solver_tol, 500);
    if (!out.converged) {
      // Indefinite or stalled: assemble the coarse matrix and factor directly.
      SpMatC coarse_op = bh_ * SpMatC(fine_op_ * basis_map());
      if (!out.indefinite && residual_acceptable(coarse_op, rhs_u, u_next, cfg_.solver_tol))
        return;
      Eigen::SparseLU<SpMatC> lu(coarse_op);
      if (lu.info() != Eigen::Success)
        throw std::runtime_error(
            "flow: order-parameter system is singular at step " + std::to_string(n) +
            "; consider reducing tau");
      if (!refine_solve(lu, coarse_op, rhs_u, cfg_.solver_tol, u_next) &&
          rhs_u.norm() > 1e-13)
        throw std::runtime_error("flow: order-parameter solve missed the residual contract at step " +
                                 std::to_string(n));
    }
  };
  auto do_a_solve = [&] {
    try {
      auto apply = [&](const VecXd& x) { return VecXd(a_op_ * x); };
      auto prec = [&](const VecXd& r) { return VecXd(prec_a_->solve(r)); };
      PcgOutcome out = pcg(apply, prec, rhs_a, a_next, cfg_.solver_tol, 500);
      if (!out.converged &&
          !(!out.indefinite && residual_acceptable(a_op_, rhs_a, a_next, cfg_.solver_tol)))
        a_next = solve_linear(a_op_, rhs_a, cfg_.solver_tol);
    } catch (...) {
      a_error = std::current_exception();
    }
  };

  if (worker_count() >= 2) {
    std::thread t(do_a_solve);
    do_u_solve();
    t.join();
  } else {
    do_u_solve();
    do_a_solve();
  }
  if (a_error) std::rethrow_exception(a_error);

  st_.u_coarse = u_next;
  st_.u_fine = basis_map() * u_next;
  st_.a_free = a_next;
  ++st_.n;
  st_.energies.push_back(energy(fine, st_.u_fine, *aspace_, a_full(), p_));
}

std::string Flow::run() {
  if (cfg_.checkpoint_every > 0) std::filesystem::create_directories(cfg_.output_dir);
  while (st_.n < cfg_.max_steps) {
    step();
    if (cfg_.checkpoint_every > 0 && st_.n % cfg_.checkpoint_every == 0) write_checkpoint();
    const auto& e = st_.energies;
    double delta = e[std::size_t(st_.n)].total_gl() - e[std::size_t(st_.n) - 1].total_gl();
    if (std::abs(delta) <= cfg_.eps_tol) {
      st_.terminated = "eps_tol";
      return st_.terminated;
    }
  }
  st_.terminated = "max_steps";
  return st_.terminated;
}

void Flow::write_checkpoint() const {
  FieldData fu;
  fu.kind = 1;
  fu.level = std::uint16_t(cfg_.fine_level);
  fu.degree = 1;
  fu.scalar = st_.u_fine;
  write_field(cfg_.output_dir + "/checkpoint_u.glf", fu);
  FieldData fa;
  fa.kind = 2;
  fa.level = std::uint16_t(cfg_.A_level);
  fa.degree = std::uint8_t(cfg_.A_degree);
  fa.vector_full = aspace_->to_full(st_.a_free);
  write_field(cfg_.output_dir + "/checkpoint_A.glf", fa);
}

std::pair<double, double> Flow::projected_residuals() const {
  VecXc gu = grad_u(proj_->fine_mesh, st_.u_fine, *aspace_, a_full(), p_);
  VecXd ga = grad_A(proj_->fine_mesh, st_.u_fine, *aspace_, a_full(), p_);
  return {VecXc(bh_ * gu).norm(), ga.norm()};
}

}  // namespace gllod
