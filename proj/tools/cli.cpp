// Command-line front end: solve | sweep | check | plot | info.
//
// Exit codes: 0 success, 1 usage, 2 configuration, 3 numerical failure.
// Every file this tool writes (fields, CSV tables, SVG plots) is
// deterministic: identical configs produce byte-identical outputs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gllod/lab.hpp"

namespace fs = std::filesystem;
using namespace gllod;

namespace {

std::string fmt6(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

// ---------------------------------------------------------------------------
// SVG rendering.  Pure string building, fixed palette, no timestamps.

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Frame {
  double x0 = 80, y0 = 50, x1 = 750, y1 = 540;  // pixel box, y grows downward
  double lx0 = 0, lx1 = 1, ly0 = 0, ly1 = 1;    // data coordinates
  double px(double lx) const { return x0 + (lx - lx0) / (lx1 - lx0) * (x1 - x0); }
  double py(double ly) const { return y1 - (ly - ly0) / (ly1 - ly0) * (y1 - y0); }
};

void pad_range(double& a, double& b) {
  if (a == b) {
    a -= 0.5;
    b += 0.5;
  } else {
    double pad = 0.05 * (b - a);
    a -= pad;
    b += pad;
  }
}

void svg_open(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
        "font-family=\"monospace\" font-size=\"13\">\n";
  os << "<title>" << title << "</title>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
}

void svg_frame(std::ostringstream& os, const Frame& f, const std::string& xlabel,
               const std::string& ylabel) {
  os << "<rect class=\"frame\" x=\"" << fmt6(f.x0) << "\" y=\"" << fmt6(f.y0) << "\" width=\""
     << fmt6(f.x1 - f.x0) << "\" height=\"" << fmt6(f.y1 - f.y0)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text class=\"axis\" x=\"" << fmt6((f.x0 + f.x1) / 2) << "\" y=\"585\" "
     << "text-anchor=\"middle\">" << xlabel << " [" << fmt6(f.lx0) << ", " << fmt6(f.lx1)
     << "]</text>\n";
  os << "<text class=\"axis\" x=\"18\" y=\"" << fmt6((f.y0 + f.y1) / 2)
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << fmt6((f.y0 + f.y1) / 2) << ")\">"
     << ylabel << " [" << fmt6(f.ly0) << ", " << fmt6(f.ly1) << "]</text>\n";
}

struct RatePlotCurve {
  double kappa;
  std::string norm;
  std::vector<std::pair<double, double>> pts;  // (size, error), size descending
};

std::string render_rate_svg(const std::vector<RateRow>& rows) {
  std::vector<double> kappas;
  for (const auto& r : rows)
    if (std::find(kappas.begin(), kappas.end(), r.kappa) == kappas.end())
      kappas.push_back(r.kappa);
  std::sort(kappas.begin(), kappas.end());

  struct NormCol {
    const char* name;
    double RateRow::* field;
  };
  const NormCol cols[] = {{"L2_u", &RateRow::err_L2_u},
                          {"H1k_u", &RateRow::err_H1k_u},
                          {"L2_A", &RateRow::err_L2_A},
                          {"H1_A", &RateRow::err_H1_A},
                          {"energy", &RateRow::err_energy}};

  std::vector<RatePlotCurve> curves;
  for (double kappa : kappas) {
    for (const auto& col : cols) {
      RatePlotCurve c{kappa, col.name, {}};
      bool positive = true;
      for (const auto& r : rows) {
        if (r.kappa != kappa) continue;
        double err = r.*(col.field);
        if (!(err > 0)) positive = false;
        c.pts.push_back({r.mesh_size, err});
      }
      if (!positive || c.pts.size() < 2) continue;
      std::sort(c.pts.begin(), c.pts.end(), [](auto& a, auto& b) { return a.first > b.first; });
      curves.push_back(std::move(c));
    }
  }

  std::ostringstream os;
  svg_open(os, "error versus mesh size");
  if (curves.empty()) {
    os << "<text class=\"note\" x=\"400\" y=\"300\" text-anchor=\"middle\">no positive error "
          "curves</text>\n</svg>\n";
    return os.str();
  }

  Frame f;
  f.lx0 = 1e300, f.lx1 = -1e300, f.ly0 = 1e300, f.ly1 = -1e300;
  for (const auto& c : curves) {
    for (const auto& [size, err] : c.pts) {
      f.lx0 = std::min(f.lx0, std::log10(size));
      f.lx1 = std::max(f.lx1, std::log10(size));
      f.ly0 = std::min(f.ly0, std::log10(err));
      f.ly1 = std::max(f.ly1, std::log10(err));
    }
  }
  pad_range(f.lx0, f.lx1);
  pad_range(f.ly0, f.ly1);
  svg_frame(os, f, "log10 mesh size", "log10 error");

  std::vector<long> guide_slopes;
  int ci = 0;
  for (const auto& c : curves) {
    const char* color = kPalette[ci % 8];
    os << "<polyline class=\"curve\" data-kappa=\"" << fmt6(c.kappa) << "\" data-norm=\""
       << c.norm << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < c.pts.size(); ++i) {
      if (i) os << ' ';
      os << fmt6(f.px(std::log10(c.pts[i].first))) << ',' << fmt6(f.py(std::log10(c.pts[i].second)));
    }
    os << "\"/>\n";
    for (const auto& [size, err] : c.pts)
      os << "<circle cx=\"" << fmt6(f.px(std::log10(size))) << "\" cy=\""
         << fmt6(f.py(std::log10(err))) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    os << "<text class=\"legend\" x=\"" << fmt6(f.x1 - 8) << "\" y=\""
       << fmt6(f.y0 + 16 + 16 * ci) << "\" text-anchor=\"end\" fill=\"" << color << "\">kappa="
       << fmt6(c.kappa) << " " << c.norm << "</text>\n";
    try {
      long s = std::lround(fit_rate(c.pts).slope);
      if (s >= 1 && s <= 12 &&
          std::find(guide_slopes.begin(), guide_slopes.end(), s) == guide_slopes.end())
        guide_slopes.push_back(s);
    } catch (const std::exception&) {
      // degenerate curve: no guide
    }
    ++ci;
  }

  // Axis-true reference-slope triangles near the lower right, one per
  // distinct fitted slope (rounded to the nearest integer).
  std::sort(guide_slopes.begin(), guide_slopes.end());
  double gx1 = f.lx1 - 0.15 * (f.lx1 - f.lx0);
  for (size_t g = 0; g < guide_slopes.size(); ++g) {
    long s = guide_slopes[g];
    double dx = std::min(0.9 * (f.lx1 - f.lx0) / double(guide_slopes.size() + 1),
                         0.35 * (f.ly1 - f.ly0) / double(s));
    double x_lo = gx1 - double(g + 1) * 1.1 * dx;
    double y_lo = f.ly0 + 0.08 * (f.ly1 - f.ly0);
    os << "<path class=\"guide\" data-slope=\"" << s << "\" fill=\"none\" stroke=\"#444\" d=\"M "
       << fmt6(f.px(x_lo)) << ' ' << fmt6(f.py(y_lo)) << " L " << fmt6(f.px(x_lo + dx)) << ' '
       << fmt6(f.py(y_lo)) << " L " << fmt6(f.px(x_lo + dx)) << ' '
       << fmt6(f.py(y_lo + s * dx)) << " Z\"/>\n";
    os << "<text class=\"guide-label\" x=\"" << fmt6(f.px(x_lo + dx) + 5) << "\" y=\""
       << fmt6(f.py(y_lo + 0.5 * s * dx)) << "\" fill=\"#444\">" << s << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_energy_svg(const std::vector<EnergyBreakdown>& hist) {
  std::ostringstream os;
  svg_open(os, "Ginzburg-Landau energy history");
  if (hist.empty()) {
    os << "<text class=\"note\" x=\"400\" y=\"300\" text-anchor=\"middle\">empty "
          "history</text>\n</svg>\n";
    return os.str();
  }
  Frame f;
  f.lx0 = 0;
  f.lx1 = double(hist.size() - 1);
  f.ly0 = 1e300;
  f.ly1 = -1e300;
  for (const auto& e : hist) {
    f.ly0 = std::min(f.ly0, e.total_gl());
    f.ly1 = std::max(f.ly1, e.total_gl());
  }
  pad_range(f.lx0, f.lx1);
  pad_range(f.ly0, f.ly1);
  svg_frame(os, f, "step", "E_GL");
  os << "<polyline class=\"energy\" fill=\"none\" stroke=\"" << kPalette[0]
     << "\" stroke-width=\"1.5\" points=\"";
  for (size_t k = 0; k < hist.size(); ++k) {
    if (k) os << ' ';
    os << fmt6(f.px(double(k))) << ',' << fmt6(f.py(hist[k].total_gl()));
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Invariant suites for `check`: fast self-contained sanity runs, one line
// each.

double u01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

VecXc random_state(const DyadicMesh& mesh, std::mt19937_64& rng) {
  VecXc u(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i)
    u[i] = Complex(2 * u01(rng) - 1, 2 * u01(rng) - 1);
  return u;
}

void check_field_roundtrip() {
  std::mt19937_64 rng(1);
  FieldData fd;
  fd.kind = 1;
  fd.level = 3;
  fd.degree = 1;
  fd.scalar = random_state(build_mesh(3), rng);
  write_field("check_tmp.glf", fd);
  FieldData back = read_field("check_tmp.glf");
  fs::remove("check_tmp.glf");
  if (back.scalar != fd.scalar) throw std::runtime_error("scalar payload changed in round trip");
}

void check_csv_roundtrip() {
  std::mt19937_64 rng(2);
  std::vector<RateRow> rows(20);
  for (auto& r : rows) {
    r.kappa = u01(rng) * 10;
    r.level = int(rng() % 10) + 1;
    r.mesh_size = std::ldexp(1.0, -r.level);
    r.err_L2_u = u01(rng);
    r.err_H1k_u = u01(rng);
    r.err_L2_A = u01(rng);
    r.err_H1_A = u01(rng);
    r.err_energy = u01(rng);
  }
  write_csv("check_tmp.csv", rows);
  auto back = read_csv("check_tmp.csv");
  fs::remove("check_tmp.csv");
  if (back.size() != rows.size()) throw std::runtime_error("row count changed");
  for (size_t i = 0; i < rows.size(); ++i)
    if (back[i].err_H1k_u != rows[i].err_H1k_u || back[i].kappa != rows[i].kappa)
      throw std::runtime_error("row values changed in round trip");
}

void check_gauge_invariance() {
  DyadicMesh mesh = build_mesh(3);
  VectorSpace aspace = make_vector_space(2, 2);
  std::mt19937_64 rng(3);
  VecXc u = random_state(mesh, rng);
  VecXd af(aspace.num_free);
  for (int i = 0; i < aspace.num_free; ++i) af[i] = 2 * u01(rng) - 1;
  VecXd a_full = aspace.to_full(af);
  ModelParams p;
  p.kappa = 6.0;
  double e0 = energy(mesh, u, aspace, a_full, p).total_gl();
  for (int k = 0; k < 5; ++k) {
    double omega = (2 * u01(rng) - 1) * 3.14159265358979323846;
    VecXc v = u * std::polar(1.0, omega);
    double e1 = energy(mesh, v, aspace, a_full, p).total_gl();
    if (std::abs(e1 - e0) > 1e-12 * (1 + std::abs(e0)))
      throw std::runtime_error("energy moved under a constant phase: " + fmt6(std::abs(e1 - e0)));
  }
}

void check_gradient_consistency() {
  DyadicMesh mesh = build_mesh(3);
  VectorSpace aspace = make_vector_space(2, 2);
  std::mt19937_64 rng(4);
  VecXc u = random_state(mesh, rng);
  VecXd af(aspace.num_free);
  for (int i = 0; i < aspace.num_free; ++i) af[i] = 2 * u01(rng) - 1;
  ModelParams p;
  p.kappa = 6.0;
  VecXc phi = random_state(mesh, rng);
  VecXd b(aspace.num_free);
  for (int i = 0; i < aspace.num_free; ++i) b[i] = 2 * u01(rng) - 1;

  VecXd a_full = aspace.to_full(af);
  VecXc gu = grad_u(mesh, u, aspace, a_full, p);
  VecXd ga = grad_A(mesh, u, aspace, a_full, p);
  double exact = (phi.dot(gu)).real() + b.dot(ga);
  auto fd = [&](double t) {
    VecXd ap = aspace.to_full(VecXd(af + t * b));
    VecXd am = aspace.to_full(VecXd(af - t * b));
    double ep = energy(mesh, VecXc(u + t * phi), aspace, ap, p).total();
    double em = energy(mesh, VecXc(u - t * phi), aspace, am, p).total();
    return (ep - em) / (2 * t);
  };
  double e1 = std::abs(fd(1e-3) - exact);
  double e2 = std::abs(fd(5e-4) - exact);
  double order = std::log2(e1 / e2);
  if (!(order > 1.5) && !(e2 < 1e-12 * (1 + std::abs(exact))))
    throw std::runtime_error("finite differences disagree: observed order " + fmt6(order));
}

void check_corrector_kernel() {
  auto proj = build_projection(2, 3);
  VectorSpace aspace = make_vector_space(2, 1);
  VecXd a0 = VecXd::Zero(aspace.full_size());
  LodSpace lod = build_corrector(proj, aspace, a0, 4.0, 8);
  SpMatC k = assemble_covariant_form(proj.fine_mesh, 4.0, aspace, a0);
  std::mt19937_64 rng(5);
  SpMatC iota_c = proj.iota.cast<Complex>();
  for (int z : {0, 7, 12}) {
    VecXc col = lod.C.col(z);
    VecXc pc = proj.project_coeffs(col);
    if (pc.cwiseAbs().maxCoeff() > 1e-10)
      throw std::runtime_error("corrector leaves the detail space at node " + std::to_string(z));
    VecXc bz = lod.B.col(z);
    for (int t = 0; t < 3; ++t) {
      VecXc r = random_state(proj.fine_mesh, rng);
      VecXc w = r - VecXc(iota_c * proj.project_coeffs(r));
      w /= w.norm();
      double val = std::abs(w.dot(VecXc(k * bz)));
      if (val > 1e-9)
        throw std::runtime_error("multiscale basis not orthogonal to the detail space: " +
                                 fmt6(val));
    }
  }
}

void check_flow_fixed_point() {
  RunConfig cfg;
  cfg.kappa = 4.0;
  cfg.field_amplitude = 0.0;
  cfg.u_level = 2;
  cfg.A_level = 2;
  cfg.A_degree = 1;
  cfg.fine_level = 2;
  cfg.lod = false;
  cfg.tau = 1.0;
  cfg.eps_tol = 1e-10;
  cfg.init = "constant:1";
  Flow flow(cfg);
  std::string reason = flow.run();
  if (reason != "eps_tol" || flow.state().n != 1)
    throw std::runtime_error("did not stop at the first step (" + reason + ")");
  if (std::abs(flow.state().energies.back().total_gl()) > 1e-13)
    throw std::runtime_error("E_GL moved off zero: " +
                             fmt6(flow.state().energies.back().total_gl()));
}

void check_rate_fit() {
  Fit f = fit_rate({{0.25, 1e-2}, {0.125, 1.25e-3}, {0.0625, 1.5625e-4}});
  if (std::abs(f.slope - 3.0) > 1e-12)
    throw std::runtime_error("cubic fixture slope " + fmt6(f.slope));
  Fit g = fit_rate({{0.25, 1.0}, {0.125, 1.0}});
  if (std::abs(g.slope) > 1e-15) throw std::runtime_error("flat fixture slope " + fmt6(g.slope));
}

int do_check() {
  struct Suite {
    const char* name;
    std::function<void()> fn;
  };
  const Suite suites[] = {
      {"field file round trip", check_field_roundtrip},
      {"csv round trip", check_csv_roundtrip},
      {"config render/parse fixed point",
       [] {
         RunConfig cfg;
         std::string text = render_config(cfg);
         if (render_config(parse_config(text)) != text)
           throw std::runtime_error("rendering is not a parse fixed point");
       }},
      {"gauge invariance", check_gauge_invariance},
      {"gradient consistency", check_gradient_consistency},
      {"corrector detail-space orthogonality", check_corrector_kernel},
      {"flow fixed point", check_flow_fixed_point},
      {"rate fit fixtures", check_rate_fit},
  };
  int failures = 0;
  for (const auto& s : suites) {
    try {
      s.fn();
      std::printf("ok   %s\n", s.name);
    } catch (const std::exception& ex) {
      std::printf("FAIL %s: %s\n", s.name, ex.what());
      ++failures;
    }
  }
  if (failures) std::fprintf(stderr, "%d invariant suite(s) failed\n", failures);
  return failures ? 3 : 0;
}

// ---------------------------------------------------------------------------

bool load_config_or_complain(const std::string& path, RunConfig& cfg) {
  try {
    cfg = load_config(path);
    return true;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return false;
  }
}

int do_solve(const std::string& config_path, const std::string& output_override) {
  RunConfig cfg;
  if (!load_config_or_complain(config_path, cfg)) return 2;
  if (!output_override.empty()) cfg.output_dir = output_override;
  Flow flow(cfg);
  flow.run();
  const FlowState& st = flow.state();
  fs::create_directories(cfg.output_dir);
  FieldData fu;
  fu.kind = 1;
  fu.level = std::uint16_t(cfg.fine_level);
  fu.degree = 1;
  fu.scalar = st.u_fine;
  write_field(cfg.output_dir + "/u.glf", fu);
  FieldData fa;
  fa.kind = 2;
  fa.level = std::uint16_t(cfg.A_level);
  fa.degree = std::uint8_t(cfg.A_degree);
  fa.vector_full = flow.a_full();
  write_field(cfg.output_dir + "/A.glf", fa);
  write_energy_csv(cfg.output_dir + "/energy.csv", st.energies);
  std::printf("terminated=%s steps=%d E_GL=%.10g E=%.10g\n", st.terminated.c_str(), st.n,
              st.energies.back().total_gl(), st.energies.back().total());
  std::printf("wrote %s/u.glf %s/A.glf %s/energy.csv\n", cfg.output_dir.c_str(),
              cfg.output_dir.c_str(), cfg.output_dir.c_str());
  return 0;
}

int do_sweep(const std::string& config_path, const std::string& cache_dir,
             const std::string& output_dir) {
  RunConfig cfg;
  if (!load_config_or_complain(config_path, cfg)) return 2;
  SweepSpec spec = make_sweep_spec(cfg, cache_dir);
  RateReport rep = sweep(spec);
  fs::create_directories(output_dir);
  write_csv(output_dir + "/rates.csv", rep.rows);
  std::printf("wrote %s/rates.csv (%zu rows)\n", output_dir.c_str(), rep.rows.size());
  if (!rep.baseline_rows.empty()) {
    write_csv(output_dir + "/rates_p1.csv", rep.baseline_rows);
    std::printf("wrote %s/rates_p1.csv (%zu rows)\n", output_dir.c_str(),
                rep.baseline_rows.size());
  }
  for (const auto& c : rep.curves)
    std::printf("kappa=%g %s%s: slope=%.3f over %zu points%s\n", c.kappa, c.norm.c_str(),
                c.baseline ? " (P1)" : "", c.fit.slope, c.fit.used.size(),
                c.fit.window_fallback ? " (window fallback)" : "");
  if (spec.kappas.size() >= 2)
    std::printf("collapse residual: H1k=%.3f L2=%.3f\n", rep.collapse_h1k, rep.collapse_l2);
  for (const auto& f : rep.failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
  return rep.partial ? 3 : 0;
}

int do_plot(const std::string& input, std::string output) {
  if (output.empty()) {
    output = input;
    auto dot = output.find_last_of('.');
    if (dot != std::string::npos) output.resize(dot);
    output += ".svg";
  }
  std::string svg;
  std::string rate_err, energy_err;
  try {
    svg = render_rate_svg(read_csv(input));
  } catch (const std::exception& ex) {
    rate_err = ex.what();
  }
  if (svg.empty()) {
    try {
      svg = render_energy_svg(read_energy_csv(input));
    } catch (const std::exception& ex) {
      energy_err = ex.what();
    }
  }
  if (svg.empty()) {
    std::fprintf(stderr, "cannot read %s as a rate table (%s) or an energy history (%s)\n",
                 input.c_str(), rate_err.c_str(), energy_err.c_str());
    return 2;
  }
  std::ofstream out(output, std::ios::binary);
  out << svg;
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", output.c_str());
    return 3;
  }
  std::printf("wrote %s\n", output.c_str());
  return 0;
}

int do_info(const std::string& config_path) {
  RunConfig cfg;
  if (!load_config_or_complain(config_path, cfg)) return 2;
  std::fputs(render_config(cfg).c_str(), stdout);
  DyadicMesh coarse = build_mesh(cfg.u_level);
  DyadicMesh fine = build_mesh(cfg.fine_level);
  VectorSpace aspace = make_vector_space(cfg.A_level, cfg.A_degree);
  std::printf("# derived\n");
  std::printf("H = %.17g\n", coarse.h());
  std::printf("h_A = %.17g\n", std::ldexp(1.0, -cfg.A_level));
  std::printf("h_fine = %.17g\n", fine.h());
  std::printf("dofs: u_coarse=%d u_fine=%d A_lagrange=%d A_free=%d\n", coarse.num_nodes(),
              fine.num_nodes(), aspace.num_lnodes(), aspace.num_free);
  double bound = cfg.c_res / cfg.kappa;
  std::printf("resolution: H = %.6g %s c_res/kappa = %.6g (%s)\n", coarse.h(),
              coarse.h() <= bound ? "<=" : ">", bound,
              coarse.h() <= bound ? "ok" : "violated; corrector quality degrades");
  if (cfg.lod)
    std::printf("multiscale space: %d corrector problems, %d oversampling layers\n",
                coarse.num_nodes(), cfg.layers);
  else
    std::printf("trial space: plain P1 at level %d\n", cfg.u_level);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ginzburg-Landau minimizer in a multiscale trial space"};
  app.require_subcommand(1);

  std::string config_path, output_dir, cache_dir = "cache", plot_in, plot_out;

  CLI::App* solve = app.add_subcommand("solve", "run the gradient flow defined by a config file");
  solve->add_option("--config", config_path, "key=value run configuration")->required();
  solve->add_option("--output", output_dir, "override output_dir from the config");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a resolution sweep against a reference solution");
  sweep_cmd->add_option("--config", config_path, "config with a sweep section")->required();
  sweep_cmd->add_option("--cache", cache_dir, "reference/run cache directory (default: cache)");
  sweep_cmd->add_option("--output", output_dir, "directory for rate CSVs (default: .)");

  app.add_subcommand("check", "run the fast invariant suites and print one line per suite");

  CLI::App* plot = app.add_subcommand("plot", "render a rate or energy CSV to SVG");
  plot->add_option("input", plot_in, "rates.csv or energy.csv")->required();
  plot->add_option("-o,--output", plot_out, "output path (default: input with .svg)");

  CLI::App* info = app.add_subcommand("info", "print the resolved configuration and dof counts");
  info->add_option("--config", config_path, "key=value run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return do_solve(config_path, output_dir);
    if (sweep_cmd->parsed())
      return do_sweep(config_path, cache_dir, output_dir.empty() ? "." : output_dir);
    if (app.get_subcommand("check")->parsed()) return do_check();
    if (plot->parsed()) return do_plot(plot_in, plot_out);
    if (info->parsed()) return do_info(config_path);
  } catch (const ConfigError& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return 2;
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "numerical failure: %s\n", ex.what());
    return 3;
  }
  return 1;
}
