#pragma once
// Persistent formats: GLF1 binary field files, CSV tables, and the flat
// key=value run configuration.  All writers are timestamp-free so identical
// inputs produce byte-identical files.

#include <cstdint>
#include <string>
#include <vector>

#include "gllod/model.hpp"

namespace gllod {

// ---------------------------------------------------------------------------
// GLF1 field files.
// Layout: magic "GLF1" | version u16 | kind u8 (1 = scalar-complex,
// 2 = vector) | mesh level u16 | degree u8 | payload length u64 (bytes) |
// payload of little-endian f64 (complex interleaved re,im; vectors as full
// per-Lagrange-node pairs, constrained entries 0) | checksum u64 = sum of
// payload bytes mod 2^64.

struct FieldData {
  std::uint8_t kind = 1;  // 1 scalar-complex, 2 vector
  std::uint16_t level = 1;
  std::uint8_t degree = 1;
  VecXc scalar;      // kind 1
  VecXd vector_full; // kind 2, full layout
};

void write_field(const std::string& path, const FieldData& f);
FieldData read_field(const std::string& path);  // throws std::runtime_error on damage

// ---------------------------------------------------------------------------
// CSV tables.  %.17g everywhere: the decimal form is read back to the same
// bits, so round trips are lossless.

struct RateRow {
  double kappa = 0;
  int level = 0;
  double mesh_size = 0;
  double err_L2_u = 0;
  double err_H1k_u = 0;
  double err_L2_A = 0;
  double err_H1_A = 0;
  double err_energy = 0;
};

void write_csv(const std::string& path, const std::vector<RateRow>& rows);
std::vector<RateRow> read_csv(const std::string& path);  // throws with line number

void write_energy_csv(const std::string& path, const std::vector<EnergyBreakdown>& history);
std::vector<EnergyBreakdown> read_energy_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Run configuration: flat key=value lines, '#' comments, unknown keys are
// errors with their line number.

struct RunConfig {
  double kappa = 6.0;
  double field_amplitude = 10.0;
  int u_level = 5;     // coarse level J of the trial space for u
  int A_level = 6;     // level j_h of the potential space
  int fine_level = 6;  // fine mesh carrying corrections and quadrature
  bool lod = true;     // off = plain P1 trial space at u_level
  int layers = 4;      // oversampling layers l
  int A_degree = 2;
  double tau = 1.0;
  double eps_tol = 1e-10;
  int max_steps = 20000;
  std::uint64_t seed = 1;
  std::string init = "random";  // random | constant:<c> | file:<prefix>
  int lod_warmup = 10;
  int lod_period = 100;
  std::string output_dir = ".";
  double solver_tol = 1e-12;
  int checkpoint_every = 0;  // 0 disables checkpoints
  double c_res = 1.0;        // resolution guard H <= c_res/kappa
  bool strict_resolution = false;  // guard failure: warn (default) or error

  // sweep section
  std::string sweep_axis = "H";        // H | h
  std::vector<int> sweep_levels;       // swept levels
  std::vector<double> kappa_list;      // defaults to {kappa}
  bool sweep_baseline = false;         // also run the plain-P1 baseline (H sweeps)
};

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_, const std::string& what_)
      : std::runtime_error("config line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

RunConfig parse_config(const std::string& text);  // throws ConfigError
RunConfig load_config(const std::string& path);

// Canonical one-line-per-key rendering; used for reference-cache hashing and
// `info` output.  Stable across runs.
std::string render_config(const RunConfig& cfg);

}  // namespace gllod
