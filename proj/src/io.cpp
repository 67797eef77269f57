#include "gllod/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gllod {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) { return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8; }

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

std::uint64_t byte_sum(const char* data, std::size_t n) {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<unsigned char>(data[i]);
  return s;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// GLF1

void write_field(const std::string& path, const FieldData& f) {
  std::string payload;
  if (f.kind == 1) {
    payload.resize(std::size_t(f.scalar.size()) * 16);
    for (Eigen::Index i = 0; i < f.scalar.size(); ++i) {
      double re = f.scalar[i].real(), im = f.scalar[i].imag();
      std::memcpy(payload.data() + 16 * i, &re, 8);
      std::memcpy(payload.data() + 16 * i + 8, &im, 8);
    }
  } else if (f.kind == 2) {
    payload.resize(std::size_t(f.vector_full.size()) * 8);
    std::memcpy(payload.data(), f.vector_full.data(), payload.size());
  } else {
    throw std::runtime_error("write_field: unknown kind " + std::to_string(f.kind));
  }

  std::string out = "GLF1";
  put_u16(out, 1);  // format version
  out.push_back(char(f.kind));
  put_u16(out, f.level);
  out.push_back(char(f.degree));
  put_u64(out, payload.size());
  out += payload;
  put_u64(out, byte_sum(payload.data(), payload.size()));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_field: cannot open " + path);
  os.write(out.data(), std::streamsize(out.size()));
  if (!os) throw std::runtime_error("write_field: write failed on " + path);
}

FieldData read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_field: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::size_t header = 4 + 2 + 1 + 2 + 1 + 8;
  if (buf.size() < header + 8 || buf.compare(0, 4, "GLF1") != 0)
    throw std::runtime_error("read_field: " + path + " is not a GLF1 file");
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  std::uint16_t version = get_u16(p + 4);
  if (version != 1)
    throw std::runtime_error("read_field: unsupported version " + std::to_string(version));
  FieldData f;
  f.kind = p[6];
  f.level = get_u16(p + 7);
  f.degree = p[9];
  std::uint64_t plen = get_u64(p + 10);
  if (buf.size() != header + plen + 8)
    throw std::runtime_error("read_field: " + path + " truncated or oversized");
  std::uint64_t want = get_u64(p + header + plen);
  std::uint64_t have = byte_sum(buf.data() + header, plen);
  if (want != have) throw std::runtime_error("read_field: checksum mismatch in " + path);

  const char* data = buf.data() + header;
  if (f.kind == 1) {
    if (plen % 16) throw std::runtime_error("read_field: bad complex payload length");
    f.scalar.resize(Eigen::Index(plen / 16));
    for (Eigen::Index i = 0; i < f.scalar.size(); ++i) {
      double re, im;
      std::memcpy(&re, data + 16 * i, 8);
      std::memcpy(&im, data + 16 * i + 8, 8);
      f.scalar[i] = Complex(re, im);
    }
  } else if (f.kind == 2) {
    if (plen % 8) throw std::runtime_error("read_field: bad vector payload length");
    f.vector_full.resize(Eigen::Index(plen / 8));
    std::memcpy(f.vector_full.data(), data, plen);
  } else {
    throw std::runtime_error("read_field: unknown kind " + std::to_string(f.kind));
  }
  return f;
}

// ---------------------------------------------------------------------------
// CSV

static const char* kRateHeader = "kappa,level,mesh_size,err_L2_u,err_H1k_u,err_L2_A,err_H1_A,err_energy";

void write_csv(const std::string& path, const std::vector<RateRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os << kRateHeader << "\n";
  for (const auto& r : rows) {
    os << fmt17(r.kappa) << ',' << r.level << ',' << fmt17(r.mesh_size) << ','
       << fmt17(r.err_L2_u) << ',' << fmt17(r.err_H1k_u) << ',' << fmt17(r.err_L2_A) << ','
       << fmt17(r.err_H1_A) << ',' << fmt17(r.err_energy) << "\n";
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t c = line.find(',', pos);
    if (c == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, c - pos));
    pos = c + 1;
  }
}

double parse_double(const std::string& s, const std::string& path, int line) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty())
    throw std::runtime_error(path + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& path, int line) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || s.empty())
    throw std::runtime_error(path + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

std::vector<RateRow> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kRateHeader)
    throw std::runtime_error(path + ":1: bad or missing header");
  std::vector<RateRow> rows;
  int ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 8)
      throw std::runtime_error(path + ":" + std::to_string(ln) + ": expected 8 fields, got " +
                               std::to_string(f.size()));
    RateRow r;
    r.kappa = parse_double(f[0], path, ln);
    r.level = int(parse_long(f[1], path, ln));
    r.mesh_size = parse_double(f[2], path, ln);
    r.err_L2_u = parse_double(f[3], path, ln);
    r.err_H1k_u = parse_double(f[4], path, ln);
    r.err_L2_A = parse_double(f[5], path, ln);
    r.err_H1_A = parse_double(f[6], path, ln);
    r.err_energy = parse_double(f[7], path, ln);
    rows.push_back(r);
  }
  return rows;
}

static const char* kEnergyHeader = "step,kinetic,condensation,field,div_penalty,total_gl,total";

void write_energy_csv(const std::string& path, const std::vector<EnergyBreakdown>& history) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_energy_csv: cannot open " + path);
  os << kEnergyHeader << "\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& e = history[i];
    os << i << ',' << fmt17(e.kinetic) << ',' << fmt17(e.condensation) << ',' << fmt17(e.field)
       << ',' << fmt17(e.div_penalty) << ',' << fmt17(e.total_gl()) << ',' << fmt17(e.total())
       << "\n";
  }
}

std::vector<EnergyBreakdown> read_energy_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_energy_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kEnergyHeader)
    throw std::runtime_error(path + ":1: bad or missing header");
  std::vector<EnergyBreakdown> out;
  int ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 7)
      throw std::runtime_error(path + ":" + std::to_string(ln) + ": expected 7 fields");
    if (parse_long(f[0], path, ln) != long(out.size()))
      throw std::runtime_error(path + ":" + std::to_string(ln) + ": non-sequential step index");
    EnergyBreakdown e;
    e.kinetic = parse_double(f[1], path, ln);
    e.condensation = parse_double(f[2], path, ln);
    e.field = parse_double(f[3], path, ln);
    e.div_penalty = parse_double(f[4], path, ln);
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

namespace {

bool parse_bool(const std::string& v, int line) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError(line, "expected on/off, got '" + v + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(ln, "expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.empty()) throw ConfigError(ln, "empty value for '" + key + "'");

    auto num = [&] {
      char* end = nullptr;
      double v = std::strtod(val.c_str(), &end);
      if (end != val.c_str() + val.size()) throw ConfigError(ln, "bad number '" + val + "'");
      return v;
    };
    auto intval = [&] {
      char* end = nullptr;
      long v = std::strtol(val.c_str(), &end, 10);
      if (end != val.c_str() + val.size()) throw ConfigError(ln, "bad integer '" + val + "'");
      return int(v);
    };
    auto level = [&](const char* what) {
      int v = intval();
      if (v < 1 || v > 12) throw ConfigError(ln, std::string(what) + " must be in [1,12]");
      return v;
    };

    if (key == "kappa") {
      cfg.kappa = num();
      if (cfg.kappa <= 0) throw ConfigError(ln, "kappa must be positive");
    } else if (key == "field_amplitude") {
      cfg.field_amplitude = num();
    } else if (key == "u_level") {
      cfg.u_level = level("u_level");
    } else if (key == "A_level") {
      cfg.A_level = level("A_level");
    } else if (key == "fine_level") {
      cfg.fine_level = level("fine_level");
    } else if (key == "lod") {
      cfg.lod = parse_bool(val, ln);
    } else if (key == "layers") {
      cfg.layers = intval();
      if (cfg.layers < 0) throw ConfigError(ln, "layers must be >= 0");
    } else if (key == "A_degree") {
      cfg.A_degree = intval();
      if (cfg.A_degree != 1 && cfg.A_degree != 2) throw ConfigError(ln, "A_degree must be 1 or 2");
    } else if (key == "tau") {
      cfg.tau = num();
      if (cfg.tau <= 0) throw ConfigError(ln, "tau must be positive");
    } else if (key == "eps_tol") {
      cfg.eps_tol = num();
      if (cfg.eps_tol <= 0) throw ConfigError(ln, "eps_tol must be positive");
    } else if (key == "max_steps") {
      cfg.max_steps = intval();
      if (cfg.max_steps < 1) throw ConfigError(ln, "max_steps must be >= 1");
    } else if (key == "seed") {
      char* end = nullptr;
      cfg.seed = std::strtoull(val.c_str(), &end, 10);
      if (end != val.c_str() + val.size()) throw ConfigError(ln, "bad seed '" + val + "'");
    } else if (key == "init") {
      if (val != "random" && val.rfind("constant:", 0) != 0 && val.rfind("file:", 0) != 0)
        throw ConfigError(ln, "init must be random, constant:<c>, or file:<prefix>");
      if (val.rfind("constant:", 0) == 0) {
        std::string c = val.substr(9);
        char* end = nullptr;
        std::strtod(c.c_str(), &end);
        if (c.empty() || end != c.c_str() + c.size())
          throw ConfigError(ln, "bad constant in init '" + val + "'");
      }
      cfg.init = val;
    } else if (key == "lod_warmup") {
      cfg.lod_warmup = intval();
      if (cfg.lod_warmup < 0) throw ConfigError(ln, "lod_warmup must be >= 0");
    } else if (key == "lod_period") {
      cfg.lod_period = intval();
      // 0 disables scheduled refreshes after the warm-up phase.
      if (cfg.lod_period < 0) throw ConfigError(ln, "lod_period must be >= 0");
    } else if (key == "output_dir") {
      cfg.output_dir = val;
    } else if (key == "solver_tol") {
      cfg.solver_tol = num();
      if (cfg.solver_tol <= 0) throw ConfigError(ln, "solver_tol must be positive");
    } else if (key == "checkpoint_every") {
      cfg.checkpoint_every = intval();
      if (cfg.checkpoint_every < 0) throw ConfigError(ln, "checkpoint_every must be >= 0");
    } else if (key == "c_res") {
      cfg.c_res = num();
      if (cfg.c_res <= 0) throw ConfigError(ln, "c_res must be positive");
    } else if (key == "strict_resolution") {
      cfg.strict_resolution = parse_bool(val, ln);
    } else if (key == "sweep_axis") {
      if (val != "H" && val != "h") throw ConfigError(ln, "sweep_axis must be H or h");
      cfg.sweep_axis = val;
    } else if (key == "sweep_levels") {
      cfg.sweep_levels.clear();
      for (const auto& piece : split_fields(val)) {
        std::string p = trim(piece);
        char* end = nullptr;
        long v = std::strtol(p.c_str(), &end, 10);
        if (p.empty() || end != p.c_str() + p.size() || v < 1 || v > 12)
          throw ConfigError(ln, "bad level '" + p + "' in sweep_levels");
        cfg.sweep_levels.push_back(int(v));
      }
    } else if (key == "kappa_list") {
      cfg.kappa_list.clear();
      for (const auto& piece : split_fields(val)) {
        std::string p = trim(piece);
        char* end = nullptr;
        double v = std::strtod(p.c_str(), &end);
        if (p.empty() || end != p.c_str() + p.size() || v <= 0)
          throw ConfigError(ln, "bad kappa '" + p + "' in kappa_list");
        cfg.kappa_list.push_back(v);
      }
    } else if (key == "sweep_baseline") {
      cfg.sweep_baseline = parse_bool(val, ln);
    } else {
      throw ConfigError(ln, "unknown key '" + key + "'");
    }
  }

  if (cfg.fine_level < cfg.u_level || cfg.fine_level < cfg.A_level)
    throw ConfigError(0, "fine_level must be the finest level (>= u_level and A_level)");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string render_config(const RunConfig& c) {
  std::ostringstream os;
  os << "kappa=" << fmt17(c.kappa) << "\n"
     << "field_amplitude=" << fmt17(c.field_amplitude) << "\n"
     << "u_level=" << c.u_level << "\n"
     << "A_level=" << c.A_level << "\n"
     << "fine_level=" << c.fine_level << "\n"
     << "lod=" << (c.lod ? "on" : "off") << "\n"
     << "layers=" << c.layers << "\n"
     << "A_degree=" << c.A_degree << "\n"
     << "tau=" << fmt17(c.tau) << "\n"
     << "eps_tol=" << fmt17(c.eps_tol) << "\n"
     << "max_steps=" << c.max_steps << "\n"
     << "seed=" << c.seed << "\n"
     << "init=" << c.init << "\n"
     << "lod_warmup=" << c.lod_warmup << "\n"
     << "lod_period=" << c.lod_period << "\n"
     << "solver_tol=" << fmt17(c.solver_tol) << "\n"
     << "c_res=" << fmt17(c.c_res) << "\n";
  return os.str();
}

}  // namespace gllod
