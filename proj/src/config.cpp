#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slg/config.hpp"
#include "slg/errors.hpp"

namespace slg {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_real(const std::string& v, int line) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || t.empty())
    throw ConfigError("expected a number, got '" + t + "'", line);
  return x;
}

int parse_int(const std::string& v, int line) {
  const double x = parse_real(v, line);
  if (x != std::floor(x) || std::fabs(x) > 1e9)
    throw ConfigError("expected an integer, got '" + trim(v) + "'", line);
  return static_cast<int>(x);
}

bool parse_bool(const std::string& v, int line) {
  const std::string t = trim(v);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("expected a boolean, got '" + t + "'", line);
}

std::vector<double> parse_reals(const std::string& v, int line) {
  std::istringstream is(v);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_real(tok, line));
  if (out.empty()) throw ConfigError("expected a list of numbers", line);
  return out;
}

std::vector<int> parse_ints(const std::string& v, int line) {
  std::vector<int> out;
  for (double x : parse_reals(v, line)) {
    if (x != std::floor(x)) throw ConfigError("expected integers", line);
    out.push_back(static_cast<int>(x));
  }
  return out;
}

// Rows separated by ';', entries by whitespace. The matrix must be symmetric.
SymmetricMatrix parse_matrix(const std::string& v, int line) {
  std::vector<std::vector<double>> rows;
  std::string row;
  std::istringstream is(v);
  while (std::getline(is, row, ';')) {
    const std::string t = trim(row);
    if (t.empty()) continue;
    rows.push_back(parse_reals(t, line));
  }
  if (rows.empty()) throw ConfigError("empty matrix", line);
  const int dim = static_cast<int>(rows.size());
  if (dim > SymmetricMatrix::kMaxDim)
    throw ConfigError("matrix dimension exceeds the supported maximum", line);
  double scale = 0.0;
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != dim)
      throw ConfigError("matrix rows must all have the same length as the row count", line);
    for (double x : r) scale = std::max(scale, std::fabs(x));
  }
  SymmetricMatrix m(dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double a = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const double b = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      if (std::fabs(a - b) > 1e-12 * (1.0 + scale))
        throw ConfigError("matrix is not symmetric", line);
      m.at(i, j) = 0.5 * (a + b);
    }
  }
  return m;
}

// "k1 [k2 k3] : cos_amp sin_amp"
TrigMode parse_mode(const std::string& v, int n, int line) {
  const std::size_t colon = v.find(':');
  if (colon == std::string::npos)
    throw ConfigError("mode needs the form 'k-vector : cos_amp sin_amp'", line);
  const std::vector<int> k = parse_ints(v.substr(0, colon), line);
  const std::vector<double> amps = parse_reals(v.substr(colon + 1), line);
  if (static_cast<int>(k.size()) != n)
    throw ConfigError("mode k-vector length must match n", line);
  if (amps.size() != 2) throw ConfigError("mode needs exactly cos and sin amplitudes", line);
  TrigMode mode;
  for (int a = 0; a < n; ++a) mode.k[static_cast<std::size_t>(a)] = k[static_cast<std::size_t>(a)];
  mode.cos_amp = amps[0];
  mode.sin_amp = amps[1];
  return mode;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& name) {
  RunConfig cfg;
  cfg.source = name;
  bool saw_u0 = false, saw_u1 = false, saw_chi = false;
  bool saw_zeta = false, saw_tau = false;

  std::istringstream stream(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section == "u0")
        saw_u0 = true;
      else if (section == "u1")
        saw_u1 = true;
      else if (section == "chi")
        saw_chi = true;
      else if (section != "schedule" && section != "newton" && section != "checks")
        throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }

    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("expected 'key = value'", line);

    if (section.empty()) {
      if (key == "n")
        cfg.n = parse_int(value, line);
      else if (key == "grid")
        cfg.grid_points = parse_int(value, line);
      else if (key == "time_grid")
        cfg.time_points = parse_int(value, line);
      else if (key == "theta")
        cfg.theta_override = parse_real(value, line);
      else if (key == "big_theta")
        cfg.big_theta_override = parse_real(value, line);
      else
        throw ConfigError("unknown key '" + key + "'", line);
    } else if (section == "u0" || section == "u1") {
      if (cfg.n <= 0) throw ConfigError("set n before the potential sections", line);
      std::optional<PotentialSpec>& slot = section == "u0" ? cfg.u0 : cfg.u1;
      if (!slot) {
        slot.emplace();
        slot->n = cfg.n;
        slot->quadratic = SymmetricMatrix(cfg.n);
      }
      if (key == "quadratic") {
        SymmetricMatrix q = parse_matrix(value, line);
        if (q.dim() != cfg.n) throw ConfigError("quadratic block must be n x n", line);
        slot->quadratic = q;
      } else if (key == "constant") {
        slot->constant = parse_real(value, line);
      } else if (key == "mode") {
        slot->modes.push_back(parse_mode(value, cfg.n, line));
      } else {
        throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
      }
    } else if (section == "chi") {
      if (cfg.n <= 0) throw ConfigError("set n before the chi section", line);
      if (key == "matrix") {
        SymmetricMatrix m = parse_matrix(value, line);
        if (m.dim() != cfg.n + 1)
          throw ConfigError("synthetic chi must be (n+1) x (n+1)", line);
        cfg.chi_matrix = m;
      } else {
        throw ConfigError("unknown key '" + key + "' in [chi]", line);
      }
    } else if (section == "schedule") {
      if (key == "zeta") {
        cfg.schedule.zeta_steps = parse_reals(value, line);
        saw_zeta = true;
      } else if (key == "tau") {
        cfg.schedule.tau_sequence = parse_reals(value, line);
        saw_tau = true;
      } else if (key == "warm_start") {
        cfg.schedule.warm_start = parse_bool(value, line);
      } else if (key == "grids") {
        cfg.grid_sweep = parse_ints(value, line);
      } else {
        throw ConfigError("unknown key '" + key + "' in [schedule]", line);
      }
    } else if (section == "newton") {
      if (key == "tolerance")
        cfg.newton.residual_tolerance = parse_real(value, line);
      else if (key == "max_iterations")
        cfg.newton.max_iterations = parse_int(value, line);
      else if (key == "backtrack")
        cfg.newton.backtrack_factor = parse_real(value, line);
      else if (key == "min_step")
        cfg.newton.min_step = parse_real(value, line);
      else if (key == "polish")
        cfg.newton.polish_evaluations = parse_int(value, line);
      else if (key == "linear_reduction")
        cfg.newton.linear_reduction = parse_real(value, line);
      else if (key == "linear_max_iterations")
        cfg.newton.linear_max_iterations = parse_int(value, line);
      else
        throw ConfigError("unknown key '" + key + "' in [newton]", line);
    } else if (section == "checks") {
      if (key == "monge_ampere")
        cfg.check_monge_ampere = parse_bool(value, line);
      else if (key == "energy")
        cfg.check_energy = parse_bool(value, line);
      else if (key == "residual_trend")
        cfg.check_residual_trend = parse_bool(value, line);
      else if (key == "convexity")
        cfg.check_convexity = parse_bool(value, line);
      else if (key == "monge_ampere_bound")
        cfg.monge_ampere_bound = parse_real(value, line);
      else
        throw ConfigError("unknown key '" + key + "' in [checks]", line);
    }
  }

  if ((saw_u0 || saw_u1) && saw_chi)
    throw ConfigError("give endpoint potentials or a synthetic chi, not both");
  if (saw_u0 != saw_u1) throw ConfigError("both [u0] and [u1] are required for a pair");
  if (saw_zeta || saw_tau) cfg.schedule.validate();
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void RunConfig::validate() const {
  if (n < 1 || n > 3) throw ConfigError("n must be 1, 2, or 3");
  if (grid_points < 4) throw ConfigError("grid must be at least 4 points per axis");
  if (time_points < 3) throw ConfigError("time_grid must be at least 3");
  if (u0.has_value() != u1.has_value())
    throw ConfigError("both endpoint potentials are required");
  if (u0.has_value() == chi_matrix.has_value())
    throw ConfigError("exactly one of endpoint potentials or synthetic chi is required");
  if (theta_override.has_value() != big_theta_override.has_value())
    throw ConfigError("theta and big_theta overrides come as a pair");
  if (u0) {
    u0->validate();
    u1->validate();
    pair().validate();
  }
  schedule.validate();
  if (newton.residual_tolerance <= 0.0) throw ConfigError("tolerance must be positive");
  if (newton.max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(newton.backtrack_factor > 0.0) || newton.backtrack_factor >= 1.0)
    throw ConfigError("backtrack factor must lie in (0, 1)");
  for (int g : grid_sweep)
    if (g < 4) throw ConfigError("sweep grids must be at least 4");
  branch();  // validates any override against the elliptic window
}

PhaseBranch RunConfig::branch() const {
  if (theta_override) return make_branch(n, *theta_override, *big_theta_override);
  return select_branch(n);
}

BoundaryPair RunConfig::pair() const {
  if (!u0 || !u1) throw ConfigError("config has no endpoint potentials");
  return BoundaryPair{*u0, *u1};
}

ProblemSetup RunConfig::setup() const {
  ProblemSetup s;
  s.space = TorusGrid{n, grid_points};
  s.space.validate();
  s.time_points = time_points;
  if (u0) s.pair = pair();
  if (chi_matrix) s.chi_matrix = chi_matrix;
  s.branch = branch();
  return s;
}

}  // namespace slg
