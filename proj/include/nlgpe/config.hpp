#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlgpe/control.hpp"
#include "nlgpe/error.hpp"
#include "nlgpe/expression.hpp"
#include "nlgpe/models.hpp"
#include "nlgpe/spectral.hpp"

namespace nlgpe {

inline constexpr const char* version = "0.1.0";

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// Sectioned `key = value` text. `#` and `;` start comments outside double
/// quotes; quoted values have their quotes removed. Numeric values are
/// themselves expressions and may use the constants of `[params]`.
class Config {
 public:
  static Config parse(std::istream& in, std::filesystem::path base_dir = {}) {
    Config cfg;
    cfg.base_dir_ = std::move(base_dir);
    std::ostringstream raw;
    raw << in.rdbuf();
    cfg.raw_ = raw.str();
    std::istringstream lines(cfg.raw_);
    std::string line, section;
    int number = 0;
    while (std::getline(lines, line)) {
      ++number;
      const std::string body = trim(strip_comment(line));
      if (body.empty()) {
        continue;
      }
      const std::string where = "line " + std::to_string(number);
      if (body.front() == '[') {
        if (body.back() != ']' || body.size() < 3) {
          throw ConfigError("", where + ": malformed section header '" + body + "'");
        }
        section = trim(body.substr(1, body.size() - 2));
        cfg.sections_[section];
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("", where + ": expected 'key = value'");
      }
      if (section.empty()) {
        throw ConfigError("", where + ": key outside any section");
      }
      const std::string key = trim(body.substr(0, eq));
      std::string value = trim(body.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError("", where + ": empty key");
      }
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      } else if (!value.empty() && value.front() == '"') {
        throw ConfigError(section + "." + key, where + ": unterminated quote");
      }
      auto& entries = cfg.sections_[section];
      if (entries.count(key) != 0U) {
        throw ConfigError(section + "." + key, where + ": duplicate key (first set on line " +
                                                   std::to_string(entries[key].line) + ")");
      }
      entries[key] = {value, number};
      if (section == "params") {
        cfg.param_order_.push_back(key);
      }
    }
    return cfg;
  }

  static Config parse_string(const std::string& text, std::filesystem::path base_dir = {}) {
    std::istringstream in(text);
    return parse(in, std::move(base_dir));
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
      throw ConfigError("", "cannot open config file " + path.string());
    }
    return parse(in, path.parent_path());
  }

  const std::string& raw() const noexcept { return raw_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(raw_)));
    return buf;
  }

  bool has_section(const std::string& section) const { return sections_.count(section) != 0U; }

  bool has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

  const ConfigEntry* find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) {
      return nullptr;
    }
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  const ConfigEntry& require(const std::string& section, const std::string& key) const {
    const ConfigEntry* e = find(section, key);
    if (e == nullptr) {
      throw ConfigError(section + "." + key, "required key missing");
    }
    return *e;
  }

  std::string text(const std::string& section, const std::string& key) const { return require(section, key).value; }

  std::string text_or(const std::string& section, const std::string& key, const std::string& fallback) const {
    const ConfigEntry* e = find(section, key);
    return e ? e->value : fallback;
  }

  /// Replaces (or adds) a value; used by parameter sweeps.
  void set(const std::string& section, const std::string& key, const std::string& value) {
    auto& entries = sections_[section];
    const bool fresh = entries.count(key) == 0U;
    entries[key].value = value;
    if (fresh && section == "params") {
      param_order_.push_back(key);
    }
  }

  /// `[params]` evaluated in file order; each may use the ones before it.
  std::map<std::string, double> constants() const {
    std::map<std::string, double> out;
    for (const auto& key : param_order_) {
      const ConfigEntry& e = sections_.at("params").at(key);
      out[key] = evaluate("params", key, e, {}, out);
    }
    return out;
  }

  Expression expression(const std::string& section, const std::string& key, const std::vector<std::string>& variables) const {
    const ConfigEntry& e = require(section, key);
    try {
      return Expression::compile(e.value, variables, constants());
    } catch (const std::invalid_argument& err) {
      throw ConfigError(section + "." + key, "line " + std::to_string(e.line) + ": " + err.what());
    }
  }

  double number(const std::string& section, const std::string& key) const {
    return evaluate(section, key, require(section, key), {}, constants());
  }

  double number_or(const std::string& section, const std::string& key, double fallback) const {
    const ConfigEntry* e = find(section, key);
    return e ? evaluate(section, key, *e, {}, constants()) : fallback;
  }

  long integer(const std::string& section, const std::string& key) const {
    return to_integer(section, key, number(section, key));
  }

  long integer_or(const std::string& section, const std::string& key, long fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
  }

  /// Comma-separated list of expressions in `variables`.
  std::vector<Expression> expression_list(const std::string& section, const std::string& key,
                                          const std::vector<std::string>& variables) const {
    const ConfigEntry& e = require(section, key);
    std::vector<Expression> out;
    std::size_t start = 0;
    const auto consts = constants();
    while (start <= e.value.size()) {
      const auto comma = e.value.find(',', start);
      const std::string piece = trim(e.value.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      try {
        out.push_back(Expression::compile(piece, variables, consts));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(section + "." + key, "line " + std::to_string(e.line) + ", item " + std::to_string(out.size() + 1) +
                                                   ": " + err.what());
      }
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    return out;
  }

  std::vector<double> number_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& e : expression_list(section, key, {})) {
      out.push_back(e(std::span<const double>{}));
    }
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
      ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
      --e;
    }
    return s.substr(b, e - b);
  }

  static std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') {
        quoted = !quoted;
      } else if (!quoted && (line[i] == '#' || line[i] == ';')) {
        return line.substr(0, i);
      }
    }
    return line;
  }

  static double evaluate(const std::string& section, const std::string& key, const ConfigEntry& e,
                         const std::vector<std::string>& variables, const std::map<std::string, double>& consts) {
    try {
      return Expression::compile(e.value, variables, consts)(std::span<const double>{});
    } catch (const std::invalid_argument& err) {
      throw ConfigError(section + "." + key, "line " + std::to_string(e.line) + ": " + err.what());
    }
  }

  static long to_integer(const std::string& section, const std::string& key, double v) {
    if (v != std::floor(v) || std::abs(v) > 1e15) {
      throw ConfigError(section + "." + key, "expected an integer, got " + std::to_string(v));
    }
    return static_cast<long>(v);
  }

  std::string raw_;
  std::filesystem::path base_dir_;
  std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
  std::vector<std::string> param_order_;
};

/// A configured model together with the cooperative system that decides its
/// threshold. For cooperative catalog entries both are the same model; for
/// the full WNV and May–Nowak systems the threshold system is the reduced
/// infection subsystem and `lift` maps its states back to the full model.
struct Scenario {
  std::string model_name;
  SpatialGrid grid;
  ModelSpec dynamics;
  ModelSpec threshold;
  std::function<State(const State&)> lift;
};

struct SpectralSettings {
  std::vector<double> schedule;
  EigenOptions eig;
  std::optional<double> gap_tol;
  std::optional<double> lambda0;
  unsigned threads = 1;
};

struct DynamicsSettings {
  double T = 0.0;
  std::optional<double> dt;
  std::size_t stride = 1;
  std::vector<Expression> u0;
  double tol = 1e-6;
};

struct EquilibriumSettings {
  MonotoneOptions monotone;
  double eps = 1e-3;
  std::size_t brackets = 3;
  std::size_t subhom_samples = 10000;
  std::size_t continuity_starts = 24;
};

struct SweepSettings {
  std::string section;
  std::string key;
  std::vector<double> values;
};

namespace detail {

inline Dispersal read_dispersal(const Config& cfg, const std::string& section, const SpatialGrid& grid) {
  const std::string family = cfg.text_or(section, "kernel", "gaussian");
  const std::string boundary = cfg.text_or(section, "boundary", "neumann");
  BoundaryMode mode;
  if (boundary == "neumann") {
    mode.kind = Boundary::neumann;
  } else if (boundary == "dirichlet") {
    mode.kind = Boundary::dirichlet;
  } else {
    throw ConfigError(section + ".boundary", "expected neumann or dirichlet, got '" + boundary + "'");
  }
  mode.rate = cfg.number(section, "rate");
  if (mode.rate < 0.0) {
    throw ConfigError(section + ".rate", "dispersal rate must be nonnegative");
  }
  KernelSpec kernel;
  if (family == "tabulated") {
    std::filesystem::path path = cfg.text(section, "table");
    if (path.is_relative()) {
      path = cfg.base_dir() / path;
    }
    try {
      kernel = load_tabulated_kernel(path.string(), grid);
    } catch (const std::exception& e) {
      throw ConfigError(section + ".table", e.what());
    }
  } else {
    const double w = cfg.number(section, "width");
    if (!(w > 0.0)) {
      throw ConfigError(section + ".width", "kernel width must be positive");
    }
    if (family == "gaussian") {
      kernel = KernelSpec::gaussian(w);
    } else if (family == "tent") {
      kernel = KernelSpec::tent(w);
    } else if (family == "uniform" || family == "uniform_window") {
      kernel = KernelSpec::uniform_window(w);
    } else {
      throw ConfigError(section + ".kernel", "unknown kernel family '" + family + "'");
    }
  }
  return {kernel, mode};
}

/// Dispersal of one component: `[dispersal.<name>]`, then
/// `[dispersal.<index>]` (1-based), then `[dispersal]`.
inline Dispersal component_dispersal(const Config& cfg, const SpatialGrid& grid, std::size_t index, const std::string& name = {}) {
  for (const std::string& s : {name.empty() ? std::string() : "dispersal." + name, "dispersal." + std::to_string(index + 1)}) {
    if (!s.empty() && cfg.has_section(s)) {
      return read_dispersal(cfg, s, grid);
    }
  }
  if (!cfg.has_section("dispersal")) {
    throw ConfigError("dispersal", "no dispersal section for component " + std::to_string(index + 1));
  }
  return read_dispersal(cfg, "dispersal", grid);
}

inline Coefficient read_coefficient(const Config& cfg, const SpatialGrid& grid, const std::string& key,
                                    std::optional<double> fallback = std::nullopt) {
  if (!cfg.has("model", key)) {
    if (fallback) {
      return coefficient(grid, *fallback);
    }
    cfg.require("model", key);
  }
  const Expression e = cfg.expression("model", key, {"x"});
  return coefficient(grid, [&](double x) { return e(x); });
}

inline ScalarNonlinearity read_nonlinearity(const Config& cfg, const std::string& key, const std::string& var) {
  const Expression e = cfg.expression("model", key, {"x", var});
  return {[e](double x, double z) {
            const double args[2] = {x, z};
            return e(std::span<const double>(args, 2));
          },
          {}};
}

inline std::size_t read_components(const Config& cfg) {
  const long n = cfg.integer("model", "n");
  if (n < 1 || n > 16) {
    throw ConfigError("model.n", "component count must be between 1 and 16");
  }
  return static_cast<std::size_t>(n);
}

inline MatrixField read_matrix_field(const Config& cfg, const SpatialGrid& grid, std::size_t n, char prefix) {
  std::vector<std::vector<std::optional<Expression>>> entries(n, std::vector<std::optional<Expression>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::string key = std::string(1, prefix) + std::to_string(i + 1) + std::to_string(k + 1);
      if (cfg.has("model", key)) {
        entries[i][k] = cfg.expression("model", key, {"x"});
      }
    }
  }
  MatrixField field = MatrixField::from_function(grid, n, [&](double x) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        if (entries[i][k]) {
          B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (*entries[i][k])(x);
        }
      }
    }
    return B;
  });
  for (std::size_t m = 0; m < field.size(); ++m) {
    if (!check_cooperative(field[m])) {
      throw ConfigError("model", "coefficient field is not cooperative at node " + std::to_string(m));
    }
  }
  return field;
}

inline WnvParams read_wnv(const Config& cfg, const SpatialGrid& grid) {
  auto c = [&](const char* key) { return read_coefficient(cfg, grid, key); };
  auto z = [&](const char* key) { return read_coefficient(cfg, grid, key, 0.0); };
  return {c("a1"),
          c("a2"),
          z("mu1"),
          z("mu2"),
          c("c1"),
          c("c2"),
          c("l1"),
          c("l2"),
          component_dispersal(cfg, grid, 0, "host"),
          component_dispersal(cfg, grid, 1, "vector")};
}

inline MayNowakParams read_may_nowak(const Config& cfg, const SpatialGrid& grid) {
  auto c = [&](const char* key) { return read_coefficient(cfg, grid, key); };
  return {c("a1"), c("a2"), c("b"), c("phi"), c("gamma"), component_dispersal(cfg, grid, 0, "cells"),
          component_dispersal(cfg, grid, 1, "virus")};
}

template <class Fn>
ModelSpec guarded(const std::string& where, Fn&& build) {
  try {
    return build();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
}

}  // namespace detail

inline SpatialGrid read_grid(const Config& cfg) {
  const double a = cfg.number_or("grid", "a", 0.0);
  const double b = cfg.number_or("grid", "b", 1.0);
  const long M = cfg.integer("grid", "M");
  if (M < 2) {
    throw ConfigError("grid.M", "at least two nodes required");
  }
  try {
    return build_grid(a, b, static_cast<std::size_t>(M));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("grid", e.what());
  }
}

/// Builds the configured model. `[model] name` selects one of: logistic,
/// linear, linear_system, field, wnv_full, wnv_reduced, may_nowak,
/// may_nowak_reduced, capasso_maddalena, benthic_drift.
inline Scenario build_scenario(const Config& cfg) {
  Scenario sc;
  sc.grid = read_grid(cfg);
  const SpatialGrid& grid = sc.grid;
  sc.model_name = cfg.text("model", "name");
  sc.lift = [](const State& s) { return s; };
  const std::string& name = sc.model_name;
  using namespace detail;

  if (name == "logistic") {
    const Coefficient a = read_coefficient(cfg, grid, "a");
    const Coefficient c = read_coefficient(cfg, grid, "c", 1.0);
    sc.dynamics = guarded("model", [&] { return logistic(grid, a, component_dispersal(cfg, grid, 0), c); });
  } else if (name == "linear") {
    const Coefficient b = read_coefficient(cfg, grid, "b");
    sc.dynamics = guarded("model", [&] { return linear_scalar(grid, b, component_dispersal(cfg, grid, 0)); });
  } else if (name == "linear_system" || name == "field") {
    const std::size_t n = read_components(cfg);
    std::vector<Dispersal> disp;
    for (std::size_t i = 0; i < n; ++i) {
      disp.push_back(component_dispersal(cfg, grid, i));
    }
    MatrixField A = read_matrix_field(cfg, grid, n, name == "field" ? 'b' : 'a');
    if (name == "field") {
      // Entries are the full field B, so the reaction is B + diag(d*).
      const auto blocks = bind_dispersal(disp, grid);
      for (std::size_t m = 0; m < A.size(); ++m) {
        for (std::size_t i = 0; i < n; ++i) {
          A[m](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += blocks[i].boundary[static_cast<Eigen::Index>(m)];
        }
      }
    }
    sc.dynamics = guarded("model", [&] { return linear_system(grid, A, disp); });
    sc.dynamics.name = name;
  } else if (name == "wnv_full" || name == "wnv_reduced") {
    const WnvParams p = read_wnv(cfg, grid);
    try {
      p.validate(grid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("model", e.what());
    }
    const Coefficient H = solve_logistic_equilibrium(wnv_total(grid, p, 1)).col(0);
    const Coefficient V = solve_logistic_equilibrium(wnv_total(grid, p, 2)).col(0);
    std::optional<WnvPerturbation> perturb;
    if (cfg.has("model", "sigma")) {
      const double eps = cfg.number_or("model", "perturbation_eps", 1e-3);
      auto [phi1, phi2] = wnv_perturbation_direction(grid, p, eps);
      perturb = WnvPerturbation{cfg.number("model", "sigma"), phi1, phi2};
    }
    WnvReduction red;
    try {
      red = wnv_reduce(grid, p, H, V, perturb);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("model", e.what());
    }
    sc.threshold = red.truncated;
    if (name == "wnv_full") {
      sc.dynamics = wnv_full(grid, p);
      sc.lift = [H, V](const State& r) {
        State s(r.rows(), 4);
        s.col(0) = H - r.col(0);
        s.col(1) = r.col(0);
        s.col(2) = V - r.col(1);
        s.col(3) = r.col(1);
        return s;
      };
    } else {
      sc.dynamics = red.truncated;
    }
  } else if (name == "may_nowak" || name == "may_nowak_reduced") {
    const MayNowakParams p = read_may_nowak(cfg, grid);
    const Coefficient Z = [&] {
      try {
        return may_nowak_source(grid, p);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("model", e.what());
      }
    }();
    sc.threshold = may_nowak_reduce(grid, p, Z);
    if (name == "may_nowak") {
      sc.dynamics = may_nowak(grid, p);
      sc.lift = [Z](const State& r) {
        State s(r.rows(), 3);
        s.col(0) = Z - r.col(0);
        s.col(1) = r.col(0);
        s.col(2) = r.col(1);
        return s;
      };
    } else {
      sc.dynamics = sc.threshold;
    }
  } else if (name == "capasso_maddalena") {
    CapassoParams p{read_coefficient(cfg, grid, "gamma11"), read_coefficient(cfg, grid, "gamma12"),
                    read_coefficient(cfg, grid, "gamma22"), component_dispersal(cfg, grid, 0, "agent"),
                    component_dispersal(cfg, grid, 1, "humans"), read_nonlinearity(cfg, "G", "u")};
    sc.dynamics = guarded("model", [&] { return capasso_maddalena(grid, p); });
  } else if (name == "benthic_drift") {
    auto c = [&](const char* key) { return read_coefficient(cfg, grid, key); };
    BenthicParams p{c("A_d"), c("A_b"), c("m_d"), c("m_b"), c("sigma"), c("mu"), component_dispersal(cfg, grid, 0, "drift"),
                    read_nonlinearity(cfg, "g", "v")};
    sc.dynamics = guarded("model", [&] { return benthic_drift(grid, p); });
  } else {
    throw ConfigError("model.name", "unknown model '" + name + "'");
  }
  if (sc.threshold.n == 0 || !sc.threshold.f) {
    sc.threshold = sc.dynamics;
  }
  return sc;
}

inline SpectralSettings read_spectral(const Config& cfg) {
  SpectralSettings s;
  if (cfg.has("spectral", "schedule")) {
    s.schedule = cfg.number_list("spectral", "schedule");
  } else {
    const double eps0 = cfg.number_or("spectral", "eps0", 0.1);
    const long levels = cfg.integer_or("spectral", "levels", 10);
    if (!(eps0 > 0.0)) {
      throw ConfigError("spectral.eps0", "must be positive");
    }
    if (levels < 0) {
      throw ConfigError("spectral.levels", "must be nonnegative");
    }
    s.schedule = default_schedule(eps0, static_cast<std::size_t>(levels));
  }
  for (std::size_t k = 0; k < s.schedule.size(); ++k) {
    if (!(s.schedule[k] > 0.0) || (k > 0 && !(s.schedule[k] < s.schedule[k - 1]))) {
      throw ConfigError("spectral.schedule", "must be positive and strictly decreasing");
    }
  }
  if (s.schedule.empty()) {
    throw ConfigError("spectral.schedule", "empty schedule");
  }
  s.eig.power.tolerance = cfg.number_or("spectral", "tolerance", s.eig.power.tolerance);
  s.eig.power.max_iterations = cfg.integer_or("spectral", "max_iterations", s.eig.power.max_iterations);
  s.eig.positivity_threshold = cfg.number_or("spectral", "positivity_threshold", s.eig.positivity_threshold);
  if (cfg.has("spectral", "gap_tol")) {
    s.gap_tol = cfg.number("spectral", "gap_tol");
  }
  if (cfg.has("spectral", "lambda0")) {
    s.lambda0 = cfg.number("spectral", "lambda0");
  }
  return s;
}

inline DynamicsSettings read_dynamics(const Config& cfg, const ModelSpec& model) {
  DynamicsSettings d;
  d.T = cfg.number("dynamics", "T");
  if (!(d.T > 0.0)) {
    throw ConfigError("dynamics.T", "must be positive");
  }
  if (cfg.has("dynamics", "dt")) {
    d.dt = cfg.number("dynamics", "dt");
    if (!(*d.dt > 0.0)) {
      throw ConfigError("dynamics.dt", "must be positive");
    }
  }
  const long stride = cfg.integer_or("dynamics", "stride", 1);
  if (stride < 1) {
    throw ConfigError("dynamics.stride", "must be at least 1");
  }
  d.stride = static_cast<std::size_t>(stride);
  d.tol = cfg.number_or("dynamics", "tol", d.tol);
  d.u0 = cfg.expression_list("dynamics", "u0", {"x"});
  if (d.u0.size() != model.n) {
    throw ConfigError("dynamics.u0", "expected " + std::to_string(model.n) + " comma-separated components, got " +
                                         std::to_string(d.u0.size()));
  }
  return d;
}

inline State initial_state(const DynamicsSettings& d, const ModelSpec& model) {
  State u0 = model.zeros();
  for (std::size_t i = 0; i < model.n; ++i) {
    for (std::size_t m = 0; m < model.size(); ++m) {
      u0(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = d.u0[i](model.grid.nodes[m]);
    }
  }
  if (!(u0.minCoeff() >= 0.0)) {
    throw ConfigError("dynamics.u0", "initial data must be nonnegative");
  }
  if (!(u0.maxCoeff() > 0.0)) {
    throw ConfigError("dynamics.u0", "initial data must not vanish identically");
  }
  return u0;
}

inline EquilibriumSettings read_equilibrium(const Config& cfg) {
  EquilibriumSettings e;
  e.monotone.tol = cfg.number_or("equilibrium", "tol", e.monotone.tol);
  e.monotone.max_iter = cfg.integer_or("equilibrium", "max_iter", e.monotone.max_iter);
  e.eps = cfg.number_or("equilibrium", "eps", e.eps);
  e.brackets = static_cast<std::size_t>(std::max(1L, cfg.integer_or("equilibrium", "brackets", 3)));
  e.subhom_samples = static_cast<std::size_t>(std::max(0L, cfg.integer_or("equilibrium", "subhom_samples", 10000)));
  e.continuity_starts = static_cast<std::size_t>(std::max(1L, cfg.integer_or("equilibrium", "continuity_starts", 24)));
  return e;
}

inline SweepSettings read_sweep(const Config& cfg) {
  SweepSettings s;
  const std::string path = cfg.text("sweep", "parameter");
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
    throw ConfigError("sweep.parameter", "expected section.key, got '" + path + "'");
  }
  s.section = path.substr(0, dot);
  s.key = path.substr(dot + 1);
  if (cfg.has("sweep", "values")) {
    s.values = cfg.number_list("sweep", "values");
  } else {
    const double from = cfg.number("sweep", "from");
    const double to = cfg.number("sweep", "to");
    const long points = cfg.integer("sweep", "points");
    if (points < 1) {
      throw ConfigError("sweep.points", "empty range");
    }
    if (points == 1) {
      s.values = {from};
    } else {
      if (from == to) {
        throw ConfigError("sweep.to", "empty range (from equals to)");
      }
      for (long k = 0; k < points; ++k) {
        s.values.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(points - 1));
      }
    }
  }
  if (s.values.empty()) {
    throw ConfigError("sweep.values", "empty range");
  }
  return s;
}

}  // namespace nlgpe
