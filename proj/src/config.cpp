#include "nch/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "nch/errors.hpp"
#include "nch/expression.hpp"
#include "nch/io.hpp"

namespace nch {

ConfigError::ConfigError(std::vector<ConfigViolation> violations)
    : Error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) {
          msg += "\n  " + v.field + " = '" + v.value + "': " + v.constraint;
        }
        return msg;
      }()),
      violations_(std::move(violations)) {}

namespace {

namespace pt = boost::property_tree;

struct KeySpec {
  const char* section;
  const char* name;
  std::optional<std::string> fallback;  // nullopt: required
  const char* help;
};

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"grid", "dim", "1", "spatial dimension, 1 or 2"},
      {"grid", "nx", std::nullopt, "cells in x"},
      {"grid", "ny", "", "cells in y (2D; defaults to nx)"},
      {"grid", "lx", "1", "domain length in x"},
      {"grid", "ly", "1", "domain length in y"},
      {"time", "final_time", std::nullopt, "final time T"},
      {"time", "steps", std::nullopt, "number of time steps"},
      {"physics", "gamma", "1", ""},
      {"physics", "a", "1", ""},
      {"physics", "b", "1", ""},
      {"physics", "kappa1", "1", ""},
      {"physics", "kappa2", "1", ""},
      {"physics", "lambda", "1", ""},
      {"potential", "kind", "regular", "regular or logarithmic"},
      {"potential", "c1", "2", "logarithmic concave coefficient, > 1"},
      {"potential", "clip_margin", "1e-9", "Newton safeguard distance from +-1"},
      {"initial", "phi0", std::nullopt, "initial order parameter"},
      {"initial", "w0", "0", "initial thermal displacement"},
      {"initial", "w1", "0", "initial temperature"},
      {"source", "f", "0", "mass source"},
      {"control", "u", "0", "heat source used by simulate and as starting guess"},
      {"cost", "alpha1", "0", "phi tracking over Q"},
      {"cost", "alpha2", "0", "phi tracking at T"},
      {"cost", "alpha3", "0", "w tracking over Q"},
      {"cost", "alpha4", "0", "w tracking at T"},
      {"cost", "alpha5", "0", "temperature tracking over Q"},
      {"cost", "alpha6", "0", "temperature tracking at T"},
      {"cost", "nu", "1e-2", "control cost"},
      {"cost", "phi_Q", "0", ""},
      {"cost", "w_Q", "0", ""},
      {"cost", "dw_Q", "0", ""},
      {"cost", "phi_Omega", "0", ""},
      {"cost", "w_Omega", "0", ""},
      {"cost", "dw_Omega", "0", ""},
      {"bounds", "u_min", "-10", ""},
      {"bounds", "u_max", "10", ""},
      {"optimizer", "max_iters", "200", ""},
      {"optimizer", "armijo", "1e-4", "sufficient decrease parameter"},
      {"optimizer", "backtrack", "0.5", "step reduction factor"},
      {"optimizer", "initial_step", "1", "probe step before scaling by 1/|g0|"},
      {"optimizer", "stationarity_tol", "1e-6", ""},
      {"optimizer", "max_backtracks", "40", ""},
      {"newton", "tol", "1e-10", "step residual, max norm"},
      {"newton", "max_iter", "50", ""},
      {"newton", "max_halvings", "30", ""},
      {"adjoint", "mode", "transpose", "transpose or continuous"},
      {"checks", "eps_list", "1e-2 1e-3 1e-4 1e-5 1e-6", "grad-check step sizes"},
      {"checks", "direction", "sin(3*x) + t + 0.3*cos(2*y)", "grad-check/adjoint-check direction"},
      {"output", "directory", "run", ""},
      {"output", "stride", "1", "snapshot every stride steps"},
  };
  return keys;
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Loader {
 public:
  Loader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {
    std::set<std::string> known;
    for (const auto& k : schema()) known.insert(std::string(k.section) + "." + k.name);
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        violate(section, body.data(), "key outside any section");
        continue;
      }
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!known.count(full)) violate(full, value.data(), "unknown key");
      }
    }
    for (const auto& k : schema()) {
      const std::string full = std::string(k.section) + "." + k.name;
      const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(full, '.'));
      if (v) {
        values_[full] = trim(*v);
      } else if (k.fallback) {
        values_[full] = *k.fallback;
      } else {
        values_[full] = "";
        violate(full, "", "required key is missing");
      }
    }
  }

  std::vector<ConfigViolation> violations;
  std::map<std::string, std::string> values_;
  std::uint64_t hash = 1469598103934665603ULL;

  void violate(const std::string& field, const std::string& value, const std::string& why) {
    violations.push_back({field, value, why});
  }

  const std::string& raw(const std::string& key) const { return values_.at(key); }

  std::optional<double> number(const std::string& key) {
    const std::string& s = raw(key);
    if (s.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      violate(key, s, "must be a finite number");
      return std::nullopt;
    }
  }

  double positive(const std::string& key, double fallback = 1.0) {
    auto v = number(key);
    if (v && !(*v > 0.0)) violate(key, raw(key), "must be positive");
    return v && *v > 0.0 ? *v : fallback;
  }

  double nonnegative(const std::string& key) {
    auto v = number(key);
    if (v && !(*v >= 0.0)) violate(key, raw(key), "must be nonnegative");
    return v && *v >= 0.0 ? *v : 0.0;
  }

  double in_open_unit(const std::string& key, double fallback) {
    auto v = number(key);
    if (v && !(*v > 0.0 && *v < 1.0)) violate(key, raw(key), "must lie in (0, 1)");
    return v && *v > 0.0 && *v < 1.0 ? *v : fallback;
  }

  int integer(const std::string& key, int min_value, int fallback) {
    auto v = number(key);
    if (!v) return fallback;
    if (std::floor(*v) != *v || *v < min_value || *v > 1e9) {
      violate(key, raw(key), "must be an integer >= " + std::to_string(min_value));
      return fallback;
    }
    return static_cast<int>(*v);
  }

  std::optional<Field> spatial(const std::string& key, const Grid& g) {
    const std::string& s = raw(key);
    if (auto file = file_ref(s)) {
      try {
        return field_from_snapshot(read_snapshot(*file), g);
      } catch (const Error& e) {
        violate(key, s, e.what());
        return std::nullopt;
      }
    }
    try {
      const Expression ex(s);
      if (!ex.time_independent()) {
        violate(key, s, "must not depend on t");
        return std::nullopt;
      }
      Field f = g.sample([&](double x, double y) { return ex(x, y, 0.0); });
      if (!f.allFinite()) {
        violate(key, s, "evaluates to a non-finite value");
        return std::nullopt;
      }
      return f;
    } catch (const Error& e) {
      violate(key, s, e.what());
      return std::nullopt;
    }
  }

  std::optional<SpaceTimeField> space_time(const std::string& key, const Grid& g,
                                           const TimeGrid& t) {
    const std::string& s = raw(key);
    if (auto file = file_ref(s)) {
      try {
        return space_time_from_snapshot(read_snapshot(*file), g, t);
      } catch (const Error& e) {
        violate(key, s, e.what());
        return std::nullopt;
      }
    }
    try {
      const Expression ex(s);
      SpaceTimeField f = SpaceTimeField::sample(g, t, [&](double x, double y, double tt) {
        return ex(x, y, tt);
      });
      for (std::size_t n = 0; n < f.size(); ++n) {
        if (!f[n].allFinite()) {
          violate(key, s, "evaluates to a non-finite value");
          return std::nullopt;
        }
      }
      return f;
    } catch (const Error& e) {
      violate(key, s, e.what());
      return std::nullopt;
    }
  }

 private:
  const pt::ptree& tree_;
  std::filesystem::path base_;

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
  }

  std::optional<std::filesystem::path> file_ref(const std::string& s) {
    if (s.rfind("file:", 0) != 0) return std::nullopt;
    std::filesystem::path p = s.substr(5);
    if (p.is_relative()) p = base_ / p;
    if (std::filesystem::exists(p)) hash = fnv1a(hash, s + "#" + slurp(p));
    return p;
  }
};

RunConfig load(const pt::ptree& tree, const std::filesystem::path& base) {
  Loader ld(tree, base);

  const int dim = ld.integer("grid.dim", 1, 1);
  if (dim != 1 && dim != 2) ld.violate("grid.dim", ld.raw("grid.dim"), "must be 1 or 2");
  const int nx = ld.integer("grid.nx", 4, 4);
  const int ny = ld.raw("grid.ny").empty() ? nx : ld.integer("grid.ny", 4, 4);
  const double lx = ld.positive("grid.lx");
  const double ly = ld.positive("grid.ly");
  const double T = ld.positive("time.final_time");
  const int nt = ld.integer("time.steps", 2, 2);
  const Grid g = dim == 2 ? Grid::rect(lx, ly, nx, ny) : Grid::line(lx, nx);
  const TimeGrid t(T, nt);

  PhysicalParams prm;
  prm.gamma = ld.positive("physics.gamma");
  prm.a = ld.positive("physics.a");
  prm.b = ld.positive("physics.b");
  prm.kappa1 = ld.positive("physics.kappa1");
  prm.kappa2 = ld.positive("physics.kappa2");
  prm.lambda = ld.positive("physics.lambda");

  PotentialSpec pot = PotentialSpec::regular();
  const std::string& kind = ld.raw("potential.kind");
  const double margin = ld.in_open_unit("potential.clip_margin", 1e-9);
  if (kind == "regular") {
    pot.clip_margin = margin;
  } else if (kind == "logarithmic") {
    double c1 = 2.0;
    if (auto v = ld.number("potential.c1")) {
      if (*v > 1.0) {
        c1 = *v;
      } else {
        ld.violate("potential.c1", ld.raw("potential.c1"), "must exceed 1");
      }
    }
    if (margin >= 0.5) ld.violate("potential.clip_margin", ld.raw("potential.clip_margin"), "must be below 0.5");
    pot = PotentialSpec::logarithmic(c1, std::min(margin, 0.25));
  } else {
    ld.violate("potential.kind", kind, "must be regular or logarithmic");
  }

  auto zero_field = g.zeros();
  auto zero_st = SpaceTimeField(g, t);
  InitialData init{ld.spatial("initial.phi0", g).value_or(zero_field),
                   ld.spatial("initial.w0", g).value_or(zero_field),
                   ld.spatial("initial.w1", g).value_or(zero_field)};
  SpaceTimeField f = ld.space_time("source.f", g, t).value_or(zero_st);

  NewtonConfig newton;
  newton.tol = ld.positive("newton.tol", 1e-10);
  newton.max_iter = ld.integer("newton.max_iter", 1, 50);
  newton.max_halvings = ld.integer("newton.max_halvings", 0, 30);

  StateSystem state{g, t, prm, pot, init, f, newton};
  if (pot.singular()) {
    const auto compat = validate_compatibility(pot, init.phi0, f, prm.gamma, g);
    for (const auto& e : compat.entries) {
      if (!e.pass) {
        std::ostringstream os;
        os << e.value;
        ld.violate("initial.phi0", e.name + " = " + os.str(),
                   "must lie strictly inside the potential domain");
      }
    }
  }

  SpaceTimeField control = ld.space_time("control.u", g, t).value_or(zero_st);

  std::array<double, 6> alpha{};
  bool any = false;
  for (int i = 0; i < 6; ++i) {
    alpha[static_cast<std::size_t>(i)] = ld.nonnegative("cost.alpha" + std::to_string(i + 1));
    any = any || alpha[static_cast<std::size_t>(i)] > 0.0;
  }
  const double nu = ld.nonnegative("cost.nu");
  if (!any && !(nu > 0.0)) ld.violate("cost", "", "alpha1..alpha6 and nu must not all vanish");
  CostData cost = CostData::zero_targets(g, t, alpha, nu);
  cost.phi_Q = ld.space_time("cost.phi_Q", g, t).value_or(zero_st);
  cost.w_Q = ld.space_time("cost.w_Q", g, t).value_or(zero_st);
  cost.dw_Q = ld.space_time("cost.dw_Q", g, t).value_or(zero_st);
  cost.phi_Omega = ld.spatial("cost.phi_Omega", g).value_or(zero_field);
  cost.w_Omega = ld.spatial("cost.w_Omega", g).value_or(zero_field);
  cost.dw_Omega = ld.spatial("cost.dw_Omega", g).value_or(zero_field);

  ControlBounds bounds = ControlBounds::constant(g, t, -10.0, 10.0);
  auto lo = ld.space_time("bounds.u_min", g, t);
  auto hi = ld.space_time("bounds.u_max", g, t);
  if (lo && hi) {
    for (std::size_t n = 0; n < lo->size(); ++n) {
      const Eigen::Index bad = ((*lo)[n].array() > (*hi)[n].array()).count();
      if (bad > 0) {
        ld.violate("bounds", ld.raw("bounds.u_min") + " > " + ld.raw("bounds.u_max"),
                   "u_min <= u_max must hold everywhere (violated at " + std::to_string(bad) +
                       " node(s) of level " + std::to_string(n) + ")");
        break;
      }
    }
    bounds = {*lo, *hi};
  }

  OptimizeConfig opt;
  opt.max_iters = ld.integer("optimizer.max_iters", 0, 200);
  opt.armijo = ld.in_open_unit("optimizer.armijo", 1e-4);
  opt.backtrack = ld.in_open_unit("optimizer.backtrack", 0.5);
  opt.initial_step = ld.positive("optimizer.initial_step");
  opt.stationarity_tol = ld.positive("optimizer.stationarity_tol", 1e-6);
  opt.max_backtracks = ld.integer("optimizer.max_backtracks", 1, 40);

  AdjointMode mode = AdjointMode::Transpose;
  try {
    mode = adjoint_mode_from_string(ld.raw("adjoint.mode"));
  } catch (const Error&) {
    ld.violate("adjoint.mode", ld.raw("adjoint.mode"), "must be transpose or continuous");
  }

  std::vector<double> eps_list;
  {
    std::istringstream is(ld.raw("checks.eps_list"));
    std::string tok;
    while (is >> tok) {
      try {
        std::size_t used = 0;
        const double e = std::stod(tok, &used);
        if (used != tok.size() || !(e > 0.0)) throw std::invalid_argument(tok);
        eps_list.push_back(e);
      } catch (const std::exception&) {
        ld.violate("checks.eps_list", ld.raw("checks.eps_list"), "must be positive numbers");
        break;
      }
    }
    if (eps_list.empty()) ld.violate("checks.eps_list", "", "needs at least one step size");
  }
  SpaceTimeField direction = ld.space_time("checks.direction", g, t).value_or(zero_st);

  const std::string output_dir = ld.raw("output.directory");
  if (output_dir.empty()) ld.violate("output.directory", "", "must not be empty");
  const int stride = ld.integer("output.stride", 1, 1);

  RunConfig cfg{state, control, cost, bounds, mode, opt, eps_list, direction, output_dir, stride, {}, {}};

  if (ld.violations.empty()) {
    try {
      cfg.problem().validate();
    } catch (const Error& e) {
      ld.violate("config", "", e.what());
    }
  }
  if (!ld.violations.empty()) throw ConfigError(ld.violations);

  std::uint64_t h = ld.hash;
  for (const auto& k : schema()) {
    const std::string full = std::string(k.section) + "." + k.name;
    cfg.resolved.emplace_back(full, ld.values_.at(full));
    h = fnv1a(h, full + "=" + ld.values_.at(full) + "\n");
  }
  std::ostringstream hs;
  hs << std::hex << std::setw(16) << std::setfill('0') << h;
  cfg.hash = hs.str();
  return cfg;
}

}  // namespace

RunConfig parse_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError({{"config", path.string(), "file does not exist"}});
  }
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({{"config", path.string(), std::string("malformed file: ") + e.message() +
                                                     " (line " + std::to_string(e.line()) + ")"}});
  }
  return load(tree, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

RunConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({{"config", "<string>", std::string("malformed file: ") + e.message() +
                                                  " (line " + std::to_string(e.line()) + ")"}});
  }
  return load(tree, base_dir);
}

std::string default_config_text() {
  std::ostringstream os;
  std::string section;
  for (const auto& k : schema()) {
    if (section != k.section) {
      section = k.section;
      os << (os.tellp() > 0 ? "\n" : "") << "[" << section << "]\n";
    }
    if (*k.help) os << "; " << k.help << "\n";
    if (k.fallback) {
      os << k.name << " = " << *k.fallback << "\n";
    } else {
      os << "; required\n" << k.name << " =\n";
    }
  }
  return os.str();
}

std::filesystem::path resolve_output_dir(const std::string& dir) {
  std::filesystem::path p = dir;
  if (const char* root = std::getenv("NCH_OUTPUT_ROOT"); root && *root && p.is_relative()) {
    return std::filesystem::path(root) / p;
  }
  return p;
}

}  // namespace nch
