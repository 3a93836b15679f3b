// Run configuration: a YAML document (optionally starting from a preset) turned into a HUMProblem.
//
//   preset: example1            # optional starting point
//   label: my_run               # optional, defaults to the preset label or "custom"
//   output: out/my_run          # optional
//   problem: {alpha, T, strict_alpha, J, omega, gamma, actuator, y0, y_d_ext, z_d, nonlinearity}
//   solver: {M, quad_order, P, projection_points, trace_samples, eps, max_iters, reg,
//            rank_tol, relax, anderson_depth, norm, semigroup_bound}
//
// See docs/config.md for every key.
#pragma once

#include <yaml-cpp/yaml.h>

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fhum/models.hpp"

namespace fhum {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string label;
  HUMProblem problem;
  std::optional<double> reference_error_gamma;
  std::optional<double> reference_error_omega;
  std::string output;
};

namespace detail {

/// A 2D data function: a built-in or a coefficient vector in the cosine basis.
using DataSpec = std::variant<NamedFunction, std::vector<double>>;

inline void check_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
  for (const auto& kv : n) {
    const std::string k = kv.first.as<std::string>();
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in '" + where + "'");
  }
}

template <class T>
T get(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + where + "' has the wrong type");
  }
}

inline Rect parse_rect(const YAML::Node& n, const std::string& where) {
  const std::vector<double> v = get<std::vector<double>>(n, where);
  if (v.size() != 4) throw ConfigError("'" + where + "' needs [x0, x1, y0, y1]");
  return Rect{v[0], v[1], v[2], v[3]};
}

inline BoundarySegment parse_segment(const YAML::Node& n) {
  check_keys(n, "problem.gamma", {"edge", "lo", "hi"});
  if (!n["edge"] || !n["lo"] || !n["hi"]) throw ConfigError("'problem.gamma' needs edge, lo and hi");
  try {
    return BoundarySegment{parse_edge(get<std::string>(n["edge"], "problem.gamma.edge")), get<double>(n["lo"], "problem.gamma.lo"),
                           get<double>(n["hi"], "problem.gamma.hi")};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline Actuator parse_actuator(const YAML::Node& n) {
  check_keys(n, "problem.actuator", {"zonal", "point"});
  if (n.size() != 1) throw ConfigError("'problem.actuator' needs exactly one of zonal, point");
  if (n["zonal"]) return ZonalActuator{parse_rect(n["zonal"], "problem.actuator.zonal")};
  const std::vector<double> v = get<std::vector<double>>(n["point"], "problem.actuator.point");
  if (v.size() != 2) throw ConfigError("'problem.actuator.point' needs [b1, b2]");
  return PointActuator{v[0], v[1]};
}

inline NamedFunction parse_builtin(const YAML::Node& n, const std::string& where) {
  const std::string name = get<std::string>(n["builtin"], where + ".builtin");
  std::map<std::string, double> params;
  if (n["params"]) params = get<std::map<std::string, double>>(n["params"], where + ".params");
  try {
    return builtin(name, params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline DataSpec parse_data(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"builtin", "params", "coefficients"});
  if (n["coefficients"]) {
    if (n["builtin"] || n["params"]) throw ConfigError("'" + where + "' takes either builtin or coefficients");
    return get<std::vector<double>>(n["coefficients"], where + ".coefficients");
  }
  if (!n["builtin"]) throw ConfigError("'" + where + "' needs builtin or coefficients");
  const NamedFunction f = parse_builtin(n, where);
  if (f.is_1d()) throw ConfigError("'" + where + "' needs a 2D function, got '" + f.name + "'");
  return f;
}

inline Function2D resolve(const DataSpec& d, int J, const std::string& where) {
  if (const auto* f = std::get_if<NamedFunction>(&d)) return f->f2;
  const std::vector<double>& c = std::get<std::vector<double>>(d);
  if (static_cast<int>(c.size()) != num_modes(J)) {
    throw ConfigError("'" + where + "' has " + std::to_string(c.size()) + " coefficients, need (J+1)^2 = " + std::to_string(num_modes(J)));
  }
  const SpectralField fld(J, Eigen::Map<const Eigen::VectorXd>(c.data(), c.size()));
  return [fld](double x, double y) { return eval_field(fld, x, y); };
}

inline NonlinearSpec parse_nonlinearity(const YAML::Node& n, NonlinearSpec s) {
  check_keys(n, "problem.nonlinearity", {"kind", "C", "Kcap", "L", "K"});
  if (n["kind"]) {
    const std::string k = get<std::string>(n["kind"], "problem.nonlinearity.kind");
    if (k == "none") {
      s.kind = NonlinearKind::None;
    } else if (k == "logistic") {
      s.kind = NonlinearKind::Logistic;
    } else {
      throw ConfigError("problem.nonlinearity.kind must be none or logistic");
    }
  }
  if (n["C"]) s.C = get<double>(n["C"], "problem.nonlinearity.C");
  if (n["Kcap"]) s.Kcap = get<double>(n["Kcap"], "problem.nonlinearity.Kcap");
  if (n["L"]) s.L = get<double>(n["L"], "problem.nonlinearity.L");
  if (n["K"]) s.K = get<double>(n["K"], "problem.nonlinearity.K");
  return s;
}

}  // namespace detail

/// Builds and validates the problem. Throws ConfigError (or std::invalid_argument from
/// validation) on any problem with the document.
inline RunConfig build_config(const YAML::Node& root) {
  using namespace detail;
  if (!root || root.IsNull()) throw ConfigError("empty configuration");
  check_keys(root, "<root>", {"preset", "label", "output", "problem", "solver"});

  RunConfig rc;
  HUMProblem& p = rc.problem;
  std::optional<DataSpec> y0, yd;
  Function1D zd;
  int M = 256;
  std::optional<int> P;
  if (root["preset"]) {
    ExperimentPreset e;
    try {
      e = preset(get<std::string>(root["preset"], "preset"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
    rc.label = e.label;
    rc.reference_error_gamma = e.reference_error_gamma;
    rc.reference_error_omega = e.reference_error_omega;
    p = e.problem;
    M = p.mesh.intervals();
    y0 = e.y0;
    yd = e.y_d_ext;
    zd = e.z_d.f1;
  } else {
    rc.label = "custom";
    p.spec = NonlinearSpec{};
  }
  if (root["label"]) rc.label = get<std::string>(root["label"], "label");
  if (root["output"]) rc.output = get<std::string>(root["output"], "output");

  if (const YAML::Node n = root["problem"]) {
    check_keys(n, "problem", {"alpha", "T", "strict_alpha", "J", "omega", "gamma", "actuator", "y0", "y_d_ext", "z_d", "nonlinearity"});
    if (n["alpha"]) p.p.alpha = get<double>(n["alpha"], "problem.alpha");
    if (n["T"]) p.p.T = get<double>(n["T"], "problem.T");
    if (n["strict_alpha"]) p.p.strict = get<bool>(n["strict_alpha"], "problem.strict_alpha");
    if (n["J"]) p.J = get<int>(n["J"], "problem.J");
    if (n["omega"]) p.omega = parse_rect(n["omega"], "problem.omega");
    if (n["gamma"]) p.gamma = parse_segment(n["gamma"]);
    if (n["actuator"]) p.act = parse_actuator(n["actuator"]);
    if (n["y0"]) y0 = parse_data(n["y0"], "problem.y0");
    if (n["y_d_ext"]) yd = parse_data(n["y_d_ext"], "problem.y_d_ext");
    if (n["z_d"]) {
      check_keys(n["z_d"], "problem.z_d", {"builtin", "params"});
      const NamedFunction f = parse_builtin(n["z_d"], "problem.z_d");
      if (!f.is_1d()) throw ConfigError("'problem.z_d' needs a 1D function, got '" + f.name + "'");
      zd = f.f1;
    }
    if (n["nonlinearity"]) p.spec = parse_nonlinearity(n["nonlinearity"], p.spec);
  }
  if (!root["preset"]) {
    const YAML::Node n = root["problem"];
    for (const char* k : {"omega", "gamma", "actuator", "y0", "y_d_ext", "z_d"}) {
      if (!n || !n[k]) throw ConfigError(std::string("without a preset, 'problem.") + k + "' is required");
    }
  }

  if (const YAML::Node n = root["solver"]) {
    check_keys(n, "solver", {"M", "quad_order", "P", "projection_points", "trace_samples", "eps", "max_iters", "reg", "rank_tol", "relax",
                             "anderson_depth", "norm", "semigroup_bound"});
    if (n["M"]) M = get<int>(n["M"], "solver.M");
    if (n["quad_order"]) p.quad_order = get<int>(n["quad_order"], "solver.quad_order");
    if (n["P"]) P = get<int>(n["P"], "solver.P");
    if (n["projection_points"]) p.projection_points = get<int>(n["projection_points"], "solver.projection_points");
    if (n["trace_samples"]) p.trace_samples = get<int>(n["trace_samples"], "solver.trace_samples");
    if (n["eps"]) p.eps = get<double>(n["eps"], "solver.eps");
    if (n["max_iters"]) p.max_iters = get<int>(n["max_iters"], "solver.max_iters");
    if (n["reg"]) p.reg = get<double>(n["reg"], "solver.reg");
    if (n["rank_tol"]) {
      const std::string s = get<std::string>(n["rank_tol"], "solver.rank_tol");
      p.rank_tol = s == "auto" ? std::nullopt : std::optional<double>(get<double>(n["rank_tol"], "solver.rank_tol"));
    }
    if (n["relax"]) p.relax = get<double>(n["relax"], "solver.relax");
    if (n["anderson_depth"]) p.anderson_depth = get<int>(n["anderson_depth"], "solver.anderson_depth");
    if (n["norm"]) {
      const std::string s = get<std::string>(n["norm"], "solver.norm");
      if (s == "l2") {
        p.norm = ErrorNorm::L2;
      } else if (s == "h1") {
        p.norm = ErrorNorm::H1Weighted;
      } else {
        throw ConfigError("solver.norm must be l2 or h1");
      }
    }
    if (n["semigroup_bound"]) p.semigroup_bound = get<double>(n["semigroup_bound"], "solver.semigroup_bound");
  }

  p.p.validate();
  if (p.J < 0) throw ConfigError("problem.J must be non-negative");
  if (M < 8) throw ConfigError("solver.M must be at least 8");
  p.mesh = control_mesh(p.p, M);
  p.P = P.value_or(2 * (p.J + 1));
  p.y0 = resolve(*y0, p.J, "problem.y0");
  p.y_d_ext = resolve(*yd, p.J, "problem.y_d_ext");
  p.z_d = zd;
  p.validate();
  return rc;
}

inline RunConfig load_config_file(const std::string& path) {
  try {
    return build_config(YAML::LoadFile(path));
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot read config '" + path + "': " + e.what());
  }
}

}  // namespace fhum
