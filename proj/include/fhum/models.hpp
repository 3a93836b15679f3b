// Built-in data functions and the experiment catalog.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fhum/hum.hpp"

namespace fhum {

/// A built-in formula with bound parameters; exactly one of f2/f1 is set.
struct NamedFunction {
  std::string name;
  std::map<std::string, double> params;
  Function2D f2;
  Function1D f1;

  bool is_1d() const { return static_cast<bool>(f1); }
};

namespace detail {
inline double param(const std::map<std::string, double>& given, const std::map<std::string, double>& defaults,
                    const std::string& key) {
  const auto it = given.find(key);
  return it != given.end() ? it->second : defaults.at(key);
}

inline std::map<std::string, double> bind(const std::string& name, const std::map<std::string, double>& given,
                                          const std::map<std::string, double>& defaults) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : given) {
    if (!defaults.count(k)) throw std::invalid_argument("builtin '" + name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) throw std::invalid_argument("builtin '" + name + "': parameter '" + k + "' is not finite");
  }
  for (const auto& [k, v] : defaults) out[k] = param(given, defaults, k);
  return out;
}
}  // namespace detail

/// Names: zero, sqrt_xy, sqrt_xy_exp (2D); ext_2d (2D, mu, delta, amplitude);
/// steady_1d (1D on the edge parameter, mu, amplitude); zero_1d.
inline NamedFunction builtin(const std::string& name, const std::map<std::string, double>& params = {}) {
  NamedFunction f;
  f.name = name;
  if (name == "zero") {
    f.params = detail::bind(name, params, {});
    f.f2 = [](double, double) { return 0.0; };
  } else if (name == "zero_1d") {
    f.params = detail::bind(name, params, {});
    f.f1 = [](double) { return 0.0; };
  } else if (name == "sqrt_xy") {
    f.params = detail::bind(name, params, {});
    f.f2 = [](double x, double y) { return std::sqrt(x * y); };
  } else if (name == "sqrt_xy_exp") {
    f.params = detail::bind(name, params, {});
    f.f2 = [](double x, double y) { return std::sqrt(x * y) * std::exp(x * y); };
  } else if (name == "ext_2d") {
    f.params = detail::bind(name, params, {{"mu", 0.5}, {"delta", 0.5}, {"amplitude", 1.0}});
    const double mu = f.params["mu"], delta = f.params["delta"], a = f.params["amplitude"];
    f.f2 = [=](double x, double y) { return a * (1.0 - mu * std::cos(2.0 * x)) * (1.0 - delta * std::cos(2.0 * y)); };
  } else if (name == "steady_1d") {
    f.params = detail::bind(name, params, {{"mu", 0.5}, {"amplitude", 1.0}});
    const double mu = f.params["mu"], a = f.params["amplitude"];
    f.f1 = [=](double s) { return a * (1.0 - mu * std::cos(2.0 * s)); };
  } else {
    throw std::invalid_argument("unknown builtin function '" + name + "'");
  }
  return f;
}

inline std::vector<std::string> builtin_names() { return {"zero", "zero_1d", "sqrt_xy", "sqrt_xy_exp", "ext_2d", "steady_1d"}; }

struct ExperimentPreset {
  std::string label;
  std::string description;
  HUMProblem problem;
  NamedFunction y0, y_d_ext, z_d;
  std::optional<double> reference_error_gamma;
  std::optional<double> reference_error_omega;
};

namespace detail {

inline ExperimentPreset base_preset(const std::string& label, double alpha, const Actuator& act, const Rect& omega,
                                    const BoundarySegment& gamma, double Kcap, NamedFunction y0, NamedFunction yd,
                                    NamedFunction zd) {
  ExperimentPreset e;
  e.label = label;
  HUMProblem& p = e.problem;
  p.p = FracParams{alpha, 2.0};
  p.J = 12;
  p.omega = omega;
  p.gamma = gamma;
  p.act = act;
  // Pointwise |N(v)| <= C|v| + (C/Kcap) v^2, so (L, K) = (C, C/Kcap) in the sup norm.
  p.spec = NonlinearSpec{NonlinearKind::Logistic, 1.0, Kcap, 1.0, 1.0 / Kcap};
  p.mesh = control_mesh(p.p, 256);
  p.quad_order = 64;
  p.P = 26;
  // Finer truncations give controls under which some Table 1 states blow up.
  // The plain map is expanding here, so the iteration is damped and accelerated.
  p.rank_tol = 1e-6;
  p.relax = 0.2;
  p.anderson_depth = 5;
  e.y0 = std::move(y0);
  e.y_d_ext = std::move(yd);
  e.z_d = std::move(zd);
  p.y0 = e.y0.f2;
  p.y_d_ext = e.y_d_ext.f2;
  p.z_d = e.z_d.f1;
  return e;
}

inline ExperimentPreset example1_like(const std::string& label, const Rect& D, const Rect& omega, bool printed_extension = false) {
  // z_d = H = 1 - mu cos 2y. The printed extension (1 - mu cos 2x)(1 - mu cos 2y)
  // equals (1 - mu) H on x = 0; the default divides by (1 - mu) so it restricts to H.
  const double mu = 0.5;
  const double amp = printed_extension ? 1.0 : 1.0 / (1.0 - mu);
  return base_preset(label, 0.75, ZonalActuator{D}, omega, BoundarySegment{Edge::West, 0.0, 0.5}, 100.0, builtin("sqrt_xy"),
                     builtin("ext_2d", {{"mu", mu}, {"delta", mu}, {"amplitude", amp}}), builtin("steady_1d", {{"mu", mu}}));
}

inline ExperimentPreset example2_like(const std::string& label, const Rect& omega, double b2, bool printed_trace = false) {
  // Printed: N_d = 2 (1 - cos 2x / 2)(1 - cos 2y / 2), z_d = 100 (1 - cos 2y / 2).
  // N_d on x = 0 is (1 - cos 2y / 2), used as z_d unless printed_trace.
  return base_preset(label, 0.8, PointActuator{0.0, b2}, omega, BoundarySegment{Edge::West, 0.0, 0.4}, 1.0, builtin("sqrt_xy_exp"),
                     builtin("ext_2d", {{"mu", 0.5}, {"delta", 0.5}, {"amplitude", 2.0}}),
                     builtin("steady_1d", {{"mu", 0.5}, {"amplitude", printed_trace ? 100.0 : 1.0}}));
}

}  // namespace detail

inline std::vector<ExperimentPreset> preset_catalog() {
  using detail::example1_like;
  using detail::example2_like;
  std::vector<ExperimentPreset> c;
  const Rect w1{0.0, 0.3, 0.0, 0.5};

  c.push_back(example1_like("example1", {0.5, 1.0, 0.7, 1.0}, w1));
  c.back().description = "Zonal actuator, logistic C=1 K=100, y0=sqrt(xy); target extension scaled to restrict to z_d on Gamma";
  c.back().reference_error_omega = 8.0e-3;
  c.back().reference_error_gamma = 1e-5;
  c.push_back(example1_like("example1_printed", {0.5, 1.0, 0.7, 1.0}, w1, true));
  c.back().description = "example1 with the target extension exactly as printed (restricts to (1-mu) z_d on Gamma)";

  const struct {
    Rect D, omega;
    double err;
  } t1[] = {{{0.5, 1.0, 0.7, 1.0}, {0.0, 0.5, 0.0, 0.7}, 0.1179}, {{0.5, 1.0, 0.7, 1.0}, {0.0, 1.0, 0.0, 1.0}, 0.6392},
            {{0.3, 0.5, 0.7, 1.0}, {0.0, 0.3, 0.0, 0.5}, 0.0554}, {{0.3, 0.5, 0.7, 1.0}, {0.0, 0.1, 0.0, 0.7}, 0.0069},
            {{0.0, 0.3, 0.0, 0.1}, {0.0, 0.5, 0.0, 0.5}, 0.0953}, {{0.0, 0.3, 0.0, 0.1}, {0.0, 0.5, 0.0, 0.7}, 0.1081}};
  for (int r = 0; r < 6; ++r) {
    c.push_back(example1_like("table1_row" + std::to_string(r + 1), t1[r].D, t1[r].omega));
    c.back().description = "Table 1 row " + std::to_string(r + 1) + ": example1 data with this actuator and region";
    c.back().reference_error_gamma = t1[r].err;
  }

  const Rect w2{0.0, 0.3, 0.0, 0.4};
  c.push_back(example2_like("example2", w2, 0.5, true));
  c.back().description = "Pointwise actuator at (0, 0.5), logistic C=1 K=1, y0=sqrt(xy)exp(xy); z_d amplitude 100 as printed";
  c.back().reference_error_omega = 9.31e-2;
  c.back().reference_error_gamma = 6.95e-5;
  c.push_back(example2_like("example2_rescaled", w2, 0.5));
  c.back().description = "example2 with z_d set to the extension's trace on Gamma";

  const struct {
    Rect omega;
    double b2, err;
  } t2[] = {{{0.0, 0.3, 0.0, 0.4}, 1.0, 0.3884}, {{0.0, 0.3, 0.0, 0.4}, 0.3, 0.1022}, {{0.0, 0.5, 0.0, 1.0}, 0.5, 0.3969},
            {{0.0, 0.5, 0.0, 1.0}, 0.1, 0.0639}, {{0.0, 1.0, 0.0, 0.5}, 0.5, 0.0363}, {{0.0, 1.0, 0.0, 0.5}, 0.3, 0.0552}};
  for (int r = 0; r < 6; ++r) {
    c.push_back(example2_like("table2_row" + std::to_string(r + 1), t2[r].omega, t2[r].b2));
    c.back().description = "Table 2 row " + std::to_string(r + 1) + ": example2_rescaled data with this region and actuator point";
    c.back().reference_error_gamma = t2[r].err;
  }
  return c;
}

inline ExperimentPreset preset(const std::string& label) {
  for (ExperimentPreset& e : preset_catalog()) {
    if (e.label == label) return std::move(e);
  }
  throw std::invalid_argument("unknown preset '" + label + "'");
}

inline std::vector<std::string> preset_labels() {
  std::vector<std::string> out;
  for (const ExperimentPreset& e : preset_catalog()) out.push_back(e.label);
  return out;
}

/// Labels of the rows of table 1 or 2, in row order.
inline std::vector<std::string> table_labels(int table) {
  if (table != 1 && table != 2) throw std::invalid_argument("table must be 1 or 2");
  std::vector<std::string> out;
  for (int r = 1; r <= 6; ++r) out.push_back("table" + std::to_string(table) + "_row" + std::to_string(r));
  return out;
}

}  // namespace fhum
