// Deterministic report output: JSON with 17 significant digits, CSV tables, atomic writes.
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fhum/hum.hpp"
#include "json.hpp"

namespace fhum {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportFormat = "fhum-report/1";

/// %.17g; non-finite values print as NaN, Infinity, -Infinity.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {
inline void write_json(std::ostream& os, const Json& j, int depth) {
  const std::string pad(2 * (depth + 1), ' '), end_pad(2 * depth, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(k).dump() << ": ";
        write_json(os, v, depth + 1);
      }
      os << '\n' << end_pad << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        write_json(os, j[i], depth + 1);
      }
      os << '\n' << end_pad << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_number(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}
}  // namespace detail

/// Pretty JSON where every float has 17 significant digits; non-finite floats become null.
inline std::string to_json_text(const Json& j) {
  std::ostringstream os;
  detail::write_json(os, j, 0);
  os << '\n';
  return os.str();
}

/// Writes through a temporary file in the same directory, then renames.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string rect_text(const Rect& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "[%g,%g]x[%g,%g]", r.x0, r.x1, r.y0, r.y1);
  return buf;
}

inline std::string segment_text(const BoundarySegment& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s[%g,%g]", edge_name(s.edge), s.lo, s.hi);
  return buf;
}

inline std::string actuator_text(const Actuator& act) {
  if (const auto* z = std::get_if<ZonalActuator>(&act)) return "zonal " + rect_text(z->D);
  const auto& p = std::get<PointActuator>(act);
  char buf[96];
  std::snprintf(buf, sizeof buf, "point (%g,%g)", p.b1, p.b2);
  return buf;
}

inline std::string norm_name(ErrorNorm n) { return n == ErrorNorm::L2 ? "l2" : "h1"; }

inline Json problem_json(const HUMProblem& p) {
  Json j;
  j["alpha"] = p.p.alpha;
  j["T"] = p.p.T;
  j["strict_alpha"] = p.p.strict;
  j["J"] = p.J;
  j["M"] = p.mesh.intervals();
  j["quad_order"] = p.quad_order;
  j["P"] = p.P;
  j["projection_points"] = p.projection_points;
  j["trace_samples"] = p.trace_samples;
  j["eps"] = p.eps;
  j["max_iters"] = p.max_iters;
  j["reg"] = p.reg;
  j["rank_tol"] = p.rank_tol ? Json(*p.rank_tol) : Json(nullptr);
  j["relax"] = p.relax;
  j["anderson_depth"] = p.anderson_depth;
  j["norm"] = norm_name(p.norm);
  j["omega"] = rect_text(p.omega);
  j["gamma"] = segment_text(p.gamma);
  j["actuator"] = actuator_text(p.act);
  j["nonlinearity"] = p.spec.kind == NonlinearKind::None ? Json("none") : Json("logistic");
  if (p.spec.kind != NonlinearKind::None) {
    j["C"] = p.spec.C;
    j["Kcap"] = p.spec.Kcap;
  }
  j["L"] = p.spec.L;
  j["K"] = p.spec.K;
  return j;
}

inline Json report_json(const RunReport& r) {
  Json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["stop_reason"] = r.stop_reason;
  j["residual_history"] = r.residual_history;
  j["gram_min_eig"] = r.gram_min_eig;
  j["gram_max_eig"] = r.gram_max_eig;
  Json zm = Json::array();
  for (const ModeIndex& m : r.zero_modes) zm.push_back(Json::array({m.j, m.k}));
  j["zero_modes"] = zm;
  j["effective_rank"] = r.effective_rank;
  j["error_omega"] = r.error_omega;
  j["error_gamma"] = r.error_gamma;
  j["omega_projection_error"] = r.omega_projection_error;
  j["control_energy"] = r.control_energy;
  j["duality_gap"] = r.duality_gap;
  j["gronwall_value"] = r.gronwall_value;
  j["gronwall_constant"] = r.gronwall_constant;
  j["gronwall_satisfied"] = r.gronwall_satisfied;
  j["h0_margin"] = r.h0_margin;
  j["h0_node"] = r.h0_node;
  j["h0_sup_margin"] = r.h0_sup_margin;
  j["h0_sup_node"] = r.h0_sup_node;
  j["projection_residual_y0"] = r.projection_residual_y0;
  j["projection_residual_target"] = r.projection_residual_target;
  j["trace_inconsistency"] = r.trace_inconsistency;
  j["warnings"] = r.warnings;
  return j;
}

/// Full report document: format tag, label, problem settings, reference values, results.
inline Json run_document(const std::string& label, const HUMProblem& p, const RunReport& r, std::optional<double> reference_gamma,
                         std::optional<double> reference_omega) {
  Json j;
  j["format"] = kReportFormat;
  j["label"] = label;
  j["problem"] = problem_json(p);
  Json ref;
  ref["error_gamma"] = reference_gamma ? Json(*reference_gamma) : Json(nullptr);
  ref["error_omega"] = reference_omega ? Json(*reference_omega) : Json(nullptr);
  j["reference"] = ref;
  j["report"] = report_json(r);
  return j;
}

/// One CSV field; quoted when it contains a comma, quote or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string control_csv(const ControlSignal& u) {
  std::string out = "t,u\n";
  for (std::size_t i = 0; i < u.times.size(); ++i) out += format_number(u.times[i]) + ',' + format_number(u.values[i]) + '\n';
  return out;
}

/// Arc parameter, reached trace and desired trace at S Gauss-Legendre points of Gamma.
inline std::string trace_csv(const SpectralField& reached, const Function1D& z_d, const BoundarySegment& gamma, int S) {
  const QuadratureRule r = segment_rule(gamma, S);
  const std::vector<double> v = trace_values(reached, gamma, S);
  std::string out = "s,reached,desired\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    out += format_number(r.nodes[i]) + ',' + format_number(v[i]) + ',' + format_number(z_d(r.nodes[i])) + '\n';
  }
  return out;
}

inline std::string grid_dump_text(const SpectralField& f, int P) {
  std::ostringstream os;
  write_grid_dump(os, f, P);
  return os.str();
}

struct TableRow {
  std::string label;
  std::string actuator;
  std::string region;
  double error_gamma = std::nan("");
  double error_omega = std::nan("");
  double gram_min_eig = std::nan("");
  int iterations = 0;
  bool converged = false;
  std::optional<double> reference_error_gamma;
  std::string status;
};

inline std::string table_csv(const std::vector<TableRow>& rows) {
  std::string out = "actuator,region,error_gamma,error_omega,gram_min_eig,iterations,converged,label,reference_error_gamma,status\n";
  for (const TableRow& r : rows) {
    out += csv_field(r.actuator) + ',' + csv_field(r.region) + ',' + format_number(r.error_gamma) + ',' + format_number(r.error_omega) + ',' +
           format_number(r.gram_min_eig) + ',' + std::to_string(r.iterations) + ',' + (r.converged ? "true" : "false") + ',' +
           csv_field(r.label) + ',' + (r.reference_error_gamma ? format_number(*r.reference_error_gamma) : "") + ',' + csv_field(r.status) + '\n';
  }
  return out;
}

}  // namespace fhum
