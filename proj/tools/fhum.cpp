// fhum: run | sweep | mlf | check.
// Exit codes: 0 converged, 1 numerical failure, 2 not converged, 64 usage.
#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fhum/config.hpp"
#include "fhum/report.hpp"

namespace fs = std::filesystem;
using namespace fhum;

namespace {

constexpr int kOk = 0, kFailure = 1, kNotConverged = 2, kUsage = 64;

/// Flags that override the configuration; each one becomes a key in the YAML document.
struct Overrides {
  std::optional<int> J, M, quad_order, P, max_iters, anderson_depth;
  std::optional<double> eps, reg, relax, alpha, T;
  std::optional<std::string> rank_tol, norm, nonlinearity;
  bool strict_alpha = false;

  void add_to(CLI::App* app) {
    app->add_option("--J", J, "Spectral truncation order");
    app->add_option("--M", M, "Time mesh intervals");
    app->add_option("--quad-order", quad_order, "Gauss-Jacobi nodes for the Gram matrix");
    app->add_option("--P", P, "Pseudo-spectral grid points per direction");
    app->add_option("--eps", eps, "Fixed-point stopping tolerance");
    app->add_option("--max-iters", max_iters, "Fixed-point iteration cap");
    app->add_option("--reg", reg, "Tikhonov regularization of the solvability equation");
    app->add_option("--rank-tol", rank_tol, "Relative singular value cutoff, or auto");
    app->add_option("--relax", relax, "Damping of the fixed-point update");
    app->add_option("--anderson-depth", anderson_depth, "Anderson mixing history (0 = off)");
    app->add_option("--norm", norm, "Error norm on omega: l2 or h1");
    app->add_option("--alpha", alpha, "Fractional order");
    app->add_option("--T", T, "Final time");
    app->add_option("--nonlinearity", nonlinearity, "none or logistic");
    app->add_flag("--strict-alpha", strict_alpha, "Reject alpha outside (2/3, 1]");
  }

  void apply(YAML::Node& root) const {
    YAML::Node pr = root["problem"], so = root["solver"];
    if (alpha) pr["alpha"] = *alpha;
    if (T) pr["T"] = *T;
    if (J) pr["J"] = *J;
    if (strict_alpha) pr["strict_alpha"] = true;
    if (nonlinearity) pr["nonlinearity"]["kind"] = *nonlinearity;
    if (M) so["M"] = *M;
    if (quad_order) so["quad_order"] = *quad_order;
    if (P) so["P"] = *P;
    if (eps) so["eps"] = *eps;
    if (max_iters) so["max_iters"] = *max_iters;
    if (reg) so["reg"] = *reg;
    if (rank_tol) so["rank_tol"] = *rank_tol;
    if (relax) so["relax"] = *relax;
    if (anderson_depth) so["anderson_depth"] = *anderson_depth;
    if (norm) so["norm"] = *norm;
  }
};

struct Source {
  std::string config_path, preset_label;

  void add_to(CLI::App* app) {
    auto* c = app->add_option("--config", config_path, "YAML configuration file");
    auto* p = app->add_option("--preset", preset_label, "Preset label");
    c->excludes(p);
  }

  YAML::Node document() const {
    YAML::Node root;
    if (!config_path.empty()) {
      try {
        root = YAML::LoadFile(config_path);
      } catch (const YAML::Exception& e) {
        throw ConfigError("cannot read config '" + config_path + "': " + e.what());
      }
      if (!root.IsMap()) throw ConfigError("config '" + config_path + "' must be a mapping");
    }
    if (!preset_label.empty()) root["preset"] = preset_label;
    return root;
  }
};

/// --output, then FHUM_OUTPUT_DIR, then the config's output key, then the fallback.
fs::path output_dir(const std::string& flag, const std::string& from_config, const fs::path& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FHUM_OUTPUT_DIR"); env && *env) return env;
  if (!from_config.empty()) return from_config;
  return fallback;
}

struct Outcome {
  int code = kFailure;
  TableRow row;
};

/// Solves one configuration and writes its files into dir.
Outcome run_one(const RunConfig& rc, const fs::path& dir, int grid_points, std::ostream& log) {
  Outcome out;
  out.row.label = rc.label;
  out.row.actuator = actuator_text(rc.problem.act);
  out.row.region = rect_text(rc.problem.omega);
  out.row.reference_error_gamma = rc.reference_error_gamma;
  try {
    const HUMSolver solver(rc.problem);
    const auto [phi, cl, rep] = solver.run();
    write_file_atomic(dir / "report.json",
                      to_json_text(run_document(rc.label, rc.problem, rep, rc.reference_error_gamma, rc.reference_error_omega)));
    write_file_atomic(dir / "control.csv", control_csv(cl.control));
    write_file_atomic(dir / "reached_state.dat", grid_dump_text(cl.final_state, grid_points));
    write_file_atomic(dir / "desired_state.dat", grid_dump_text(solver.targets().target, grid_points));
    write_file_atomic(dir / "trace.csv", trace_csv(cl.final_state, rc.problem.z_d, rc.problem.gamma, rc.problem.trace_samples));
    out.row.error_gamma = rep.error_gamma;
    out.row.error_omega = rep.error_omega;
    out.row.gram_min_eig = rep.gram_min_eig;
    out.row.iterations = rep.iterations;
    out.row.converged = rep.converged;
    out.row.status = rep.stop_reason;
    const bool finite = std::isfinite(rep.error_gamma) && std::isfinite(rep.error_omega) && rep.stop_reason != "non-finite residual";
    out.code = !finite ? kFailure : rep.converged ? kOk : kNotConverged;
    log << rc.label << ": " << rep.stop_reason << " after " << rep.iterations << " iterations, error_gamma " << format_number(rep.error_gamma)
        << ", error_omega " << format_number(rep.error_omega) << '\n';
    for (const std::string& w : rep.warnings) log << rc.label << ": warning: " << w << '\n';
  } catch (const BlowUpError& e) {
    out.row.status = std::string("blow-up at node ") + std::to_string(e.node());
    log << rc.label << ": numerical failure: " << e.what() << '\n';
  } catch (const std::exception& e) {
    out.row.status = std::string("failed: ") + e.what();
    log << rc.label << ": numerical failure: " << e.what() << '\n';
  }
  return out;
}

int cmd_run(const Source& src, const Overrides& ov, const std::string& out_flag, int grid_points) {
  YAML::Node doc = src.document();
  ov.apply(doc);
  const RunConfig rc = build_config(doc);
  const fs::path dir = output_dir(out_flag, rc.output, fs::path("fhum_out") / rc.label);
  const Outcome o = run_one(rc, dir, grid_points, std::cerr);
  if (o.code != kFailure) std::cout << "wrote " << dir.string() << '\n';
  return o.code;
}

int cmd_sweep(const Source& src, const Overrides& ov, int table, const std::string& out_flag, int jobs, int grid_points) {
  const std::vector<std::string> labels = table_labels(table);
  std::vector<RunConfig> configs;
  std::string config_output;
  for (const std::string& label : labels) {
    YAML::Node doc = src.document();
    doc["preset"] = label;
    doc.remove("label");
    doc.remove("output");
    ov.apply(doc);
    configs.push_back(build_config(doc));
  }
  if (!src.config_path.empty()) {
    const YAML::Node doc = src.document();
    if (doc["output"]) config_output = doc["output"].as<std::string>();
  }
  const fs::path base = output_dir(out_flag, config_output, "fhum_out");

  std::vector<Outcome> outcomes(configs.size());
  std::vector<std::string> logs(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      std::ostringstream log;
      outcomes[i] = run_one(configs[i], base / configs[i].label, grid_points, log);
      logs[i] = log.str();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(jobs, static_cast<int>(configs.size())); ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::vector<TableRow> rows;
  int code = kOk;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    std::cerr << logs[i];
    rows.push_back(outcomes[i].row);
    if (outcomes[i].code == kFailure) {
      code = kFailure;
    } else if (outcomes[i].code == kNotConverged && code == kOk) {
      code = kNotConverged;
    }
  }
  const fs::path csv = base / ("table" + std::to_string(table) + ".csv");
  write_file_atomic(csv, table_csv(rows));
  std::cout << "wrote " << csv.string() << '\n';
  return code;
}

int cmd_mlf(double alpha, double beta, double z) {
  std::cout << format_number(mittag_leffler(alpha, beta, z)) << '\n';
  return kOk;
}

int cmd_check(const Source& src, const Overrides& ov) {
  YAML::Node doc = src.document();
  ov.apply(doc);
  const RunConfig rc = build_config(doc);
  const HUMProblem& p = rc.problem;
  for (const std::string& w : p.p.warnings()) std::cout << "warning: " << w << '\n';
  const HUMSolver solver(p);
  const GramMatrix& g = solver.gram();
  const double lmin = g.min_eigenvalue;
  const double lmax = g.eigenvalues.size() ? g.eigenvalues(g.eigenvalues.size() - 1) : 0.0;
  const double cutoff = g.entries.rows() * std::numeric_limits<double>::epsilon() * std::abs(lmax);
  int rank = 0;
  for (Eigen::Index i = 0; i < g.eigenvalues.size(); ++i) rank += g.eigenvalues(i) > cutoff ? 1 : 0;
  const GronwallCondition gc =
      gronwall_time_condition(p.semigroup_bound, p.spec, p.p, 0.0, solver.targets().y0.coeffs.norm(), solver.actuator().norm());
  std::cout << "label: " << rc.label << '\n'
            << "alpha: " << format_number(p.p.alpha) << '\n'
            << "modes: " << num_modes(p.J) << '\n'
            << "gram_min_eig: " << format_number(lmin) << '\n'
            << "gram_max_eig: " << format_number(lmax) << '\n'
            << "condition_number: " << format_number(lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity()) << '\n'
            << "rank: " << rank << '\n'
            << "zero_modes:";
  for (const ModeIndex& m : g.zero_modes) std::cout << " (" << m.j << ',' << m.k << ')';
  std::cout << '\n'
            << "gronwall_constant_at_zero_phi0: " << format_number(gc.constant) << '\n'
            << "gronwall_value_at_zero_phi0: " << format_number(gc.value) << '\n'
            << "gronwall_satisfied: " << (gc.satisfied ? "true" : "false") << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HUM control of a semilinear time-fractional diffusion on (0,pi)^2"};
  app.require_subcommand(1);

  Source run_src, sweep_src, check_src;
  Overrides run_ov, sweep_ov, check_ov;
  std::string run_out, sweep_out;
  int run_grid = 64, sweep_grid = 64, table = 0, jobs = 1;
  double ml_alpha = 0.0, ml_beta = 0.0, ml_z = 0.0;

  CLI::App* run = app.add_subcommand("run", "Solve one problem and write report.json, control.csv, trace.csv and grid dumps");
  run_src.add_to(run);
  run_ov.add_to(run);
  run->add_option("--output", run_out, "Output directory (overrides FHUM_OUTPUT_DIR and the config)");
  run->add_option("--grid-points", run_grid, "Points per direction in the grid dumps")->check(CLI::Range(2, 4096));

  CLI::App* sweep = app.add_subcommand("sweep", "Run every row of table 1 or 2 and write tableN.csv");
  sweep_src.add_to(sweep);
  sweep_ov.add_to(sweep);
  sweep->add_option("--table", table, "Table number")->required()->check(CLI::IsMember({1, 2}));
  sweep->add_option("--output", sweep_out, "Output directory (overrides FHUM_OUTPUT_DIR and the config)");
  sweep->add_option("--jobs", jobs, "Rows solved concurrently")->check(CLI::Range(1, 64));
  sweep->add_option("--grid-points", sweep_grid, "Points per direction in the grid dumps")->check(CLI::Range(2, 4096));

  CLI::App* mlf = app.add_subcommand("mlf", "Evaluate the Mittag-Leffler function E_{alpha,beta}(z)");
  mlf->add_option("--alpha", ml_alpha)->required();
  mlf->add_option("--beta", ml_beta)->required();
  mlf->add_option("--z", ml_z)->required();

  CLI::App* check = app.add_subcommand("check", "Print controllability diagnostics without solving");
  check_src.add_to(check);
  check_ov.add_to(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      if (run_src.config_path.empty() && run_src.preset_label.empty()) throw ConfigError("run needs --config or --preset");
      return cmd_run(run_src, run_ov, run_out, run_grid);
    }
    if (*sweep) return cmd_sweep(sweep_src, sweep_ov, table, sweep_out, jobs, sweep_grid);
    if (*check) {
      if (check_src.config_path.empty() && check_src.preset_label.empty()) throw ConfigError("check needs --config or --preset");
      return cmd_check(check_src, check_ov);
    }
    if (*mlf) return cmd_mlf(ml_alpha, ml_beta, ml_z);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
