// Acceptance checks 1-9: one PASS/FAIL line each. Exit status 0 iff all pass.
// Usage: fhum_acceptance [path/to/fhum]   (the CLI is needed for check 9; without it
// the run pipeline is repeated in-process).
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fhum/config.hpp"
#include "fhum/report.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace fhum;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Result mlf_oracles() {
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 100.0 * i / 999;
    e1 = std::max(e1, rel(mittag_leffler(1.0, 1.0, -x), std::exp(-x)));
  }
  for (int i = 0; i <= 1000; ++i) {
    const double x = 10.0 * i / 1000;
    e2 = std::max(e2, rel(mittag_leffler(0.5, 1.0, -x), std::exp(x * x) * std::erfc(x)));
  }
  for (double a : {0.55, 0.75, 0.9, 1.0}) {
    for (double b : {a, 1.0, 1.3}) {
      const MittagLeffler lo(a, b), hi(a, b + a);
      for (double z : {-0.2, -0.9, -1.1, -4.0, -12.0, -49.0, -51.0, -300.0, -1e4}) {
        const double rhs = z * hi(z) + detail::rgamma(b);
        const double scale = std::max({std::abs(lo(z)), std::abs(z * hi(z)), detail::rgamma(b)});
        e3 = std::max(e3, std::abs(lo(z) - rhs) / scale);
      }
    }
  }
  return {e1 <= 1e-12 && e2 <= 1e-10 && e3 <= 1e-9,
          "exp " + fmt("%.2e", e1) + ", erfc " + fmt("%.2e", e2) + ", recurrence " + fmt("%.2e", e3)};
}

Result riesz_identity() {
  double worst = 0.0;
  int n = 0;
  for (double alpha : {0.6, 0.75, 0.9, 1.0}) {
    for (double lambda : {0.0, -1.0, -5.0, -50.0}) {
      for (double t : {0.25, 1.0, 2.0}) {
        const auto [lhs, rhs] = riesz_check_identity(alpha, lambda, t, 48);
        worst = std::max(worst, std::abs(lhs - rhs));
        ++n;
      }
    }
  }
  return {worst <= 1e-8, std::to_string(n) + " points, max difference " + fmt("%.2e", worst)};
}

// y = t^{alpha+1} solves the scalar logistic equation when the forcing base is chosen so
// that N(base + y) = Gamma(alpha+2) t / pi.
double manufactured_error(double alpha, int M) {
  const double Kcap = 100.0;
  const FracParams p{alpha, 1.0};
  const TimeMesh mesh = TimeMesh::graded(p.T, M, 2.0 / alpha);
  Eigen::MatrixXd base(1, M + 1);
  for (int i = 0; i <= M; ++i) {
    const double t = mesh[i];
    const double q = std::tgamma(alpha + 2.0) * t / std::numbers::pi;
    base(0, i) = std::numbers::pi * Kcap * (1.0 - std::sqrt(1.0 - 4.0 * q / Kcap)) / 2.0 - std::pow(t, alpha + 1.0);
  }
  const NonlinearSpec spec{NonlinearKind::Logistic, 1.0, Kcap, 1.0, 0.01};
  const StateTrajectory tr = solve_phi2(Eigen::MatrixXd::Zero(1, M + 1), base, false, spec, p, mesh, 0, 2);
  double err = 0.0;
  for (int i = 0; i <= M; ++i) err = std::max(err, std::abs(tr.coeffs(0, i) - std::pow(mesh[i], alpha + 1.0)));
  return err;
}

Result solver_order() {
  bool ok = true;
  std::string d;
  for (double alpha : {0.75, 0.9, 1.0}) {
    const double want = std::min(1.0 + alpha, 2.0) - 0.2;
    double prev = manufactured_error(alpha, 32), worst = 1e300;
    for (int M : {64, 128, 256}) {
      const double e = manufactured_error(alpha, M);
      worst = std::min(worst, std::log2(prev / e));
      prev = e;
    }
    ok = ok && worst >= want;
    d += (d.empty() ? "" : ", ") + fmt("alpha %.2f", alpha) + fmt(": order %.3f", worst) + fmt(" (need %.2f)", want);
  }
  return {ok, d};
}

HUMProblem linear_example1() {
  const RunConfig rc = build_config(YAML::Load(
      "preset: example1\nproblem: {J: 8, nonlinearity: {kind: none}}\nsolver: {rank_tol: auto, relax: 1, anderson_depth: 0}\n"));
  return rc.problem;
}

Result linear_exactness() {
  const auto [phi, cl, rep] = HUMSolver(linear_example1()).run();
  HUMProblem tuned = linear_example1();
  tuned.rank_tol = 1e-6;
  const auto [phi_t, cl_t, rep_t] = HUMSolver(tuned).run();
  return {rep.converged && rep.iterations <= 2 && rep.omega_projection_error <= 1e-6,
          "omega projection error " + fmt("%.2e", rep.omega_projection_error) + " after " + std::to_string(rep.iterations) +
              " iterations; with the preset rank_tol 1e-6 it is " + fmt("%.2e", rep_t.omega_projection_error)};
}

Result gram_consistency() {
  const HUMProblem p = preset("example1").problem;
  const Eigen::VectorXd b = actuator_coefficients(p.act, p.J);
  const GramMatrix G = gram_matrix(b, p.p, p.J, p.quad_order);
  const EigenGroups groups(p.J);
  const ProductWeights pw(p.p.alpha, groups.lambdas, p.mesh);
  const std::vector<double> times(p.mesh.nodes.begin(), p.mesh.nodes.end() - 1);
  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    // SplitMix64 streams with seeds 100..104, uniform in [-1, 1).
    const SpectralField a(p.J, test::splitmix_vector(num_modes(p.J), 100 + s));
    const Eigen::VectorXd phiT = controlled_state(sample_control(a, b, p.p, times), b, pw, groups, p.p.T).col(p.mesh.intervals());
    const Eigen::VectorXd Ga = G.entries * a.coeffs;
    worst = std::max(worst, (phiT - Ga).norm() / Ga.norm());
  }
  return {worst <= 1e-6, "max relative gap " + fmt("%.2e", worst) + " over 5 samples"};
}

// Values of the first validated build (preset knobs rank_tol 1e-6, relax 0.2, Anderson depth 5).
constexpr double kPinnedGamma = 1.8238312367522629e-3;
constexpr double kPinnedOmega = 2.4073152903527528e-3;

RunReport example1_report;

Result example1() {
  const ExperimentPreset e = preset("example1");
  example1_report = std::get<2>(HUMSolver(e.problem).run());
  const RunReport& r = example1_report;
  const bool pinned = rel(r.error_gamma, kPinnedGamma) <= 1e-6 && rel(r.error_omega, kPinnedOmega) <= 1e-6;
  return {r.converged && r.error_gamma <= 1e-2 && r.error_gamma < r.error_omega && pinned,
          "error_gamma " + fmt("%.3e", r.error_gamma) + ", error_omega " + fmt("%.3e", r.error_omega) + " after " +
              std::to_string(r.iterations) + " iterations" + (pinned ? "; matches pinned values" : "; DIFFERS from pinned values") +
              "; reference values " + fmt("%.1e", *e.reference_error_omega) + " on omega, order 1e-5 on Gamma"};
}

Result table1() {
  std::vector<double> err;
  std::string blew;
  for (const std::string& label : table_labels(1)) {
    try {
      const RunReport r = std::get<2>(HUMSolver(preset(label).problem).run());
      err.push_back(r.error_gamma);
      if (!std::isfinite(r.error_gamma)) blew += " " + label;
    } catch (const std::exception& ex) {
      err.push_back(std::nan(""));
      blew += " " + label;
    }
  }
  const double ratio = err[1] / err[3];
  std::string d = "error_gamma by row:";
  for (double v : err) d += fmt(" %.3e", v);
  d += "; row2/row4 = " + fmt("%.1f", ratio);
  if (!blew.empty()) d += "; failed:" + blew;
  return {blew.empty() && ratio >= 10.0, d};
}

Result diagnostics() {
  const GronwallCondition k0 =
      gronwall_time_condition(1.0, NonlinearSpec{NonlinearKind::Logistic, 1.0, 100.0, 1.0, 0.0}, {0.75, 2.0}, 5.0, 5.0, 5.0);
  const bool finite = std::isfinite(example1_report.gronwall_value) && std::isfinite(example1_report.h0_margin);
  bool rejected = true;
  for (double a : {0.5, 0.4, 0.1}) {
    try {
      build_config(YAML::Load("preset: example1\nproblem: {alpha: " + std::to_string(a) + "}\n"));
      rejected = false;
    } catch (const std::invalid_argument&) {
    }
  }
  return {k0.value == 1.0 && finite && rejected,
          "K=0 value " + fmt("%.17g", k0.value) + ", example1 gronwall_value " + fmt("%.3e", example1_report.gronwall_value) +
              ", h0_margin " + fmt("%.3e", example1_report.h0_margin) + (rejected ? ", alpha <= 1/2 rejected" : ", alpha <= 1/2 ACCEPTED")};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Result determinism(const std::string& cli) {
  const std::vector<std::string> names = {"report.json", "control.csv", "reached_state.dat", "desired_state.dat", "trace.csv"};
  std::vector<std::vector<std::string>> outputs;
  if (!cli.empty()) {
    const fs::path base = fs::temp_directory_path() / "fhum_acceptance";
    fs::remove_all(base);
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = base / std::to_string(k);
      const std::string cmd = "\"" + cli + "\" run --preset example1 --output \"" + dir.string() + "\" > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) return {false, "run --preset example1 did not exit 0"};
      std::vector<std::string> files;
      for (const std::string& n : names) files.push_back(slurp(dir / n));
      outputs.push_back(files);
    }
    fs::remove_all(base);
  } else {
    const ExperimentPreset e = preset("example1");
    for (int k = 0; k < 2; ++k) {
      const HUMSolver s(e.problem);
      const auto [phi, cl, rep] = s.run();
      outputs.push_back({to_json_text(run_document(e.label, e.problem, rep, e.reference_error_gamma, e.reference_error_omega)),
                         control_csv(cl.control), grid_dump_text(cl.final_state, 64), grid_dump_text(s.targets().target, 64),
                         trace_csv(cl.final_state, e.problem.z_d, e.problem.gamma, e.problem.trace_samples)});
    }
  }
  std::size_t bytes = 0;
  for (const std::string& f : outputs[0]) bytes += f.size();
  return {outputs[0] == outputs[1],
          std::to_string(names.size()) + " files, " + std::to_string(bytes) + " bytes, " + (cli.empty() ? "in-process" : "via the CLI")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  struct Check {
    int id;
    const char* name;
    double limit_s;
    std::function<Result()> run;
  };
  const std::vector<Check> checks = {
      {1, "Mittag-Leffler oracles", 5, mlf_oracles},
      {2, "fractional integral identity", 5, riesz_identity},
      {3, "fractional solver order", 30, solver_order},
      {4, "linear HUM exactness", 60, linear_exactness},
      {5, "Gram consistency", 60, gram_consistency},
      {6, "example 1", 300, example1},
      {7, "table 1 structure", 1800, table1},
      {8, "Gronwall and H0 diagnostics", 1, diagnostics},
      {9, "determinism", 1e300, [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (const Check& c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < c.limit_s;
    const bool pass = r.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %d: %s  %s: %s [%.2f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name, r.detail.c_str(), s,
                in_time ? "" : ", over the time limit");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
