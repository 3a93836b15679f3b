#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fhum/hum.hpp"

namespace fhum {
namespace {

constexpr double kPi = std::numbers::pi;

HUMProblem small_problem(int J = 4) {
  HUMProblem p;
  p.p = FracParams{0.75, 2.0};
  p.J = J;
  p.omega = Rect{0.0, 0.3, 0.0, 0.5};
  p.gamma = BoundarySegment{Edge::West, 0.0, 0.5};
  p.act = ZonalActuator{Rect{0.5, 1.0, 0.7, 1.0}};
  p.y0 = [](double x, double y) { return std::sqrt(x * y); };
  p.y_d_ext = [](double x, double y) { return 2.0 * (1.0 - 0.5 * std::cos(2.0 * x)) * (1.0 - 0.5 * std::cos(2.0 * y)); };
  p.z_d = [](double s) { return 1.0 - 0.5 * std::cos(2.0 * s); };
  p.mesh = control_mesh(p.p, 32);
  p.quad_order = 32;
  p.P = 2 * (J + 1);
  p.projection_points = 64;
  p.trace_samples = 64;
  return p;
}

// Drops the directions where rounding of the data is amplified by 1e14 or more.
HUMProblem truncated(HUMProblem p) {
  p.rank_tol = 1e-8;
  return p;
}

HUMProblem with_logistic(HUMProblem p, double C, double Kcap) {
  p.spec = NonlinearSpec{NonlinearKind::Logistic, C, Kcap, C, C / Kcap};
  p.rank_tol = 1e-8;
  return p;
}

TEST(SolveCl, Identity) {
  const int N = 9;
  const Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(N, -1.0, 2.0);
  const ClSolution s = solve_cl(Eigen::MatrixXd::Identity(N, N), Eigen::MatrixXd::Identity(N, N), rhs, 0.0);
  EXPECT_EQ(s.rank, N);
  EXPECT_LE((s.x - rhs).norm(), 1e-15);
  const ClSolution r = solve_cl(Eigen::MatrixXd::Identity(N, N), Eigen::MatrixXd::Identity(N, N), rhs, 1.0);
  EXPECT_LE((r.x - rhs / 2.0).norm(), 1e-15);
}

TEST(SolveCl, WholeDomainActuatorIsRankOne) {
  const int J = 3;
  const FracParams p{0.75, 2.0};
  const Eigen::VectorXd b = actuator_coefficients(ZonalActuator{Rect::whole()}, J);
  const GramMatrix G = gram_matrix(b, p, J, 32);
  const Eigen::MatrixXd Mw = mass_matrix(Rect{0.0, 0.3, 0.0, 0.5}, J);
  const ClSolution s = solve_cl(G.entries, Mw, Mw * Eigen::VectorXd::Ones(num_modes(J)), 0.0);
  EXPECT_EQ(s.rank, 1);
  EXPECT_GT(std::abs(s.x(0)), 0.0);
  for (int n = 1; n < num_modes(J); ++n) EXPECT_LE(std::abs(s.x(n)), 1e-14 * std::abs(s.x(0))) << n;
}

TEST(SolveCl, RankZeroIsUncontrollable) {
  const int N = 4;
  EXPECT_THROW(solve_cl(Eigen::MatrixXd::Zero(N, N), Eigen::MatrixXd::Identity(N, N), Eigen::VectorXd::Ones(N), 0.0),
               UncontrollableError);
  EXPECT_THROW(solve_cl(Eigen::MatrixXd::Zero(N, N), Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(N), 0.0),
               std::invalid_argument);
}

TEST(SolveCl, MatchesDenseLeastSquares) {
  // G has one kernel per distinct eigenvalue, so at J = 1 the rank is exactly 3 of 4
  // with a clean gap; both decompositions drop only the exact null direction.
  HUMProblem prob = small_problem(1);
  prob.omega = Rect::whole();
  const Eigen::VectorXd b = actuator_coefficients(prob.act, prob.J);
  const Eigen::MatrixXd G = gram_matrix(b, prob.p, prob.J, 64).entries;
  const Eigen::MatrixXd Mw = mass_matrix(prob.omega, prob.J);
  const Targets t = assemble_targets(prob);
  const Eigen::VectorXd rhs = t.rhs_base - t.Lo;
  const Eigen::MatrixXd A = Mw * G;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  ASSERT_GT(sv(2), 1e-8 * sv(0));
  ASSERT_LT(sv(3), 1e-15 * sv(0));
  Eigen::VectorXd oracle = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < 3; ++i) oracle += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(rhs) / sv(i));
  const ClSolution s = solve_cl(G, Mw, rhs, 0.0);
  EXPECT_EQ(s.rank, 3);
  EXPECT_LE((s.x - oracle).norm(), 1e-6 * oracle.norm());
  EXPECT_NEAR((A * s.x - rhs).norm(), (A * oracle - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(AssembleTargets, ConstantTargetAndZeroData) {
  HUMProblem prob = small_problem(3);
  prob.y0 = [](double, double) { return 0.0; };
  prob.y_d_ext = [](double, double) { return 1.0; };
  const Targets t = assemble_targets(prob);
  EXPECT_EQ(t.Lo.cwiseAbs().maxCoeff(), 0.0);
  // 1 = pi xi_00, and (M_w)_{00} = |omega| / pi^2.
  EXPECT_NEAR(t.target.coeffs(0), kPi, 1e-13);
  EXPECT_NEAR(t.rhs_base(0), prob.omega.area() / kPi, 1e-15);
  EXPECT_LE(t.residual_target, 1e-13);
}

TEST(HUMSolver, LinearConvergesInTwoIterations) {
  const HUMProblem prob = small_problem();
  const auto [phi, cl, rep] = HUMSolver(prob).run();
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 2);
  EXPECT_EQ(rep.stop_reason, "converged");
  EXPECT_LE(rep.omega_projection_error, 1e-6);
  EXPECT_GT(rep.effective_rank, 0);
  EXPECT_TRUE(std::isfinite(rep.duality_gap));
}

TEST(HUMSolver, TargetAtRestNeedsNoControl) {
  HUMProblem prob = truncated(small_problem());
  const SpectralField y0 = project_function(prob.y0, prob.J, prob.projection_points).field;
  const SpectralField free_T = propagate_free(y0, prob.p, prob.p.T);
  prob.y_d_ext = [free_T](double x, double y) { return eval_field(free_T, x, y); };
  const auto [phi, cl, rep] = HUMSolver(prob).run();
  EXPECT_LE(rep.control_energy, 1e-8);
  EXPECT_LE(rep.error_omega, 1e-8);
}

TEST(HUMSolver, ScalingCovariance) {
  const double c = 3.0;
  const HUMProblem a = truncated(small_problem());
  HUMProblem b = a;
  b.y0 = [f = a.y0, c](double x, double y) { return c * f(x, y); };
  b.y_d_ext = [f = a.y_d_ext, c](double x, double y) { return c * f(x, y); };
  const auto [pa, ca, ra] = HUMSolver(a).run();
  const auto [pb, cb, rb] = HUMSolver(b).run();
  EXPECT_LE((pb.coeffs - c * pa.coeffs).norm(), 1e-10 * c * pa.coeffs.norm());
  const Eigen::Map<const Eigen::VectorXd> ua(ca.control.values.data(), ca.control.values.size());
  const Eigen::Map<const Eigen::VectorXd> ub(cb.control.values.data(), cb.control.values.size());
  EXPECT_LE((ub - c * ua).norm(), 1e-10 * c * ua.norm());
  EXPECT_LE((cb.final_state.coeffs - c * ca.final_state.coeffs).norm(), 1e-10 * c * ca.final_state.coeffs.norm());
}

TEST(SimulateClosedLoop, ZeroControlFromRest) {
  HUMProblem prob = small_problem();
  prob.y0 = [](double, double) { return 0.0; };
  const ClosedLoop cl = simulate_closed_loop(prob, SpectralField::zero(prob.J));
  EXPECT_EQ(cl.final_state.coeffs.cwiseAbs().maxCoeff(), 0.0);
  // int_0^{1/2} (1 - cos(2y)/2)^2 dy
  const double z2 = 0.5 - std::sin(1.0) / 2.0 + 0.0625 + std::sin(2.0) / 32.0;
  EXPECT_NEAR(cl.error_gamma, std::sqrt(z2), 1e-12);
}

TEST(SimulateClosedLoop, GammaErrorUsesTheSegmentPath) {
  const HUMProblem prob = small_problem();
  const auto [phi, cl, rep] = HUMSolver(prob).run();
  EXPECT_EQ(rep.error_gamma, error_on_segment(cl.final_state, prob.z_d, prob.gamma, prob.trace_samples));
  EXPECT_EQ(cl.error_gamma, rep.error_gamma);
  const SpectralField target = project_function(prob.y_d_ext, prob.J, prob.projection_points).field;
  EXPECT_EQ(rep.error_omega, error_on_region(cl.final_state, target, prob.omega, prob.norm));
}

TEST(SimulateClosedLoop, RejectsNonFinitePhi) {
  const HUMProblem prob = small_problem(2);
  SpectralField phi = SpectralField::zero(2);
  phi.coeffs(3) = std::nan("");
  EXPECT_THROW(simulate_closed_loop(prob, phi), std::invalid_argument);
}

TEST(HUMSolver, ReportCompleteWhenNotConverged) {
  HUMProblem prob = with_logistic(small_problem(), 0.05, 100.0);
  prob.max_iters = 1;
  const auto [phi, cl, rep] = HUMSolver(prob).run();
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.stop_reason, "max_iters");
  EXPECT_EQ(rep.iterations, 1);
  ASSERT_EQ(rep.residual_history.size(), 1u);
  EXPECT_TRUE(std::isfinite(rep.gronwall_value));
  EXPECT_TRUE(std::isfinite(rep.h0_margin));
  EXPECT_GE(rep.h0_node, 0);
  EXPECT_TRUE(std::isfinite(rep.error_omega) && std::isfinite(rep.error_gamma));
  EXPECT_GT(rep.gram_max_eig, 0.0);
  EXPECT_GT(rep.control_energy, 0.0);
}

TEST(HUMSolver, AcceleratedIterationReachesTheSameFixedPoint) {
  const HUMProblem plain = with_logistic(small_problem(), 0.05, 100.0);
  HUMProblem acc = plain;
  acc.relax = 0.5;
  acc.anderson_depth = 3;
  const HUMSolver solver(plain);
  const auto [pa, ra] = solver.fixed_point();
  const auto [pb, rb] = HUMSolver(acc).fixed_point();
  ASSERT_TRUE(ra.converged);
  ASSERT_TRUE(rb.converged);
  EXPECT_LE(solver.g_norm_of(pa.coeffs - pb.coeffs), 1e-6 * solver.g_norm_of(pa.coeffs));
}

TEST(HUMSolver, BlowUpPropagates) {
  const HUMProblem prob = with_logistic(small_problem(), 50.0, 1e-3);
  EXPECT_THROW(HUMSolver(prob).run(), BlowUpError);
}

TEST(HUMProblem, Validation) {
  const HUMProblem ok = small_problem(2);
  EXPECT_NO_THROW(ok.validate());
  HUMProblem p = ok;
  p.gamma = BoundarySegment{Edge::South, 0.5, 0.9};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ok;
  p.mesh = control_mesh(FracParams{0.75, 1.0}, 32);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ok;
  p.P = 5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ok;
  p.relax = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ok;
  p.rank_tol = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ok;
  p.z_d = nullptr;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ok;
  p.max_iters = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace fhum
