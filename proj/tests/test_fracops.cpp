#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fhum/fracops.hpp"
#include "support.hpp"

namespace fhum {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(FracParams, Validation) {
  EXPECT_NO_THROW((FracParams{0.75, 2.0}).validate());
  EXPECT_THROW((FracParams{0.5, 2.0}).validate(), std::invalid_argument);
  EXPECT_THROW((FracParams{0.4, 2.0}).validate(), std::invalid_argument);
  EXPECT_THROW((FracParams{1.1, 2.0}).validate(), std::invalid_argument);
  EXPECT_THROW((FracParams{0.75, 0.0}).validate(), std::invalid_argument);
  const FracParams relaxed{0.51, 2.0};
  EXPECT_NO_THROW(relaxed.validate());
  EXPECT_EQ(relaxed.warnings().size(), 1u);
  EXPECT_THROW((FracParams{0.51, 2.0, true}).validate(), std::invalid_argument);
  EXPECT_TRUE((FracParams{0.75, 2.0}).warnings().empty());
}

TEST(FracOps, PropagateFree) {
  const int J = 2;
  SpectralField y = SpectralField::zero(J);
  y.coeffs.setLinSpaced(-1.0, 1.0);
  const SpectralField e = propagate_free(y, {1.0, 2.0}, 0.7);
  for (int n = 0; n < y.coeffs.size(); ++n) EXPECT_NEAR(e.coeffs(n), y.coeffs(n) * std::exp(eigenvalue(mode_at(n, J)) * 0.7), 1e-14);

  EXPECT_NEAR(propagate_free(SpectralField::unit({0, 0}, J), {0.75, 2.0}, 1.0).coeffs(0), 1.0 / std::tgamma(0.75), 1e-14);
  const SpectralField f = propagate_free(SpectralField::unit({1, 1}, J), {0.75, 2.0}, 2.0);
  EXPECT_NEAR((f[ModeIndex{1, 1}] / 0.024914477826497526436), 1.0, 1e-12);
  EXPECT_THROW(propagate_free(y, {0.75, 2.0}, 0.0), std::invalid_argument);
}

TEST(FracOps, AdjointState) {
  const int J = 2;
  SpectralField a = SpectralField::zero(J);
  a.coeffs.setLinSpaced(0.5, 2.0);
  EXPECT_EQ(adjoint_state(a, {0.75, 2.0}, 2.0).coeffs, a.coeffs);
  const SpectralField e = adjoint_state(a, {1.0, 2.0}, 0.5);
  for (int n = 0; n < a.coeffs.size(); ++n) EXPECT_NEAR(e.coeffs(n), a.coeffs(n) * std::exp(eigenvalue(mode_at(n, J)) * 1.5), 1e-14);
  EXPECT_NEAR((adjoint_state(SpectralField::unit({1, 1}, J), {0.75, 2.0}, 1.0)[ModeIndex{1, 1}]), 0.20207848341295445435, 1e-13);
}

TEST(FracOps, HumControlValue) {
  const int J = 2;
  const Eigen::VectorXd b = actuator_coefficients(ZonalActuator{{0.5, 1.0, 0.7, 1.0}}, J);
  EXPECT_EQ(hum_control_value(SpectralField::zero(J), b, {0.75, 2.0}, 0.3), 0.0);

  Eigen::VectorXd b0 = Eigen::VectorXd::Zero(num_modes(J));
  b0(0) = kPi;
  EXPECT_NEAR(hum_control_value(SpectralField::unit({0, 0}, J), b0, {1.0, 2.0}, 1.0), kPi, 1e-14);

  const int n11 = linear_index({1, 1}, J);
  EXPECT_NEAR(hum_control_value(SpectralField::unit({1, 1}, J), b, {0.75, 2.0}, 1.0), b(n11) * 0.084363572245660564019, 1e-15);
  EXPECT_THROW(hum_control_value(SpectralField::unit({1, 1}, J), b, {0.75, 2.0}, 2.0), std::invalid_argument);
}

TEST(FracOps, ControlledStateSimpleCases) {
  // Single mode lambda = 0 (J = 0), b = 1, u = 1 on the mesh except at T.
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
  for (double alpha : {1.0, 0.75}) {
    const TimeMesh mesh = TimeMesh::graded(1.0, 64, 1.0);
    ControlSignal u;
    u.times.assign(mesh.nodes.begin(), mesh.nodes.end());
    u.values.assign(u.times.size(), 1.0);
    const Eigen::MatrixXd phi = controlled_state(u, b, {alpha, 1.0}, mesh);
    EXPECT_NEAR(phi(0, 64), 1.0 / std::tgamma(1.0 + alpha), 1e-13) << alpha;
    u.values.assign(u.times.size(), 0.0);
    EXPECT_EQ(controlled_state(u, b, {alpha, 1.0}, mesh).cwiseAbs().maxCoeff(), 0.0);
  }
  const TimeMesh m2 = TimeMesh::graded(2.0, 32, 1.0);
  ControlSignal u;
  u.times.assign(m2.nodes.begin(), m2.nodes.end());
  u.values.assign(u.times.size(), 1.0);
  EXPECT_NEAR(controlled_state(u, b, {1.0, 2.0}, m2)(0, 32), 2.0, 1e-13);
  u.times.resize(10);
  u.values.resize(10);
  EXPECT_THROW(controlled_state(u, b, {1.0, 2.0}, m2), std::invalid_argument);
}

TEST(FracOps, ControlledStateSingularControlFinalNode) {
  // u = s^{a-1}/Gamma(a) seen from T, lambda = 0: phi(T) is the Gram entry.
  const FracParams p{0.75, 2.0};
  const TimeMesh mesh = control_mesh(p, 32);
  ControlSignal u;
  u.times.assign(mesh.nodes.begin(), mesh.nodes.end() - 1);
  for (double t : u.times) u.values.push_back(std::pow(p.T - t, p.alpha - 1.0) / std::tgamma(p.alpha));
  u.singularity_exponent = p.alpha - 1.0;
  const Eigen::MatrixXd phi = controlled_state(u, Eigen::VectorXd::Ones(1), p, mesh);
  EXPECT_NEAR(phi(0, 32), 1.8835510808874978906, 1e-11);
  u.singularity_exponent = 0.0;
  EXPECT_THROW(controlled_state(u, Eigen::VectorXd::Ones(1), p, mesh), std::invalid_argument);
}

TEST(FracOps, ControlledStateClassicalLimit) {
  // alpha = 1, lambda = -2, u(s) = s: phi(t) = int_0^t e^{-2(t-s)} s ds.
  const int J = 1;
  const TimeMesh mesh = TimeMesh::graded(1.0, 200, 1.0);
  ControlSignal u;
  u.times = mesh.nodes;
  u.values = mesh.nodes;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_modes(J));
  b(linear_index({1, 1}, J)) = 1.0;
  const Eigen::MatrixXd phi = controlled_state(u, b, {1.0, 1.0}, mesh);
  const double t = 1.0;
  const double exact = (2 * t - 1 + std::exp(-2 * t)) / 4.0;
  EXPECT_NEAR(phi(linear_index({1, 1}, J), 200), exact, 1e-12);
}

TEST(FracOps, GramClosedForms) {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  EXPECT_NEAR(gram_matrix(one, {1.0, 2.0}, 0, 64).entries(0, 0), 2.0, 1e-13);
  EXPECT_NEAR(gram_matrix(one, {0.75, 2.0}, 0, 64).entries(0, 0), 1.8835510808874978906, 1e-13);
  EXPECT_THROW(gram_matrix(one, {0.5, 2.0}, 0, 64), std::invalid_argument);

  const int J = 3;
  const GramMatrix full = gram_matrix(actuator_coefficients(ZonalActuator{Rect::whole()}, J), {0.75, 2.0}, J, 64);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(full.entries);
  EXPECT_EQ(lu.rank(), 1);
  EXPECT_EQ(full.zero_modes.size(), static_cast<std::size_t>(num_modes(J) - 1));
}

TEST(FracOps, GramSymmetricPsd) {
  const int J = 12;
  const Eigen::VectorXd b = actuator_coefficients(ZonalActuator{{0.5, 1.0, 0.7, 1.0}}, J);
  const GramMatrix G = gram_matrix(b, {0.75, 2.0}, J, 64);
  EXPECT_EQ((G.entries - G.entries.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GE(G.min_eigenvalue, -1e-10 * G.eigenvalues.maxCoeff());
  EXPECT_TRUE(G.zero_modes.empty());
}

TEST(FracOps, GramAgainstAdaptiveIntegration) {
  // Two modes, compared with a brute-force fine composite rule in s.
  const double alpha = 0.75, T = 2.0;
  const KernelFamily kf(alpha);
  const int J = 2;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_modes(J));
  const int m = linear_index({0, 1}, J), n = linear_index({2, 2}, J);
  b(m) = 1.0;
  b(n) = 1.0;
  const GramMatrix G = gram_matrix(b, {alpha, T}, J, 64);
  // Substitute s = v^4 to flatten the s^{-1/2} singularity, then midpoint rule.
  double ref = 0.0;
  const int K = 400000;
  for (int i = 0; i < K; ++i) {
    const double v = std::pow(T, 0.25) * (i + 0.5) / K;
    const double s = std::pow(v, 4);
    ref += kf.kernel(-1.0, s) * kf.kernel(-8.0, s) * 4 * v * v * v * std::pow(T, 0.25) / K;
  }
  EXPECT_NEAR(G.entries(m, n), ref, 1e-8);
}

TEST(FracOps, GNorm) {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  EXPECT_EQ(g_norm(SpectralField::zero(0), one, {0.75, 2.0}, 64), 0.0);
  EXPECT_NEAR(g_norm(SpectralField::unit({0, 0}, 0), one, {1.0, 2.0}, 64), std::sqrt(2.0), 1e-13);
  EXPECT_NEAR(g_norm(SpectralField::unit({0, 0}, 0), one, {0.75, 2.0}, 64), std::sqrt(1.8835510808874978906), 1e-13);

  const int J = 6;
  const Eigen::VectorXd b = actuator_coefficients(ZonalActuator{{0.5, 1.0, 0.7, 1.0}}, J);
  const GramMatrix G = gram_matrix(b, {0.75, 2.0}, J, 64);
  const SpectralField a(J, test::splitmix_vector(num_modes(J), 7));
  EXPECT_NEAR(g_norm(a, b, {0.75, 2.0}, 64), std::sqrt(a.coeffs.dot(G.entries * a.coeffs)), 1e-10);
}

TEST(FracOps, RieszIdentityGrid) {
  for (double alpha : {0.6, 0.75, 0.9, 1.0}) {
    for (double lambda : {0.0, -1.0, -5.0, -50.0}) {
      for (double t : {0.25, 1.0, 2.0}) {
        const auto [lhs, rhs] = riesz_check_identity(alpha, lambda, t, 48);
        EXPECT_NEAR(lhs, rhs, 1e-8) << alpha << ' ' << lambda << ' ' << t;
      }
    }
  }
}

TEST(FracOps, GramDuality) {
  // phi1(T) from the sampled control equals G a.
  const int J = 12;
  const FracParams p{0.75, 2.0};
  const Eigen::VectorXd b = actuator_coefficients(ZonalActuator{{0.5, 1.0, 0.7, 1.0}}, J);
  const GramMatrix G = gram_matrix(b, p, J, 64);
  const TimeMesh mesh = control_mesh(p, 256);
  const EigenGroups groups(J);
  const ProductWeights pw(p.alpha, groups.lambdas, mesh);
  const std::vector<double> times(mesh.nodes.begin(), mesh.nodes.end() - 1);
  for (int s = 0; s < 5; ++s) {
    const SpectralField a(J, test::splitmix_vector(num_modes(J), 100 + s));
    const ControlSignal u = sample_control(a, b, p, times);
    const Eigen::VectorXd phiT = controlled_state(u, b, pw, groups, p.T).col(256);
    const Eigen::VectorXd Ga = G.entries * a.coeffs;
    EXPECT_LE((phiT - Ga).norm(), 1e-6 * Ga.norm()) << "sample " << s << " rel " << (phiT - Ga).norm() / Ga.norm();
  }
}

}  // namespace
}  // namespace fhum
