// Semilinear Volterra subsystem for phi2 and the (H0) / time-condition diagnostics.
//
// Per mode n:  phi2_n(t) = int_0^t (t-s)^{a-1} E_{a,a}(l_n (t-s)^a) f_n(s) ds,
// with f = N(base + phi2) evaluated pseudo-spectrally and base = phi0 + phi1.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fhum/fracops.hpp"
#include "fhum/spectral.hpp"
#include "fhum/timemesh.hpp"

namespace fhum {

enum class NonlinearKind { None, Logistic };

struct NonlinearSpec {
  NonlinearKind kind = NonlinearKind::None;
  double C = 1.0;
  double Kcap = 1.0;
  /// (H0) constants, used only by the diagnostics.
  double L = 0.0;
  double K = 0.0;

  void validate() const {
    if (kind == NonlinearKind::None) return;
    if (!(C > 0.0) || !(Kcap > 0.0)) throw std::invalid_argument("logistic nonlinearity needs C > 0 and Kcap > 0");
    if (!(L >= 0.0) || !(K >= 0.0)) throw std::invalid_argument("(H0) constants L and K must be non-negative");
    if (L == 0.0 && K == 0.0) throw std::invalid_argument("(H0) constants (L, K) must not both be zero for a nonlinear model");
  }
};

inline double apply_nonlinearity(double v, const NonlinearSpec& spec) {
  return spec.kind == NonlinearKind::None ? 0.0 : spec.C * v * (1.0 - v / spec.Kcap);
}

inline Eigen::MatrixXd apply_nonlinearity(const Eigen::MatrixXd& values, const NonlinearSpec& spec) {
  if (spec.kind == NonlinearKind::None) return Eigen::MatrixXd::Zero(values.rows(), values.cols());
  return values.unaryExpr([&](double v) { return apply_nonlinearity(v, spec); });
}

struct StateTrajectory {
  TimeMesh mesh;
  Eigen::MatrixXd coeffs;  // modes x nodes
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(int node, double time)
      : std::runtime_error("state blew up at node " + std::to_string(node) + " (t = " + std::to_string(time) + ")"),
        node_(node),
        time_(time) {}
  int node() const { return node_; }
  double time() const { return time_; }

 private:
  int node_;
  double time_;
};

/// Coefficients of N(y) for coefficients y.
inline Eigen::VectorXd nonlinear_coefficients(const Eigen::VectorXd& y, const NonlinearSpec& spec, const PseudoSpectralGrid& grid) {
  if (spec.kind == NonlinearKind::None) return Eigen::VectorXd::Zero(y.size());
  return grid.from_grid(apply_nonlinearity(grid.to_grid(y), spec));
}

/// P(EC)E product-integration march for phi2 on the weights' mesh.
///
/// base holds phi0 + phi1 per mode (modes x nodes). If singular_at_zero, the
/// base is not evaluated at t = 0 and on [0, t_1] the linear part C y of f is
/// modelled as C y(t_1) (s / t_1)^{a-1} and the rest as (s / t_1)^{2a-2};
/// otherwise f is piecewise linear from t_0.
/// Predictor: f_i = f_{i-1} on the last interval. Corrector: product
/// trapezoid with the predicted f_i.
inline StateTrajectory solve_phi2(const Eigen::MatrixXd& base, bool singular_at_zero, const NonlinearSpec& spec,
                                  const ProductWeights& pw, const EigenGroups& groups, const PseudoSpectralGrid& grid) {
  spec.validate();
  const TimeMesh& mesh = pw.mesh();
  const int M = mesh.intervals();
  const int N = static_cast<int>(base.rows());
  if (N != num_modes(grid.order())) throw std::invalid_argument("solve_phi2: source does not match the grid order");
  if (base.cols() != M + 1) throw std::invalid_argument("solve_phi2: source must be given at every mesh node");
  if (static_cast<int>(groups.group_of_mode.size()) != N) throw std::invalid_argument("solve_phi2: eigen groups do not match the source");
  StateTrajectory out{mesh, Eigen::MatrixXd::Zero(N, M + 1)};
  if (spec.kind == NonlinearKind::None) return out;
  for (int i = singular_at_zero ? 1 : 0; i <= M; ++i) {
    if (!base.col(i).allFinite()) throw std::invalid_argument("solve_phi2: source is not finite at node " + std::to_string(i));
  }

  const double t1 = mesh[1];
  const double scale_sq = std::pow(t1, 2.0 - 2.0 * pw.alpha());
  const double scale_lin = std::pow(t1, 1.0 - pw.alpha());
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(N, M + 1);
  Eigen::VectorXd f1_lin = Eigen::VectorXd::Zero(N), f1_sq = Eigen::VectorXd::Zero(N);
  auto first_interval = [&](int n, int i) {
    const int g = groups.group_of_mode[n];
    return pw.singular_first_linear(g, i) * scale_lin * f1_lin(n) + pw.singular_first(g, i) * scale_sq * f1_sq(n);
  };
  if (!singular_at_zero) f.col(0) = nonlinear_coefficients(base.col(0), spec, grid);
  const int start = singular_at_zero ? 1 : 0;

  auto history = [&](int i) {
    // Contributions of intervals [t_j, t_{j+1}] for j < i - 1.
    Eigen::VectorXd h = Eigen::VectorXd::Zero(N);
    for (int n = 0; n < N; ++n) {
      const int g = groups.group_of_mode[n];
      double s = 0.0;
      if (singular_at_zero && i > 1) s += first_interval(n, i);
      for (int j = start; j + 1 < i; ++j) s += pw.left(g, i, j) * f(n, j) + pw.right(g, i, j) * f(n, j + 1);
      h(n) = s;
    }
    return h;
  };
  auto check = [&](const Eigen::VectorXd& v, int i) {
    if (!v.allFinite() || v.cwiseAbs().maxCoeff() > 1e150) throw BlowUpError(i, mesh[i]);
  };

  for (int i = 1; i <= M; ++i) {
    Eigen::VectorXd phi(N);
    if (singular_at_zero && i == 1) {
      // Predict phi2(t_1) = 0, correct with the singular first-interval model.
      const Eigen::VectorXd fp = nonlinear_coefficients(base.col(1), spec, grid);
      check(fp, 1);
      f1_lin = spec.C * base.col(1);
      f1_sq = fp - f1_lin;
      for (int n = 0; n < N; ++n) phi(n) = first_interval(n, 1);
    } else {
      const Eigen::VectorXd h = history(i);
      Eigen::VectorXd pred(N);
      for (int n = 0; n < N; ++n) {
        const int g = groups.group_of_mode[n];
        pred(n) = h(n) + (pw.left(g, i, i - 1) + pw.right(g, i, i - 1)) * f(n, i - 1);
      }
      check(pred, i);
      const Eigen::VectorXd fp = nonlinear_coefficients(base.col(i) + pred, spec, grid);
      check(fp, i);
      for (int n = 0; n < N; ++n) {
        const int g = groups.group_of_mode[n];
        phi(n) = h(n) + pw.left(g, i, i - 1) * f(n, i - 1) + pw.right(g, i, i - 1) * fp(n);
      }
    }
    check(phi, i);
    out.coeffs.col(i) = phi;
    f.col(i) = nonlinear_coefficients(base.col(i) + phi, spec, grid);
    check(f.col(i), i);
    if (singular_at_zero && i == 1) {
      f1_lin = spec.C * (base.col(1) + phi);
      f1_sq = f.col(1) - f1_lin;
    }
  }
  return out;
}

/// Overload taking phi0 and phi1 separately and building the weights.
inline StateTrajectory solve_phi2(const Eigen::MatrixXd& phi0, const Eigen::MatrixXd& phi1, bool singular_at_zero,
                                  const NonlinearSpec& spec, const FracParams& p, const TimeMesh& mesh, int J, int P) {
  p.validate();
  const EigenGroups groups(J);
  const ProductWeights pw(p.alpha, groups.lambdas, mesh);
  const PseudoSpectralGrid grid(J, P);
  if (phi0.rows() != phi1.rows() || phi0.cols() != phi1.cols()) throw std::invalid_argument("solve_phi2: source shapes differ");
  Eigen::MatrixXd base = phi1;
  for (int i = singular_at_zero ? 1 : 0; i < base.cols(); ++i) base.col(i) += phi0.col(i);
  if (singular_at_zero) base.col(0).setConstant(std::numeric_limits<double>::quiet_NaN());
  return solve_phi2(base, singular_at_zero, spec, pw, groups, grid);
}

struct H0Report {
  /// max over nodes of ||Ny|| - (L ||y|| + K ||y||^2); positive means the constants are violated.
  double l2_margin = -std::numeric_limits<double>::infinity();
  int l2_node = -1;
  double sup_margin = -std::numeric_limits<double>::infinity();
  int sup_node = -1;
  bool l2_violated() const { return l2_margin > 0.0; }
  bool sup_violated() const { return sup_margin > 0.0; }
};

/// (H0) check on the state columns; non-finite columns (e.g. t = 0 with y0 != 0) are skipped.
inline H0Report h0_diagnostic(const Eigen::MatrixXd& states, const NonlinearSpec& spec, const PseudoSpectralGrid& grid) {
  H0Report r;
  for (int i = 0; i < states.cols(); ++i) {
    if (!states.col(i).allFinite()) continue;
    const Eigen::MatrixXd y = grid.to_grid(states.col(i));
    const Eigen::MatrixXd ny = apply_nonlinearity(y, spec);
    const double y2 = grid.l2_norm(y), n2 = grid.l2_norm(ny);
    const double l2 = n2 - (spec.L * y2 + spec.K * y2 * y2);
    const double ys = y.cwiseAbs().maxCoeff(), ns = ny.cwiseAbs().maxCoeff();
    const double sup = ns - (spec.L * ys + spec.K * ys * ys);
    if (l2 > r.l2_margin) {
      r.l2_margin = l2;
      r.l2_node = i;
    }
    if (sup > r.sup_margin) {
      r.sup_margin = sup;
      r.sup_node = i;
    }
  }
  return r;
}

struct GronwallCondition {
  double constant = 0.0;  // C(T, phi0)
  double value = 1.0;
  bool satisfied = true;
};

/// 1 - (3 M T^a K / Gamma(1+a)) exp(M L T^a / Gamma(1+a)) C(T, phi0).
inline GronwallCondition gronwall_time_condition(double Mconst, const NonlinearSpec& spec, const FracParams& p, double phi0_gnorm,
                                                 double y0_norm, double Bnorm) {
  p.validate();
  const double a = p.alpha, T = p.T, L = spec.L, K = spec.K, M = Mconst;
  const double ga = std::tgamma(a), g1a = std::tgamma(1.0 + a);
  GronwallCondition out;
  out.constant = (M * M * L * std::pow(T, 2 * a - 1) / (ga * ga)) *
                     (y0_norm * std::beta(a, a) + (T / a) * Bnorm * phi0_gnorm * std::beta(a, a + 1)) +
                 (3 * M * M * M * K * std::pow(T, 3 * a - 2) / (ga * ga * ga)) *
                     (y0_norm * y0_norm * std::beta(a, 2 * a - 1) +
                      (T * T / (a * a)) * Bnorm * Bnorm * phi0_gnorm * phi0_gnorm * std::beta(a, 2 * a + 1));
  out.value = K == 0.0 ? 1.0 : 1.0 - (3 * M * std::pow(T, a) * K / g1a) * std::exp(M * L * std::pow(T, a) / g1a) * out.constant;
  out.satisfied = out.value > 0.0;
  return out;
}

}  // namespace fhum
