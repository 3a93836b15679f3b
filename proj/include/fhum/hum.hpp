// Fixed-point HUM driver: solvability equation, iteration, closed-loop simulation.
//
// Unknown phi0 in coefficient space. Per iteration
//   u = b . S*(T - t) phi0,  phi1 = int P u,  phi2 = int P N(free + phi1 + phi2),
//   (M_w G + reg I) phi0_next = M_w c_d - M_w free(T) - M_w phi2(T),
// with M_w the mass matrix of omega and c_d the projected target extension.
// phi1(T) is G phi0; the time march supplies phi1 at interior nodes.
#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fhum/fode.hpp"
#include "fhum/fracops.hpp"
#include "fhum/spectral.hpp"
#include "fhum/timemesh.hpp"

namespace fhum {

struct HUMProblem {
  FracParams p;
  int J = 12;
  Rect omega;
  BoundarySegment gamma;
  Actuator act = ZonalActuator{};
  Function2D y0;
  Function2D y_d_ext;
  Function1D z_d;
  NonlinearSpec spec;
  TimeMesh mesh = control_mesh(FracParams{}, 256);
  int quad_order = 64;
  /// Pseudo-spectral grid size for the nonlinearity.
  int P = 26;
  /// Gauss-Legendre points per direction for projecting y0 and y_d_ext.
  int projection_points = 128;
  /// Samples on Gamma for the trace error.
  int trace_samples = 256;
  double eps = 1e-8;
  int max_iters = 50;
  double reg = 0.0;
  /// Singular values below rank_tol * largest are dropped in the solvability solve.
  /// Unset: (J+1)^2 * machine epsilon.
  std::optional<double> rank_tol;
  /// Damping: phi0_next = phi0 + relax * (K(phi0) - phi0), before acceleration.
  double relax = 1.0;
  /// Anderson mixing depth; 0 is the plain iteration phi0_next = K(phi0).
  int anderson_depth = 0;
  ErrorNorm norm = ErrorNorm::L2;
  /// Semigroup bound M of the Gronwall diagnostic.
  double semigroup_bound = 1.0;
  std::optional<SpectralField> phi0_init;

  void validate() const {
    p.validate();
    if (J < 0) throw std::invalid_argument("J must be non-negative");
    omega.validate();
    gamma.validate();
    if (!gamma.lies_on_boundary_of(omega)) {
      throw std::invalid_argument("Gamma must lie on an edge of omega that is also an edge of the square");
    }
    validate_actuator(act);
    if (!y0 || !y_d_ext || !z_d) throw std::invalid_argument("y0, y_d_ext and z_d must all be set");
    spec.validate();
    mesh.validate();
    if (std::abs(mesh.final_time() - p.T) > 1e-12 * p.T) throw std::invalid_argument("time mesh must end at T");
    if (mesh.intervals() < 8) throw std::invalid_argument("time mesh needs at least 8 intervals");
    if (quad_order < 2) throw std::invalid_argument("quad_order must be at least 2");
    if (P < 2 * (J + 1)) throw std::invalid_argument("P must be at least 2(J+1)");
    if (projection_points < J + 1) throw std::invalid_argument("projection_points must be at least J+1");
    if (trace_samples < 8) throw std::invalid_argument("trace_samples must be at least 8");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (!(reg >= 0.0)) throw std::invalid_argument("reg must be non-negative");
    if (rank_tol && !(*rank_tol >= 0.0 && *rank_tol < 1.0)) throw std::invalid_argument("rank_tol must lie in [0, 1)");
    if (anderson_depth < 0) throw std::invalid_argument("anderson_depth must be non-negative");
    if (!(relax > 0.0 && relax <= 1.0)) throw std::invalid_argument("relax must lie in (0, 1]");
    if (!(semigroup_bound > 0.0)) throw std::invalid_argument("semigroup_bound must be positive");
    if (phi0_init && phi0_init->order != J) throw std::invalid_argument("phi0_init has the wrong order");
  }
};

struct RunReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  std::string stop_reason;
  double gram_min_eig = 0.0;
  double gram_max_eig = 0.0;
  std::vector<ModeIndex> zero_modes;
  int effective_rank = 0;
  double error_omega = 0.0;
  double error_gamma = 0.0;
  /// ||M_w (y(T) - c_d)|| / ||M_w c_d||: the quantity the solvability solve drives to zero.
  double omega_projection_error = 0.0;
  double control_energy = 0.0;
  double duality_gap = 0.0;
  double gronwall_value = 1.0;
  double gronwall_constant = 0.0;
  bool gronwall_satisfied = true;
  double h0_margin = 0.0;
  int h0_node = -1;
  double h0_sup_margin = 0.0;
  int h0_sup_node = -1;
  double projection_residual_y0 = 0.0;
  double projection_residual_target = 0.0;
  double trace_inconsistency = 0.0;
  std::vector<std::string> warnings;
};

class UncontrollableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClSolution {
  Eigen::VectorXd x;
  int rank = 0;
};

/// Minimum-norm least-squares solution of (M_w G + reg I) x = rhs. Singular values
/// below rank_tol times the largest are dropped; unset means size * machine epsilon.
inline ClSolution solve_cl(const Eigen::MatrixXd& G, const Eigen::MatrixXd& M_omega, const Eigen::VectorXd& rhs, double reg,
                           std::optional<double> rank_tol = std::nullopt) {
  if (G.rows() != G.cols() || M_omega.rows() != M_omega.cols() || G.rows() != M_omega.rows() || rhs.size() != G.rows()) {
    throw std::invalid_argument("solve_cl: dimension mismatch");
  }
  Eigen::MatrixXd A = M_omega * G;
  A.diagonal().array() += reg;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(rank_tol.value_or(G.rows() * std::numeric_limits<double>::epsilon()));
  cod.compute(A);
  ClSolution out;
  out.rank = static_cast<int>(cod.rank());
  if (out.rank == 0) {
    throw UncontrollableError("solvability operator has rank 0: the actuator cannot influence omega, so the image of the control map is not dense there");
  }
  out.x = cod.solve(rhs);
  return out;
}

/// M_w c_d and M_w free(T).
struct Targets {
  Eigen::VectorXd rhs_base;
  Eigen::VectorXd Lo;
  SpectralField target;
  SpectralField y0;
  double residual_target = 0.0;
  double residual_y0 = 0.0;
};

inline Targets assemble_targets(const HUMProblem& prob) {
  prob.validate();
  const Eigen::MatrixXd Mw = mass_matrix(prob.omega, prob.J);
  const Projection yd = project_function(prob.y_d_ext, prob.J, prob.projection_points);
  const Projection y0 = project_function(prob.y0, prob.J, prob.projection_points);
  Targets t;
  t.target = yd.field;
  t.y0 = y0.field;
  t.residual_target = yd.residual;
  t.residual_y0 = y0.residual;
  t.rhs_base = Mw * yd.field.coeffs;
  t.Lo = Mw * propagate_free(y0.field, prob.p, prob.p.T).coeffs;
  return t;
}

struct ClosedLoop {
  SpectralField final_state;
  StateTrajectory trajectory;  // full state y = free + phi1 + phi2
  ControlSignal control;
  double error_omega = 0.0;
  double error_gamma = 0.0;
  double omega_projection_error = 0.0;
};

/// Precomputed operators for one problem; iterate() and simulate() reuse them.
class HUMSolver {
 public:
  explicit HUMSolver(HUMProblem prob)
      : prob_(std::move(prob)),
        groups_((prob_.validate(), prob_.J)),
        b_(actuator_coefficients(prob_.act, prob_.J)),
        gram_(gram_matrix(b_, prob_.p, prob_.J, prob_.quad_order)),
        Mw_(mass_matrix(prob_.omega, prob_.J)),
        targets_(assemble_targets(prob_)),
        pw_(prob_.p.alpha, groups_.lambdas, prob_.mesh),
        grid_(prob_.J, prob_.P) {
    const int M = prob_.mesh.intervals();
    singular_start_ = targets_.y0.coeffs.cwiseAbs().maxCoeff() > 0.0;
    free_.resize(num_modes(prob_.J), M + 1);
    free_.col(0).setConstant(singular_start_ ? std::numeric_limits<double>::quiet_NaN() : 0.0);
    for (int i = 1; i <= M; ++i) free_.col(i) = propagate_free(targets_.y0, prob_.p, prob_.mesh[i]).coeffs;
    times_.assign(prob_.mesh.nodes.begin(), prob_.mesh.nodes.end() - 1);
  }

  const HUMProblem& problem() const { return prob_; }
  const GramMatrix& gram() const { return gram_; }
  const Eigen::VectorXd& actuator() const { return b_; }
  const Targets& targets() const { return targets_; }

  ControlSignal control(const SpectralField& phi0) const { return sample_control(phi0, b_, prob_.p, times_); }

  /// phi1 and phi2 trajectories for a given phi0.
  std::pair<Eigen::MatrixXd, StateTrajectory> propagate(const SpectralField& phi0) const {
    const ControlSignal u = control(phi0);
    Eigen::MatrixXd phi1 = controlled_state(u, b_, pw_, groups_, prob_.p.T);
    // At T the Gram matrix is the phi0 -> phi1(T) map; the march's final node is kept for duality_gap.
    phi1.col(phi1.cols() - 1) = gram_.entries * phi0.coeffs;
    const Eigen::MatrixXd base = free_ + phi1;
    StateTrajectory phi2 = solve_phi2(base, singular_start_, prob_.spec, pw_, groups_, grid_);
    return {std::move(phi1), std::move(phi2)};
  }

  /// One application of the fixed-point map K.
  SpectralField apply_map(const SpectralField& phi0, int* rank = nullptr) const {
    const auto [phi1, phi2] = propagate(phi0);
    const Eigen::VectorXd ON = Mw_ * phi2.coeffs.col(phi2.coeffs.cols() - 1);
    const ClSolution s = solve_cl(gram_.entries, Mw_, targets_.rhs_base - targets_.Lo - ON, prob_.reg, prob_.rank_tol);
    if (rank) *rank = s.rank;
    return {prob_.J, s.x};
  }

  double g_norm_of(const Eigen::VectorXd& a) const { return std::sqrt(std::max(0.0, a.dot(gram_.entries * a))); }

  /// Stops when ||K(phi0) - phi0||_G <= eps and returns K(phi0).
  std::pair<SpectralField, RunReport> fixed_point() const {
    RunReport rep;
    fill_static(rep);
    const int N = num_modes(prob_.J);
    Eigen::VectorXd x = prob_.phi0_init ? prob_.phi0_init->coeffs : Eigen::VectorXd::Zero(N);
    Eigen::VectorXd Kx = x;
    std::deque<Eigen::VectorXd> dx, df;
    Eigen::VectorXd x_prev, f_prev;
    rep.stop_reason = "max_iters";
    for (int k = 1; k <= prob_.max_iters; ++k) {
      Kx = apply_map({prob_.J, x}, &rep.effective_rank).coeffs;
      const Eigen::VectorXd f = Kx - x;
      const double res = g_norm_of(f);
      rep.residual_history.push_back(res);
      rep.iterations = k;
      if (!std::isfinite(res)) {
        rep.stop_reason = "non-finite residual";
        break;
      }
      if (res <= prob_.eps) {
        rep.converged = true;
        rep.stop_reason = "converged";
        break;
      }
      if (k == prob_.max_iters) break;
      Eigen::VectorXd next = x + prob_.relax * f;
      if (prob_.anderson_depth > 0) {
        if (k > 1) {
          dx.push_back(x - x_prev);
          df.push_back(f - f_prev);
          if (static_cast<int>(dx.size()) > prob_.anderson_depth) {
            dx.pop_front();
            df.pop_front();
          }
        }
        x_prev = x;
        f_prev = f;
        if (!dx.empty()) {
          Eigen::MatrixXd X(N, dx.size()), F(N, df.size());
          for (std::size_t i = 0; i < dx.size(); ++i) {
            X.col(i) = dx[i];
            F.col(i) = df[i];
          }
          const Eigen::VectorXd gamma = F.completeOrthogonalDecomposition().solve(f);
          next -= (X + prob_.relax * F) * gamma;
        }
      }
      x = std::move(next);
    }
    return {SpectralField(prob_.J, Kx), rep};
  }

  ClosedLoop simulate(const SpectralField& phi0) const {
    if (!phi0.coeffs.allFinite()) throw std::invalid_argument("simulate_closed_loop: phi0 is not finite");
    const auto [phi1, phi2] = propagate(phi0);
    ClosedLoop out;
    out.control = control(phi0);
    out.trajectory = StateTrajectory{prob_.mesh, free_ + phi1 + phi2.coeffs};
    const int M = prob_.mesh.intervals();
    out.final_state = SpectralField(prob_.J, out.trajectory.coeffs.col(M));
    out.error_omega = error_on_region(out.final_state, targets_.target, prob_.omega, prob_.norm);
    out.error_gamma = error_on_segment(out.final_state, prob_.z_d, prob_.gamma, prob_.trace_samples);
    const double denom = targets_.rhs_base.norm();
    const double num = (Mw_ * out.final_state.coeffs - targets_.rhs_base).norm();
    out.omega_projection_error = denom > 0.0 ? num / denom : num;
    return out;
  }

  /// fixed_point, closed-loop simulation and all diagnostics.
  std::tuple<SpectralField, ClosedLoop, RunReport> run() const {
    auto [phi, rep] = fixed_point();
    ClosedLoop cl = simulate(phi);
    rep.error_omega = cl.error_omega;
    rep.error_gamma = cl.error_gamma;
    rep.omega_projection_error = cl.omega_projection_error;
    rep.control_energy = g_norm(phi, b_, prob_.p, prob_.quad_order);
    const Eigen::VectorXd Ga = gram_.entries * phi.coeffs;
    const Eigen::VectorXd phi1T = controlled_final(phi);
    rep.duality_gap = Ga.norm() > 0.0 ? (phi1T - Ga).norm() / Ga.norm() : (phi1T - Ga).norm();
    const GronwallCondition gc = gronwall_time_condition(prob_.semigroup_bound, prob_.spec, prob_.p, g_norm_of(phi.coeffs),
                                                         targets_.y0.coeffs.norm(), b_.norm());
    rep.gronwall_value = gc.value;
    rep.gronwall_constant = gc.constant;
    rep.gronwall_satisfied = gc.satisfied;
    if (!gc.satisfied) rep.warnings.push_back("time condition of the existence theorem is not satisfied for these constants");
    if (prob_.spec.kind != NonlinearKind::None) {
      const H0Report h0 = h0_diagnostic(cl.trajectory.coeffs, prob_.spec, grid_);
      rep.h0_margin = h0.l2_margin;
      rep.h0_node = h0.l2_node;
      rep.h0_sup_margin = h0.sup_margin;
      rep.h0_sup_node = h0.sup_node;
      if (h0.l2_violated()) rep.warnings.push_back("(H0) bound with the given L, K is violated in the L2 norm");
    }
    return {phi, cl, rep};
  }

 private:
  Eigen::VectorXd controlled_final(const SpectralField& phi0) const {
    return controlled_state(control(phi0), b_, pw_, groups_, prob_.p.T).col(prob_.mesh.intervals());
  }

  void fill_static(RunReport& rep) const {
    rep.gram_min_eig = gram_.min_eigenvalue;
    rep.gram_max_eig = gram_.eigenvalues.size() ? gram_.eigenvalues(gram_.eigenvalues.size() - 1) : 0.0;
    rep.zero_modes = gram_.zero_modes;
    rep.projection_residual_y0 = targets_.residual_y0;
    rep.projection_residual_target = targets_.residual_target;
    const QuadratureRule r = segment_rule(prob_.gamma, prob_.trace_samples);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto [x, y] = prob_.gamma.point(r.nodes[i]);
      const double d = prob_.y_d_ext(x, y) - prob_.z_d(r.nodes[i]);
      acc += r.weights[i] * d * d;
    }
    rep.trace_inconsistency = std::sqrt(acc);
    for (const std::string& w : prob_.p.warnings()) rep.warnings.push_back(w);
  }

  HUMProblem prob_;
  EigenGroups groups_;
  Eigen::VectorXd b_;
  GramMatrix gram_;
  Eigen::MatrixXd Mw_;
  Targets targets_;
  ProductWeights pw_;
  PseudoSpectralGrid grid_;
  Eigen::MatrixXd free_;
  std::vector<double> times_;
  bool singular_start_ = false;
};

inline std::pair<SpectralField, RunReport> fixed_point(const HUMProblem& prob) { return HUMSolver(prob).fixed_point(); }

inline ClosedLoop simulate_closed_loop(const HUMProblem& prob, const SpectralField& phi0) { return HUMSolver(prob).simulate(phi0); }

}  // namespace fhum
