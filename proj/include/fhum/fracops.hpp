// Fractional solution operators in spectral coordinates.
//
// Per mode with eigenvalue l:
//   free state      P(t) a      = t^{a-1} E_{a,a}(l t^a) a
//   adjoint state   S(T - t) a  = E_{a,1}(l (T-t)^a) a
//   HUM control     u(t)        = sum_n a_n b_n (T-t)^{a-1} E_{a,a}(l_n (T-t)^a)
//   controlled      phi1_n(t)   = b_n int_0^t (t-s)^{a-1} E_{a,a}(l_n (t-s)^a) u(s) ds
//   Gram            G_mn        = b_m b_n int_0^T s^{2a-2} E_{a,a}(l_m s^a) E_{a,a}(l_n s^a) ds
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fhum/mlf.hpp"
#include "fhum/quadrature.hpp"
#include "fhum/spectral.hpp"
#include "fhum/timemesh.hpp"

namespace fhum {

struct FracParams {
  double alpha = 0.75;
  double T = 2.0;
  /// Enforce alpha in (2/3, 1] instead of (1/2, 1].
  bool strict = false;

  void validate() const {
    if (!(alpha > 0.5 && alpha <= 1.0)) {
      throw std::invalid_argument("alpha = " + std::to_string(alpha) +
                                  " rejected: need 1/2 < alpha <= 1, since s^{2 alpha - 2} is not integrable at 0 otherwise");
    }
    if (strict && !(alpha > 2.0 / 3.0)) {
      throw std::invalid_argument("alpha = " + std::to_string(alpha) + " rejected in strict mode: need 2/3 < alpha <= 1");
    }
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("final time T must be positive and finite");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (alpha <= 2.0 / 3.0) {
      w.push_back("alpha = " + std::to_string(alpha) +
                  " lies outside (2/3, 1]; the existence theory for the fixed point does not cover it (strict mode would reject it)");
    }
    return w;
  }
};

/// Control values on mesh nodes in [0, T); u behaves like (T-t)^{alpha-1} near T.
struct ControlSignal {
  std::vector<double> times;
  std::vector<double> values;
  double singularity_exponent = 0.0;

  void validate() const {
    if (times.size() != values.size() || times.empty()) throw std::invalid_argument("ControlSignal: size mismatch");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("ControlSignal: times must increase strictly");
      if (!std::isfinite(values[i])) throw std::invalid_argument("ControlSignal: non-finite value");
    }
  }
};

struct GramMatrix {
  Eigen::MatrixXd entries;
  Eigen::VectorXd eigenvalues;  // ascending
  double min_eigenvalue = 0.0;
  std::vector<ModeIndex> zero_modes;
};

/// Modes sharing an eigenvalue share every kernel; work is done per group.
struct EigenGroups {
  std::vector<double> lambdas;  // distinct, descending (0 first)
  std::vector<int> group_of_mode;

  explicit EigenGroups(int J) {
    std::map<int, int> idx;
    for (int j = 0; j <= J; ++j)
      for (int k = 0; k <= J; ++k) idx.emplace(j * j + k * k, 0);
    for (auto& [key, id] : idx) {
      id = static_cast<int>(lambdas.size());
      lambdas.push_back(-static_cast<double>(key));
    }
    group_of_mode.resize(num_modes(J));
    for (int n = 0; n < num_modes(J); ++n) {
      const ModeIndex m = mode_at(n, J);
      group_of_mode[n] = idx.at(m.j * m.j + m.k * m.k);
    }
  }
  int size() const { return static_cast<int>(lambdas.size()); }
  double max_abs_lambda() const { return -lambdas.back(); }
};

/// Rule for int_0^T s^{2a-2} F(s^a) ds = (1/a) int_0^{T^a} w^{1-1/a} F(w) dw,
/// returned in the variable w. The first panel carries the weight
/// w^{1-1/a} by Gauss-Jacobi; panels above it are geometric (ratio 4) so
/// F(w) = E(l w) with |l| up to lambda_scale is resolved.
struct PowerWeightRule {
  std::vector<double> w;
  std::vector<double> weight;
};

inline PowerWeightRule power_weight_rule(double alpha, double T, double lambda_scale, int n) {
  const double W = std::pow(T, alpha);
  std::vector<double> edges{W};
  while (edges.back() * lambda_scale > 1.0 && edges.size() < 40) edges.push_back(edges.back() / 4.0);
  const double p = 1.0 - 1.0 / alpha;
  PowerWeightRule r;
  const QuadratureRule first = gauss_jacobi_left(n, p, edges.back());
  for (std::size_t q = 0; q < first.size(); ++q) {
    r.w.push_back(first.nodes[q]);
    r.weight.push_back(first.weights[q] / alpha);
  }
  const QuadratureRule gl = gauss_legendre(n);
  for (std::size_t e = edges.size() - 1; e > 0; --e) {
    const QuadratureRule g = gl.mapped(edges[e], edges[e - 1]);
    for (std::size_t q = 0; q < g.size(); ++q) {
      r.w.push_back(g.nodes[q]);
      r.weight.push_back(g.weights[q] * std::pow(g.nodes[q], p) / alpha);
    }
  }
  return r;
}

inline SpectralField propagate_free(const SpectralField& y0, const FracParams& p, double t) {
  p.validate();
  if (!(t > 0.0 && t <= p.T)) throw std::invalid_argument("propagate_free: need 0 < t <= T (the free state is singular at t = 0)");
  const KernelFamily kf(p.alpha);
  const EigenGroups g(y0.order);
  std::vector<double> k(g.size());
  for (int i = 0; i < g.size(); ++i) k[i] = kf.kernel(g.lambdas[i], t);
  SpectralField out = y0;
  for (int n = 0; n < out.coeffs.size(); ++n) out.coeffs(n) *= k[g.group_of_mode[n]];
  return out;
}

inline SpectralField adjoint_state(const SpectralField& phi0, const FracParams& p, double t) {
  p.validate();
  if (!(t >= 0.0 && t <= p.T)) throw std::invalid_argument("adjoint_state: need 0 <= t <= T");
  const KernelFamily kf(p.alpha);
  const EigenGroups g(phi0.order);
  std::vector<double> k(g.size());
  for (int i = 0; i < g.size(); ++i) k[i] = kf.relaxation(g.lambdas[i], p.T - t);
  SpectralField out = phi0;
  for (int n = 0; n < out.coeffs.size(); ++n) out.coeffs(n) *= k[g.group_of_mode[n]];
  return out;
}

namespace detail {
/// c_g = sum over modes n in group g of a_n b_n.
inline std::vector<double> group_weights(const SpectralField& phi0, const Eigen::VectorXd& b, const EigenGroups& g) {
  if (b.size() != phi0.coeffs.size()) throw std::invalid_argument("actuator coefficients and field have different sizes");
  std::vector<double> c(g.size(), 0.0);
  for (int n = 0; n < b.size(); ++n) c[g.group_of_mode[n]] += phi0.coeffs(n) * b(n);
  return c;
}
}  // namespace detail

/// u(t) for t in [0, T), using a prebuilt kernel family and grouping.
inline double hum_control_value(const std::vector<double>& group_c, const EigenGroups& g, const KernelFamily& kf, double T, double t) {
  if (!(t < T)) throw std::invalid_argument("hum_control_value: need t < T (the control is singular at T)");
  double u = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    if (group_c[i] != 0.0) u += group_c[i] * kf.kernel(g.lambdas[i], T - t);
  }
  return u;
}

inline double hum_control_value(const SpectralField& phi0, const Eigen::VectorXd& b, const FracParams& p, double t) {
  p.validate();
  const EigenGroups g(phi0.order);
  return hum_control_value(detail::group_weights(phi0, b, g), g, KernelFamily(p.alpha), p.T, t);
}

inline ControlSignal sample_control(const SpectralField& phi0, const Eigen::VectorXd& b, const FracParams& p,
                                    const std::vector<double>& times) {
  p.validate();
  const EigenGroups g(phi0.order);
  const KernelFamily kf(p.alpha);
  const std::vector<double> c = detail::group_weights(phi0, b, g);
  ControlSignal u;
  u.times = times;
  u.singularity_exponent = p.alpha - 1.0;
  u.values.reserve(times.size());
  for (double t : times) {
    if (!(t >= 0.0 && t < p.T)) throw std::invalid_argument("sample_control: mesh must lie in [0, T)");
    u.values.push_back(hum_control_value(c, g, kf, p.T, t));
  }
  u.validate();
  return u;
}

/// Product-integration weights for int_0^{t_i} k(t_i - s) f(s) ds with f
/// piecewise linear on the mesh and k(s) = s^{a-1} E_{a,a}(l s^a).
///
/// Moments on an interval come from the closed-form primitives
///   F1(s) = s^a E_{a,a+1}(l s^a),  F2(s) = s^{a+1} E_{a,a+2}(l s^a);
/// with A = t_i - t_j, B = t_i - t_{j+1}, h = A - B:
///   I0 = F1(A) - F1(B),  I1 = F2(A) - F2(B) - h F1(B),
///   left = I0 - I1/h,    right = I1/h.
/// When h is small against B the differences cancel, so those intervals use
/// Gauss-Legendre on the smooth kernel instead.
///
/// Also provided: weights for sources modelled as g s^{a-1} and g s^{2a-2} on
/// [0, t_1] (the free state and its square near 0), and final-node weights for a
/// control singular at T: u(s) = (T-s)^{a-1} v(w) with w = (T-s)^a, v cubic
/// in w through four neighbouring samples (extrapolated on [t_{M-1}, T]).
/// In w the final-node integral is (1/a) int w^{1-1/a} E_{a,a}(l w) v(w) dw.
class ProductWeights {
 public:
  ProductWeights(double alpha, const std::vector<double>& lambdas, const TimeMesh& mesh)
      : alpha_(alpha), lambdas_(lambdas), mesh_(mesh) {
    mesh.validate();
    const int M = mesh.intervals();
    const std::size_t tri = static_cast<std::size_t>(M) * (M + 1) / 2;
    const KernelFamily kf(alpha);
    const MittagLeffler e_sq(alpha, 3.0 * alpha - 1.0);
    const MittagLeffler e_lin(alpha, 2.0 * alpha);
    const QuadratureRule gl = gauss_legendre(kFarNodes);
    const QuadratureRule gj_sq = gauss_jacobi_left(kFirstNodes, 2.0 * alpha - 2.0, mesh[1]);
    const QuadratureRule gj_lin = gauss_jacobi_left(kFirstNodes, alpha - 1.0, mesh[1]);
    const int G = static_cast<int>(lambdas.size());
    left_.assign(G, std::vector<double>(tri));
    right_.assign(G, std::vector<double>(tri));
    first_sq_.assign(G, std::vector<double>(M + 1, 0.0));
    first_lin_.assign(G, std::vector<double>(M + 1, 0.0));
    std::vector<double> F1(M + 1), F2(M + 1);
    for (int g = 0; g < G; ++g) {
      const double l = lambdas[g];
      for (int i = 1; i <= M; ++i) {
        const double ti = mesh[i];
        for (int j = 0; j <= i; ++j) {
          F1[j] = kf.primitive1(l, ti - mesh[j]);
          F2[j] = kf.primitive2(l, ti - mesh[j]);
        }
        for (int j = 0; j < i; ++j) {
          const double A = ti - mesh[j];
          const double B = ti - mesh[j + 1];
          const double h = A - B;
          double I0, I1;
          if (j + 1 < i && h < kFarRatio * B) {
            I0 = I1 = 0.0;
            const QuadratureRule q = gl.mapped(B, A);
            for (std::size_t r = 0; r < q.size(); ++r) {
              const double k = kf.kernel(l, q.nodes[r]);
              I0 += q.weights[r] * k;
              I1 += q.weights[r] * k * (A - q.nodes[r]);
            }
          } else {
            I0 = F1[j] - F1[j + 1];
            I1 = F2[j] - F2[j + 1] - h * F1[j + 1];
          }
          left_[g][index(i, j)] = I0 - I1 / h;
          right_[g][index(i, j)] = I1 / h;
        }
        if (i == 1) {
          // int_0^{t} k(t - s) s^{m-1} ds = Gamma(m) t^{a+m-1} E_{a,a+m}(l t^a), m = 2a-1 and m = a.
          const double ta = std::pow(ti, alpha);
          first_sq_[g][1] = std::tgamma(2.0 * alpha - 1.0) * std::pow(ti, 3.0 * alpha - 2.0) * e_sq(l * ta);
          first_lin_[g][1] = std::tgamma(alpha) * std::pow(ti, 2.0 * alpha - 1.0) * e_lin(l * ta);
        } else {
          double sq = 0.0, lin = 0.0;
          for (std::size_t r = 0; r < gj_sq.size(); ++r) sq += gj_sq.weights[r] * kf.kernel(l, ti - gj_sq.nodes[r]);
          for (std::size_t r = 0; r < gj_lin.size(); ++r) lin += gj_lin.weights[r] * kf.kernel(l, ti - gj_lin.nodes[r]);
          first_sq_[g][i] = sq;
          first_lin_[g][i] = lin;
        }
      }
    }
    if (M >= kStencil) build_final(kf);
  }

  double alpha() const { return alpha_; }
  const std::vector<double>& lambdas() const { return lambdas_; }
  const TimeMesh& mesh() const { return mesh_; }
  int groups() const { return static_cast<int>(lambdas_.size()); }

  /// Interval [t_j, t_{j+1}] seen from node i > j.
  double left(int g, int i, int j) const { return left_[g][index(i, j)]; }
  double right(int g, int i, int j) const { return right_[g][index(i, j)]; }
  /// int_0^{t_1} k(t_i - s) s^{2a-2} ds.
  double singular_first(int g, int i) const { return first_sq_[g][i]; }
  /// int_0^{t_1} k(t_i - s) s^{a-1} ds.
  double singular_first_linear(int g, int i) const { return first_lin_[g][i]; }
  /// Weight of sample u_j (j < M) in the final-node value of a control singular at T.
  double final_weight(int g, int j) const { return final_[g][j]; }
  bool has_final_weights() const { return !final_.empty(); }

 private:
  static constexpr double kFarRatio = 0.02;
  static constexpr int kFarNodes = 4;
  static constexpr int kFirstNodes = 12;
  static constexpr int kFinalNodes = 10;
  static constexpr int kStencil = 6;

  static std::size_t index(int i, int j) { return static_cast<std::size_t>(i) * (i - 1) / 2 + j; }

  void build_final(const KernelFamily& kf) {
    const int M = mesh_.intervals();
    const double T = mesh_.final_time();
    const double p = 1.0 - 1.0 / alpha_;
    std::vector<double> w(M), scale(M);
    for (int j = 0; j < M; ++j) {
      w[j] = std::pow(T - mesh_[j], alpha_);
      scale[j] = std::pow(T - mesh_[j], 1.0 - alpha_);
    }
    const QuadratureRule gl = gauss_legendre(kFinalNodes);
    final_.assign(lambdas_.size(), std::vector<double>(M, 0.0));
    for (int j = 0; j < M; ++j) {
      const double hi = w[j];
      const double lo = j + 1 < M ? w[j + 1] : 0.0;
      QuadratureRule q;
      if (j + 1 < M) {
        q = gl.mapped(lo, hi);
        for (std::size_t r = 0; r < q.size(); ++r) q.weights[r] *= std::pow(q.nodes[r], p);
      } else {
        q = gauss_jacobi_left(kFinalNodes, p, hi);
      }
      const int s0 = std::clamp(j - kStencil / 2 + 1, 0, M - kStencil);
      for (std::size_t r = 0; r < q.size(); ++r) {
        double basis[kStencil];
        for (int a = 0; a < kStencil; ++a) {
          double v = 1.0;
          for (int c = 0; c < kStencil; ++c) {
            if (c != a) v *= (q.nodes[r] - w[s0 + c]) / (w[s0 + a] - w[s0 + c]);
          }
          basis[a] = v * scale[s0 + a] * q.weights[r] / alpha_;
        }
        for (std::size_t g = 0; g < lambdas_.size(); ++g) {
          const double e = kf.e_alpha_alpha(lambdas_[g] * q.nodes[r]);
          for (int a = 0; a < kStencil; ++a) final_[g][s0 + a] += e * basis[a];
        }
      }
    }
  }

  double alpha_;
  std::vector<double> lambdas_;
  TimeMesh mesh_;
  std::vector<std::vector<double>> left_, right_, first_sq_, first_lin_, final_;
};

/// Mesh for control problems: graded with exponent 2/alpha toward both ends,
/// so w = t^a and w = (T-t)^a are squares of uniform grids near 0 and T.
inline TimeMesh control_mesh(const FracParams& p, int M) {
  p.validate();
  return TimeMesh::two_sided(p.T, M, 2.0 / p.alpha, 2.0 / p.alpha);
}

/// phi_1 per mode at every node of the weights' mesh (modes x nodes).
/// With samples on t_0..t_{M-1} only, u is taken singular at T like
/// (T - s)^{a-1} and the final node uses the final-node weights; with a sample
/// at t_M as well, u is piecewise linear throughout.
inline Eigen::MatrixXd controlled_state(const ControlSignal& u, const Eigen::VectorXd& b, const ProductWeights& pw,
                                       const EigenGroups& groups, double T) {
  u.validate();
  const TimeMesh& mesh = pw.mesh();
  const int M = mesh.intervals();
  const bool singular_tail = static_cast<int>(u.times.size()) == M;
  if (static_cast<int>(u.times.size()) < M) throw std::invalid_argument("controlled_state: control does not cover the evaluation mesh");
  for (int i = 0; i < M; ++i) {
    if (u.times[i] != mesh[i]) throw std::invalid_argument("controlled_state: control times must coincide with the mesh nodes");
  }
  if (singular_tail) {
    if (mesh[M] != T) throw std::invalid_argument("controlled_state: a control singular at T needs the mesh to end at T");
    if (!pw.has_final_weights()) throw std::invalid_argument("controlled_state: a control singular at T needs at least 6 intervals");
    if (std::abs(u.singularity_exponent - (pw.alpha() - 1.0)) > 1e-12) {
      throw std::invalid_argument("controlled_state: control singularity exponent must be alpha - 1");
    }
  }
  const int G = pw.groups();
  Eigen::MatrixXd conv = Eigen::MatrixXd::Zero(G, M + 1);
  for (int g = 0; g < G; ++g) {
    for (int i = 1; i <= M; ++i) {
      double s = 0.0;
      if (i == M && singular_tail) {
        for (int j = 0; j < M; ++j) s += pw.final_weight(g, j) * u.values[j];
      } else {
        for (int j = 0; j < i; ++j) s += pw.left(g, i, j) * u.values[j] + pw.right(g, i, j) * u.values[j + 1];
      }
      conv(g, i) = s;
    }
  }
  Eigen::MatrixXd out(b.size(), M + 1);
  for (int n = 0; n < b.size(); ++n) out.row(n) = b(n) * conv.row(groups.group_of_mode[n]);
  return out;
}

inline Eigen::MatrixXd controlled_state(const ControlSignal& u, const Eigen::VectorXd& b, const FracParams& p, const TimeMesh& mesh) {
  p.validate();
  const int J = static_cast<int>(std::lround(std::sqrt(static_cast<double>(b.size())))) - 1;
  if (num_modes(J) != b.size()) throw std::invalid_argument("controlled_state: coefficient vector length is not a square");
  const EigenGroups g(J);
  const ProductWeights pw(p.alpha, g.lambdas, mesh);
  return controlled_state(u, b, pw, g, p.T);
}

inline GramMatrix gram_matrix(const Eigen::VectorXd& b, const FracParams& p, int J, int quad_order) {
  p.validate();
  if (b.size() != num_modes(J)) throw std::invalid_argument("gram_matrix: coefficient vector does not match J");
  if (quad_order < 2) throw std::invalid_argument("gram_matrix: quad_order must be at least 2");
  const EigenGroups g(J);
  const KernelFamily kf(p.alpha);
  const PowerWeightRule r = power_weight_rule(p.alpha, p.T, g.max_abs_lambda(), quad_order);
  const int Q = static_cast<int>(r.w.size());
  Eigen::MatrixXd E(g.size(), Q);
  for (int i = 0; i < g.size(); ++i)
    for (int q = 0; q < Q; ++q) E(i, q) = kf.e_alpha_alpha(g.lambdas[i] * r.w[q]);
  const Eigen::Map<const Eigen::VectorXd> wq(r.weight.data(), Q);
  const Eigen::MatrixXd H = E * wq.asDiagonal() * E.transpose();
  const int N = num_modes(J);
  GramMatrix out;
  out.entries.resize(N, N);
  for (int m = 0; m < N; ++m) {
    for (int n = 0; n <= m; ++n) {
      const double v = b(m) * b(n) * H(g.group_of_mode[m], g.group_of_mode[n]);
      out.entries(m, n) = out.entries(n, m) = v;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.entries, Eigen::EigenvaluesOnly);
  out.eigenvalues = es.eigenvalues();
  out.min_eigenvalue = out.eigenvalues(0);
  const double bmax = b.cwiseAbs().maxCoeff();
  for (int n = 0; n < N; ++n) {
    if (std::abs(b(n)) <= 1e-14 * bmax) out.zero_modes.push_back(mode_at(n, J));
  }
  return out;
}

/// ||phi0||_G = ||u||_{L2(0,T)}, by quadrature of u^2 in the variable w = (T-t)^a.
inline double g_norm(const SpectralField& phi0, const Eigen::VectorXd& b, const FracParams& p, int quad_order) {
  p.validate();
  const EigenGroups g(phi0.order);
  const KernelFamily kf(p.alpha);
  const std::vector<double> c = detail::group_weights(phi0, b, g);
  const PowerWeightRule r = power_weight_rule(p.alpha, p.T, g.max_abs_lambda(), quad_order);
  double acc = 0.0;
  for (std::size_t q = 0; q < r.w.size(); ++q) {
    double v = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      if (c[i] != 0.0) v += c[i] * kf.e_alpha_alpha(g.lambdas[i] * r.w[q]);
    }
    acc += r.weight[q] * v * v;
  }
  return std::sqrt(acc);
}

/// Both sides of I^{1-a}[s^{a-1} E_{a,a}(l s^a)](t) = E_{a,1}(l t^a).
/// The left side splits at t/2: on [t/2, t] Gauss-Jacobi carries (t-s)^{-a};
/// on [0, t/2] the substitution w = s^a absorbs s^{a-1}, leaving
/// (1/a) int (t - w^{1/a})^{-a} E_{a,a}(l w) dw on geometric panels.
inline std::pair<double, double> riesz_check_identity(double alpha, double lambda, double t, int quad_order) {
  if (!(t > 0.0)) throw std::invalid_argument("riesz_check_identity: need t > 0");
  const KernelFamily kf(alpha);
  const double rhs = kf.relaxation(lambda, t);
  if (alpha == 1.0) return {kf.kernel(lambda, t), rhs};
  double lhs = 0.0;
  {
    const QuadratureRule q = gauss_jacobi(quad_order, -alpha, 0.0);
    const double half = 0.25 * t;  // [t/2, t] mapped from [-1, 1]
    const double scale = std::pow(half, 1.0 - alpha);
    for (std::size_t r = 0; r < q.size(); ++r) {
      const double s = 0.75 * t + half * q.nodes[r];
      lhs += scale * q.weights[r] * kf.kernel(lambda, s);
    }
  }
  {
    const double W = std::pow(0.5 * t, alpha);
    std::vector<double> edges{W};
    while (edges.back() * std::abs(lambda) > 1.0 && edges.size() < 40) edges.push_back(edges.back() / 4.0);
    edges.push_back(0.0);
    const QuadratureRule gl = gauss_legendre(quad_order);
    for (std::size_t e = edges.size() - 1; e > 0; --e) {
      const QuadratureRule q = gl.mapped(edges[e], edges[e - 1]);
      for (std::size_t r = 0; r < q.size(); ++r) {
        const double w = q.nodes[r];
        lhs += q.weights[r] / alpha * std::pow(t - std::pow(w, 1.0 / alpha), -alpha) * kf.e_alpha_alpha(lambda * w);
      }
    }
  }
  return {lhs / std::tgamma(1.0 - alpha), rhs};
}

}  // namespace fhum
