// Neumann-Laplacian eigenbasis on the square (0, pi)^2.
//
// Modes xi_{jk}(x, y) = c_j c_k cos(jx) cos(ky), c_0 = 1/sqrt(pi),
// c_j = sqrt(2/pi), eigenvalue -(j^2 + k^2). Coefficient vectors of order J
// have (J+1)^2 entries in row-major (j, k) order: n = j (J+1) + k.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fhum/quadrature.hpp"

namespace fhum {

using Function2D = std::function<double(double, double)>;
using Function1D = std::function<double(double)>;

struct ModeIndex {
  int j = 0;
  int k = 0;
};

inline int num_modes(int J) { return (J + 1) * (J + 1); }
inline int linear_index(ModeIndex m, int J) { return m.j * (J + 1) + m.k; }
inline ModeIndex mode_at(int n, int J) { return {n / (J + 1), n % (J + 1)}; }

struct SpectralField {
  int order = 0;
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(1);

  SpectralField() = default;
  SpectralField(int J, Eigen::VectorXd c) : order(J), coeffs(std::move(c)) { validate(); }

  static SpectralField zero(int J) { return {J, Eigen::VectorXd::Zero(num_modes(J))}; }
  static SpectralField unit(ModeIndex m, int J) {
    SpectralField f = zero(J);
    f.coeffs(linear_index(m, J)) = 1.0;
    return f;
  }

  double& operator[](ModeIndex m) { return coeffs(linear_index(m, order)); }
  double operator[](ModeIndex m) const { return coeffs(linear_index(m, order)); }

  void validate() const {
    if (order < 0) throw std::invalid_argument("SpectralField: negative order");
    if (coeffs.size() != num_modes(order)) throw std::invalid_argument("SpectralField: length must be (J+1)^2");
    if (!coeffs.allFinite()) throw std::invalid_argument("SpectralField: non-finite coefficient");
  }
};

struct Rect {
  double x0 = 0.0, x1 = std::numbers::pi, y0 = 0.0, y1 = std::numbers::pi;

  void validate() const {
    const double pi = std::numbers::pi;
    if (!(0.0 <= x0 && x0 < x1 && x1 <= pi && 0.0 <= y0 && y0 < y1 && y1 <= pi)) {
      throw std::invalid_argument("Rect: need 0 <= x0 < x1 <= pi and 0 <= y0 < y1 <= pi");
    }
  }
  double area() const { return (x1 - x0) * (y1 - y0); }
  static Rect whole() { return {}; }
};

enum class Edge { West, East, South, North };

inline const char* edge_name(Edge e) {
  switch (e) {
    case Edge::West: return "west";
    case Edge::East: return "east";
    case Edge::South: return "south";
    case Edge::North: return "north";
  }
  return "?";
}

inline Edge parse_edge(const std::string& s) {
  if (s == "west") return Edge::West;
  if (s == "east") return Edge::East;
  if (s == "south") return Edge::South;
  if (s == "north") return Edge::North;
  throw std::invalid_argument("unknown edge '" + s + "' (expected west|east|south|north)");
}

/// A piece of one side of the square; lo/hi parametrize the coordinate that
/// varies along the edge (y on west/east, x on south/north).
struct BoundarySegment {
  Edge edge = Edge::West;
  double lo = 0.0, hi = std::numbers::pi;

  void validate() const {
    if (!(0.0 <= lo && lo < hi && hi <= std::numbers::pi)) {
      throw std::invalid_argument("BoundarySegment: need 0 <= lo < hi <= pi");
    }
  }
  double length() const { return hi - lo; }

  std::pair<double, double> point(double s) const {
    const double pi = std::numbers::pi;
    switch (edge) {
      case Edge::West: return {0.0, s};
      case Edge::East: return {pi, s};
      case Edge::South: return {s, 0.0};
      case Edge::North: return {s, pi};
    }
    return {0.0, 0.0};
  }

  /// True when the segment lies on an edge of `r` that is also an edge of the square.
  bool lies_on_boundary_of(const Rect& r) const {
    const double pi = std::numbers::pi;
    switch (edge) {
      case Edge::West: return r.x0 == 0.0 && r.y0 <= lo && hi <= r.y1;
      case Edge::East: return r.x1 == pi && r.y0 <= lo && hi <= r.y1;
      case Edge::South: return r.y0 == 0.0 && r.x0 <= lo && hi <= r.x1;
      case Edge::North: return r.y1 == pi && r.x0 <= lo && hi <= r.x1;
    }
    return false;
  }
};

struct ZonalActuator {
  Rect D;
};
struct PointActuator {
  double b1 = 0.0, b2 = 0.0;
};
using Actuator = std::variant<ZonalActuator, PointActuator>;

inline void validate_actuator(const Actuator& act) {
  if (const auto* z = std::get_if<ZonalActuator>(&act)) {
    z->D.validate();
  } else {
    const auto& p = std::get<PointActuator>(act);
    const double pi = std::numbers::pi;
    if (!(0.0 <= p.b1 && p.b1 <= pi && 0.0 <= p.b2 && p.b2 <= pi)) {
      throw std::invalid_argument("PointActuator: point must lie in the closed square");
    }
  }
}

inline double eigenvalue(ModeIndex m) { return -static_cast<double>(m.j * m.j + m.k * m.k); }

inline Eigen::VectorXd eigenvalues(int J) {
  Eigen::VectorXd l(num_modes(J));
  for (int n = 0; n < l.size(); ++n) l(n) = eigenvalue(mode_at(n, J));
  return l;
}

inline double basis_norm(int j) { return j == 0 ? 1.0 / std::sqrt(std::numbers::pi) : std::sqrt(2.0 / std::numbers::pi); }

inline double eval_basis(ModeIndex m, double x, double y) {
  return basis_norm(m.j) * basis_norm(m.k) * std::cos(m.j * x) * std::cos(m.k * y);
}

namespace detail {
/// sin(n x) with exact zeros at x = 0 and x = pi.
inline double sin_multiple(int n, double x) {
  if (n == 0 || x == 0.0 || x == std::numbers::pi) return 0.0;
  return std::sin(n * x);
}
}  // namespace detail

/// Closed-form int_a^b cos(jx) cos(j2 x) dx.
inline double cos_overlap_1d(int j, int j2, double a, double b) {
  if (j == 0 && j2 == 0) return b - a;
  if (j == j2) {
    return 0.5 * (b - a) + (detail::sin_multiple(2 * j, b) - detail::sin_multiple(2 * j, a)) / (4.0 * j);
  }
  const int d = j - j2;
  const int s = j + j2;
  return (detail::sin_multiple(d, b) - detail::sin_multiple(d, a)) / (2.0 * d) +
         (detail::sin_multiple(s, b) - detail::sin_multiple(s, a)) / (2.0 * s);
}

/// int_a^b cos(jx) dx.
inline double cos_integral_1d(int j, double a, double b) {
  if (j == 0) return b - a;
  return (detail::sin_multiple(j, b) - detail::sin_multiple(j, a)) / j;
}

/// Entry (m, n) = int_region xi_m xi_n.
inline Eigen::MatrixXd mass_matrix(const Rect& region, int J) {
  region.validate();
  Eigen::MatrixXd X(J + 1, J + 1), Y(J + 1, J + 1);
  for (int a = 0; a <= J; ++a) {
    for (int b = 0; b <= a; ++b) {
      const double nab = basis_norm(a) * basis_norm(b);
      X(a, b) = X(b, a) = nab * cos_overlap_1d(a, b, region.x0, region.x1);
      Y(a, b) = Y(b, a) = nab * cos_overlap_1d(a, b, region.y0, region.y1);
    }
  }
  const int N = num_modes(J);
  Eigen::MatrixXd M(N, N);
  for (int m = 0; m < N; ++m) {
    const ModeIndex p = mode_at(m, J);
    for (int n = 0; n < N; ++n) {
      const ModeIndex q = mode_at(n, J);
      M(m, n) = X(p.j, q.j) * Y(p.k, q.k);
    }
  }
  return M;
}

/// b_n = int_D xi_n (zonal) or xi_n(b1, b2) (pointwise).
inline Eigen::VectorXd actuator_coefficients(const Actuator& act, int J) {
  validate_actuator(act);
  Eigen::VectorXd b(num_modes(J));
  for (int n = 0; n < b.size(); ++n) {
    const ModeIndex m = mode_at(n, J);
    if (const auto* z = std::get_if<ZonalActuator>(&act)) {
      b(n) = basis_norm(m.j) * basis_norm(m.k) * cos_integral_1d(m.j, z->D.x0, z->D.x1) *
             cos_integral_1d(m.k, z->D.y0, z->D.y1);
    } else {
      const auto& p = std::get<PointActuator>(act);
      b(n) = eval_basis(m, p.b1, p.b2);
    }
  }
  return b;
}

/// Node family of a tensor grid on the square.
///   GaussLegendre: clustered at the edges; used to project non-smooth data.
///   Midpoint: x_p = pi (p + 1/2) / P, weights pi / P. Exact for cos(m x)
///             with m < 2P, so transforms of band-limited fields are exact.
enum class GridKind { GaussLegendre, Midpoint };

/// Tensor grid on the square with the 1D basis tabulated:
/// V(p, j) = c_j cos(j x_p). Grid values G(p, q) sit at (x_p, x_q).
class PseudoSpectralGrid {
 public:
  PseudoSpectralGrid(int J, int P, GridKind kind = GridKind::Midpoint) : J_(J), P_(P) {
    if (P < 2 * (J + 1)) {
      throw std::invalid_argument("pseudo-spectral grid: P = " + std::to_string(P) + " < 2(J+1) = " +
                                  std::to_string(2 * (J + 1)) + " would alias");
    }
    if (kind == GridKind::GaussLegendre) {
      const QuadratureRule g = gauss_legendre(P).mapped(0.0, std::numbers::pi);
      nodes_ = Eigen::Map<const Eigen::VectorXd>(g.nodes.data(), P);
      weights_ = Eigen::Map<const Eigen::VectorXd>(g.weights.data(), P);
    } else {
      nodes_.resize(P);
      for (int p = 0; p < P; ++p) nodes_(p) = std::numbers::pi * (p + 0.5) / P;
      weights_ = Eigen::VectorXd::Constant(P, std::numbers::pi / P);
    }
    V_.resize(P, J + 1);
    for (int p = 0; p < P; ++p)
      for (int j = 0; j <= J; ++j) V_(p, j) = basis_norm(j) * std::cos(j * nodes_(p));
    WV_ = weights_.asDiagonal() * V_;
  }

  int order() const { return J_; }
  int size() const { return P_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  Eigen::MatrixXd to_grid(const Eigen::VectorXd& coeffs) const {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(coeffs.data(), J_ + 1, J_ + 1);
    return V_ * A * V_.transpose();
  }

  Eigen::VectorXd from_grid(const Eigen::MatrixXd& values) const {
    const Eigen::MatrixXd A = WV_.transpose() * values * WV_;
    Eigen::VectorXd out(num_modes(J_));
    for (int j = 0; j <= J_; ++j)
      for (int k = 0; k <= J_; ++k) out(j * (J_ + 1) + k) = A(j, k);
    return out;
  }

  /// Quadrature L2 norm of grid values over the square.
  double l2_norm(const Eigen::MatrixXd& values) const {
    return std::sqrt((weights_.transpose() * values.cwiseAbs2() * weights_).value());
  }

  Eigen::MatrixXd sample(const Function2D& f) const {
    Eigen::MatrixXd v(P_, P_);
    for (int p = 0; p < P_; ++p)
      for (int q = 0; q < P_; ++q) v(p, q) = f(nodes_(p), nodes_(q));
    return v;
  }

 private:
  int J_;
  int P_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd V_;
  Eigen::MatrixXd WV_;
};

struct Projection {
  SpectralField field;
  /// Quadrature estimate of ||f - Pi_J f||_{L2}.
  double residual = 0.0;
};

/// Coefficients <f, xi_n> by P x P tensor Gauss-Legendre quadrature.
inline Projection project_function(const Function2D& f, int J, int P) {
  const PseudoSpectralGrid grid(J, P, GridKind::GaussLegendre);
  const Eigen::MatrixXd v = grid.sample(f);
  if (!v.allFinite()) throw std::invalid_argument("project_function: non-finite sample");
  Projection out{SpectralField(J, grid.from_grid(v)), 0.0};
  out.residual = grid.l2_norm(v - grid.to_grid(out.field.coeffs));
  return out;
}

inline double eval_field(const SpectralField& fld, double x, double y) {
  const int J = fld.order;
  Eigen::VectorXd cx(J + 1), cy(J + 1);
  for (int j = 0; j <= J; ++j) {
    cx(j) = basis_norm(j) * std::cos(j * x);
    cy(j) = basis_norm(j) * std::cos(j * y);
  }
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(fld.coeffs.data(), J + 1, J + 1);
  return cx.dot(A * cy);
}

inline std::vector<double> eval_field(const SpectralField& fld, const std::vector<std::pair<double, double>>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& [x, y] : points) out.push_back(eval_field(fld, x, y));
  return out;
}

/// Gauss-Legendre sample positions (edge parameter) along a segment.
inline QuadratureRule segment_rule(const BoundarySegment& seg, int S) {
  seg.validate();
  return gauss_legendre(S).mapped(seg.lo, seg.hi);
}

inline std::vector<double> trace_values(const SpectralField& fld, const BoundarySegment& seg, int S) {
  if (S < 2) throw std::invalid_argument("trace_values: need at least 2 samples");
  const QuadratureRule r = segment_rule(seg, S);
  std::vector<double> out;
  out.reserve(S);
  for (double s : r.nodes) {
    const auto [x, y] = seg.point(s);
    out.push_back(eval_field(fld, x, y));
  }
  return out;
}

enum class ErrorNorm { L2, H1Weighted };

inline double error_on_region(const SpectralField& a, const SpectralField& b, const Rect& region, ErrorNorm norm = ErrorNorm::L2) {
  if (a.order != b.order) throw std::invalid_argument("error_on_region: fields have different orders");
  Eigen::VectorXd d = a.coeffs - b.coeffs;
  if (norm == ErrorNorm::H1Weighted) {
    const Eigen::VectorXd l = eigenvalues(a.order);
    for (int n = 0; n < d.size(); ++n) d(n) *= std::sqrt(1.0 - l(n));
  }
  const double q = d.dot(mass_matrix(region, a.order) * d);
  return std::sqrt(std::max(q, 0.0));
}

/// L2(seg) norm of trace(fld) - target, target indexed by the edge parameter.
inline double error_on_segment(const SpectralField& fld, const Function1D& target, const BoundarySegment& seg, int S) {
  if (S < 8) throw std::invalid_argument("error_on_segment: need at least 8 samples");
  const QuadratureRule r = segment_rule(seg, S);
  const std::vector<double> tr = trace_values(fld, seg, S);
  double acc = 0.0;
  for (int i = 0; i < S; ++i) {
    const double e = tr[i] - target(r.nodes[i]);
    acc += r.weights[i] * e * e;
  }
  return std::sqrt(acc);
}

/// Grid dump: "# J=<J> P=<P>" then P^2 lines "x y value", x outer, on the
/// uniform grid x_i = pi i / (P-1).
inline void write_grid_dump(std::ostream& os, const SpectralField& fld, int P) {
  if (P < 2) throw std::invalid_argument("write_grid_dump: P must be at least 2");
  const auto old_prec = os.precision(17);
  os << "# J=" << fld.order << " P=" << P << '\n';
  for (int i = 0; i < P; ++i) {
    const double x = std::numbers::pi * i / (P - 1);
    for (int j = 0; j < P; ++j) {
      const double y = std::numbers::pi * j / (P - 1);
      os << x << ' ' << y << ' ' << eval_field(fld, x, y) << '\n';
    }
  }
  os.precision(old_prec);
}

}  // namespace fhum
