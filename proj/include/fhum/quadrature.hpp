// Gauss rules on [-1, 1] and their affine maps.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fhum {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// Map to [a, b]; weights scale by (b - a) / 2.
  QuadratureRule mapped(double a, double b) const {
    QuadratureRule r{nodes, weights};
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r.nodes[i] = mid + half * nodes[i];
      r.weights[i] = half * weights[i];
    }
    return r;
  }
};

/// Gauss-Jacobi rule for the weight (1 - x)^a (1 + x)^b on [-1, 1], a, b > -1,
/// via the Golub-Welsch eigenvalue problem for the monic recurrence.
inline QuadratureRule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: need at least one node");
  if (!(a > -1.0 && b > -1.0)) throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");
  const double ab = a + b;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(n > 1 ? n - 1 : 0);
  diag(0) = (b - a) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    diag(k) = (b * b - a * a) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    double beta;
    if (k == 1) {
      beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      beta = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    off(k - 1) = std::sqrt(beta);
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(ab + 2.0));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_jacobi: eigensolver failed");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  return r;
}

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Rule for int_0^h f(s) s^p ds with p > -1: Gauss-Jacobi mapped to [0, h].
inline QuadratureRule gauss_jacobi_left(int n, double p, double h) {
  QuadratureRule g = gauss_jacobi(n, 0.0, p);
  const double scale = std::pow(0.5 * h, p + 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.nodes[i] = 0.5 * h * (g.nodes[i] + 1.0);
    g.weights[i] *= scale;
  }
  return g;
}

}  // namespace fhum
