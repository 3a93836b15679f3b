// Two-parameter Mittag-Leffler function E_{a,b}(z) for real z <= z_max and
// 0 < a <= 1, plus the fractional resolvent kernels built from it.
//
// Evaluation uses three regimes:
//   |z| <= taylor_radius        power series with Neumaier summation
//   z <= -asymptotic_threshold  inverse-power asymptotic series, optimally
//                               truncated
//   otherwise                   trapezoidal rule on a parabolic Hankel contour
//                               for the Laplace inversion of
//                               s^{a-b} / (s^a - z), in long double.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fhum {

/// Raised when an internal series or rule fails its own stopping test.
/// This indicates a bug in the evaluator, never bad user input.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MLQuery {
  double alpha = 1.0;
  double beta = 1.0;
  double z = 0.0;
};

struct MLRegimes {
  double taylor_radius = 1.0;
  double asymptotic_threshold = 50.0;
  /// Positive slack accepted on the right to absorb roundoff in callers.
  double z_max = 1.0;
};

namespace detail {

/// 1/Gamma(x), exactly zero at the poles of Gamma.
inline double rgamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  if (x < 0.5) {
    const double s = std::sin(std::numbers::pi * x) / std::numbers::pi;
    return s * std::tgamma(1.0 - x);
  }
  if (x > 171.0) return 0.0;
  return 1.0 / std::tgamma(x);
}

/// log|1/Gamma(x)| and its sign; sign == 0 at poles.
inline double log_abs_rgamma(double x, int& sign) {
  if (x <= 0.0 && x == std::floor(x)) {
    sign = 0;
    return -std::numeric_limits<double>::infinity();
  }
  if (x < 0.5) {
    const double s = std::sin(std::numbers::pi * x);
    sign = s > 0 ? 1 : -1;
    return std::lgamma(1.0 - x) + std::log(std::abs(s) / std::numbers::pi);
  }
  sign = 1;  // Gamma > 0 on (0, inf)
  return -std::lgamma(x);
}

inline double ml_taylor(double alpha, double beta, double z) {
  constexpr int kMaxTerms = 4000;
  double sum = 0.0;
  double comp = 0.0;
  double zk = 1.0;
  for (int k = 0; k < kMaxTerms; ++k) {
    const double arg = alpha * k + beta;
    const double term = zk * rgamma(arg);
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
    // Past the minimum of Gamma the terms decrease monotonically.
    if (arg > 2.0 && std::abs(term) <= 1e-17 * std::abs(sum + comp)) return sum + comp;
    if (zk == 0.0 && arg > 2.0) return sum + comp;
    zk *= z;
  }
  throw ConvergenceError("mittag_leffler: power series did not converge");
}

inline double ml_asymptotic(double alpha, double beta, double z) {
  constexpr int kMaxTerms = 400;
  const double x = -z;
  const double log_x = std::log(x);
  double sum = 0.0;
  double last_env = std::numeric_limits<double>::infinity();
  double last_abs = last_env;
  bool converged = false;
  for (int k = 1; k <= kMaxTerms; ++k) {
    const double y = beta - alpha * k;
    // Truncation follows the envelope Gamma(1-y)/pi x^{-k}, which ignores the
    // sin(pi y) factor; terms near a pole of Gamma are small without the
    // series having reached its optimal stopping point.
    const double env = std::exp((y < 0.5 ? std::lgamma(1.0 - y) - std::log(std::numbers::pi) : -std::lgamma(y)) - k * log_x);
    if (env > last_env) break;
    last_env = env;
    int sign = 0;
    const double lg = log_abs_rgamma(y, sign);
    if (sign == 0) continue;
    // -z^{-k} / Gamma(y) with z = -x  ->  (-1)^{k+1} x^{-k} / Gamma(y)
    const double mag = std::exp(lg - k * log_x);
    sum += ((k % 2 == 1) ? 1.0 : -1.0) * sign * mag;
    last_abs = env;
    if (env <= 1e-17 * std::abs(sum)) {
      converged = true;
      break;
    }
  }
  if (alpha == 1.0 && beta == std::floor(beta)) {
    // For integer b the algebraic part terminates; add the exact exponential part.
    sum += std::exp(z) * std::pow(z, 1.0 - beta);
    converged = true;
  }
  if (!converged && !(last_abs <= 1e-13 * std::abs(sum))) {
    throw ConvergenceError("mittag_leffler: asymptotic series did not reach tolerance");
  }
  return sum;
}

/// Trapezoidal nodes on the parabola s(u) = mu (1 + iu)^2, u = k h, k >= 0.
/// Weights include h e^{s} s'(u) / (2 pi i) and the halved centre node.
struct ParabolicContour {
  static constexpr int kNodes = 20;
  std::array<std::complex<long double>, kNodes + 1> log_s{};
  std::array<std::complex<long double>, kNodes + 1> weight{};

  ParabolicContour() {
    using C = std::complex<long double>;
    const long double h = 3.0L / kNodes;
    const long double mu = std::numbers::pi_v<long double> * kNodes / 12.0L;
    const C two_pi_i(0.0L, 2.0L * std::numbers::pi_v<long double>);
    for (int k = 0; k <= kNodes; ++k) {
      const C iu(0.0L, k * h);
      const C s = mu * (1.0L + iu) * (1.0L + iu);
      const C ds = 2.0L * mu * C(0.0L, 1.0L) * (1.0L + iu);
      log_s[k] = std::log(s);
      weight[k] = h * std::exp(s) * ds / two_pi_i;
    }
    weight[0] *= 0.5L;
  }

  static const ParabolicContour& instance() {
    static const ParabolicContour c;
    return c;
  }
};

}  // namespace detail

/// E_{alpha,beta} bound to fixed parameters. Construction precomputes the
/// contour powers s^alpha and s^{alpha-beta}, so repeated calls are cheap.
class MittagLeffler {
 public:
  MittagLeffler(double alpha, double beta, MLRegimes regimes = {})
      : alpha_(alpha), beta_(beta), regimes_(regimes) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("mittag_leffler: alpha must lie in (0, 1], got " + std::to_string(alpha));
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw std::invalid_argument("mittag_leffler: beta must be positive, got " + std::to_string(beta));
    }
    const auto& c = detail::ParabolicContour::instance();
    for (int k = 0; k <= detail::ParabolicContour::kNodes; ++k) {
      s_alpha_[k] = std::exp(static_cast<long double>(alpha) * c.log_s[k]);
      numer_[k] = c.weight[k] * std::exp(static_cast<long double>(alpha - beta) * c.log_s[k]);
    }
    lead1_ = detail::rgamma(beta - alpha);
    lead2_ = detail::rgamma(beta - 2.0 * alpha);
    for (int k = 0; k < kCachedTerms; ++k) {
      taylor_[k] = detail::rgamma(alpha * k + beta);
      const double y = beta - alpha * (k + 1);
      int sign = 0;
      const double lg = detail::log_abs_rgamma(y, sign);
      asym_[k] = sign == 0 ? 0.0 : sign * std::exp(lg);
      asym_log_env_[k] = y < 0.5 ? std::lgamma(1.0 - y) - std::log(std::numbers::pi) : -std::lgamma(y);
    }
  }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double operator()(double z) const {
    if (!std::isfinite(z)) throw std::invalid_argument("mittag_leffler: argument must be finite");
    if (z > regimes_.z_max) {
      throw std::invalid_argument("mittag_leffler: argument " + std::to_string(z) + " exceeds z_max");
    }
    if (alpha_ == 1.0 && beta_ == 1.0) return std::exp(z);
    if (std::abs(z) <= regimes_.taylor_radius || z > 0.0) return taylor(z);
    if (z <= -regimes_.asymptotic_threshold) return asymptotic(z);
    return contour(z);
  }

  /// Power series with cached coefficients; same stopping rule as detail::ml_taylor.
  double taylor(double z) const {
    double sum = 0.0, comp = 0.0, zk = 1.0;
    for (int k = 0; k < kCachedTerms; ++k) {
      const double term = zk * taylor_[k];
      const double t = sum + term;
      comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
      sum = t;
      const double arg = alpha_ * k + beta_;
      if (arg > 2.0 && (std::abs(term) <= 1e-17 * std::abs(sum + comp) || zk == 0.0)) return sum + comp;
      zk *= z;
    }
    return detail::ml_taylor(alpha_, beta_, z);
  }

  /// Asymptotic series with cached coefficients; same truncation as detail::ml_asymptotic.
  double asymptotic(double z) const {
    const double x = -z;
    const double log_x = std::log(x);
    double sum = 0.0, xk = 1.0, last = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int k = 1; k <= kCachedTerms; ++k) {
      xk /= x;
      const double log_env = asym_log_env_[k - 1] - k * log_x;
      if (log_env > last) break;
      last = log_env;
      sum += ((k % 2 == 1) ? 1.0 : -1.0) * asym_[k - 1] * xk;
      if (log_env <= std::log(1e-17 * std::abs(sum))) {
        converged = true;
        break;
      }
    }
    if (alpha_ == 1.0 && beta_ == std::floor(beta_)) return sum + std::exp(z) * std::pow(z, 1.0 - beta_);
    if (!converged) return detail::ml_asymptotic(alpha_, beta_, z);
    return sum;
  }

  /// Contour rule alone; exposed for seam tests.
  double contour(double z) const {
    using C = std::complex<long double>;
    const long double zl = z;
    C sum = 0.0L;
    if (std::abs(z) < kSubtractBelow) {
      for (int k = 0; k <= detail::ParabolicContour::kNodes; ++k) sum += numer_[k] / (s_alpha_[k] - zl);
      return static_cast<double>(2.0L * sum.real());
    }
    // 1/(q - z) = -1/z - q/z^2 + q^2/(z^2 (q - z)): the first two terms invert
    // exactly, and the remainder no longer loses digits to cancellation.
    for (int k = 0; k <= detail::ParabolicContour::kNodes; ++k) {
      const C q = s_alpha_[k];
      sum += numer_[k] * q * q / (q - zl);
    }
    const long double rest = 2.0L * sum.real() / (zl * zl);
    return static_cast<double>(-lead1_ / zl - lead2_ / (zl * zl) + rest);
  }

 private:
  static constexpr double kSubtractBelow = 6.0;
  static constexpr int kCachedTerms = 160;
  double alpha_;
  double beta_;
  MLRegimes regimes_;
  long double lead1_ = 0.0L;
  long double lead2_ = 0.0L;
  std::array<std::complex<long double>, detail::ParabolicContour::kNodes + 1> s_alpha_{};
  std::array<std::complex<long double>, detail::ParabolicContour::kNodes + 1> numer_{};
  std::array<double, kCachedTerms> taylor_{};
  std::array<double, kCachedTerms> asym_{};
  std::array<double, kCachedTerms> asym_log_env_{};
};

inline double mittag_leffler(const MLQuery& q, const MLRegimes& regimes = {}) {
  return MittagLeffler(q.alpha, q.beta, regimes)(q.z);
}

inline double mittag_leffler(double alpha, double beta, double z) { return mittag_leffler({alpha, beta, z}); }

/// The per-mode resolvent kernels of a Neumann-type generator with eigenvalue
/// lambda <= 0, for fixed order alpha:
///   kernel(l, t)     = t^{a-1} E_{a,a}(l t^a)       (state propagator)
///   relaxation(l, t) = E_{a,1}(l t^a)               (adjoint propagator)
///   primitive1(l, t) = t^a E_{a,a+1}(l t^a)         (= int_0^t kernel)
///   primitive2(l, t) = t^{a+1} E_{a,a+2}(l t^a)     (= int_0^t primitive1)
class KernelFamily {
 public:
  explicit KernelFamily(double alpha)
      : alpha_(alpha), e_aa_(alpha, alpha), e_a1_(alpha, 1.0), e_a_a1_(alpha, alpha + 1.0), e_a_a2_(alpha, alpha + 2.0) {}

  double alpha() const { return alpha_; }

  double kernel(double lambda, double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("ml_kernel: t must be positive (the kernel is singular at 0)");
    if (alpha_ == 1.0) return std::exp(lambda * t);
    const double ta = std::pow(t, alpha_);
    return ta / t * e_aa_(lambda * ta);
  }

  double relaxation(double lambda, double t) const {
    if (t < 0.0) throw std::invalid_argument("relaxation: t must be non-negative");
    if (t == 0.0) return 1.0;
    return e_a1_(lambda * std::pow(t, alpha_));
  }

  double primitive1(double lambda, double t) const {
    if (t <= 0.0) return 0.0;
    const double ta = std::pow(t, alpha_);
    return ta * e_a_a1_(lambda * ta);
  }

  double primitive2(double lambda, double t) const {
    if (t <= 0.0) return 0.0;
    const double ta = std::pow(t, alpha_);
    return ta * t * e_a_a2_(lambda * ta);
  }

  /// E_{a,a}(z) itself, for callers working in the variable w = t^a.
  double e_alpha_alpha(double z) const { return e_aa_(z); }

 private:
  double alpha_;
  MittagLeffler e_aa_;
  MittagLeffler e_a1_;
  MittagLeffler e_a_a1_;
  MittagLeffler e_a_a2_;
};

/// t^{alpha-1} E_{alpha,alpha}(lambda t^alpha); t > 0.
inline double ml_kernel(double alpha, double lambda, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("ml_kernel: t must be positive (the kernel is singular at 0)");
  if (alpha == 1.0) return std::exp(lambda * t);
  const double ta = std::pow(t, alpha);
  return ta / t * MittagLeffler(alpha, alpha)(lambda * ta);
}

}  // namespace fhum
