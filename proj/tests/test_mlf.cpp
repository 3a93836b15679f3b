#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fhum/mlf.hpp"

namespace fhum {
namespace {

struct MLRow {
  double alpha, beta, z, value;
};

const std::vector<MLRow>& oracle_table() {
  static const std::vector<MLRow> rows = {
#include "oracles/ml_table.inc"
  };
  return rows;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(MittagLeffler, TrivialValues) {
  EXPECT_NEAR(mittag_leffler(1.0, 1.0, -1.0), 0.36787944117144233, 1e-16);
  EXPECT_NEAR(mittag_leffler(0.75, 0.75, 0.0), 0.81604893909826304, 1e-15);
}

TEST(MittagLeffler, ErfcIdentityAtTwo) {
  EXPECT_LE(rel(mittag_leffler(0.5, 1.0, -2.0), 0.25539567631050574387), 1e-13);
}

TEST(MittagLeffler, AsymptoticRegimeValue) {
  EXPECT_LE(rel(mittag_leffler(0.75, 1.0, -100.0), 0.0027866210194390933563), 1e-13);
}

TEST(MittagLeffler, OracleTable) {
  for (const auto& r : oracle_table()) {
    if (r.value < std::numeric_limits<double>::min()) continue;  // below double range
    EXPECT_LE(rel(mittag_leffler(r.alpha, r.beta, r.z), r.value), 1e-10)
        << "alpha=" << r.alpha << " beta=" << r.beta << " z=" << r.z;
  }
}

TEST(MittagLeffler, ErfcIdentityOnGrid) {
  for (int i = 0; i <= 400; ++i) {
    const double x = 10.0 * i / 400;
    const double ref = std::exp(x * x) * std::erfc(x);
    EXPECT_LE(rel(mittag_leffler(0.5, 1.0, -x), ref), 1e-10) << "x=" << x;
  }
}

TEST(MittagLeffler, ExponentialReduction) {
  for (int i = 0; i <= 1000; ++i) {
    const double z = -50.0 + 51.0 * i / 1000;
    EXPECT_LE(rel(mittag_leffler(1.0, 1.0, z), std::exp(z)), 1e-12);
  }
}

TEST(MittagLeffler, GenericPathAtAlphaOne) {
  // E_{1,2}(z) = (e^z - 1)/z exercises every regime with alpha = 1.
  const MittagLeffler e12(1.0, 2.0);
  for (double z : {0.5, -0.3, -1.0, -2.5, -7.0, -20.0, -49.9, -50.0, -300.0, -1e5}) {
    EXPECT_LE(rel(e12(z), std::expm1(z) / z), 1e-12) << "z=" << z;
  }
}

TEST(MittagLeffler, Recurrence) {
  for (double a : {0.55, 0.75, 0.9, 1.0}) {
    for (double b : {a, 1.0, 1.3}) {
      const MittagLeffler lo(a, b), hi(a, b + a);
      for (double z : {-0.2, -0.9, -1.1, -4.0, -12.0, -49.0, -51.0, -300.0, -1e4}) {
        const double lhs = lo(z);
        const double rhs = z * hi(z) + detail::rgamma(b);
        const double scale = std::max({std::abs(lhs), std::abs(z * hi(z)), detail::rgamma(b)});
        EXPECT_LE(std::abs(lhs - rhs) / scale, 1e-9) << a << ' ' << b << ' ' << z;
      }
    }
  }
}

TEST(MittagLeffler, PositiveAndNonincreasing) {
  for (double a : {0.55, 0.75, 0.9, 1.0}) {
    for (double b : {a, 1.0}) {
      const MittagLeffler e(a, b);
      double prev = e(0.0);
      for (int i = 1; i <= 600; ++i) {
        const double x = std::pow(10.0, -3.0 + 9.0 * i / 600);
        const double v = e(-x);
        if (a == 1.0 && b == 1.0 && x > 700.0) break;  // e^{-x} underflows
        EXPECT_GT(v, 0.0) << a << ' ' << b << ' ' << x;
        EXPECT_LE(v, prev * (1 + 1e-12)) << a << ' ' << b << ' ' << x;
        prev = v;
      }
    }
  }
}

TEST(MittagLeffler, SemigroupBoundPerMode) {
  for (double a : {0.55, 0.75, 0.9, 1.0}) {
    const MittagLeffler e(a, a);
    for (int i = 0; i <= 300; ++i) {
      const double x = i == 0 ? 0.0 : std::pow(10.0, -3.0 + 9.0 * i / 300);
      EXPECT_LE(std::tgamma(a) * e(-x), 1.0 + 1e-14);
    }
  }
}

TEST(MittagLeffler, RegimeSeamsAgree) {
  for (double a : {0.51, 0.6, 0.75, 0.9, 0.99}) {
    for (double b : {a, 1.0, a + 1.0}) {
      const MittagLeffler e(a, b);
      const double z1 = -1.0;
      EXPECT_LE(rel(e.contour(z1), detail::ml_taylor(a, b, z1)), 1e-9) << a << ' ' << b;
      const double z2 = -50.0;
      EXPECT_LE(rel(e.contour(z2), detail::ml_asymptotic(a, b, z2)), 1e-9) << a << ' ' << b;
    }
  }
}

TEST(MittagLeffler, RejectsBadInput) {
  EXPECT_THROW(mittag_leffler(0.0, 1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(mittag_leffler(1.2, 1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(mittag_leffler(0.5, 0.0, -1.0), std::invalid_argument);
  EXPECT_THROW(mittag_leffler(0.5, 1.0, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(mittag_leffler(0.5, 1.0, -std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_THROW(mittag_leffler(0.5, 1.0, 2.0), std::invalid_argument);
}

TEST(MLKernel, Values) {
  EXPECT_NEAR(ml_kernel(1.0, -2.0, 0.5), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(ml_kernel(0.75, 0.0, 1.0), 0.81604893909826304, 1e-15);
  EXPECT_LE(rel(ml_kernel(0.75, -2.0, 1.0), 0.084363572245660564019), 1e-12);
  EXPECT_THROW(ml_kernel(0.75, -1.0, 0.0), std::invalid_argument);
}

TEST(KernelFamily, PrimitivesMatchDefinitions) {
  const KernelFamily k(0.75);
  // At lambda = 0 the primitives are pure powers.
  EXPECT_NEAR(k.primitive1(0.0, 2.0), std::pow(2.0, 0.75) / std::tgamma(1.75), 1e-14);
  EXPECT_NEAR(k.primitive2(0.0, 2.0), std::pow(2.0, 1.75) / std::tgamma(2.75), 1e-14);
  EXPECT_LE(rel(k.relaxation(-2.0, 1.0), 0.20207848341295445435), 1e-12);
  EXPECT_EQ(k.relaxation(-3.0, 0.0), 1.0);
}

}  // namespace
}  // namespace fhum
