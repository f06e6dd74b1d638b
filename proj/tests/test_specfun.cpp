#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "cqtraj/specfun.hpp"

using cqtraj::gauss_2f1_terminating;
using cqtraj::hermite_phys;
using cqtraj::pt_norm_constant;
using C = std::complex<double>;

namespace {

// Independent oracle: brute-force Pochhammer products, no term ratios.
std::complex<long double> pochhammer_sum(int n, long double b, long double c,
                                         std::complex<long double> z) {
  std::complex<long double> sum = 0;
  for (int k = 0; k <= n; ++k) {
    long double num = 1, den = 1, fact = 1;
    for (int j = 0; j < k; ++j) {
      num *= (-n + j) * (b + j);
      den *= (c + j);
      fact *= (j + 1);
    }
    sum += num / den / fact * std::pow(z, k);
  }
  return sum;
}

// Closed form from the Gegenbauer/Jacobi norm:
// c_n(l) = n! Gamma(l + 1/2)^2 / (4 (n + l) Gamma(n + 2l)).
double pt_norm_closed_form(int n, double l) {
  return std::exp(std::lgamma(n + 1.0) + 2 * std::lgamma(l + 0.5) - std::lgamma(n + 2 * l)) /
         (4 * (n + l));
}

double rel(C a, C b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(HermitePhys, LowOrderValues) {
  auto h0 = hermite_phys<double>(0, C(1.5, 0));
  EXPECT_EQ(h0.value, C(1));
  EXPECT_EQ(h0.derivative, C(0));

  auto h1 = hermite_phys<double>(1, C(0.5, 0.5));
  EXPECT_EQ(h1.value, C(1, 1));
  EXPECT_EQ(h1.derivative, C(2));

  // H_2 = 4z^2 - 2, H_2' = 8z at z = 1
  auto h2 = hermite_phys<double>(2, C(1, 0));
  EXPECT_DOUBLE_EQ(h2.value.real(), 2.0);
  EXPECT_DOUBLE_EQ(h2.derivative.real(), 8.0);
}

TEST(HermitePhys, RejectsDegreeAboveCap) {
  EXPECT_THROW(hermite_phys<double>(201, C(0.1)), cqtraj::BoundedInputError);
  EXPECT_THROW(hermite_phys<double>(-1, C(0.1)), cqtraj::BoundedInputError);
  EXPECT_NO_THROW(hermite_phys<double>(200, C(0.1)));
}

TEST(HermitePhys, RecurrenceResidualVanishes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const C z(3.5 * u(rng), 3.5 * u(rng));
    if (std::abs(z) > 5) continue;
    for (int n = 1; n < 50; ++n) {
      const auto hm = hermite_phys<double>(n - 1, z).value;
      const auto h = hermite_phys<double>(n, z).value;
      const auto hp = hermite_phys<double>(n + 1, z).value;
      const double scale = std::abs(hp) + std::abs(2.0 * z * h) + std::abs(2.0 * n * hm);
      EXPECT_LE(std::abs(hp - 2.0 * z * h + 2.0 * n * hm), 1e-14 * scale);
    }
  }
}

TEST(HermitePhys, DerivativeMatchesFiniteDifference) {
  const double step = 1e-6;
  for (int n : {1, 3, 7, 12}) {
    for (C z : {C(0.3, 0.2), C(-1.1, 0.7), C(2.0, -0.4)}) {
      const auto eval = hermite_phys<double>(n, z);
      for (C dir : {C(1, 0), C(0, 1)}) {
        const C fd = (hermite_phys<double>(n, z + step * dir).value -
                      hermite_phys<double>(n, z - step * dir).value) /
                     (2 * step * dir);
        EXPECT_LT(rel(eval.derivative, fd), 1e-6) << "n=" << n << " z=" << z;
      }
    }
  }
}

TEST(Gauss2F1, TrivialAndLinearCases) {
  auto f0 = gauss_2f1_terminating<double>(0, 3.0, 2.0, C(0.3, 0.1));
  EXPECT_EQ(f0.value, C(1));
  EXPECT_EQ(f0.derivative, C(0));

  // 1 - (4/2) z at z = 0.25
  auto f1 = gauss_2f1_terminating<double>(1, 4.0, 2.0, C(0.25));
  EXPECT_DOUBLE_EQ(f1.value.real(), 0.5);
  EXPECT_DOUBLE_EQ(f1.derivative.real(), -2.0);
}

TEST(Gauss2F1, MatchesBruteForcePochhammer) {
  const auto f = gauss_2f1_terminating<double>(2, 5.0, 2.5, C(0.1));
  const auto oracle = pochhammer_sum(2, 5.0L, 2.5L, {0.1L, 0.0L});
  EXPECT_LT(std::abs(f.value - C(double(oracle.real()), double(oracle.imag()))) / std::abs(f.value),
            1e-14);

  // Log-space branch (n |b| > 30) away from the Gegenbauer special case.
  for (int n : {6, 10, 20}) {
    const auto g = gauss_2f1_terminating<long double>(n, 7.3L, 2.2L, {0.2L, 0.1L});
    const auto o = pochhammer_sum(n, 7.3L, 2.2L, {0.2L, 0.1L});
    EXPECT_LT(std::abs(g.value - o) / std::abs(o), 1e-12L) << "n=" << n;
  }
}

TEST(Gauss2F1, GegenbauerCaseMatchesBruteForce) {
  // b = n + 2l, c = l + 1/2 uses the three-term recurrence.
  for (int n : {1, 4, 9, 15}) {
    for (long double l : {1.5L, 2.25L}) {
      for (std::complex<long double> z : {std::complex<long double>(0.3L, 0.0L),
                                          std::complex<long double>(0.4L, 0.3L),
                                          std::complex<long double>(0.9L, -0.2L)}) {
        const auto g = gauss_2f1_terminating<long double>(n, n + 2 * l, l + 0.5L, z);
        const auto o = pochhammer_sum(n, n + 2 * l, l + 0.5L, z);
        // The oracle itself loses digits to its alternating terms.
        EXPECT_LT(std::abs(g.value - o), 1e-9L * std::max(1.0L, std::abs(o)))
            << "n=" << n << " l=" << double(l);
      }
    }
  }
}

TEST(Gauss2F1, NEqualsZeroIsExactlyOne) {
  for (C z : {C(0), C(10, -3), C(-0.5, 0.5)})
    EXPECT_EQ(gauss_2f1_terminating<double>(0, 7.3, 1.1, z).value, C(1));
}

TEST(Gauss2F1, RejectsNonPositiveIntegerC) {
  EXPECT_THROW(gauss_2f1_terminating<double>(2, 1.0, 0.0, C(0.1)), cqtraj::DomainError);
  EXPECT_THROW(gauss_2f1_terminating<double>(2, 1.0, -3.0, C(0.1)), cqtraj::DomainError);
  EXPECT_NO_THROW(gauss_2f1_terminating<double>(2, 1.0, -2.5, C(0.1)));
}

TEST(Gauss2F1, DerivativeMatchesFiniteDifference) {
  const double step = 1e-6;
  for (int n : {1, 2, 4, 7}) {
    const double b = n + 3.0, c = 2.0;
    for (C z : {C(0.2, 0.1), C(0.7, -0.3), C(1.3, 0.4)}) {
      const auto f = gauss_2f1_terminating<double>(n, b, c, z);
      for (C dir : {C(1, 0), C(0, 1)}) {
        const C fd = (gauss_2f1_terminating<double>(n, b, c, z + step * dir).value -
                      gauss_2f1_terminating<double>(n, b, c, z - step * dir).value) /
                     (2 * step * dir);
        EXPECT_LT(rel(f.derivative, fd), 1e-6);
      }
    }
  }
}

TEST(PtNormConstant, GroundStateIsOneTwelfth) {
  EXPECT_NEAR(pt_norm_constant(0, 1.5), 1.0 / 12.0, 1e-14);
}

TEST(PtNormConstant, MatchesJacobiClosedForm) {
  for (double l : {1.5, 1.2, 2.0, 3.7})
    for (int n = 0; n <= 10; ++n)
      EXPECT_NEAR(pt_norm_constant(n, l) / pt_norm_closed_form(n, l), 1.0, 1e-11)
          << "n=" << n << " l=" << l;
}

TEST(PtNormConstant, PositiveForLowOrders) {
  for (int n = 0; n <= 10; ++n) EXPECT_GT(pt_norm_constant(n, 1.5), 0.0);
}

TEST(PtNormConstant, EigenfunctionsAreOrthonormal) {
  // Composite Simpson on a fine grid, independent of the Gauss-Legendre path.
  const int panels = 20000;
  const double h = (std::numbers::pi / 2) / panels;
  for (int m = 0; m <= 4; ++m) {
    for (int n = 0; n <= 4; ++n) {
      const double scale = 1.0 / std::sqrt(pt_norm_constant(m, 1.5) * pt_norm_constant(n, 1.5));
      double sum = 0;
      for (int i = 0; i <= panels; ++i) {
        const double x = i * h;
        const double w = (i == 0 || i == panels) ? 1 : (i % 2 ? 4 : 2);
        sum += w * cqtraj::pt_unnormalized(m, 1.5, x) * cqtraj::pt_unnormalized(n, 1.5, x);
      }
      EXPECT_NEAR(sum * h / 3 * scale, m == n ? 1.0 : 0.0, 1e-10) << m << "," << n;
    }
  }
}

TEST(PtNormConstant, CacheIsSafeUnderConcurrentFirstUse) {
  std::vector<double> results(8);
  std::vector<std::thread> workers;
  for (int i = 0; i < 8; ++i)
    workers.emplace_back([i, &results] { results[i] = pt_norm_constant(9, 2.25); });
  for (auto& w : workers) w.join();
  for (double r : results) EXPECT_EQ(r, results[0]);
  EXPECT_NEAR(results[0] / pt_norm_closed_form(9, 2.25), 1.0, 1e-11);
}

TEST(PtNormConstant, RejectsBadArguments) {
  EXPECT_THROW(pt_norm_constant(-1, 1.5), cqtraj::BoundedInputError);
  EXPECT_THROW(pt_norm_constant(61, 1.5), cqtraj::BoundedInputError);
  EXPECT_THROW(pt_norm_constant(1, 0.5), cqtraj::DomainError);
}
