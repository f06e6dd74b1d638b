#pragma once

// Polynomial special functions at complex arguments and the numerically
// determined Poschl-Teller normalization constants.

#include <cmath>
#include <complex>
#include <concepts>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <utility>
#include <vector>

#include "cqtraj/errors.hpp"

namespace cqtraj {

template <std::floating_point Real>
struct PolynomialEval {
  std::complex<Real> value;
  std::complex<Real> derivative;
};

inline constexpr int kHermiteMaxDegree = 200;

/// Physicists' Hermite polynomial H_n(z) and H_n'(z) = 2n H_{n-1}(z) by upward recurrence.
template <std::floating_point Real>
PolynomialEval<Real> hermite_phys(int n, std::complex<Real> z) {
  if (n < 0 || n > kHermiteMaxDegree)
    throw BoundedInputError("hermite_phys: degree " + std::to_string(n) + " outside [0, " +
                            std::to_string(kHermiteMaxDegree) + "]");
  using C = std::complex<Real>;
  if (n == 0) return {C(1), C(0)};
  C prev(1);
  C cur = Real(2) * z;
  for (int k = 1; k < n; ++k) {
    C next = Real(2) * z * cur - Real(2 * k) * prev;
    prev = cur;
    cur = next;
  }
  return {cur, Real(2 * n) * prev};
}

namespace detail {

// Terminating 2F1(-n, b; c; z) summed term by term. For large n*|b| the
// Pochhammer ratios are accumulated as log-magnitude plus sign.
template <std::floating_point Real>
std::complex<Real> terminating_2f1_sum(int n, Real b, Real c, std::complex<Real> z) {
  using C = std::complex<Real>;
  if (n == 0) return C(1);
  if (n * std::abs(b) <= Real(30)) {
    C sum(1);
    C term(1);
    for (int k = 0; k < n; ++k) {
      term *= (Real(k - n) * (b + k)) / ((c + k) * Real(k + 1)) * z;
      sum += term;
    }
    return sum;
  }
  if (z == C(0)) return C(1);
  const Real log_abs_z = std::log(std::abs(z));
  const Real arg_z = std::arg(z);
  C sum(1);
  Real log_coef = 0;
  Real sign = 1;
  for (int k = 0; k < n; ++k) {
    const Real ratio = (Real(k - n) * (b + k)) / ((c + k) * Real(k + 1));
    if (ratio == Real(0)) break;
    if (ratio < 0) sign = -sign;
    log_coef += std::log(std::abs(ratio));
    const int power = k + 1;
    sum += sign * std::polar(std::exp(log_coef + power * log_abs_z), power * arg_z);
  }
  return sum;
}

// When b = n + 2c - 1 the polynomial is a Gegenbauer polynomial in t = 1 - 2z,
// 2F1(-n, n + 2lam; lam + 1/2; z) = C_n^lam(t) / C_n^lam(1) with lam = c - 1/2.
// The ratio R_k = C_k(t) / C_k(1) obeys
//   R_{k+1} = (2 (k + lam) t R_k - k R_{k-1}) / (k + 2 lam),
// which avoids the cancellation of the alternating power series.
template <std::floating_point Real>
std::complex<Real> gegenbauer_ratio(int n, Real lam, std::complex<Real> z) {
  using C = std::complex<Real>;
  const C t = Real(1) - Real(2) * z;
  C prev(1);
  if (n == 0) return prev;
  C cur = t;
  for (int k = 1; k < n; ++k) {
    const C next = (Real(2) * (k + lam) * t * cur - Real(k) * prev) / (k + Real(2) * lam);
    prev = cur;
    cur = next;
  }
  return cur;
}

template <std::floating_point Real>
bool is_gegenbauer_form(int n, Real b, Real c) {
  return c > Real(0.5) && std::abs(b - (n + Real(2) * c - Real(1))) <= Real(1e-12) * std::abs(b);
}

template <std::floating_point Real>
std::complex<Real> terminating_2f1(int n, Real b, Real c, std::complex<Real> z) {
  if (is_gegenbauer_form(n, b, c)) return gegenbauer_ratio(n, c - Real(0.5), z);
  return terminating_2f1_sum(n, b, c, z);
}

inline bool is_nonpositive_integer(double c) {
  return c <= 0 && std::floor(c) == c;
}

}  // namespace detail

/// Terminating Gauss hypergeometric 2F1(-n, b; c; z) and its z-derivative.
template <std::floating_point Real>
PolynomialEval<Real> gauss_2f1_terminating(int n, Real b, Real c, std::complex<Real> z) {
  if (n < 0) throw DomainError("gauss_2f1_terminating: n must be non-negative");
  if (detail::is_nonpositive_integer(static_cast<double>(c)))
    throw DomainError("gauss_2f1_terminating: c must not be a non-positive integer");
  const auto value = detail::terminating_2f1(n, b, c, z);
  if (n == 0) return {value, std::complex<Real>(0)};
  const auto shifted = detail::terminating_2f1(n - 1, b + 1, c + 1, z);
  return {value, (Real(-n) * b / c) * shifted};
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int count) {
  GaussLegendreRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_count.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1, p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = count * (x * p1 - p0) / (x * x - 1);
    const double w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[count - 1 - i] = x;
    rule.weights[count - 1 - i] = w;
  }
  return rule;
}

/// Integral of f over [lo, hi] with an n-point Gauss-Legendre rule.
template <class F>
double gauss_legendre_integrate(const GaussLegendreRule& rule, double lo, double hi, F&& f) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double sum = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

/// Unnormalized real PT eigenfunction cos^l(x) sin^l(x) 2F1(-n, n+2l; l+1/2; sin^2 x).
inline double pt_unnormalized(int n, double l, double x) {
  const double s = std::sin(x);
  const double c = std::cos(x);
  const auto f = detail::gegenbauer_ratio<double>(n, l, {s * s, 0.0});
  return std::pow(c * s, l) * f.real();
}

inline constexpr int kPtMaxDegree = 60;

/// c_n(l) = integral over [0, pi/2] of the squared unnormalized PT eigenfunction.
///
/// Gauss-Legendre with node doubling until successive estimates agree to 1e-12
/// relative. Results are cached per (n, l); the cache allows concurrent readers.
inline double pt_norm_constant(int n, double l) {
  if (n < 0 || n > kPtMaxDegree)
    throw BoundedInputError("pt_norm_constant: degree " + std::to_string(n) + " outside [0, " +
                            std::to_string(kPtMaxDegree) + "]");
  if (!(l > 0.5)) throw DomainError("pt_norm_constant: l must exceed 1/2");

  static std::shared_mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  const auto key = std::make_pair(n, l);
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  std::unique_lock lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto integrand = [n, l](double x) {
    const double v = pt_unnormalized(n, l, x);
    return v * v;
  };
  constexpr double kHalfPi = std::numbers::pi / 2;
  int nodes = 32;
  double previous = gauss_legendre_integrate(gauss_legendre(nodes), 0.0, kHalfPi, integrand);
  for (nodes *= 2; nodes <= 8192; nodes *= 2) {
    const double current =
        gauss_legendre_integrate(gauss_legendre(nodes), 0.0, kHalfPi, integrand);
    if (std::abs(current - previous) < 1e-12 * std::abs(current)) {
      cache.emplace(key, current);
      return current;
    }
    previous = current;
  }
  throw PrecisionError("pt_norm_constant: quadrature did not converge for n = " +
                       std::to_string(n) + ", l = " + std::to_string(l));
}

}  // namespace cqtraj
