#pragma once

// Wavefunctions psi(x, t) and d psi/dx at complex x for harmonic oscillator,
// infinite well and symmetric Poschl-Teller eigenstates and coherent states.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cqtraj/errors.hpp"
#include "cqtraj/specfun.hpp"

namespace cqtraj {

using cplx = std::complex<double>;

struct ModelParams {
  double hbar = 1.0;
  double mass = 1.0;
  double omega = 1.0;
  /// Length scale: the infinite well has width pi * a.
  double a = 1.0;

  /// Inverse oscillator length, alpha^2 = mass * omega / hbar.
  double alpha() const { return std::sqrt(mass * omega / hbar); }

  void validate() const {
    if (!(hbar > 0) || !(mass > 0) || !(omega > 0) || !(a > 0))
      throw DomainError("ModelParams: hbar, mass, omega and a must all be positive");
  }
};

// State families. lambda = |z| and kappa = arg z for the oscillator coherent state.
struct HoEigen {
  int n = 0;
};
struct HoCoherentClosed {
  double lambda = 0;
  double kappa = 0;
};
struct HoCoherentSeries {
  double lambda = 0;
  double kappa = 0;
  int n_max = 4;
  bool renormalize = false;
};
struct WellEigen {
  int n = 0;
};
struct WellCoherent {
  double J = 0;
  int n_max = 7;
};
struct PtEigen {
  int n = 0;
  double l = 1.5;
};
struct PtCoherent {
  double J = 0;
  double l = 1.5;
  int n_max = 4;
};

using StateSpec = std::variant<HoEigen, HoCoherentClosed, HoCoherentSeries, WellEigen,
                               WellCoherent, PtEigen, PtCoherent>;

inline std::string family_name(const StateSpec& spec);

struct AmplitudePair {
  cplx psi;
  cplx dpsi_dx;
};

/// Expansion weights c_n (already divided by N), the norm N and the phase
/// frequency of each term, so term n evolves as exp(-i energies[n] t).
struct CoefficientSet {
  std::vector<cplx> coeffs;
  double norm = 1.0;
  std::vector<double> energies;
  /// The same weights before rounding to double, when they were computed in
  /// extended precision. Series sums use these if present.
  std::vector<std::complex<long double>> extended;
};

/// Open interval on the real part of x.
struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return v > lo && v < hi; }
};

inline double well_width(const ModelParams& p) { return std::numbers::pi * p.a; }
inline constexpr double kPtWidth = std::numbers::pi / 2;

/// Physical interval for Re(x), or nothing for the unbounded oscillator.
inline std::optional<Interval> physical_domain(const ModelParams& params, const StateSpec& spec);

namespace detail {

using real_t = long double;
using cplx_t = std::complex<real_t>;

struct AmplitudeT {
  cplx_t psi;
  cplx_t dpsi;
};

inline void check_family_params(int n, const char* who) {
  if (n < 0) throw DomainError(std::string(who) + ": index must be non-negative");
}

inline void check_domain(double re, double hi, const char* who) {
  // The boundary itself is accepted so nodes of the closure can be probed.
  if (!(re >= 0.0 && re <= hi))
    throw DomainError(std::string(who) + ": Re(x) = " + std::to_string(re) +
                      " outside physical interval [0, " + std::to_string(hi) + "]");
}

// psi_n of the oscillator via normalized Hermite-function recurrence; fills
// out[0..n_max] with (phi_n, dphi_n/dx).
inline void ho_basis(const ModelParams& p, cplx_t x, int n_max, std::vector<AmplitudeT>& out) {
  const real_t alpha = std::sqrt(static_cast<real_t>(p.mass) * p.omega / p.hbar);
  const cplx_t X = alpha * x;
  const cplx_t gauss = std::exp(-X * X / real_t(2));
  const real_t pref = std::sqrt(alpha / std::sqrt(std::numbers::pi_v<real_t>));
  out.resize(n_max + 1);
  cplx_t h_prev(0), h(1);
  for (int n = 0; n <= n_max; ++n) {
    // h_n' = sqrt(2n) h_{n-1}
    const cplx_t dh = std::sqrt(real_t(2 * n)) * h_prev;
    out[n].psi = pref * h * gauss;
    out[n].dpsi = pref * alpha * (dh - X * h) * gauss;
    const cplx_t h_next =
        std::sqrt(real_t(2) / (n + 1)) * X * h - std::sqrt(real_t(n) / (n + 1)) * h_prev;
    h_prev = h;
    h = h_next;
  }
}

inline AmplitudeT well_basis(const ModelParams& p, cplx_t x, int n) {
  const real_t a = p.a;
  const real_t pref = std::sqrt(real_t(2) / (std::numbers::pi_v<real_t> * a));
  const real_t k = real_t(n + 1) / a;
  return {pref * std::sin(k * x), pref * k * std::cos(k * x)};
}

inline AmplitudeT pt_basis(cplx_t x, int n, real_t l, real_t norm_constant) {
  const cplx_t s = std::sin(x);
  const cplx_t c = std::cos(x);
  const cplx_t g = std::pow(c, l) * std::pow(s, l);
  // d/dx (cos x sin x)^l = l (cos x sin x)^(l-1) (cos^2 x - sin^2 x)
  const cplx_t dg = l * std::pow(c, l - 1) * std::pow(s, l - 1) * (c * c - s * s);
  const auto f = gauss_2f1_terminating<real_t>(n, n + 2 * l, l + real_t(0.5), s * s);
  const cplx_t df_dx = f.derivative * real_t(2) * s * c;
  const real_t scale = real_t(1) / std::sqrt(norm_constant);
  return {scale * g * f.value, scale * (dg * f.value + g * df_dx)};
}

inline cplx_t phase(real_t energy, double t) {
  return std::polar(real_t(1), -energy * static_cast<real_t>(t));
}

inline AmplitudePair narrow(const AmplitudeT& a) {
  return {cplx(static_cast<double>(a.psi.real()), static_cast<double>(a.psi.imag())),
          cplx(static_cast<double>(a.dpsi.real()), static_cast<double>(a.dpsi.imag()))};
}

}  // namespace detail

inline std::string family_name(const StateSpec& spec) {
  struct Visitor {
    std::string operator()(const HoEigen&) const { return "HO_EIGEN"; }
    std::string operator()(const HoCoherentClosed&) const { return "HO_COHERENT_CLOSED"; }
    std::string operator()(const HoCoherentSeries&) const { return "HO_COHERENT_SERIES"; }
    std::string operator()(const WellEigen&) const { return "WELL_EIGEN"; }
    std::string operator()(const WellCoherent&) const { return "WELL_COHERENT"; }
    std::string operator()(const PtEigen&) const { return "PT_EIGEN"; }
    std::string operator()(const PtCoherent&) const { return "PT_COHERENT"; }
  };
  return std::visit(Visitor{}, spec);
}

inline std::optional<Interval> physical_domain(const ModelParams& params, const StateSpec& spec) {
  if (std::holds_alternative<WellEigen>(spec) || std::holds_alternative<WellCoherent>(spec))
    return Interval{0.0, well_width(params)};
  if (std::holds_alternative<PtEigen>(spec) || std::holds_alternative<PtCoherent>(spec))
    return Interval{0.0, kPtWidth};
  return std::nullopt;
}

// Eigenstates: psi_n(x) exp(-i E_n t / hbar).

inline AmplitudePair eval_eigenstate(const ModelParams& params, const HoEigen& s, cplx x,
                                     double t) {
  detail::check_family_params(s.n, "HO_EIGEN");
  const double alpha = params.alpha();
  const cplx X = alpha * x;
  const auto h = hermite_phys<double>(s.n, X);
  // (alpha / sqrt(pi))^(1/2) / sqrt(2^n n!)
  const double log_norm = 0.5 * std::log(alpha / std::sqrt(std::numbers::pi)) -
                          0.5 * (s.n * std::numbers::ln2 + std::lgamma(s.n + 1.0));
  const cplx gauss = std::exp(-X * X / 2.0) * std::exp(log_norm);
  const cplx ph = std::polar(1.0, -(s.n + 0.5) * params.omega * t);
  return {ph * h.value * gauss, ph * alpha * (h.derivative - X * h.value) * gauss};
}

inline AmplitudePair eval_eigenstate(const ModelParams& params, const WellEigen& s, cplx x,
                                     double t) {
  detail::check_family_params(s.n, "WELL_EIGEN");
  detail::check_domain(x.real(), well_width(params), "WELL_EIGEN");
  const double energy = params.omega * s.n * (s.n + 2.0);
  auto amp = detail::well_basis(params, x, s.n);
  const auto ph = detail::phase(energy, t);
  return detail::narrow({ph * amp.psi, ph * amp.dpsi});
}

inline AmplitudePair eval_eigenstate(const ModelParams& params, const PtEigen& s, cplx x,
                                     double t) {
  detail::check_family_params(s.n, "PT_EIGEN");
  if (!(s.l > 0.5)) throw DomainError("PT_EIGEN: l must exceed 1/2");
  detail::check_domain(x.real(), kPtWidth, "PT_EIGEN");
  const double energy = params.omega * s.n * (s.n + 2.0 * s.l);
  auto amp = detail::pt_basis(x, s.n, s.l, pt_norm_constant(s.n, s.l));
  const auto ph = detail::phase(energy, t);
  return detail::narrow({ph * amp.psi, ph * amp.dpsi});
}

inline AmplitudePair eval_eigenstate(const ModelParams& params, const StateSpec& spec, cplx x,
                                     double t) {
  if (const auto* s = std::get_if<HoEigen>(&spec)) return eval_eigenstate(params, *s, x, t);
  if (const auto* s = std::get_if<WellEigen>(&spec)) return eval_eigenstate(params, *s, x, t);
  if (const auto* s = std::get_if<PtEigen>(&spec)) return eval_eigenstate(params, *s, x, t);
  throw DomainError("eval_eigenstate: " + family_name(spec) + " is not an eigenstate");
}

/// Weights of a coherent-state expansion. Well and PT sets are renormalized
/// over the truncated range; the oscillator set only when requested.
inline CoefficientSet coherent_coefficients(const ModelParams& params, const StateSpec& spec) {
  CoefficientSet set;
  auto fill_j_family = [&](double J, int n_max, double shift, double gamma_offset) {
    // c_n = J^{n/2} / sqrt(n! * Gamma(n + gamma_offset + 1) / shift)
    if (n_max < 0) throw DomainError("coherent_coefficients: n_max must be non-negative");
    if (!(J >= 0)) throw DomainError("coherent_coefficients: J must be non-negative");
    double sum = 0;
    for (int n = 0; n <= n_max; ++n) {
      double c = 0;
      if (n == 0 || J > 0) {
        const double log_j = n == 0 ? 0.0 : 0.5 * n * std::log(J);
        c = std::exp(log_j - 0.5 * (std::lgamma(n + 1.0) + std::lgamma(n + gamma_offset + 1.0) -
                                    std::log(shift)));
      }
      set.coeffs.emplace_back(c, 0.0);
      sum += c * c;
    }
    set.norm = std::sqrt(sum);
    for (auto& c : set.coeffs) c /= set.norm;
  };

  if (const auto* s = std::get_if<HoCoherentSeries>(&spec)) {
    if (s->n_max < 0) throw DomainError("coherent_coefficients: n_max must be non-negative");
    if (!(s->lambda >= 0)) throw DomainError("coherent_coefficients: lambda must be non-negative");
    // e^{-|z|^2/2} z^n / sqrt(n!) by the ratio c_n = c_{n-1} z / sqrt(n) in
    // extended precision; lgamma-based magnitudes lose ~1e-13 at n = 60.
    const detail::real_t lambda = s->lambda;
    const detail::cplx_t ratio = std::polar(lambda, static_cast<detail::real_t>(s->kappa));
    detail::cplx_t c = std::exp(-lambda * lambda / 2);
    detail::real_t sum = 0;
    for (int n = 0; n <= s->n_max; ++n) {
      if (n > 0) c *= ratio / std::sqrt(static_cast<detail::real_t>(n));
      set.extended.push_back(c);
      set.energies.push_back((n + 0.5) * params.omega);
      sum += std::norm(c);
    }
    if (s->renormalize) {
      set.norm = static_cast<double>(std::sqrt(sum));
      for (auto& c : set.extended) c /= std::sqrt(sum);
    }
    for (const auto& c : set.extended)
      set.coeffs.emplace_back(static_cast<double>(c.real()), static_cast<double>(c.imag()));
    return set;
  }
  if (const auto* s = std::get_if<WellCoherent>(&spec)) {
    // J^{n/2} / sqrt(n! (n+2)! / 2)
    fill_j_family(s->J, s->n_max, 2.0, 2.0);
    for (int n = 0; n <= s->n_max; ++n) set.energies.push_back(params.omega * n * (n + 2.0));
    return set;
  }
  if (const auto* s = std::get_if<PtCoherent>(&spec)) {
    if (!(s->l > 0.5)) throw DomainError("PT_COHERENT: l must exceed 1/2");
    // J^{n/2} / sqrt(n! Gamma(n + 2l + 1)); for l = 3/2 this is n! (n+3)!
    fill_j_family(s->J, s->n_max, 1.0, 2.0 * s->l);
    for (int n = 0; n <= s->n_max; ++n)
      set.energies.push_back(params.omega * n * (n + 2.0 * s->l));
    return set;
  }
  throw DomainError("coherent_coefficients: " + family_name(spec) + " is not a series state");
}

/// Closed-form oscillator coherent state with X = alpha x and
/// eta = (lambda / sqrt 2) exp(-i(omega t - kappa)).
inline AmplitudePair ho_coherent_closed(const ModelParams& params, double lambda, double kappa,
                                        cplx x, double t) {
  const double alpha = params.alpha();
  const cplx X = alpha * x;
  const cplx eta = lambda / std::numbers::sqrt2 * std::polar(1.0, -(params.omega * t - kappa));
  const cplx i(0.0, 1.0);
  const cplx exponent = 0.5 * (X * X - lambda * lambda - i * params.omega * t) -
                        (X - eta) * (X - eta);
  const cplx psi = std::sqrt(alpha / std::sqrt(std::numbers::pi)) * std::exp(exponent);
  return {psi, alpha * psi * (2.0 * eta - X)};
}

/// Prepared evaluator for any StateSpec: coefficients and PT norms are
/// computed once, after which evaluation is const and thread-safe.
class Wavefunction {
 public:
  Wavefunction(ModelParams params, StateSpec spec)
      : params_(params), spec_(std::move(spec)), domain_(physical_domain(params_, spec_)) {
    params_.validate();
    std::visit([this](const auto& s) { prepare(s); }, spec_);
  }

  const ModelParams& params() const { return params_; }
  const StateSpec& spec() const { return spec_; }
  const std::optional<Interval>& domain() const { return domain_; }
  const CoefficientSet& coefficients() const { return coeffs_; }

  /// Evaluation with the physical-domain precondition enforced.
  AmplitudePair operator()(cplx x, double t) const {
    if (domain_) detail::check_domain(x.real(), domain_->hi, "Wavefunction");
    return evaluate_continued(x, t);
  }

  /// Entire-function continuation, no domain check (used by integrators,
  /// which report escape themselves).
  AmplitudePair evaluate_continued(cplx x, double t) const {
    return std::visit([&](const auto& s) { return eval(s, x, t); }, spec_);
  }

 private:
  void prepare(const HoEigen& s) { detail::check_family_params(s.n, "HO_EIGEN"); }
  void prepare(const HoCoherentClosed&) {}
  void prepare(const HoCoherentSeries&) { coeffs_ = coherent_coefficients(params_, spec_); }
  void prepare(const WellEigen& s) { detail::check_family_params(s.n, "WELL_EIGEN"); }
  void prepare(const WellCoherent&) { coeffs_ = coherent_coefficients(params_, spec_); }
  void prepare(const PtEigen& s) {
    detail::check_family_params(s.n, "PT_EIGEN");
    pt_norms_ = {pt_norm_constant(s.n, s.l)};
  }
  void prepare(const PtCoherent& s) {
    coeffs_ = coherent_coefficients(params_, spec_);
    for (int n = 0; n <= s.n_max; ++n) pt_norms_.push_back(pt_norm_constant(n, s.l));
  }

  AmplitudePair eval(const HoEigen& s, cplx x, double t) const {
    return eval_eigenstate(params_, s, x, t);
  }
  AmplitudePair eval(const HoCoherentClosed& s, cplx x, double t) const {
    return ho_coherent_closed(params_, s.lambda, s.kappa, x, t);
  }
  AmplitudePair eval(const WellEigen& s, cplx x, double t) const {
    const auto amp = detail::well_basis(params_, x, s.n);
    const auto ph = detail::phase(params_.omega * s.n * (s.n + 2.0), t);
    return detail::narrow({ph * amp.psi, ph * amp.dpsi});
  }
  AmplitudePair eval(const PtEigen& s, cplx x, double t) const {
    const auto amp = detail::pt_basis(x, s.n, s.l, pt_norms_[0]);
    const auto ph = detail::phase(params_.omega * s.n * (s.n + 2.0 * s.l), t);
    return detail::narrow({ph * amp.psi, ph * amp.dpsi});
  }
  AmplitudePair eval(const HoCoherentSeries&, cplx x, double t) const {
    thread_local std::vector<detail::AmplitudeT> basis;
    detail::ho_basis(params_, x, static_cast<int>(coeffs_.coeffs.size()) - 1, basis);
    return sum_series(basis, t);
  }
  AmplitudePair eval(const WellCoherent&, cplx x, double t) const {
    thread_local std::vector<detail::AmplitudeT> basis;
    basis.resize(coeffs_.coeffs.size());
    for (std::size_t n = 0; n < basis.size(); ++n)
      basis[n] = detail::well_basis(params_, x, static_cast<int>(n));
    return sum_series(basis, t);
  }
  AmplitudePair eval(const PtCoherent& s, cplx x, double t) const {
    thread_local std::vector<detail::AmplitudeT> basis;
    basis.resize(coeffs_.coeffs.size());
    for (std::size_t n = 0; n < basis.size(); ++n)
      basis[n] = detail::pt_basis(x, static_cast<int>(n), s.l, pt_norms_[n]);
    return sum_series(basis, t);
  }

  // Accumulated in extended precision: off the real axis the terms can exceed
  // the sum by many orders of magnitude.
  AmplitudePair sum_series(const std::vector<detail::AmplitudeT>& basis, double t) const {
    detail::cplx_t psi(0), dpsi(0);
    for (std::size_t n = 0; n < basis.size(); ++n) {
      const detail::cplx_t c = coeffs_.extended.empty()
                                   ? detail::cplx_t(coeffs_.coeffs[n].real(), coeffs_.coeffs[n].imag())
                                   : detail::cplx_t(coeffs_.extended[n]);
      const detail::cplx_t w = c * detail::phase(coeffs_.energies[n], t);
      psi += w * basis[n].psi;
      dpsi += w * basis[n].dpsi;
    }
    return detail::narrow({psi, dpsi});
  }

  ModelParams params_;
  StateSpec spec_;
  std::optional<Interval> domain_;
  CoefficientSet coeffs_;
  std::vector<double> pt_norms_;
};

/// Series coherent state sum_n c_n exp(-i E_n t) psi_n(x) over exactly n_max + 1 terms.
inline AmplitudePair eval_coherent_series(const ModelParams& params, const StateSpec& spec,
                                          cplx x, double t) {
  if (!std::holds_alternative<HoCoherentSeries>(spec) &&
      !std::holds_alternative<WellCoherent>(spec) && !std::holds_alternative<PtCoherent>(spec))
    throw DomainError("eval_coherent_series: " + family_name(spec) + " is not a series state");
  return Wavefunction(params, spec)(x, t);
}

/// Any family, with domain checks.
inline AmplitudePair evaluate(const ModelParams& params, const StateSpec& spec, cplx x, double t) {
  return Wavefunction(params, spec)(x, t);
}

}  // namespace cqtraj
