#pragma once

// Adaptive integration of complex first-order fields and complex Hamiltonian
// systems. Runtime failures (poles, domain escape, step exhaustion) end the
// run with a StopReason; only invalid arguments throw.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqtraj/errors.hpp"
#include "cqtraj/fields.hpp"
#include "cqtraj/states.hpp"

namespace cqtraj {

enum class Method { Rk4Fixed, Rk45Adaptive };

struct IntegratorConfig {
  Method method = Method::Rk45Adaptive;
  double dt_init = 1e-3;
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double dt_min = 1e-12;
  long max_steps = 10'000'000;
  /// Pole threshold relative to the running maximum of |psi| along the run.
  double pole_psi_floor = 1e-12;
  /// Allowed overshoot of Re(x) beyond the open physical interval.
  double domain_margin = 1e-9;

  void validate() const {
    std::vector<std::string> bad;
    if (!(dt_init > 0)) bad.push_back("dt_init must be positive");
    if (!(dt_min > 0)) bad.push_back("dt_min must be positive");
    if (!(dt_min < dt_init)) bad.push_back("dt_min must be smaller than dt_init");
    if (!(rel_tol > 0 && rel_tol < 1)) bad.push_back("rel_tol must lie in (0, 1)");
    if (!(abs_tol > 0 && abs_tol < 1)) bad.push_back("abs_tol must lie in (0, 1)");
    if (max_steps <= 0) bad.push_back("max_steps must be positive");
    if (!(pole_psi_floor > 0)) bad.push_back("pole_psi_floor must be positive");
    if (!(domain_margin >= 0)) bad.push_back("domain_margin must be non-negative");
    if (!bad.empty()) throw ConfigError(bad);
  }
};

struct TimeSpan {
  double t0;
  double t1;
};

enum class StopKind { Completed, PoleProximity, DomainEscape, StepUnderflow, MaxSteps };

inline const char* to_string(StopKind k) {
  switch (k) {
    case StopKind::Completed: return "COMPLETED";
    case StopKind::PoleProximity: return "POLE_PROXIMITY";
    case StopKind::DomainEscape: return "DOMAIN_ESCAPE";
    case StopKind::StepUnderflow: return "STEP_UNDERFLOW";
    case StopKind::MaxSteps: return "MAX_STEPS";
  }
  return "UNKNOWN";
}

struct StopReason {
  StopKind kind = StopKind::Completed;
  double time = 0.0;
  cplx location{};
  /// |psi| at the failure point, NaN when not applicable.
  double psi_abs = std::numeric_limits<double>::quiet_NaN();
  double step = 0.0;
  std::string detail;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<cplx> positions;
  std::optional<std::vector<cplx>> momenta;
  StopReason stop;
  std::map<std::string, std::string> meta;
  std::map<std::string, double> diagnostics;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  bool completed() const { return stop.kind == StopKind::Completed; }
};

/// Field sample: velocity plus the wavefunction magnitude used for pole
/// detection (NaN for fields without an underlying wavefunction).
struct FieldValue {
  cplx velocity;
  double amplitude = std::numeric_limits<double>::quiet_NaN();

  FieldValue(cplx v) : velocity(v) {}  // NOLINT: plain velocity lambdas
  FieldValue(cplx v, double amp) : velocity(v), amplitude(amp) {}
};

template <class F>
concept VelocityField = requires(const F& f, cplx x, double t) {
  { f(x, t) } -> std::convertible_to<FieldValue>;
};

template <class F>
concept BoundedField = VelocityField<F> && requires(const F& f) {
  { f.domain() } -> std::convertible_to<std::optional<Interval>>;
};

/// Log-derivative field of a prepared wavefunction.
class QuantumField {
 public:
  explicit QuantumField(Wavefunction wf) : wf_(std::move(wf)) {}
  QuantumField(const ModelParams& params, const StateSpec& spec) : wf_(params, spec) {}

  FieldValue operator()(cplx x, double t) const {
    const auto amp = wf_.evaluate_continued(x, t);
    return {velocity_from_amplitude(wf_.params(), amp, x), std::abs(amp.psi)};
  }
  std::optional<Interval> domain() const { return wf_.domain(); }
  const Wavefunction& wavefunction() const { return wf_; }

 private:
  Wavefunction wf_;
};

/// Closed-form oscillator coherent field in position units, dx/dt = (dX/dt) / alpha.
class HoCoherentField {
 public:
  HoCoherentField(ModelParams params, double lambda, double kappa)
      : params_(params), lambda_(lambda), kappa_(kappa) {}

  FieldValue operator()(cplx x, double t) const {
    const double alpha = params_.alpha();
    return ho_coherent_velocity(params_, lambda_, kappa_, alpha * x, t) / alpha;
  }

 private:
  ModelParams params_;
  double lambda_;
  double kappa_;
};

/// Real-axis guidance field of the coherent state in position units.
class DbbField {
 public:
  DbbField(ModelParams params, double lambda, double kappa)
      : params_(params), lambda_(lambda), kappa_(kappa) {}

  FieldValue operator()(cplx, double t) const {
    return cplx(dbb_velocity(lambda_, kappa_, params_.omega, t) / params_.alpha(), 0.0);
  }

 private:
  ModelParams params_;
  double lambda_;
  double kappa_;
};

namespace detail {

template <std::size_t N>
using StateVec = std::array<cplx, N>;

template <std::size_t N>
StateVec<N> axpy(const StateVec<N>& y, double h,
                 std::initializer_list<std::pair<double, const StateVec<N>*>> terms) {
  StateVec<N> out = y;
  for (const auto& [c, k] : terms) {
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
  }
  return out;
}

template <std::size_t N>
bool all_finite(const StateVec<N>& y) {
  for (const auto& v : y)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

struct PoleHit {
  double psi_abs;
  cplx x;
};

// Uniform sample grid t_k = t0 + k (t1 - t0) / (count - 1), last point exactly t1.
inline std::vector<double> sample_grid(TimeSpan span, int count) {
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = span.t0;
    return grid;
  }
  const double dt = (span.t1 - span.t0) / (count - 1);
  for (int k = 0; k < count; ++k) grid[k] = span.t0 + k * dt;
  grid.back() = span.t1;
  return grid;
}

struct Recorder {
  std::vector<double>& times;
  std::vector<cplx>& positions;
  std::vector<cplx>* momenta;

  template <std::size_t N>
  void push(double t, const StateVec<N>& y) {
    times.push_back(t);
    positions.push_back(y[0]);
    if (momenta && N > 1) momenta->push_back(y[N > 1 ? 1 : 0]);
  }
};

// Dormand-Prince 5(4) with the standard fourth-order continuous extension.
namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp

template <std::size_t N>
struct DenseStep {
  std::array<StateVec<N>, 5> r;
  double t0;
  double h;

  StateVec<N> at(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    StateVec<N> out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
    return out;
  }
};

// Cubic Hermite interpolant for the fixed-step scheme.
template <std::size_t N>
StateVec<N> hermite_at(double t, double t0, double h, const StateVec<N>& y0, const StateVec<N>& f0,
                       const StateVec<N>& y1, const StateVec<N>& f1) {
  const double s = (t - t0) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  StateVec<N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
  return out;
}

template <std::size_t N>
class Engine {
 public:
  using RhsFn = std::function<StateVec<N>(const StateVec<N>&, double, double&)>;

  Engine(RhsFn rhs, std::optional<Interval> domain, const IntegratorConfig& cfg)
      : rhs_(std::move(rhs)), domain_(domain), cfg_(cfg) {}

  Trajectory run(const StateVec<N>& y0, TimeSpan span, int samples, bool keep_momenta) {
    Trajectory traj;
    if (keep_momenta) traj.momenta.emplace();
    Recorder rec{traj.times, traj.positions, keep_momenta ? &*traj.momenta : nullptr};
    grid_ = sample_grid(span, samples);
    next_sample_ = 0;

    double amp0 = std::numeric_limits<double>::quiet_NaN();
    StateVec<N> f0;
    try {
      f0 = eval(y0, span.t0, amp0, /*check_floor=*/false);
    } catch (const PoleHit& hit) {
      rec.push(span.t0, y0);
      traj.stop = {StopKind::PoleProximity, span.t0, hit.x, hit.psi_abs, 0.0,
                   "field undefined at initial point"};
      return traj;
    }
    if (std::isfinite(amp0)) running_max_ = amp0;

    emit_until(span.t0, rec, [&](double) { return y0; });

    if (cfg_.method == Method::Rk45Adaptive)
      integrate_dp(y0, f0, span, rec, traj);
    else
      integrate_rk4(y0, f0, span, rec, traj);
    traj.diagnostics["steps"] = static_cast<double>(accepted_);
    traj.diagnostics["rejected"] = static_cast<double>(rejected_);
    return traj;
  }

 private:
  StateVec<N> eval(const StateVec<N>& y, double t, double& amp, bool check_floor = true) {
    StateVec<N> f;
    try {
      f = rhs_(y, t, amp);
    } catch (const PoleProximityError& e) {
      throw PoleHit{e.psi_abs(), e.where()};
    } catch (const SingularityError& e) {
      throw PoleHit{0.0, e.where()};
    }
    if (check_floor && std::isfinite(amp) && running_max_ > 0 &&
        amp < cfg_.pole_psi_floor * running_max_)
      throw PoleHit{amp, y[0]};
    if (!all_finite(f)) throw PoleHit{amp, y[0]};
    return f;
  }

  bool outside(const cplx& x) const {
    if (!domain_) return false;
    return !(x.real() > domain_->lo - cfg_.domain_margin &&
             x.real() < domain_->hi + cfg_.domain_margin);
  }

  // Emits samples with time <= t_end. Returns false on domain escape.
  template <class Interp>
  bool emit_until(double t_end, Recorder& rec, Interp&& interp) {
    while (next_sample_ < grid_.size() && grid_[next_sample_] <= t_end) {
      const double ts = grid_[next_sample_];
      const auto y = interp(ts);
      if (outside(y[0]) || !all_finite(y)) return false;
      rec.push(ts, y);
      ++next_sample_;
    }
    return true;
  }

  // Bisects the step [t0, t1] for the first time Re(x) leaves the interval.
  template <class Interp>
  void record_escape(Trajectory& traj, double t0, double t1, double amp, double h,
                     Interp&& interp) {
    double lo = t0, hi = t1;
    for (int i = 0; i < 80 && hi - lo > 0; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (outside(interp(mid)[0]))
        hi = mid;
      else
        lo = mid;
    }
    traj.stop = {StopKind::DomainEscape, hi, interp(hi)[0], amp, h,
                 "Re(x) left the physical interval"};
  }

  void finish_early(Recorder& rec, Trajectory& traj, double t, const StateVec<N>& y) {
    if (traj.times.empty() || t > traj.times.back()) rec.push(t, y);
  }

  void integrate_dp(StateVec<N> y, StateVec<N> k1, TimeSpan span, Recorder& rec,
                    Trajectory& traj) {
    using namespace dp;
    double t = span.t0;
    double h = std::min(cfg_.dt_init, span.t1 - span.t0);
    while (true) {
      if (accepted_ + rejected_ >= cfg_.max_steps) {
        finish_early(rec, traj, t, y);
        traj.stop = {StopKind::MaxSteps, t, y[0], std::numeric_limits<double>::quiet_NaN(), h,
                     "step budget exhausted"};
        return;
      }
      const bool last = h >= span.t1 - t;
      if (last) h = span.t1 - t;
      const double t_new = last ? span.t1 : t + h;

      StateVec<N> k2, k3, k4, k5, k6, k7, y_new;
      double amp = std::numeric_limits<double>::quiet_NaN();
      try {
        k2 = eval(axpy<N>(y, h, {{a21, &k1}}), t + c2 * h, amp);
        k3 = eval(axpy<N>(y, h, {{a31, &k1}, {a32, &k2}}), t + c3 * h, amp);
        k4 = eval(axpy<N>(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}), t + c4 * h, amp);
        k5 = eval(axpy<N>(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}), t + c5 * h,
                  amp);
        k6 = eval(axpy<N>(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}),
                  t + h, amp);
        y_new = axpy<N>(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
        if (!all_finite(y_new)) throw PoleHit{amp, y[0]};
        k7 = eval(y_new, t_new, amp);
      } catch (const PoleHit& hit) {
        ++rejected_;
        h *= 0.5;
        if (h < cfg_.dt_min) {
          finish_early(rec, traj, t, y);
          traj.stop = {StopKind::PoleProximity, t, hit.x, hit.psi_abs, h,
                       "step collapsed near a wavefunction node or singularity"};
          return;
        }
        continue;
      }

      double err = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
        const double scale =
            cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err = std::max(err, std::abs(e) / scale);
      }

      if (err <= 1.0) {
        DenseStep<N> dense;
        dense.t0 = t;
        dense.h = h;
        for (std::size_t i = 0; i < N; ++i) {
          const cplx dy = y_new[i] - y[i];
          const cplx bspl = h * k1[i] - dy;
          dense.r[0][i] = y[i];
          dense.r[1][i] = dy;
          dense.r[2][i] = bspl;
          dense.r[3][i] = dy - h * k7[i] - bspl;
          dense.r[4][i] =
              h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        ++accepted_;
        auto interp = [&](double ts) { return dense.at(ts); };
        if (!emit_until(t_new, rec, interp) || outside(y_new[0])) {
          record_escape(traj, t, t_new, amp, h, interp);
          return;
        }
        t = t_new;
        y = y_new;
        k1 = k7;
        if (std::isfinite(amp)) running_max_ = std::max(running_max_, amp);
        if (last) {
          traj.stop = {StopKind::Completed, t, y[0], amp, h, ""};
          return;
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
      } else {
        ++rejected_;
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h < cfg_.dt_min) {
          finish_early(rec, traj, t, y);
          traj.stop = {StopKind::StepUnderflow, t, y[0], amp, h,
                       "error control demanded a step below dt_min"};
          return;
        }
      }
    }
  }

  void integrate_rk4(StateVec<N> y, StateVec<N> k1, TimeSpan span, Recorder& rec,
                     Trajectory& traj) {
    double t = span.t0;
    double h = std::min(cfg_.dt_init, span.t1 - span.t0);
    while (true) {
      if (accepted_ + rejected_ >= cfg_.max_steps) {
        finish_early(rec, traj, t, y);
        traj.stop = {StopKind::MaxSteps, t, y[0], std::numeric_limits<double>::quiet_NaN(), h,
                     "step budget exhausted"};
        return;
      }
      const bool last = h >= span.t1 - t;
      if (last) h = span.t1 - t;
      const double t_new = last ? span.t1 : t + h;
      StateVec<N> k2, k3, k4, y_new, f_new;
      double amp = std::numeric_limits<double>::quiet_NaN();
      try {
        k2 = eval(axpy<N>(y, h, {{0.5, &k1}}), t + 0.5 * h, amp);
        k3 = eval(axpy<N>(y, h, {{0.5, &k2}}), t + 0.5 * h, amp);
        k4 = eval(axpy<N>(y, h, {{1.0, &k3}}), t + h, amp);
        y_new = axpy<N>(y, h, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
        if (!all_finite(y_new)) throw PoleHit{amp, y[0]};
        f_new = eval(y_new, t_new, amp);
      } catch (const PoleHit& hit) {
        ++rejected_;
        h *= 0.5;
        if (h < cfg_.dt_min) {
          finish_early(rec, traj, t, y);
          traj.stop = {StopKind::PoleProximity, t, hit.x, hit.psi_abs, h,
                       "step collapsed near a wavefunction node or singularity"};
          return;
        }
        continue;
      }
      ++accepted_;
      const double h_used = h;
      auto interp = [&](double ts) { return hermite_at<N>(ts, t, h_used, y, k1, y_new, f_new); };
      if (!emit_until(t_new, rec, interp) || outside(y_new[0])) {
        record_escape(traj, t, t_new, amp, h, interp);
        return;
      }
      t = t_new;
      y = y_new;
      k1 = f_new;
      if (std::isfinite(amp)) running_max_ = std::max(running_max_, amp);
      if (last) {
        traj.stop = {StopKind::Completed, t, y[0], amp, h, ""};
        return;
      }
      h = cfg_.dt_init;
    }
  }

  RhsFn rhs_;
  std::optional<Interval> domain_;
  IntegratorConfig cfg_;
  std::vector<double> grid_;
  std::size_t next_sample_ = 0;
  double running_max_ = 0.0;
  long accepted_ = 0;
  long rejected_ = 0;
};

inline void check_span(TimeSpan span, int samples) {
  if (!(span.t1 > span.t0) || !std::isfinite(span.t0) || !std::isfinite(span.t1))
    throw std::invalid_argument("integrate: t_span must satisfy t0 < t1");
  if (samples < 2) throw std::invalid_argument("integrate: need at least two samples");
}

}  // namespace detail

inline constexpr int kDefaultSamples = 2000;

/// Integrates dx/dt = field(x, t) from x0 over span, sampled on a uniform grid.
template <VelocityField F>
Trajectory integrate_field(const F& field, cplx x0, TimeSpan span, const IntegratorConfig& cfg,
                           int samples = kDefaultSamples) {
  detail::check_span(span, samples);
  cfg.validate();
  std::optional<Interval> domain;
  if constexpr (BoundedField<F>) domain = field.domain();
  if (domain && !domain->contains(x0.real()))
    throw std::invalid_argument("integrate_field: x0 outside the field's physical interval");
  if (!std::isfinite(x0.real()) || !std::isfinite(x0.imag()))
    throw std::invalid_argument("integrate_field: x0 must be finite");

  auto rhs = [&field](const detail::StateVec<1>& y, double t, double& amp) {
    const FieldValue v = field(y[0], t);
    amp = v.amplitude;
    return detail::StateVec<1>{v.velocity};
  };
  detail::Engine<1> engine(rhs, domain, cfg);
  return engine.run({x0}, span, samples, false);
}

/// Integrates x' = p/m, p' = F(x); diagnostics carry the complex energy drift.
inline Trajectory integrate_hamiltonian(const ClassicalSystem& system, cplx x0, cplx p0,
                                        TimeSpan span, const IntegratorConfig& cfg,
                                        int samples = kDefaultSamples) {
  detail::check_span(span, samples);
  cfg.validate();
  system.params.validate();
  cplx h0;
  try {
    h0 = hamiltonian(system, x0, p0);
  } catch (const SingularityError&) {
    throw std::invalid_argument("integrate_hamiltonian: x0 lies on a singular line");
  }
  const double mass = system.params.mass;
  auto rhs = [&system, mass](const detail::StateVec<2>& y, double, double& amp) {
    amp = std::numeric_limits<double>::quiet_NaN();
    return detail::StateVec<2>{y[1] / mass, classical_force(system, y[0])};
  };
  detail::Engine<2> engine(rhs, std::nullopt, cfg);
  Trajectory traj = engine.run({x0, p0}, span, samples, true);

  double drift = 0.0;
  const double scale = std::max(std::abs(h0), 1e-300);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    try {
      drift = std::max(drift, std::abs(hamiltonian(system, traj.positions[i],
                                                   (*traj.momenta)[i]) - h0) / scale);
    } catch (const SingularityError&) {
      drift = std::numeric_limits<double>::infinity();
    }
  }
  traj.diagnostics["H0_re"] = h0.real();
  traj.diagnostics["H0_im"] = h0.imag();
  traj.diagnostics["energy_drift"] = drift;
  return traj;
}

}  // namespace cqtraj
