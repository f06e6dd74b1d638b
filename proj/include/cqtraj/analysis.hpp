#pragma once

// Trajectory diagnostics: axis-aligned ellipse fits, recurrence-based period
// detection, conservation drift and geometric quantum/classical congruence.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cqtraj/errors.hpp"
#include "cqtraj/fields.hpp"
#include "cqtraj/integrate.hpp"

namespace cqtraj {

enum class Orientation { Clockwise, Anticlockwise, Undetermined };

inline const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::Clockwise: return "CLOCKWISE";
    case Orientation::Anticlockwise: return "ANTICLOCKWISE";
    case Orientation::Undetermined: return "UNDETERMINED";
  }
  return "UNDETERMINED";
}

inline cplx centroid(std::span<const cplx> pts) {
  cplx sum = 0.0;
  for (const auto& p : pts) sum += p;
  return pts.empty() ? cplx{} : sum / static_cast<double>(pts.size());
}

/// Largest pairwise distance between samples.
inline double diameter(std::span<const cplx> pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, std::abs(pts[i] - pts[j]));
  return d;
}

/// Discrete signed area swept about `center`; positive means anticlockwise.
inline double signed_area(std::span<const cplx> pts, cplx center) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const cplx a = pts[i] - center;
    const cplx b = pts[i + 1] - center;
    area += a.real() * (b.imag() - a.imag()) - a.imag() * (b.real() - a.real());
  }
  return 0.5 * area;
}

inline Orientation orientation_of(std::span<const cplx> pts) {
  const double area = signed_area(pts, centroid(pts));
  if (area > 0) return Orientation::Anticlockwise;
  if (area < 0) return Orientation::Clockwise;
  return Orientation::Undetermined;
}

// --- ellipse fit ------------------------------------------------------------

struct EllipseFit {
  /// Semi-axis along the real direction.
  double A = 0.0;
  /// Semi-axis along the imaginary direction (non-negative).
  double B = 0.0;
  cplx center{};
  /// Parametric angle of the first sample: x - center = A cos(phase) + i B sin(phase).
  double phase = 0.0;
  /// RMS of |x_r^2/A^2 + x_i^2/B^2 - 1| over center-shifted samples.
  double residual = 0.0;
  Orientation orientation = Orientation::Undetermined;

  /// B with the traversal sense folded in: the coefficient of sin in
  /// x_i = B sin(theta) when x_r = A cos(theta) with theta increasing.
  double signed_B() const { return orientation == Orientation::Clockwise ? -B : B; }
};

inline constexpr std::size_t kMinEllipseSamples = 16;

inline EllipseFit fit_ellipse(std::span<const cplx> pts) {
  if (pts.size() < kMinEllipseSamples)
    throw std::invalid_argument("fit_ellipse: need at least 16 samples");
  const cplx c0 = centroid(pts);

  // Principal spread of the cloud: collinear samples have no second axis.
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pts) {
    const cplx d = p - c0;
    sxx += d.real() * d.real();
    syy += d.imag() * d.imag();
    sxy += d.real() * d.imag();
  }
  Eigen::Matrix2d cov;
  cov << sxx, sxy, sxy, syy;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double major = eig.eigenvalues()(1);
  const double minor = std::max(eig.eigenvalues()(0), 0.0);
  if (major <= 0 || std::sqrt(minor / major) < 1e-9) {
    const Eigen::Vector2d dir = eig.eigenvectors().col(1);
    throw DegenerateFitError(c0, cplx(dir(0), dir(1)));
  }

  // u x^2 + w y^2 + d x + e y = 1 about the centroid.
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx d = pts[static_cast<std::size_t>(i)] - c0;
    design(i, 0) = d.real() * d.real();
    design(i, 1) = d.imag() * d.imag();
    design(i, 2) = d.real();
    design(i, 3) = d.imag();
  }
  const Eigen::Vector4d coef = design.colPivHouseholderQr().solve(ones);
  const double u = coef(0), w = coef(1);
  if (!(u > 0) || !(w > 0)) throw DomainError("fit_ellipse: samples do not lie on an ellipse");
  const double xc = -coef(2) / (2 * u);
  const double yc = -coef(3) / (2 * w);
  const double g = 1 + u * xc * xc + w * yc * yc;

  EllipseFit fit;
  fit.A = std::sqrt(g / u);
  fit.B = std::sqrt(g / w);
  fit.center = c0 + cplx(xc, yc);

  double ss = 0;
  for (const auto& p : pts) {
    const cplx d = p - fit.center;
    const double r = d.real() * d.real() / (fit.A * fit.A) +
                     d.imag() * d.imag() / (fit.B * fit.B) - 1.0;
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(pts.size()));
  const cplx first = pts.front() - fit.center;
  fit.phase = std::atan2(first.imag() / fit.B, first.real() / fit.A);
  const double area = signed_area(pts, fit.center);
  fit.orientation = area > 0   ? Orientation::Anticlockwise
                    : area < 0 ? Orientation::Clockwise
                               : Orientation::Undetermined;
  return fit;
}

inline EllipseFit fit_ellipse(const Trajectory& traj) { return fit_ellipse(traj.positions); }

// --- period detection -------------------------------------------------------

struct PeriodEstimate {
  bool found = false;
  double period = std::numeric_limits<double>::quiet_NaN();
  /// max |x(t + T) - x(t)| over the window at the reported period.
  double recurrence_error = std::numeric_limits<double>::quiet_NaN();
  Orientation orientation = Orientation::Undetermined;
  /// Mean time per revolution about the window centroid, NaN if under one turn.
  double winding_period = std::numeric_limits<double>::quiet_NaN();
  double diameter = 0.0;
};

struct PeriodSearch {
  double min_period = 0.05;
  int grid_points = 2000;
  /// A period exists only if some candidate recurs within this fraction of the diameter.
  double existence_fraction = 0.10;
  std::size_t min_samples = 200;
};

namespace detail {

// Four-point Lagrange interpolation of the sampled curve.
class SampledCurve {
 public:
  SampledCurve(std::span<const double> t, std::span<const cplx> x) : t_(t), x_(x) {}

  cplx at(double t) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    auto hi = static_cast<std::ptrdiff_t>(it - t_.begin());
    const auto n = static_cast<std::ptrdiff_t>(t_.size());
    std::ptrdiff_t start = std::clamp<std::ptrdiff_t>(hi - 2, 0, n - 4);
    cplx sum = 0.0;
    for (std::ptrdiff_t i = start; i < start + 4; ++i) {
      double w = 1.0;
      for (std::ptrdiff_t j = start; j < start + 4; ++j)
        if (j != i) w *= (t - t_[j]) / (t_[i] - t_[j]);
      sum += w * x_[i];
    }
    return sum;
  }

 private:
  std::span<const double> t_;
  std::span<const cplx> x_;
};

inline double recurrence(const SampledCurve& curve, std::span<const double> t,
                         std::span<const cplx> x, double T) {
  double worst = 0.0;
  const double t_end = t.back();
  for (std::size_t i = 0; i < t.size() && t[i] + T <= t_end; ++i)
    worst = std::max(worst, std::abs(curve.at(t[i] + T) - x[i]));
  return worst;
}

template <class F>
double golden_minimize(F&& f, double lo, double hi, int iterations = 60) {
  const double inv_phi = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iterations && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++k) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace detail

/// Period of the motion inside window [t_lo, t_hi].
///
/// Candidate periods are scanned on a grid, local minima of the recurrence
/// distance are refined by golden section, and the refined minimum nearest
/// the winding period about the centroid is reported. Without a full
/// revolution the smallest refined minimum within the existence threshold
/// is reported instead.
inline PeriodEstimate detect_period(const Trajectory& traj, double t_lo, double t_hi,
                                    const PeriodSearch& opts = {}) {
  if (!(t_hi > t_lo)) throw std::invalid_argument("detect_period: empty window");
  if (traj.empty() || t_lo < traj.times.front() || t_hi > traj.times.back() + 1e-12)
    throw std::invalid_argument("detect_period: window outside trajectory span");
  const auto first = std::lower_bound(traj.times.begin(), traj.times.end(), t_lo);
  const auto last = std::upper_bound(traj.times.begin(), traj.times.end(), t_hi);
  const auto i0 = static_cast<std::size_t>(first - traj.times.begin());
  const auto i1 = static_cast<std::size_t>(last - traj.times.begin());
  if (i1 - i0 < opts.min_samples)
    throw std::invalid_argument("detect_period: need at least 200 samples in the window");

  std::span<const double> t(traj.times.data() + i0, i1 - i0);
  std::span<const cplx> x(traj.positions.data() + i0, i1 - i0);
  detail::SampledCurve curve(t, x);

  PeriodEstimate est;
  est.diameter = diameter(x);
  const double span_len = t.back() - t.front();
  const double t_max = span_len / 3.0;
  if (!(t_max > opts.min_period)) throw std::invalid_argument("detect_period: window too short");

  const cplx c = centroid(x);
  double unwrapped = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    unwrapped += std::arg((x[i + 1] - c) / (x[i] - c));
  if (std::abs(unwrapped) >= 2 * std::numbers::pi)
    est.winding_period = span_len * 2 * std::numbers::pi / std::abs(unwrapped);

  const int m = opts.grid_points;
  std::vector<double> grid(m), r(m);
  for (int j = 0; j < m; ++j) {
    grid[j] = opts.min_period + (t_max - opts.min_period) * j / (m - 1);
    r[j] = detail::recurrence(curve, t, x, grid[j]);
  }

  struct Candidate {
    double T;
    double err;
  };
  std::vector<Candidate> minima;
  auto rec = [&](double T) { return detail::recurrence(curve, t, x, T); };
  // The left edge is excluded: short lags recur trivially.
  for (int j = 1; j < m; ++j) {
    const bool right_ok = j == m - 1 || r[j] <= r[j + 1];
    if (r[j] <= r[j - 1] && right_ok) {
      const double lo = grid[j - 1];
      const double hi = j == m - 1 ? grid[j] : grid[j + 1];
      const double T = detail::golden_minimize(rec, lo, hi);
      const double e = rec(T);
      minima.push_back(e <= r[j] ? Candidate{T, e} : Candidate{grid[j], r[j]});
    }
  }
  const double threshold = opts.existence_fraction * est.diameter;
  const bool exists = std::any_of(minima.begin(), minima.end(),
                                  [&](const Candidate& cnd) { return cnd.err < threshold; });
  if (!exists) return est;

  std::optional<Candidate> chosen;
  if (std::isfinite(est.winding_period)) {
    for (const auto& cnd : minima) {
      const double rel = std::abs(cnd.T - est.winding_period) / est.winding_period;
      if (rel <= 0.1 && (!chosen || rel < std::abs(chosen->T - est.winding_period) /
                                              est.winding_period))
        chosen = cnd;
    }
  }
  if (!chosen) {
    for (const auto& cnd : minima) {
      if (cnd.err < threshold) {
        chosen = cnd;
        break;
      }
    }
  }
  est.found = true;
  est.period = chosen->T;
  est.recurrence_error = chosen->err;
  const double area = signed_area(x, c);
  est.orientation = area > 0   ? Orientation::Anticlockwise
                    : area < 0 ? Orientation::Clockwise
                               : Orientation::Undetermined;
  return est;
}

/// Largest |x - center| inside each of `count` consecutive cycles of length
/// `period` starting at t_start; center is the centroid of those samples.
inline std::vector<double> cycle_extrema(const Trajectory& traj, double t_start, double period,
                                         int count) {
  if (!(period > 0) || count <= 0) throw std::invalid_argument("cycle_extrema: bad cycle spec");
  const double t_end = t_start + period * count;
  std::vector<cplx> pts;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= t_start && traj.times[i] <= t_end) pts.push_back(traj.positions[i]);
  if (pts.empty()) throw std::invalid_argument("cycle_extrema: no samples in range");
  const cplx c = centroid(pts);
  std::vector<double> out(count, 0.0);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < t_start || t >= t_end) continue;
    const int k = std::min(count - 1, static_cast<int>((t - t_start) / period));
    out[k] = std::max(out[k], std::abs(traj.positions[i] - c));
  }
  return out;
}

// --- conservation and congruence --------------------------------------------

struct AbsPosition {};
struct ComplexEnergy {
  ClassicalSystem system;
};
using ConservedQuantity = std::variant<AbsPosition, ComplexEnergy>;

/// max_t |q(t) - q(t0)| / max(|q(t0)|, floor).
inline double conserved_drift(const Trajectory& traj, const ConservedQuantity& quantity,
                              double floor = 1e-300) {
  if (traj.empty()) throw std::invalid_argument("conserved_drift: empty trajectory");
  if (std::holds_alternative<AbsPosition>(quantity)) {
    const double q0 = std::abs(traj.positions.front());
    double worst = 0.0;
    for (const auto& x : traj.positions) worst = std::max(worst, std::abs(std::abs(x) - q0));
    return worst / std::max(q0, floor);
  }
  if (!traj.momenta) throw std::invalid_argument("conserved_drift: trajectory has no momenta");
  const auto& sys = std::get<ComplexEnergy>(quantity).system;
  const auto& p = *traj.momenta;
  const cplx q0 = hamiltonian(sys, traj.positions.front(), p.front());
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i)
    worst = std::max(worst, std::abs(hamiltonian(sys, traj.positions[i], p[i]) - q0));
  return worst / std::max(std::abs(q0), floor);
}

/// Symmetric discrete Hausdorff distance between two sampled curves,
/// normalized by the larger curve diameter.
inline double congruence_metric(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("congruence_metric: empty trajectory");
  auto directed = [](std::span<const cplx> from, std::span<const cplx> to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, std::norm(p - q));
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  const double h = std::max(directed(a, b), directed(b, a));
  const double scale = std::max(diameter(a), diameter(b));
  return scale > 0 ? h / scale : h;
}

inline double congruence_metric(const Trajectory& q, const Trajectory& c) {
  return congruence_metric(q.positions, c.positions);
}

/// Common period of exp(-i E_n t) phase differences when the energies are
/// integer multiples of a base frequency; empty otherwise.
inline std::optional<double> field_period(const CoefficientSet& set, double base_frequency) {
  if (set.energies.size() < 2) return std::nullopt;
  long g = 0;
  for (std::size_t n = 1; n < set.energies.size(); ++n) {
    if (std::abs(set.coeffs[n]) == 0.0) continue;
    const double d = (set.energies[n] - set.energies[0]) / base_frequency;
    const long k = std::lround(d);
    if (std::abs(d - static_cast<double>(k)) > 1e-9) return std::nullopt;
    g = std::gcd(g, std::abs(k));
  }
  if (g == 0) return std::nullopt;
  return 2 * std::numbers::pi / (base_frequency * static_cast<double>(g));
}

}  // namespace cqtraj
