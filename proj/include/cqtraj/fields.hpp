#pragma once

// Velocity and force fields: the log-derivative quantum velocity, the closed
// form oscillator coherent-state field, the real-axis guidance field used for
// contrast, and complex classical force laws with their analytic solutions.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <variant>

#include "cqtraj/errors.hpp"
#include "cqtraj/states.hpp"

namespace cqtraj {

/// v = -i (hbar / m) psi'/psi, i.e. grad S / m with psi = exp(iS/hbar).
///
/// Throws PoleProximityError when |psi| <= psi_floor or the ratio is not finite.
inline cplx velocity_from_amplitude(const ModelParams& params, const AmplitudePair& amp,
                                    cplx x, double psi_floor = 0.0) {
  const double mag = std::abs(amp.psi);
  if (!(mag > psi_floor)) throw PoleProximityError(mag, x);
  const cplx v = cplx(0.0, -params.hbar / params.mass) * (amp.dpsi_dx / amp.psi);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw PoleProximityError(mag, x);
  return v;
}

inline cplx quantum_velocity(const ModelParams& params, const StateSpec& spec, cplx x, double t,
                             double psi_floor = 0.0) {
  return velocity_from_amplitude(params, evaluate(params, spec, x, t), x, psi_floor);
}

/// dX/dt = i omega (X - 2 eta) in dimensionless X = alpha x.
inline cplx ho_coherent_velocity(const ModelParams& params, double lambda, double kappa, cplx X,
                                 double t) {
  const cplx eta = lambda / std::numbers::sqrt2 * std::polar(1.0, -(params.omega * t - kappa));
  return cplx(0.0, params.omega) * (X - 2.0 * eta);
}

/// Real-axis guidance velocity of the coherent state, independent of position.
inline double dbb_velocity(double lambda, double kappa, double omega, double t) {
  return -omega * std::numbers::sqrt2 * lambda * std::sin(omega * t - kappa);
}

// --- complex classical mechanics -------------------------------------------

struct Harmonic {};
struct FreeParticle {};
struct PoschlTeller {
  double l = 1.5;
};

struct ClassicalSystem {
  std::variant<Harmonic, FreeParticle, PoschlTeller> kind;
  ModelParams params;

  /// Spring constant k = m omega^2 of the harmonic kind.
  double spring_constant() const { return params.mass * params.omega * params.omega; }
};

struct EnergySpec {
  double E = 0.0;
};

inline constexpr double kPtSingularityFloor = 1e-12;

/// V(x): k x^2 / 2, 0, or l(l-1)/sin^2(2x).
inline cplx potential(const ClassicalSystem& sys, cplx x) {
  if (std::holds_alternative<Harmonic>(sys.kind)) return 0.5 * sys.spring_constant() * x * x;
  if (std::holds_alternative<FreeParticle>(sys.kind)) return 0.0;
  const double l = std::get<PoschlTeller>(sys.kind).l;
  const cplx s = std::sin(2.0 * x);
  if (std::abs(s) < kPtSingularityFloor)
    throw SingularityError("Poschl-Teller potential singular at sin(2x) = 0", x);
  return l * (l - 1.0) / (s * s);
}

/// -dV/dx for complex x.
inline cplx classical_force(const ClassicalSystem& sys, cplx x) {
  if (std::holds_alternative<Harmonic>(sys.kind)) return -sys.spring_constant() * x;
  if (std::holds_alternative<FreeParticle>(sys.kind)) return 0.0;
  const double l = std::get<PoschlTeller>(sys.kind).l;
  const cplx s = std::sin(2.0 * x);
  if (std::abs(s) < kPtSingularityFloor)
    throw SingularityError("Poschl-Teller force singular at sin(2x) = 0", x);
  return 4.0 * l * (l - 1.0) * std::cos(2.0 * x) / (s * s * s);
}

/// Complex energy H = p^2 / 2m + V(x).
inline cplx hamiltonian(const ClassicalSystem& sys, cplx x, cplx p) {
  return p * p / (2.0 * sys.params.mass) + potential(sys, x);
}

/// A cos(omega t) + i B sin(omega t) with B = sqrt(A^2 - 2E / (m omega^2)).
inline cplx classical_ho_solution(double A, EnergySpec energy, const ModelParams& params,
                                  double t) {
  const double m_w2 = params.mass * params.omega * params.omega;
  if (!(A > 0)) throw DomainError("classical_ho_solution: A must be positive");
  if (!(energy.E > 0) || energy.E > 0.5 * m_w2 * A * A)
    throw DomainError("classical_ho_solution: require 0 < E <= m omega^2 A^2 / 2");
  const double B = std::sqrt(std::max(0.0, A * A - 2.0 * energy.E / m_w2));
  return {A * std::cos(params.omega * t), B * std::sin(params.omega * t)};
}

/// (sign sqrt(2E/m) t + c_r) + i c_i.
inline cplx free_particle_solution(EnergySpec energy, double c_r, double c_i, int sign,
                                   const ModelParams& params, double t) {
  if (!(energy.E > 0)) throw DomainError("free_particle_solution: E must be positive");
  const double speed = std::sqrt(2.0 * energy.E / params.mass);
  return {(sign < 0 ? -speed : speed) * t + c_r, c_i};
}

/// Principal root p0 = sqrt(2m (E - V(x0))); negate for the other branch.
inline cplx initial_momentum(const ClassicalSystem& sys, cplx x0, EnergySpec energy) {
  return std::sqrt(2.0 * sys.params.mass * (cplx(energy.E) - potential(sys, x0)));
}

}  // namespace cqtraj
