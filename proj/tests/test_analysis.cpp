#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cqtraj/analysis.hpp"

using namespace cqtraj;

namespace {

constexpr double kPi = std::numbers::pi;
const ModelParams kUnit{};

Trajectory synthetic(double t0, double t1, int n, auto&& f) {
  Trajectory traj;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    traj.times.push_back(t);
    traj.positions.push_back(f(t));
  }
  return traj;
}

}  // namespace

TEST(FitEllipse, ExactCircle) {
  const auto traj = synthetic(0, 2 * kPi, 400, [](double t) { return std::polar(1.0, t); });
  const auto fit = fit_ellipse(traj);
  EXPECT_NEAR(fit.A, 1.0, 1e-12);
  EXPECT_NEAR(fit.B, 1.0, 1e-12);
  EXPECT_LT(fit.residual, 1e-12);
  EXPECT_EQ(fit.orientation, Orientation::Anticlockwise);
}

TEST(FitEllipse, ShiftedEllipseAndPhase) {
  const cplx c(0.7, -0.2);
  const auto traj = synthetic(0, 2 * kPi, 500, [&](double t) {
    return c + cplx(2.5 * std::cos(t + 0.4), -0.8 * std::sin(t + 0.4));
  });
  const auto fit = fit_ellipse(traj);
  EXPECT_NEAR(fit.A, 2.5, 1e-10);
  EXPECT_NEAR(fit.B, 0.8, 1e-10);
  EXPECT_LT(std::abs(fit.center - c), 1e-10);
  EXPECT_EQ(fit.orientation, Orientation::Clockwise);
  EXPECT_NEAR(fit.signed_B(), -0.8, 1e-10);
}

TEST(FitEllipse, PartialArcStillRecoversAxes) {
  // A centroid-shifted arc exercises the linear centre terms.
  const auto traj = synthetic(0.2, 3.5, 200,
                              [](double t) { return cplx(3 * std::cos(t), 1.5 * std::sin(t)); });
  const auto fit = fit_ellipse(traj);
  EXPECT_NEAR(fit.A, 3.0, 1e-9);
  EXPECT_NEAR(fit.B, 1.5, 1e-9);
}

TEST(FitEllipse, ClassicalSolutionSamples) {
  const auto traj = synthetic(0, 2 * kPi, 1000, [](double t) {
    return classical_ho_solution(3.2, {4.5}, kUnit, t);
  });
  const auto fit = fit_ellipse(traj);
  EXPECT_NEAR(fit.A, 3.2, 1e-8);
  EXPECT_NEAR(fit.B, std::sqrt(10.24 - 9.0), 1e-8);
}

TEST(FitEllipse, DegenerateLineReportsLine) {
  const auto traj = synthetic(0, 1, 50, [](double t) { return cplx(1 + 2 * t, 3 + 2 * t); });
  try {
    fit_ellipse(traj);
    FAIL();
  } catch (const DegenerateFitError& e) {
    EXPECT_LT(std::abs(e.line_point() - cplx(2, 4)), 1e-12);
    const cplx d = e.line_direction();
    EXPECT_NEAR(std::abs(d.real()), std::abs(d.imag()), 1e-12);
  }
}

TEST(FitEllipse, TooFewSamples) {
  const auto traj = synthetic(0, 1, 10, [](double t) { return std::polar(1.0, t); });
  EXPECT_THROW(fit_ellipse(traj), std::invalid_argument);
}

TEST(DetectPeriod, CircleOnThreeTurns) {
  const auto traj = synthetic(0, 6 * kPi, 3000, [](double t) { return std::polar(1.0, t); });
  const auto est = detect_period(traj, 0, 6 * kPi);
  ASSERT_TRUE(est.found);
  EXPECT_NEAR(est.period, 2 * kPi, 1e-3);
  EXPECT_EQ(est.orientation, Orientation::Anticlockwise);
  EXPECT_LT(est.recurrence_error, 1e-3);
}

TEST(DetectPeriod, ClockwiseEpicycleReportsLoopPeriod) {
  // Exact repetition only every 2 pi, but each clockwise loop takes pi/2 and
  // recurs to within 7% of the diameter; the loop period is reported.
  const auto traj = synthetic(0, 20 * kPi, 6000, [](double t) {
    return std::polar(1.0, -4 * t) + 0.05 * std::polar(1.0, t);
  });
  const auto est = detect_period(traj, 0, 20 * kPi);
  ASSERT_TRUE(est.found);
  EXPECT_EQ(est.orientation, Orientation::Clockwise);
  EXPECT_NEAR(est.period, kPi / 2, 0.05 * kPi / 2);
}

TEST(DetectPeriod, TimeShiftInvariance) {
  auto f = [](double t) { return cplx(std::cos(2 * t), 0.5 * std::sin(2 * t)) + 0.1 * std::polar(1.0, 4 * t); };
  const auto a = synthetic(0, 30, 3000, f);
  const auto b = synthetic(1.234, 31.234, 3000, f);
  const auto ea = detect_period(a, 0, 30);
  const auto eb = detect_period(b, 1.234, 31.234);
  ASSERT_TRUE(ea.found && eb.found);
  const double resolution = (10.0 - 0.05) / 1999;
  EXPECT_NEAR(ea.period, eb.period, resolution);
  EXPECT_NEAR(ea.period, kPi, 1e-3);
}

TEST(DetectPeriod, AperiodicRampHasNoPeriod) {
  const auto traj = synthetic(0, 10, 1000, [](double t) { return cplx(t, 0.1 * t * t); });
  const auto est = detect_period(traj, 0, 10);
  EXPECT_FALSE(est.found);
  EXPECT_EQ(est.orientation, Orientation::Undetermined);
}

TEST(DetectPeriod, PreconditionErrors) {
  const auto traj = synthetic(0, 10, 1000, [](double t) { return std::polar(1.0, t); });
  EXPECT_THROW(detect_period(traj, 2, 1), std::invalid_argument);
  EXPECT_THROW(detect_period(traj, -1, 5), std::invalid_argument);
  EXPECT_THROW(detect_period(traj, 0, 1), std::invalid_argument);  // < 200 samples
}

TEST(CycleExtrema, DecayingSpiral) {
  const auto traj = synthetic(0, 10 * kPi, 5000, [](double t) {
    return std::exp(-0.05 * t) * std::polar(1.0, -2 * t);
  });
  const auto ext = cycle_extrema(traj, 0, kPi, 5);
  ASSERT_EQ(ext.size(), 5u);
  for (int k = 1; k < 5; ++k) EXPECT_LT(ext[k], ext[k - 1]);
  EXPECT_THROW(cycle_extrema(traj, 0, -1, 5), std::invalid_argument);
}

TEST(ConservedDrift, AbsPositionOfCircleIsZero) {
  const auto traj = synthetic(0, 2 * kPi, 300, [](double t) { return std::polar(2.0, t); });
  EXPECT_LT(conserved_drift(traj, AbsPosition{}), 1e-15);
}

TEST(ConservedDrift, ComplexEnergyNeedsMomenta) {
  const auto traj = synthetic(0, 1, 30, [](double t) { return cplx(t); });
  EXPECT_THROW(conserved_drift(traj, ComplexEnergy{{Harmonic{}, kUnit}}), std::invalid_argument);
}

TEST(ConservedDrift, FreeParticleEnergyExact) {
  auto traj = synthetic(0, 5, 50, [](double t) { return cplx(2 * t, 0.5); });
  traj.momenta = std::vector<cplx>(traj.size(), cplx(2.0));
  EXPECT_EQ(conserved_drift(traj, ComplexEnergy{{FreeParticle{}, kUnit}}), 0.0);
}

TEST(ConservedDrift, AnalyticHarmonicOrbit) {
  auto traj = synthetic(0, 20, 2000, [](double t) { return classical_ho_solution(3.2, {4.5}, kUnit, t); });
  const double B = std::sqrt(10.24 - 9.0);
  traj.momenta.emplace();
  for (double t : traj.times) traj.momenta->push_back(cplx(-3.2 * std::sin(t), B * std::cos(t)));
  EXPECT_LT(conserved_drift(traj, ComplexEnergy{{Harmonic{}, kUnit}}), 1e-12);
}

TEST(Congruence, IdenticalAndSymmetric) {
  const auto a = synthetic(0, 2 * kPi, 300, [](double t) { return std::polar(1.0, t); });
  const auto b = synthetic(0, 2 * kPi, 300, [](double t) { return 1.1 * std::polar(1.0, t); });
  EXPECT_EQ(congruence_metric(a, a), 0.0);
  EXPECT_EQ(congruence_metric(a, b), congruence_metric(b, a));
  EXPECT_NEAR(congruence_metric(a, b), 0.1 / 2.2, 1e-3);
}

TEST(Congruence, PhaseOffsetIsIgnored) {
  const auto a = synthetic(0, 2 * kPi, 1000, [](double t) { return std::polar(1.0, t); });
  const auto b = synthetic(0, 2 * kPi, 1000, [](double t) { return std::polar(1.0, t + 1.0); });
  EXPECT_LT(congruence_metric(a, b), 1e-2);
}

TEST(Congruence, EmptyIsError) {
  EXPECT_THROW(congruence_metric(Trajectory{}, Trajectory{}), std::invalid_argument);
}

TEST(FieldPeriod, FamiliesFromEnergyDifferences) {
  // n(n+2): differences 3, 8, 15, ... share gcd 1, so the field repeats every 2 pi.
  const auto well = coherent_coefficients(kUnit, WellCoherent{0.16, 7});
  EXPECT_NEAR(*field_period(well, 1.0), 2 * kPi, 1e-12);
  // n(n+3): 4, 10, 18, 28 share gcd 2, so pi.
  const auto pt = coherent_coefficients(kUnit, PtCoherent{0.16, 1.5, 4});
  EXPECT_NEAR(*field_period(pt, 1.0), kPi, 1e-12);
  // n + 1/2: differences 1, 2, ... so 2 pi.
  const auto ho = coherent_coefficients(kUnit, HoCoherentSeries{2.1, 0, 4});
  EXPECT_NEAR(*field_period(ho, 1.0), 2 * kPi, 1e-12);
  // Non-integer l gives no common period.
  const auto irr = coherent_coefficients(kUnit, PtCoherent{0.16, 1.5 + 1 / kPi, 4});
  EXPECT_FALSE(field_period(irr, 1.0).has_value());
}
