#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqtraj {

/// Input exceeds a documented evaluation cap (e.g. polynomial degree).
class BoundedInputError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Argument lies outside the mathematical or physical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical refinement did not reach its requested accuracy.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The wavefunction is too close to a node for the log-derivative field.
class PoleProximityError : public std::runtime_error {
 public:
  PoleProximityError(double psi_abs, std::complex<double> x)
      : std::runtime_error("velocity field evaluated at a wavefunction node: |psi| = " +
                           std::to_string(psi_abs) + " at x = (" + std::to_string(x.real()) +
                           ", " + std::to_string(x.imag()) + ")"),
        psi_abs_(psi_abs),
        x_(x) {}

  double psi_abs() const noexcept { return psi_abs_; }
  std::complex<double> where() const noexcept { return x_; }

 private:
  double psi_abs_;
  std::complex<double> x_;
};

/// Classical force evaluated on a singular line of the potential.
class SingularityError : public std::domain_error {
 public:
  SingularityError(const std::string& what, std::complex<double> x)
      : std::domain_error(what), x_(x) {}
  std::complex<double> where() const noexcept { return x_; }

 private:
  std::complex<double> x_;
};

/// Samples are (nearly) collinear; carries the best-fit line through them.
class DegenerateFitError : public std::runtime_error {
 public:
  DegenerateFitError(std::complex<double> point, std::complex<double> direction)
      : std::runtime_error("ellipse fit is degenerate: samples are collinear"),
        point_(point),
        direction_(direction) {}

  /// A point on the line (the sample centroid).
  std::complex<double> line_point() const noexcept { return point_; }
  /// Unit direction of the line.
  std::complex<double> line_direction() const noexcept { return direction_; }

 private:
  std::complex<double> point_;
  std::complex<double> direction_;
};

/// Scenario configuration failed validation; lists every violation found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid scenario configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

/// Filesystem failure with the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace cqtraj
