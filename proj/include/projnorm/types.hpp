#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>

namespace projnorm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Tolerances and guards shared across the library.
inline constexpr double kSymTol = 1e-10;       // max |A - A^T| entry allowed in SPD inputs
inline constexpr double kPsdTol = 1e-8;        // slack on smallest eigenvalue of estimated covariances
inline constexpr Index kMaxDim = 1024;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A matrix required to be symmetric positive definite is not.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

// An argument lies outside the mathematical domain of the operation
// (zero vector to normalize, point off the support, c < 0, zero truth in a
// relative error, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Overflow, divergence, or non-convergence inside a numerical routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Throws DimensionError / NotSpdError unless m is square, symmetric within
// kSymTol, and has strictly positive smallest eigenvalue. `what` names the
// offending argument in error messages.
void require_spd(const Matrix& m, const char* what);

// Symmetry check only (no definiteness), used where indefinite symmetric
// matrices are legal arguments.
void require_symmetric(const Matrix& m, const char* what);

bool is_symmetric(const Matrix& m, double tol = kSymTol);

// Parameters (mu, sigma) of the Gaussian variable x that gets projected.
// sigma is validated SPD on construction.
struct GaussianParams {
  Vector mu;
  Matrix sigma;

  GaussianParams(Vector mu_in, Matrix sigma_in);

  Index dim() const { return mu.size(); }
};

// Which denominator sqrt(x^T B x + c) the projection uses. Absent b means
// b = identity. c must be >= 0; b must be SPD when present.
struct ProjectionVariant {
  std::optional<Matrix> b;
  double c = 0.0;

  enum class Kind { kPn, kPnC, kPnB, kPnBc };

  ProjectionVariant() = default;
  ProjectionVariant(std::optional<Matrix> b_in, double c_in);

  static ProjectionVariant pn() { return {}; }
  static ProjectionVariant pn_c(double c) { return {std::nullopt, c}; }
  static ProjectionVariant pn_b(Matrix b) { return {std::move(b), 0.0}; }
  static ProjectionVariant pn_bc(Matrix b, double c) { return {std::move(b), c}; }

  Kind kind() const;
  bool has_b() const { return b.has_value(); }

  // Dimension check against a parameter vector of size n.
  void require_dim(Index n) const;
};

const char* to_string(ProjectionVariant::Kind kind);

// First and second moments (gamma = E[y], second_moment = E[y y^T],
// psi = cov[y]) of a projected variable.
struct Moments {
  Vector gamma;
  Matrix second_moment;
  Matrix psi;

  // Builds psi = second_moment - gamma gamma^T, so the internal consistency
  // identity holds to round-off by construction.
  static Moments from_gamma_and_second(Vector gamma, Matrix second_moment);

  Index dim() const { return gamma.size(); }

  // Checks psi symmetric, smallest eigenvalue >= -psd_slack, and
  // psi == second_moment - gamma gamma^T within consistency_tol.
  void validate(double psd_slack = kPsdTol, double consistency_tol = 1e-12) const;
};

}  // namespace projnorm
