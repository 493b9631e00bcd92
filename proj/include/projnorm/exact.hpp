#pragma once

#include "projnorm/types.hpp"

namespace projnorm {

// Kummer's confluent hypergeometric function 1F1(a; b; z).
//
// Evaluation: direct series for z >= 0; Kummer transform
// e^z 1F1(b-a; b; -z) for moderately negative z (all-positive series, no
// cancellation); large-|z| asymptotic expansion for z << 0. Guarded to
// |z| <= 1e4; b must not be a nonpositive integer.
double hyp1f1(double a, double b, double z);

namespace detail {
// Same evaluation without the |z| guard, for internal callers whose
// asymptotic regime is well conditioned (isotropic moment coefficients with
// arbitrarily small sigma^2).
double hyp1f1_unguarded(double a, double b, double z);
}  // namespace detail

// Scalar coefficients of the closed-form moments under sigma = sigma2 * I:
//   gamma          = a_coef * mu
//   E[y y^T]       = c_coef * I + m_coef * mu mu^T
struct IsotropicCoeffs {
  double a_coef = 0.0;
  double c_coef = 0.0;
  double m_coef = 0.0;
};

IsotropicCoeffs isotropic_coeffs(Index n, double mu_norm2, double sigma2);

// Exact moments of y = x / ||x|| for x ~ N(mu, sigma2 I). trace of the
// second moment is 1 up to round-off (identity, not an approximation).
Moments exact_moments_isotropic(const Vector& mu, double sigma2);

}  // namespace projnorm
