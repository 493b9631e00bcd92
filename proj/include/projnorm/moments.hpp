#pragma once

#include "projnorm/types.hpp"

namespace projnorm {

// Per-coordinate moments of z_i = sum_{j != i} x_j^2 + c, the part of the
// squared denominator that is independent "enough" of x_i for the Taylor
// expansion of x_i / sqrt(x_i^2 + z_i).
struct ZMoments {
  Vector z_bar;    // E[z_i]
  Vector z_var;    // var(z_i)
  Vector xz_cov;   // cov(x_i, z_i)
};

// Moments of the full squared denominator d = x^T x + c and of the outer
// product numerator N = x x^T.
struct DenominatorMoments {
  double d_bar = 0.0;   // E[d]
  double d_var = 0.0;   // var(d)
  Matrix n_bar;         // E[N] = sigma + mu mu^T
  Matrix nd_cov;        // cov(N_ij, d)
};

ZMoments z_moments(const GaussianParams& params, double c);
DenominatorMoments denominator_moments(const GaussianParams& params, double c);

// Second-order Taylor approximation of E[y] for y = x / sqrt(x^T x + c),
// elementwise in the moments of (x_i, z_i).
Vector mean_taylor(const GaussianParams& params, double c);

// First-order (in the ratio-of-moments sense) approximation of E[y y^T].
// Result is symmetrized.
Matrix second_moment_taylor(const GaussianParams& params, double c);

// cov[y] from the two approximations above.
Matrix covariance_taylor(const Vector& gamma, const Matrix& second_moment);

// Full pipeline for any variant: whitens through B when present, applies the
// spherical-denominator approximations, and maps back.
Moments approx_moments(const GaussianParams& params, const ProjectionVariant& variant);

}  // namespace projnorm
