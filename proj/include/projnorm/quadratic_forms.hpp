#pragma once

#include "projnorm/types.hpp"

namespace projnorm {

// Moments of quadratic and linear forms of x ~ N(mu, sigma). All matrix
// arguments must be symmetric within kSymTol; asymmetric input is an error
// rather than being silently symmetrized.

// E[x^T M x] = tr(M sigma) + mu^T M mu
double qf_mean(const GaussianParams& params, const Matrix& m);

// var(x^T M x) = 2 tr(M sigma M sigma) + 4 mu^T M sigma M mu
double qf_variance(const GaussianParams& params, const Matrix& m);

// cov(x^T M x, x^T K x) = 2 tr(M sigma K sigma) + 4 mu^T M sigma K mu
double qf_covariance(const GaussianParams& params, const Matrix& m, const Matrix& k);

// cov(x^T M x, b^T x) = 2 mu^T M sigma b
double qf_linear_covariance(const GaussianParams& params, const Matrix& m, const Vector& b);

}  // namespace projnorm
