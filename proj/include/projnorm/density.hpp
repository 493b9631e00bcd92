#pragma once

#include "projnorm/types.hpp"

namespace projnorm {

// log of the standard normal CDF, accurate over the whole real line
// (asymptotic expansion in the far left tail where erfc underflows).
double log_norm_cdf(double alpha);

// M_k(alpha) = integral_0^inf t^k phi(t - alpha) dt, the moment sequence of
// the truncated Gaussian that appears in the spherical-projection density.
// Satisfies M_{k+1} = alpha M_k + k M_{k-1}, M_0 = Phi(alpha),
// M_1 = alpha Phi(alpha) + phi(alpha).
//
// Forward recursion is used for alpha >= 0 where every term is positive.
// For alpha < 0 the recursion cancels catastrophically, so the value is
// recovered by the backward (Miller) recursion normalized at M_0.
// log variant is exact for the order/alpha ranges the densities need;
// m_recursion itself throws NumericError when the value overflows a double.
double m_recursion(double alpha, int order);
double m_recursion_log(double alpha, int order);

// log density on the unit sphere of y = x / ||x||, x ~ N(mu, sigma).
// y must satisfy ||y|| = 1 within 1e-8.
double pn_logpdf(const Vector& y, const GaussianParams& params);

// log density on the open unit ball of y = x / sqrt(x^T x + c), c > 0.
double pnc_logpdf(const Vector& y, const GaussianParams& params, double c);

// log density of y = x / sqrt(x^T B x + c) on the open ellipsoid
// y^T B y < 1 (c > 0), or on its boundary ellipsoid when c = 0.
// Dispatches to pn_logpdf / pnc_logpdf via the whitening transform.
double pnbc_logpdf(const Vector& y, const GaussianParams& params,
                   const ProjectionVariant& variant);

}  // namespace projnorm
