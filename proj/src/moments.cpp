#include "projnorm/moments.hpp"

#include "projnorm/spd.hpp"

#include <cmath>
#include <sstream>

namespace projnorm {

namespace {

void check_inputs(const GaussianParams& params, double c) {
  if (!(c >= 0.0)) {
    throw DomainError("denominator constant c must be >= 0");
  }
  (void)params;
}

}  // namespace

ZMoments z_moments(const GaussianParams& params, double c) {
  check_inputs(params, c);
  const Vector& mu = params.mu;
  const Matrix& sigma = params.sigma;
  const Vector diag = sigma.diagonal();
  const Vector mu2 = mu.cwiseProduct(mu);
  const Vector sv = sigma * mu;

  const double tr_sigma = diag.sum();
  const double mu_sq = mu2.sum();

  ZMoments out;
  // E[z_i] = tr(sigma) + mu^T mu + c - sigma_ii - mu_i^2
  out.z_bar = Vector::Constant(mu.size(), tr_sigma + mu_sq + c) - diag - mu2;

  // var(z_i) = var(d) - 2 (2 (sigma^2)_ii - sigma_ii^2) - 4 (2 mu_i (sigma mu)_i - mu_i^2 sigma_ii)
  const Matrix t = sigma * sigma;
  const double var_d = 2.0 * t.trace() + 4.0 * mu.dot(sv);
  const Vector diag_t = t.diagonal();
  out.z_var = Vector::Constant(mu.size(), var_d) -
              2.0 * (2.0 * diag_t - diag.cwiseProduct(diag)) -
              4.0 * (2.0 * mu.cwiseProduct(sv) - mu2.cwiseProduct(diag));

  // cov(x_i, z_i) = 2 ((sigma mu)_i - mu_i sigma_ii)
  out.xz_cov = 2.0 * (sv - mu.cwiseProduct(diag));
  return out;
}

DenominatorMoments denominator_moments(const GaussianParams& params, double c) {
  check_inputs(params, c);
  const Vector& mu = params.mu;
  const Matrix& sigma = params.sigma;
  const Matrix t = sigma * sigma;
  const Vector sv = sigma * mu;

  DenominatorMoments out;
  out.d_bar = sigma.trace() + mu.squaredNorm() + c;
  out.d_var = 2.0 * t.trace() + 4.0 * mu.dot(sv);
  out.n_bar = sigma + mu * mu.transpose();
  out.nd_cov = 2.0 * (t + mu * sv.transpose() + sv * mu.transpose());
  return out;
}

Vector mean_taylor(const GaussianParams& params, double c) {
  const ZMoments zm = z_moments(params, c);
  const Vector& mu = params.mu;
  const Vector diag = params.sigma.diagonal();
  const Vector mu2 = mu.cwiseProduct(mu);

  const Vector denom = mu2 + zm.z_bar;  // mu_i^2 + E[z_i]
  if (!(denom.minCoeff() > 0.0)) {
    throw NumericError("Taylor mean expansion point mu_i^2 + E[z_i] must be positive");
  }
  const Vector inv_sqrt = denom.array().pow(-0.5);
  const Vector inv_52 = denom.array().pow(-2.5);

  // gamma_i ~= mu_i (mu_i^2 + z_bar)^{-1/2}
  //          + [ -(3/2) sigma_ii mu_i z_bar_i
  //              + (3/8) var(z_i) mu_i
  //              + cov(x_i, z_i) (mu_i^2 - z_bar_i / 2) ] (mu_i^2 + z_bar)^{-5/2}
  const Vector correction = (-1.5) * diag.cwiseProduct(mu).cwiseProduct(zm.z_bar) +
                            0.375 * zm.z_var.cwiseProduct(mu) +
                            zm.xz_cov.cwiseProduct(mu2 - 0.5 * zm.z_bar);
  Vector gamma = mu.cwiseProduct(inv_sqrt) + correction.cwiseProduct(inv_52);
  if (!gamma.allFinite()) {
    throw NumericError("Taylor mean overflowed");
  }
  return gamma;
}

Matrix second_moment_taylor(const GaussianParams& params, double c) {
  const DenominatorMoments dm = denominator_moments(params, c);
  const double d = dm.d_bar;
  // E[N/d] ~= n_bar / d_bar - cov(N, d) / d_bar^2 + n_bar var(d) / d_bar^3,
  // assembled without the elementwise n_bar division of the ratio form so
  // zero entries of n_bar are harmless.
  Matrix sm = dm.n_bar * (1.0 / d + dm.d_var / (d * d * d)) - dm.nd_cov / (d * d);
  sm = 0.5 * (sm + sm.transpose()).eval();
  if (!sm.allFinite()) {
    throw NumericError("Taylor second moment overflowed");
  }
  return sm;
}

Matrix covariance_taylor(const Vector& gamma, const Matrix& second_moment) {
  if (second_moment.rows() != gamma.size() || second_moment.cols() != gamma.size()) {
    throw DimensionError("second_moment shape does not match gamma");
  }
  return second_moment - gamma * gamma.transpose();
}

Moments approx_moments(const GaussianParams& params, const ProjectionVariant& variant) {
  variant.require_dim(params.dim());
  if (!variant.has_b()) {
    Vector gamma = mean_taylor(params, variant.c);
    Matrix sm = second_moment_taylor(params, variant.c);
    return Moments::from_gamma_and_second(std::move(gamma), std::move(sm));
  }
  const SpdSqrt root = spd_sqrt(*variant.b);
  const GaussianParams primed = to_primed(params, variant);
  Vector gamma = mean_taylor(primed, variant.c);
  Matrix sm = second_moment_taylor(primed, variant.c);
  const Moments primed_moments = Moments::from_gamma_and_second(std::move(gamma), std::move(sm));
  return from_primed_moments(primed_moments, root.inv_sqrt);
}

}  // namespace projnorm
