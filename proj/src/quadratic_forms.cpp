#include "projnorm/quadratic_forms.hpp"

namespace projnorm {

namespace {

void check_form(const GaussianParams& params, const Matrix& m, const char* what) {
  if (m.rows() != params.dim() || m.cols() != params.dim()) {
    throw DimensionError(std::string(what) + " shape does not match the parameters");
  }
  require_symmetric(m, what);
}

}  // namespace

double qf_mean(const GaussianParams& params, const Matrix& m) {
  check_form(params, m, "m");
  return (m * params.sigma).trace() + params.mu.dot(m * params.mu);
}

double qf_variance(const GaussianParams& params, const Matrix& m) {
  check_form(params, m, "m");
  const Matrix ms = m * params.sigma;
  return 2.0 * (ms * ms).trace() + 4.0 * params.mu.dot(ms * (m * params.mu));
}

double qf_covariance(const GaussianParams& params, const Matrix& m, const Matrix& k) {
  check_form(params, m, "m");
  check_form(params, k, "k");
  const Matrix ms = m * params.sigma;
  const Matrix ks = k * params.sigma;
  return 2.0 * (ms * ks).trace() + 4.0 * params.mu.dot(ms * (k * params.mu));
}

double qf_linear_covariance(const GaussianParams& params, const Matrix& m, const Vector& b) {
  check_form(params, m, "m");
  if (b.size() != params.dim()) {
    throw DimensionError("b length does not match the parameters");
  }
  return 2.0 * params.mu.dot(m * (params.sigma * b));
}

}  // namespace projnorm
