#include "projnorm/metrics.hpp"

namespace projnorm {

namespace {

double rel_error_pct_impl(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw DimensionError("estimate and truth shapes disagree");
  }
  const double denom = truth.squaredNorm();
  if (denom == 0.0) {
    throw DomainError("relative error against a zero truth is undefined");
  }
  return 100.0 * (estimate - truth).squaredNorm() / denom;
}

double cosine_sim_impl(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("cosine arguments disagree in shape");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw DomainError("cosine similarity with a zero argument is undefined");
  }
  return a.cwiseProduct(b).sum() / (na * nb);
}

}  // namespace

double rel_error_pct(const Matrix& estimate, const Matrix& truth) {
  return rel_error_pct_impl(estimate, truth);
}

double rel_error_pct(const Vector& estimate, const Vector& truth) {
  return rel_error_pct_impl(estimate, truth);
}

double cosine_sim(const Matrix& a, const Matrix& b) {
  return cosine_sim_impl(a, b);
}

double cosine_sim(const Vector& a, const Vector& b) {
  return cosine_sim_impl(a, b);
}

}  // namespace projnorm
