#include "projnorm/density.hpp"

#include "projnorm/spd.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace projnorm {

namespace {

constexpr int kMaxOrder = 512;
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
constexpr double kSupportTol = 1e-8;

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Forward recursion in log space; valid for alpha >= 0 where every term of
// M_{k+1} = alpha M_k + k M_{k-1} is nonnegative.
double m_log_forward(double alpha, int order) {
  const double log_alpha = alpha > 0.0 ? std::log(alpha)
                                       : -std::numeric_limits<double>::infinity();
  double lm_prev = log_norm_cdf(alpha);                                  // log M_0
  if (order == 0) return lm_prev;
  double lm = log_add_exp(log_alpha + lm_prev, -0.5 * alpha * alpha - 0.5 * kLog2Pi);
  for (int k = 1; k < order; ++k) {
    const double next = log_add_exp(log_alpha + lm, std::log(static_cast<double>(k)) + lm_prev);
    lm_prev = lm;
    lm = next;
  }
  return lm;
}

// Forward recursion in linear space with rescaling, for mildly negative
// alpha. The subtraction in M_{k+1} = alpha M_k + k M_{k-1} feeds rounding
// error into the recurrence's dominant solution, amplifying it by roughly
// exp(2 |alpha| sqrt(2 order)); callers only dispatch here while that factor
// is small.
double m_forward_mild_negative(double alpha, int order) {
  // |alpha| <= ~3.5 in this regime, so M_0 and M_1 are far from underflow.
  double m_prev = std::exp(log_norm_cdf(alpha));  // M_0
  double m = alpha * m_prev + std::exp(-0.5 * alpha * alpha - 0.5 * kLog2Pi);  // M_1
  double acc = 0.0;  // log of the rescalings applied so far
  for (int k = 1; k < order; ++k) {
    double m_next = alpha * m + static_cast<double>(k) * m_prev;
    if (m_next > 1e280) {
      const double scale = 1e-280;
      m_next *= scale;
      m *= scale;
      acc -= std::log(scale);
    }
    m_prev = m;
    m = m_next;
  }
  if (!(m > 0.0)) {
    throw NumericError("M recursion lost positivity for negative alpha");
  }
  return std::log(m) + acc;
}

// Backward (Miller) recursion for alpha < 0, where the forward direction
// cancels catastrophically: M_{k-1} = (M_{k+1} - alpha M_k) / k has only
// positive terms. Seeded high with an arbitrary tail value and normalized at
// M_0 = Phi(alpha). Seed contamination decays like
// exp(-2 |alpha| (sqrt(2 start) - sqrt(2 order))), which fixes the start
// index; a doubling pass then confirms stability.
double m_log_backward(double alpha, int order) {
  const double start_root = std::sqrt(2.0 * order) + 20.0 / (-alpha);
  int buffer = std::max(16, static_cast<int>(0.5 * start_root * start_root) - order);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int attempt = 0; attempt < 8; ++attempt) {
    const int start = order + buffer;
    double f_hi = 0.0;   // plays M_{k+1}
    double f_mid = 1.0;  // plays M_k at k = start
    double acc = 0.0;    // log of the rescalings applied so far
    double log_f_order = std::numeric_limits<double>::quiet_NaN();
    for (int k = start; k >= 1; --k) {
      double f_lo = (f_hi - alpha * f_mid) / static_cast<double>(k);
      if (f_lo > 1e280) {
        const double scale = 1e-280;
        f_lo *= scale;
        f_mid *= scale;
        acc -= std::log(scale);
      } else if (f_lo < 1e-280) {
        const double scale = 1e280;
        f_lo *= scale;
        f_mid *= scale;
        acc -= std::log(scale);
      }
      f_hi = f_mid;
      f_mid = f_lo;
      if (k - 1 == order) log_f_order = std::log(f_mid) + acc;
    }
    const double log_f0 = std::log(f_mid) + acc;
    const double result = log_norm_cdf(alpha) + log_f_order - log_f0;
    if (std::isfinite(previous) &&
        std::abs(result - previous) <= 1e-12 * std::abs(result) + 1e-12) {
      return result;
    }
    previous = result;
    buffer *= 2;
  }
  throw NumericError("M recursion failed to stabilize for negative alpha");
}

// Shared Cholesky-based quadratic forms of the spherical-projection density.
struct DensityForms {
  double q1 = 0.0;       // mu^T sigma^{-1} mu
  double q2 = 0.0;       // mu^T sigma^{-1} y
  double q3 = 0.0;       // y^T sigma^{-1} y
  double log_det = 0.0;  // log det sigma
};

DensityForms density_forms(const Vector& y, const GaussianParams& params) {
  Eigen::LLT<Matrix> llt(params.sigma);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("sigma is not positive definite");
  }
  const Vector si_mu = llt.solve(params.mu);
  const Vector si_y = llt.solve(y);
  DensityForms f;
  f.q1 = params.mu.dot(si_mu);
  f.q2 = params.mu.dot(si_y);
  f.q3 = y.dot(si_y);
  f.log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return f;
}

}  // namespace

double log_norm_cdf(double alpha) {
  if (!std::isfinite(alpha)) {
    throw DomainError("alpha must be finite");
  }
  if (alpha > -37.0) {
    return std::log(0.5 * std::erfc(-alpha / std::numbers::sqrt2_v<double>));
  }
  // Far left tail: Phi(alpha) = phi(alpha)/|alpha| (1 - 1/a^2 + 3/a^4 - 15/a^6 + 105/a^8 ...)
  const double a2 = alpha * alpha;
  const double series = -1.0 / a2 + 3.0 / (a2 * a2) - 15.0 / (a2 * a2 * a2) +
                        105.0 / (a2 * a2 * a2 * a2);
  return -0.5 * a2 - 0.5 * kLog2Pi - std::log(-alpha) + std::log1p(series);
}

double m_recursion_log(double alpha, int order) {
  if (order < 0 || order > kMaxOrder) {
    throw DomainError("M recursion order must lie in [0, 512]");
  }
  if (!std::isfinite(alpha)) {
    throw DomainError("alpha must be finite");
  }
  if (order == 0) return log_norm_cdf(alpha);
  if (alpha >= 0.0) return m_log_forward(alpha, order);
  if (2.0 * (-alpha) * std::sqrt(2.0 * order) <= 10.0) {
    return m_forward_mild_negative(alpha, order);
  }
  return m_log_backward(alpha, order);
}

double m_recursion(double alpha, int order) {
  const double lm = m_recursion_log(alpha, order);
  if (lm > std::log(std::numeric_limits<double>::max())) {
    throw NumericError("M recursion value overflows a double; use m_recursion_log");
  }
  return std::exp(lm);
}

double pn_logpdf(const Vector& y, const GaussianParams& params) {
  if (y.size() != params.dim()) {
    throw DimensionError("y dimension does not match the parameters");
  }
  if (std::abs(y.norm() - 1.0) > kSupportTol) {
    throw DomainError("y must lie on the unit sphere");
  }
  const Index n = params.dim();
  const DensityForms f = density_forms(y, params);
  const double alpha = f.q2 / std::sqrt(f.q3);
  return 0.5 * (f.q2 * f.q2 / f.q3 - f.q1) - 0.5 * static_cast<double>(n) * std::log(f.q3) -
         0.5 * f.log_det - 0.5 * static_cast<double>(n - 1) * kLog2Pi +
         m_recursion_log(alpha, static_cast<int>(n) - 1);
}

double pnc_logpdf(const Vector& y, const GaussianParams& params, double c) {
  if (y.size() != params.dim()) {
    throw DimensionError("y dimension does not match the parameters");
  }
  if (!(c > 0.0)) {
    throw DomainError("pnc density requires c > 0");
  }
  const double r2 = y.squaredNorm();
  if (r2 >= 1.0) {
    throw DomainError("y must lie inside the open unit ball");
  }
  const Index n = params.dim();
  const double log_shrink = std::log1p(-r2);  // log(1 - ||y||^2)
  // Inverse projection and its Jacobian determinant:
  //   x = y sqrt(c / (1 - r^2)),  det J = (c/(1-r^2))^{n/2} / (1 - r^2)
  const Vector x = y * std::sqrt(c / (1.0 - r2));
  Eigen::LLT<Matrix> llt(params.sigma);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("sigma is not positive definite");
  }
  const Vector diff = x - params.mu;
  const double quad = diff.dot(llt.solve(diff));
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double log_jac = 0.5 * static_cast<double>(n) * (std::log(c) - log_shrink) - log_shrink;
  return log_jac - 0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * log_det - 0.5 * quad;
}

double pnbc_logpdf(const Vector& y, const GaussianParams& params,
                   const ProjectionVariant& variant) {
  variant.require_dim(params.dim());
  if (y.size() != params.dim()) {
    throw DimensionError("y dimension does not match the parameters");
  }
  switch (variant.kind()) {
    case ProjectionVariant::Kind::kPn:
      return pn_logpdf(y, params);
    case ProjectionVariant::Kind::kPnC:
      return pnc_logpdf(y, params, variant.c);
    default:
      break;
  }
  const SpdSqrt root = spd_sqrt(*variant.b);
  Matrix sigma_primed = root.sqrt * params.sigma * root.sqrt;
  sigma_primed = 0.5 * (sigma_primed + sigma_primed.transpose()).eval();
  const GaussianParams primed(root.sqrt * params.mu, std::move(sigma_primed));
  const Vector y_primed = root.sqrt * y;
  if (variant.kind() == ProjectionVariant::Kind::kPnBc) {
    // Interior case: y' = B^{1/2} y maps the open ellipsoid onto the open
    // ball, with constant volume distortion det(B^{1/2}).
    if (y_primed.squaredNorm() >= 1.0) {
      throw DomainError("y must lie inside the open ellipsoid y^T B y < 1");
    }
    return pnc_logpdf(y_primed, primed, variant.c) + root.log_det_sqrt;
  }
  // Boundary case (c = 0): the same map carries the ellipsoid surface onto
  // the unit sphere; the surface measure distortion at y is
  // det(B^{1/2}) ||B^{-1/2} nu|| with unit normal nu = B y / ||B y||, which
  // reduces to det(B^{1/2}) sqrt(y^T B y) / ||B y||.
  const double ellipsoid_norm2 = y.dot(*variant.b * y);
  if (std::abs(ellipsoid_norm2 - 1.0) > kSupportTol) {
    throw DomainError("y must lie on the ellipsoid y^T B y = 1");
  }
  const double surface_factor = std::sqrt(ellipsoid_norm2) / (*variant.b * y).norm();
  return pn_logpdf(y_primed / y_primed.norm(), primed) + root.log_det_sqrt +
         std::log(surface_factor);
}

}  // namespace projnorm
