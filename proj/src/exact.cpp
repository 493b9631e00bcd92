#include "projnorm/exact.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace projnorm {

namespace {

constexpr double kZGuard = 1e4;
constexpr int kMaxTerms = 100000;
constexpr double kRelTol = 1e-16;

bool is_nonpositive_integer(double b) {
  return b <= 0.0 && b == std::floor(b);
}

// Plain power series sum_k (a)_k / (b)_k z^k / k!. Every term is positive for
// a, b, z > 0, so there is no cancellation; stops once three consecutive
// terms fall below kRelTol relative to the running sum.
double series_1f1(double a, double b, double z) {
  double term = 1.0;
  double sum = 1.0;
  int small_streak = 0;
  for (int k = 0; k < kMaxTerms; ++k) {
    term *= (a + k) / (b + k) * z / (k + 1);
    sum += term;
    if (std::abs(term) < kRelTol * std::abs(sum)) {
      if (++small_streak >= 3) return sum;
    } else {
      small_streak = 0;
    }
    if (!std::isfinite(sum)) {
      throw NumericError("1F1 series overflowed");
    }
  }
  throw NumericError("1F1 series did not converge");
}

// Large-|z| expansion for z -> -inf (w = -z):
//   1F1(a; b; z) ~ Gamma(b)/Gamma(b-a) w^{-a} sum_k (a)_k (a-b+1)_k / (k! w^k).
// The series is asymptotic; summation stops at the smallest term, which for
// the w used here (>= ~300) is far below double precision. When a-b+1 is a
// nonpositive integer the series terminates and the result is exact.
bool asymptotic_1f1_neg(double a, double b, double z, double* out) {
  const double w = -z;
  double term = 1.0;
  double sum = 1.0;
  double prev_mag = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int k = 0; k < 2000; ++k) {
    const double factor = (a + k) * (a - b + 1.0 + k) / ((k + 1.0) * w);
    term *= factor;
    const double mag = std::abs(term);
    if (mag >= prev_mag) {
      // divergence onset: stop before adding the growing term
      converged = prev_mag < 1e-12 * std::abs(sum);
      break;
    }
    sum += term;
    prev_mag = mag;
    if (mag < kRelTol * std::abs(sum)) {
      converged = true;
      break;
    }
    if (term == 0.0) {  // terminating series
      converged = true;
      break;
    }
  }
  if (!converged) {
    return false;
  }
  const double log_prefactor = std::lgamma(b) - std::lgamma(b - a) - a * std::log(w);
  *out = std::exp(log_prefactor) * sum;
  return true;
}

double eval_1f1(double a, double b, double z) {
  if (is_nonpositive_integer(b)) {
    throw DomainError("1F1 has a pole: b is a nonpositive integer");
  }
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(z)) {
    throw DomainError("1F1 arguments must be finite");
  }
  if (z == 0.0) return 1.0;
  if (z > 0.0) {
    return series_1f1(a, b, z);
  }
  // z < 0: Kummer transform e^z 1F1(b-a; b; -z) keeps all series terms
  // positive (b - a > 0 across this library's callers), so it is the first
  // choice while e^{-z} stays inside double range. Beyond that the large-|z|
  // asymptotic expansion takes over; near the boundary whichever of the two
  // applies is used (the asymptotic one can fail for large b with moderate
  // |z|, where the positive series is still representable).
  constexpr double kAsymptoticCrossover = 300.0;
  constexpr double kKummerLimit = 700.0;  // exp(-z) must not overflow
  if (b - a > 0.0 && -z <= kAsymptoticCrossover) {
    return std::exp(z) * series_1f1(b - a, b, -z);
  }
  double result = 0.0;
  if (asymptotic_1f1_neg(a, b, z, &result)) {
    return result;
  }
  if (b - a > 0.0 && -z <= kKummerLimit) {
    return std::exp(z) * series_1f1(b - a, b, -z);
  }
  throw NumericError("1F1 evaluation failed for large negative argument");
}

}  // namespace

namespace detail {

double hyp1f1_unguarded(double a, double b, double z) {
  return eval_1f1(a, b, z);
}

}  // namespace detail

double hyp1f1(double a, double b, double z) {
  if (std::abs(z) > kZGuard) {
    std::ostringstream os;
    os << "1F1 argument |z| = " << std::abs(z) << " exceeds the guard " << kZGuard;
    throw DomainError(os.str());
  }
  return eval_1f1(a, b, z);
}

IsotropicCoeffs isotropic_coeffs(Index n, double mu_norm2, double sigma2) {
  if (n < 2) {
    throw DimensionError("isotropic moments require dimension >= 2");
  }
  if (!(sigma2 > 0.0)) {
    throw DomainError("sigma2 must be positive");
  }
  const double nd = static_cast<double>(n);
  const double z = -mu_norm2 / (2.0 * sigma2);

  IsotropicCoeffs out;
  // gamma = a_coef mu with
  // a_coef = Gamma((n+1)/2) / (Gamma(n/2 + 1) sqrt(2 sigma2)) 1F1(1/2; n/2 + 1; z)
  const double gamma_ratio = std::exp(std::lgamma(0.5 * (nd + 1.0)) - std::lgamma(0.5 * nd + 1.0));
  out.a_coef = gamma_ratio / std::sqrt(2.0 * sigma2) *
               detail::hyp1f1_unguarded(0.5, 0.5 * nd + 1.0, z);
  // E[y y^T] = c_coef I + m_coef mu mu^T with
  // c_coef = 1F1(1; n/2 + 1; z) / n
  // m_coef = 1F1(1; n/2 + 2; z) / (sigma2 (n + 2))
  out.c_coef = detail::hyp1f1_unguarded(1.0, 0.5 * nd + 1.0, z) / nd;
  out.m_coef = detail::hyp1f1_unguarded(1.0, 0.5 * nd + 2.0, z) / (sigma2 * (nd + 2.0));
  return out;
}

Moments exact_moments_isotropic(const Vector& mu, double sigma2) {
  if (!mu.allFinite()) {
    throw DomainError("mu has non-finite entries");
  }
  const Index n = mu.size();
  const IsotropicCoeffs coeffs = isotropic_coeffs(n, mu.squaredNorm(), sigma2);
  Vector gamma = coeffs.a_coef * mu;
  Matrix sm = coeffs.m_coef * (mu * mu.transpose());
  sm.diagonal().array() += coeffs.c_coef;
  return Moments::from_gamma_and_second(std::move(gamma), std::move(sm));
}

}  // namespace projnorm
