#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracles {

namespace {

constexpr double kPi = std::numbers::pi_v<double>;

double std_normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * kPi);
}

}  // namespace

Quadrature gauss_legendre(int k) {
  if (k < 2) throw std::invalid_argument("gauss_legendre needs k >= 2");
  Quadrature q;
  q.nodes.resize(k);
  q.weights.resize(k);
  const int half = (k + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess, then Newton on P_k.
    double x = std::cos(kPi * (i + 0.75) / (k + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= k; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = k * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.nodes[i] = -x;
    q.nodes[k - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.weights[i] = w;
    q.weights[k - 1 - i] = w;
  }
  return q;
}

Quadrature gauss_legendre(int k, double a, double b) {
  Quadrature q = gauss_legendre(k);
  const double mid = 0.5 * (a + b);
  const double halfwidth = 0.5 * (b - a);
  for (int i = 0; i < k; ++i) {
    q.nodes[i] = mid + halfwidth * q.nodes[i];
    q.weights[i] *= halfwidth;
  }
  return q;
}

double integrate_circle(const std::function<double(const projnorm::Vector&)>& f, int k) {
  double sum = 0.0;
  projnorm::Vector y(2);
  for (int i = 0; i < k; ++i) {
    const double phi = 2.0 * kPi * i / k;
    y[0] = std::cos(phi);
    y[1] = std::sin(phi);
    sum += f(y);
  }
  return sum * 2.0 * kPi / k;
}

double integrate_sphere(const std::function<double(const projnorm::Vector&)>& f,
                        int k_theta, int k_phi) {
  const Quadrature q = gauss_legendre(k_theta, -1.0, 1.0);  // u = cos(theta)
  double sum = 0.0;
  projnorm::Vector y(3);
  for (int i = 0; i < k_theta; ++i) {
    const double u = q.nodes[i];
    const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
    double ring = 0.0;
    for (int j = 0; j < k_phi; ++j) {
      const double phi = 2.0 * kPi * j / k_phi;
      y[0] = r * std::cos(phi);
      y[1] = r * std::sin(phi);
      y[2] = u;
      ring += f(y);
    }
    sum += q.weights[i] * ring * 2.0 * kPi / k_phi;
  }
  return sum;
}

double integrate_disk(const std::function<double(const projnorm::Vector&)>& f,
                      int k_r, int k_phi) {
  const Quadrature q = gauss_legendre(k_r, 0.0, 1.0);
  double sum = 0.0;
  projnorm::Vector y(2);
  for (int i = 0; i < k_r; ++i) {
    const double r = q.nodes[i];
    double ring = 0.0;
    for (int j = 0; j < k_phi; ++j) {
      const double phi = 2.0 * kPi * j / k_phi;
      y[0] = r * std::cos(phi);
      y[1] = r * std::sin(phi);
      ring += f(y);
    }
    sum += q.weights[i] * r * ring * 2.0 * kPi / k_phi;
  }
  return sum;
}

double hyp1f1_integral(double a, double b, double z, int k) {
  if (!(a > 0.0) || !(b > a)) {
    throw std::invalid_argument("hyp1f1_integral requires 0 < a < b");
  }
  // 1F1(a;b;z) = Gamma(b)/(Gamma(a)Gamma(b-a)) int_0^1 e^{zt} t^{a-1} (1-t)^{b-a-1} dt.
  // With t = sin^2(theta): integrand e^{z sin^2} sin^{2a-1} cos^{2(b-a)-1} * 2 dtheta.
  const Quadrature q = gauss_legendre(k, 0.0, 0.5 * kPi);
  const double log_coef = std::lgamma(b) - std::lgamma(a) - std::lgamma(b - a);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double theta = q.nodes[i];
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double log_term = z * s * s + (2.0 * a - 1.0) * std::log(s) +
                            (2.0 * (b - a) - 1.0) * std::log(c);
    sum += q.weights[i] * 2.0 * std::exp(log_coef + log_term);
  }
  return sum;
}

double m_integral(double alpha, int order, int k) {
  // Integrand t^order exp(-(t-alpha)^2/2)/sqrt(2 pi) is negligible beyond
  // the normal bulk around alpha plus a tail allowance for the monomial.
  const double hi = std::max(alpha, 0.0) + 12.0 + std::sqrt(static_cast<double>(order)) * 4.0;
  const Quadrature q = gauss_legendre(k, 0.0, hi);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double t = q.nodes[i];
    sum += q.weights[i] * std::pow(t, order) * std_normal_pdf(t - alpha);
  }
  return sum;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return (m % 2 == 1) ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace oracles
