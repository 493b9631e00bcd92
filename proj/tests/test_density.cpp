#include "projnorm/density.hpp"

#include "projnorm/sampling.hpp"
#include "projnorm/spd.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace projnorm;

TEST_CASE("log_norm_cdf matches high-precision references") {
  // [DERIVED: mpmath.log(mpmath.ncdf(alpha)) at 40 digits]
  CHECK(log_norm_cdf(-50.0) == doctest::Approx(-1254.8313611394199013).epsilon(1e-13));
  CHECK(log_norm_cdf(-37.5) == doctest::Approx(-707.66898931750719107).epsilon(1e-13));
  CHECK(log_norm_cdf(-10.0) == doctest::Approx(-53.231285150512470578).epsilon(1e-13));
  CHECK(log_norm_cdf(-1.0) == doctest::Approx(-1.8410216450092635058).epsilon(1e-14));
  CHECK(log_norm_cdf(0.0) == doctest::Approx(-0.69314718055994530942).epsilon(1e-15));
  CHECK(log_norm_cdf(2.0) == doctest::Approx(-0.023012909328963488465).epsilon(1e-13));
  CHECK(log_norm_cdf(40.0) == 0.0);
}

TEST_CASE("m_recursion_log matches high-precision references") {
  // [DERIVED: mpmath quadrature of integral_0^inf t^k phi(t - alpha) dt,
  // 40 digits] -- covers forward, mildly-negative, and Miller regimes.
  struct Row {
    double alpha;
    int order;
    double expected;
  };
  const std::vector<Row> rows = {
      {-8.0, 0, -35.013437159914549896},
      {-8.0, 1, -37.122364261692633},
      {-8.0, 2, -38.551998338968684475},
      {-8.0, 3, -39.58949450877449269},
      {-8.0, 5, -40.904055964990507866},
      {-8.0, 11, -41.396132442910590976},
      {-8.0, 47, -7.5348755730034406392},
      {-2.5, 0, -5.0816482772786904984},
      {-2.5, 1, -6.2125416454435128635},
      {-2.5, 2, -6.725998566719793103},
      {-2.5, 3, -6.8978362225117623297},
      {-2.5, 5, -6.6022884944831015052},
      {-2.5, 11, -2.9294887579265123984},
      {-2.5, 47, 47.735012428357523788},
      {-0.95, 0, -1.7657635523069896963},
      {-0.95, 1, -2.3908073503365877233},
      {-0.95, 2, -2.4760082384697393587},
      {-0.95, 3, -2.2707259760894744936},
      {-0.95, 5, -1.3223900610287895371},
      {-0.95, 11, 3.8702384974564637819},
      {-0.95, 47, 59.85052976392994934},
      {-0.1, 0, -0.77615459273027332557},
      {-0.1, 1, -1.0471533140728460042},
      {-0.1, 2, -0.85548111634070240094},
      {-0.1, 3, -0.41648136569392817943},
      {-0.1, 5, 0.92287748626501478251},
      {-0.1, 11, 6.9924467035754052836},
      {-0.1, 47, 65.938381464852160261},
      {0.0, 0, -0.69314718055994530942},
      {0.0, 1, -0.91893853320467274178},
      {0.0, 2, -0.69314718055994530942},
      {0.0, 3, -0.22579135264472743236},
      {0.0, 5, 1.1605030084751631865},
      {0.0, 11, 7.3342891123770997996},
      {0.0, 47, 66.630122187438442945},
      {0.7, 0, -0.277023942277131263},
      {0.7, 1, -0.17093141922474072101},
      {0.7, 2, 0.29866052179636280519},
      {0.7, 3, 0.96675381657985979956},
      {0.7, 5, 2.683545257593293802},
      {0.7, 11, 9.5882756103837605351},
      {0.7, 47, 71.333601502491801658},
      {3.0, 0, -0.0013508099647481937988},
      {3.0, 1, 1.0987396653277077727},
      {3.0, 2, 2.3025647492790650253},
      {3.0, 3, 3.5835232163189775631},
      {3.0, 5, 6.3243592690629482634},
      {3.0, 11, 15.539667617895490994},
      {3.0, 47, 85.207257738829606411},
      {10.0, 1, 2.302585092994045684},
      {10.0, 2, 4.6151205168412594509},
      {10.0, 3, 6.9373140812236814548},
      {10.0, 5, 11.609598352230489182},
      {10.0, 11, 25.83290405366582586},
      {10.0, 47, 116.08608766248082562},
  };
  for (const Row& row : rows) {
    CAPTURE(row.alpha);
    CAPTURE(row.order);
    CHECK(m_recursion_log(row.alpha, row.order) ==
          doctest::Approx(row.expected).epsilon(2e-11));
  }
  // M_0(10) - 1 is ~ -7.6e-24; the log is 0 to double precision.
  CHECK(m_recursion_log(10.0, 0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("m_recursion_log agrees with direct quadrature on a dense grid") {
  for (double alpha : {-6.0, -3.3, -1.7, -0.4, 0.0, 0.9, 2.2, 6.0}) {
    for (int order : {0, 1, 2, 4, 7, 13, 24}) {
      CAPTURE(alpha);
      CAPTURE(order);
      const double expected = std::log(oracles::m_integral(alpha, order));
      CHECK(m_recursion_log(alpha, order) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("m_recursion satisfies the three-term recurrence") {
  for (double alpha : {-4.0, -1.0, 0.3, 2.0}) {
    for (int k = 1; k < 12; ++k) {
      const double m_lo = m_recursion(alpha, k - 1);
      const double m_mid = m_recursion(alpha, k);
      const double m_hi = m_recursion(alpha, k + 1);
      CHECK(m_hi == doctest::Approx(alpha * m_mid + k * m_lo).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(m_recursion(40.0, 400), NumericError);
  CHECK_THROWS_AS(m_recursion_log(0.0, -1), DomainError);
}

TEST_CASE("pn_logpdf matches radial-integral references") {
  // [DERIVED: mpmath quadrature of integral_0^inf r^{n-1} N(r y; mu, sigma) dr]
  GaussianParams p2((Vector(2) << 1.2, -0.4).finished(),
                    (Matrix(2, 2) << 0.6, 0.15, 0.15, 0.4).finished());
  auto on_circle = [](double theta) {
    return Vector((Vector(2) << std::cos(theta), std::sin(theta)).finished());
  };
  CHECK(pn_logpdf(on_circle(0.3), p2) == doctest::Approx(-0.999200832663715203).epsilon(1e-12));
  CHECK(pn_logpdf(on_circle(2.0), p2) == doctest::Approx(-5.63586060328834433).epsilon(1e-12));
  CHECK(pn_logpdf(on_circle(4.1), p2) == doctest::Approx(-3.39658955811712746).epsilon(1e-12));

  GaussianParams p3((Vector(3) << 0.8, 0.4, -0.3).finished(),
                    (Matrix(3, 3) << 0.3, 0.05, 0.0,
                                     0.05, 0.25, -0.03,
                                     0.0, -0.03, 0.2).finished());
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  Vector e3 = Vector::Zero(3);
  e3[2] = 1.0;
  const Vector along_mu = p3.mu / p3.mu.norm();
  CHECK(pn_logpdf(e1, p3) == doctest::Approx(-1.02362500658039824).epsilon(1e-12));
  CHECK(pn_logpdf(e3, p3) == doctest::Approx(-5.12674454387330424).epsilon(1e-12));
  CHECK(pn_logpdf(along_mu, p3) == doctest::Approx(-0.0971711248003243434).epsilon(1e-12));

  // Off-sphere points are rejected rather than silently normalized.
  CHECK_THROWS_AS(pn_logpdf(0.99 * e1, p3), DomainError);
}

TEST_CASE("pn density normalizes over the circle and the sphere") {
  RngHandle rng(31);
  for (int t = 0; t < 20; ++t) {
    const Index n = (t % 2 == 0) ? 2 : 3;
    const GaussianParams params(rng.uniform(0.2, 1.8) * sample_mu(n, rng),
                                sample_sigma(n, rng.uniform(0.3, 1.5), rng));
    auto density = [&](const Vector& y) { return std::exp(pn_logpdf(y, params)); };
    if (n == 2) {
      CHECK(oracles::integrate_circle(density) == doctest::Approx(1.0).epsilon(1e-8));
    } else {
      CHECK(oracles::integrate_sphere(density, 240, 480) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("pnc density normalizes over the unit disk") {
  RngHandle rng(32);
  for (int t = 0; t < 10; ++t) {
    const GaussianParams params(rng.uniform(0.2, 1.5) * sample_mu(2, rng),
                                sample_sigma(2, rng.uniform(0.3, 1.2), rng));
    const double c = rng.exponential(1.0) * (params.sigma.trace() + params.mu.squaredNorm());
    auto density = [&](const Vector& y) { return std::exp(pnc_logpdf(y, params, c)); };
    CHECK(oracles::integrate_disk(density) == doctest::Approx(1.0).epsilon(1e-4));
  }
  // Support is the open unit ball.
  const GaussianParams params((Vector(2) << 0.5, 0.1).finished(), Matrix::Identity(2, 2));
  CHECK_THROWS_AS(pnc_logpdf((Vector(2) << 1.0, 0.0).finished(), params, 0.5), DomainError);
  CHECK_THROWS_AS(pnc_logpdf((Vector(2) << 0.9, 0.9).finished(), params, 0.5), DomainError);
}

TEST_CASE("pnbc density normalizes over the ellipse") {
  // Change of variables u = B^{1/2} y maps the support onto the unit disk,
  // so integral over {y^T B y < 1} = det(B^{-1/2}) * integral over the disk
  // of p(B^{-1/2} u).
  RngHandle rng(33);
  for (int t = 0; t < 10; ++t) {
    const GaussianParams params(rng.uniform(0.2, 1.5) * sample_mu(2, rng),
                                sample_sigma(2, rng.uniform(0.3, 1.2), rng));
    const Matrix b = sample_b_full(2, rng);
    const double c = rng.exponential(1.0) * (params.sigma.trace() + params.mu.squaredNorm());
    const ProjectionVariant variant = ProjectionVariant::pn_bc(b, c);
    const SpdSqrt root = spd_sqrt(b);
    const double jac = std::exp(-root.log_det_sqrt);
    auto density = [&](const Vector& u) {
      return jac * std::exp(pnbc_logpdf(root.inv_sqrt * u, params, variant));
    };
    CHECK(oracles::integrate_disk(density) == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("pnb density normalizes over the ellipse boundary") {
  // With c = 0 the support is the curve {y : y^T B y = 1}. Parametrize
  // y(t) = B^{-1/2} (cos t, sin t); the line element is ||B^{-1/2} u'(t)|| dt,
  // and the density must integrate to 1 against it.
  RngHandle rng(34);
  for (int trial = 0; trial < 6; ++trial) {
    const GaussianParams params(rng.uniform(0.3, 1.4) * sample_mu(2, rng),
                                sample_sigma(2, rng.uniform(0.4, 1.2), rng));
    const Matrix b = sample_b_full(2, rng);
    const ProjectionVariant variant = ProjectionVariant::pn_b(b);
    const Matrix inv_root = spd_sqrt(b).inv_sqrt;
    const int k = 4096;
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      const double t = 2.0 * M_PI * i / k;
      const Vector y = inv_root * (Vector(2) << std::cos(t), std::sin(t)).finished();
      const Vector tangent = inv_root * (Vector(2) << -std::sin(t), std::cos(t)).finished();
      total += std::exp(pnbc_logpdf(y, params, variant)) * tangent.norm();
    }
    total *= 2.0 * M_PI / k;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("pnb projections land on the support and off-support points throw") {
  RngHandle rng(36);
  const Index n = 3;
  const GaussianParams params(1.1 * sample_mu(n, rng), sample_sigma(n, 0.9, rng));
  const Matrix b = sample_b_full(n, rng);
  const ProjectionVariant variant = ProjectionVariant::pn_b(b);
  for (int t = 0; t < 8; ++t) {
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = rng.gaussian();
    const Vector y = project(x, variant);
    CHECK(y.dot(b * y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isfinite(pnbc_logpdf(y, params, variant)));
  }
  Vector inside = Vector::Zero(n);
  inside[0] = 0.1;
  CHECK_THROWS_AS(pnbc_logpdf(inside, params, variant), DomainError);
}

TEST_CASE("pnbc dispatcher is consistent with the plain variants") {
  RngHandle rng(35);
  const Index n = 3;
  const GaussianParams params(0.9 * sample_mu(n, rng), sample_sigma(n, 0.7, rng));
  const double c = 0.8;
  // B = I, c > 0 must reduce to pnc.
  const ProjectionVariant with_identity = ProjectionVariant::pn_bc(Matrix::Identity(n, n), c);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = rng.gaussian();
  const Vector y = project(x, with_identity);
  CHECK(pnbc_logpdf(y, params, with_identity) ==
        doctest::Approx(pnc_logpdf(y, params, c)).epsilon(1e-12));
  // No b, no c must reduce to pn.
  const Vector y_sphere = x / x.norm();
  CHECK(pnbc_logpdf(y_sphere, params, ProjectionVariant::pn()) ==
        doctest::Approx(pn_logpdf(y_sphere, params)).epsilon(1e-14));
}
