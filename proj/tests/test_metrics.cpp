#include "projnorm/metrics.hpp"

#include "projnorm/sampling.hpp"

#include <doctest.h>

#include <cmath>

using namespace projnorm;

TEST_CASE("rel_error_pct basic values") {
  Vector a(2);
  a << 1.0, 0.0;
  CHECK(rel_error_pct(a, a) == 0.0);

  Vector b(2);
  b << 0.0, 1.0;
  // ||a - b||^2 = 2, ||truth||^2 = 1 -> 200
  CHECK(rel_error_pct(b, a) == doctest::Approx(200.0).epsilon(1e-15));

  Matrix ma = Matrix::Identity(2, 2);
  CHECK(rel_error_pct(ma, ma) == 0.0);

  Vector zero = Vector::Zero(2);
  CHECK_THROWS_AS(rel_error_pct(a, zero), DomainError);
}

TEST_CASE("cosine_sim basic values") {
  Vector a(2), b(2);
  a << 2.0, 0.0;
  b << 0.0, 3.0;
  CHECK(cosine_sim(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_sim(a, b) == doctest::Approx(0.0).epsilon(1e-15));

  // I vs diag(1, 2): tr = 3, norms sqrt(2) * sqrt(5) -> 3/sqrt(10)
  Matrix eye = Matrix::Identity(2, 2);
  Matrix d = eye;
  d(1, 1) = 2.0;
  CHECK(cosine_sim(eye, d) == doctest::Approx(3.0 / std::sqrt(10.0)).epsilon(1e-15));

  Vector zero = Vector::Zero(2);
  CHECK_THROWS_AS(cosine_sim(zero, a), DomainError);
  CHECK_THROWS_AS(cosine_sim(a, zero), DomainError);
}

TEST_CASE("cosine 1 reduces rel_error_pct to the pure scale error") {
  RngHandle rng(321);
  for (int trial = 0; trial < 20; ++trial) {
    Vector truth(4);
    for (Index i = 0; i < 4; ++i) truth[i] = rng.gaussian();
    if (truth.norm() < 1e-6) continue;
    const double scale = 0.2 + rng.uniform();
    const Vector est = scale * truth;  // exactly parallel
    CHECK(cosine_sim(est, truth) == doctest::Approx(1.0).epsilon(1e-12));
    const double scale_error =
        100.0 * std::pow(est.norm() - truth.norm(), 2) / truth.squaredNorm();
    CHECK(rel_error_pct(est, truth) == doctest::Approx(scale_error).epsilon(1e-9));
  }
}
