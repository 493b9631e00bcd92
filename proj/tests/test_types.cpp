#include "projnorm/types.hpp"

#include <doctest.h>

using namespace projnorm;

namespace {

Matrix spd2(double a, double b, double d) {
  Matrix m(2, 2);
  m << a, b, b, d;
  return m;
}

}  // namespace

TEST_CASE("require_spd accepts SPD and rejects everything else") {
  CHECK_NOTHROW(require_spd(spd2(1.0, 0.2, 0.5), "sigma"));

  // Asymmetric
  Matrix m(2, 2);
  m << 1.0, 0.3, 0.2, 1.0;
  CHECK_THROWS_AS(require_spd(m, "sigma"), NotSpdError);

  // Indefinite
  CHECK_THROWS_AS(require_spd(spd2(1.0, 2.0, 1.0), "sigma"), NotSpdError);

  // Singular (eigenvalue exactly zero)
  CHECK_THROWS_AS(require_spd(spd2(1.0, 1.0, 1.0), "sigma"), NotSpdError);

  // Non-square
  Matrix rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(require_spd(rect, "sigma"), DimensionError);
}

TEST_CASE("is_symmetric respects the tolerance") {
  Matrix m = spd2(1.0, 0.5, 2.0);
  CHECK(is_symmetric(m));
  m(0, 1) += 2e-10;
  CHECK_FALSE(is_symmetric(m));     // default kSymTol = 1e-10
  CHECK(is_symmetric(m, 1e-8));
}

TEST_CASE("GaussianParams validates on construction") {
  Vector mu(2);
  mu << 1.0, -0.5;
  CHECK_NOTHROW(GaussianParams(mu, spd2(1.0, 0.0, 1.0)));

  // Dimension mismatch between mu and sigma
  Vector mu3(3);
  mu3.setOnes();
  CHECK_THROWS_AS(GaussianParams(mu3, spd2(1.0, 0.0, 1.0)), DimensionError);

  // n = 1 is below the minimum dimension
  Vector mu1(1);
  mu1 << 1.0;
  Matrix s1(1, 1);
  s1 << 1.0;
  CHECK_THROWS_AS(GaussianParams(mu1, s1), DimensionError);

  // Non-finite entries
  Vector bad = mu;
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(GaussianParams(bad, spd2(1.0, 0.0, 1.0)), DomainError);
}

TEST_CASE("ProjectionVariant kinds and factories") {
  CHECK(ProjectionVariant::pn().kind() == ProjectionVariant::Kind::kPn);
  CHECK(ProjectionVariant::pn_c(0.5).kind() == ProjectionVariant::Kind::kPnC);
  CHECK(ProjectionVariant::pn_b(spd2(2.0, 0.0, 1.0)).kind() == ProjectionVariant::Kind::kPnB);
  CHECK(ProjectionVariant::pn_bc(spd2(2.0, 0.0, 1.0), 0.1).kind() ==
        ProjectionVariant::Kind::kPnBc);

  CHECK(to_string(ProjectionVariant::Kind::kPn) == std::string("pn"));
  CHECK(to_string(ProjectionVariant::Kind::kPnC) == std::string("pnc"));
  CHECK(to_string(ProjectionVariant::Kind::kPnB) == std::string("pnb"));
  CHECK(to_string(ProjectionVariant::Kind::kPnBc) == std::string("pnbc"));

  // c < 0 is out of domain; b must be SPD
  CHECK_THROWS_AS(ProjectionVariant::pn_c(-0.1), DomainError);
  CHECK_THROWS_AS(ProjectionVariant::pn_b(spd2(1.0, 2.0, 1.0)), NotSpdError);

  // Dimension guard against parameters
  const ProjectionVariant vb = ProjectionVariant::pn_b(spd2(2.0, 0.0, 1.0));
  CHECK_NOTHROW(vb.require_dim(2));
  CHECK_THROWS_AS(vb.require_dim(3), DimensionError);
}

TEST_CASE("Moments consistency is enforced by construction and validate") {
  Vector gamma(2);
  gamma << 0.6, 0.3;
  Matrix sm(2, 2);
  sm << 0.5, 0.1, 0.1, 0.5;
  const Moments m = Moments::from_gamma_and_second(gamma, sm);
  CHECK(m.psi.isApprox(sm - gamma * gamma.transpose(), 1e-15));
  CHECK_NOTHROW(m.validate());

  // Tampering with psi breaks the consistency identity
  Moments broken = m;
  broken.psi(0, 0) += 1e-6;
  broken.psi(1, 1) += 1e-6;  // keep symmetry; consistency is what fails
  CHECK_THROWS_AS(broken.validate(), DomainError);

  // A psi with a decidedly negative eigenvalue fails the PSD slack
  Moments indefinite = m;
  indefinite.second_moment(0, 0) = -1.0;
  indefinite.psi = indefinite.second_moment - gamma * gamma.transpose();
  CHECK_THROWS_AS(indefinite.validate(), NotSpdError);
}
