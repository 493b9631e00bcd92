#include "projnorm/sampling.hpp"

#include "projnorm/quadratic_forms.hpp"
#include "projnorm/spd.hpp"

#include <Eigen/Cholesky>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace projnorm {

namespace {

// splitmix64 finalizer: bijective 64-bit mix used to spread seed/stream keys.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::LLT<Matrix> cholesky_of(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("sigma is not positive definite");
  }
  return llt;
}

}  // namespace

std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

RngHandle::RngHandle(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix_keys(seed, stream)) {}

double RngHandle::uniform() {
  // 53 random mantissa bits; +1 keeps the draw strictly positive so
  // log(uniform()) is finite.
  return static_cast<double>((engine_() >> 11) + 1) * 0x1p-53;
}

double RngHandle::uniform(double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1p-53;
}

double RngHandle::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Hand-rolled Box-Muller: std::normal_distribution's algorithm is
  // implementation-defined, which would break cross-platform reproducibility.
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi_v<double> * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

double RngHandle::exponential(double mean) {
  if (!(mean > 0.0)) {
    throw DomainError("exponential mean must be positive");
  }
  return -mean * std::log(uniform());
}

RngHandle RngHandle::child(std::uint64_t key) const {
  return RngHandle(seed_, mix_keys(stream_ + 1, key));
}

Matrix sample_gaussian(const GaussianParams& params, Index m, RngHandle& rng) {
  if (m <= 0) {
    throw DomainError("sample count must be positive");
  }
  const Index n = params.dim();
  const auto llt = cholesky_of(params.sigma);
  const Matrix l = llt.matrixL();
  Matrix out(m, n);
  Vector u(n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) u[j] = rng.gaussian();
    out.row(i) = (params.mu + l * u).transpose();
  }
  return out;
}

Vector project(const Vector& x, const ProjectionVariant& variant) {
  variant.require_dim(x.size());
  const double denom2 = variant.has_b() ? x.dot(*variant.b * x) + variant.c
                                        : x.squaredNorm() + variant.c;
  if (!(denom2 > 0.0)) {
    throw DomainError("cannot project: x^T B x + c is zero");
  }
  return x / std::sqrt(denom2);
}

Moments mc_moments(const GaussianParams& params, const ProjectionVariant& variant,
                   Index m, RngHandle& rng) {
  if (m <= 0) {
    throw DomainError("sample count must be positive");
  }
  variant.require_dim(params.dim());
  const Index n = params.dim();
  const auto llt = cholesky_of(params.sigma);
  const Matrix l = llt.matrixL();
  const Matrix* b = variant.has_b() ? &*variant.b : nullptr;

  Vector sum = Vector::Zero(n);
  Matrix sum_outer = Matrix::Zero(n, n);
  Vector u(n);
  Vector x(n);
  Vector y(n);
  Vector bx(n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) u[j] = rng.gaussian();
    x.noalias() = l.triangularView<Eigen::Lower>() * u;
    x += params.mu;
    double denom2 = variant.c;
    if (b) {
      bx.noalias() = (*b) * x;
      denom2 += x.dot(bx);
    } else {
      denom2 += x.squaredNorm();
    }
    y = x / std::sqrt(denom2);
    sum += y;
    sum_outer.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0);
  }
  Vector gamma = sum / static_cast<double>(m);
  Matrix sm = Matrix(sum_outer.selfadjointView<Eigen::Lower>()) / static_cast<double>(m);
  return Moments::from_gamma_and_second(std::move(gamma), std::move(sm));
}

Vector sample_mu(Index n, RngHandle& rng) {
  if (n < 2) {
    throw DimensionError("dimension must be >= 2");
  }
  Vector v(n);
  double norm = 0.0;
  do {
    for (Index j = 0; j < n; ++j) v[j] = rng.gaussian();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

namespace {

// Random rotation: exponential of a skew-symmetric matrix with standard
// normal lower triangle.
Matrix sample_rotation(Index n, RngHandle& rng) {
  Matrix skew = Matrix::Zero(n, n);
  for (Index i = 1; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      const double g = rng.gaussian();
      skew(i, j) = g;
      skew(j, i) = -g;
    }
  }
  return skew.exp();
}

Vector sample_eigenvalues(Index n, RngHandle& rng, EigDist eig_dist) {
  Vector d(n);
  for (Index i = 0; i < n; ++i) {
    const double draw = eig_dist == EigDist::kExponential ? rng.exponential(1.0)
                                                          : rng.uniform(0.05, 1.0);
    d[i] = draw + 0.01;
  }
  return d;
}

Matrix spd_from_spectrum(const Vector& d, const Matrix& v) {
  Matrix out = v * d.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

}  // namespace

Matrix sample_sigma(Index n, double s, RngHandle& rng, EigDist eig_dist) {
  if (n < 2) {
    throw DimensionError("dimension must be >= 2");
  }
  if (!(s > 0.0)) {
    throw DomainError("scale s must be positive");
  }
  const Vector d = sample_eigenvalues(n, rng, eig_dist) * (s * s / static_cast<double>(n));
  const Matrix v = sample_rotation(n, rng);
  return spd_from_spectrum(d, v);
}

Matrix sample_b_full(Index n, RngHandle& rng, EigDist eig_dist) {
  if (n < 2) {
    throw DimensionError("dimension must be >= 2");
  }
  const Vector d = sample_eigenvalues(n, rng, eig_dist);
  const Matrix v = sample_rotation(n, rng);
  return spd_from_spectrum(d, v);
}

RankOneB sample_b_rank1(Index n, RngHandle& rng, ExpConvention convention) {
  RankOneB out;
  out.v = sample_mu(n, rng);
  const double mean = convention == ExpConvention::kMean ? 4.0 : 0.25;
  out.b = 2.0 + rng.exponential(mean);
  out.b_matrix = Matrix::Identity(n, n) + out.b * (out.v * out.v.transpose());
  return out;
}

double sample_c(const GaussianParams& params, RngHandle& rng) {
  const double scale = params.sigma.trace() + params.mu.squaredNorm();
  return rng.exponential(1.0) * scale;
}

}  // namespace projnorm
