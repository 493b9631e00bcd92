#pragma once

#include "projnorm/types.hpp"

#include <cstdint>
#include <random>

namespace projnorm {

// Deterministic random stream. Wraps mt19937_64 with a hand-rolled
// Box-Muller transform so draws are bit-identical across platforms
// (std::normal_distribution is implementation-defined).
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream = 0);

  // Uniform on [2^-53, 1]; never returns 0, so log(u) is always finite.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal draw (second element of each Box-Muller pair is cached).
  double gaussian();
  // Exponential with the given mean.
  double exponential(double mean);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child stream derived from (seed, key): used to give each
  // experiment cell its own reproducible stream regardless of run order.
  RngHandle child(std::uint64_t key) const;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Mixes arbitrary 64-bit keys into a well-spread stream id (splitmix64).
std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b);

// m rows of x ~ N(mu, sigma), via the Cholesky factor of sigma.
Matrix sample_gaussian(const GaussianParams& params, Index m, RngHandle& rng);

// y = x / sqrt(x^T B x + c). ZeroVector error if the denominator is 0.
Vector project(const Vector& x, const ProjectionVariant& variant);

// Monte Carlo moments of y from m draws, accumulated in a single pass with
// O(n^2) memory. Deterministic given the rng state.
Moments mc_moments(const GaussianParams& params, const ProjectionVariant& variant,
                   Index m, RngHandle& rng);

// Uniform direction on the unit sphere.
Vector sample_mu(Index n, RngHandle& rng);

enum class EigDist {
  kExponential,  // Exp(1) + 0.01, scaled s^2/n
  kUniform,      // U(0.05, 1.0) + 0.01, scaled s^2/n
};

// Random SPD covariance: eigenvalues per eig_dist, eigenvectors from
// exp(skew-symmetric Gaussian).
Matrix sample_sigma(Index n, double s, RngHandle& rng, EigDist eig_dist = EigDist::kExponential);

enum class ExpConvention { kMean, kRate };

struct RankOneB {
  Matrix b_matrix;  // I + b v v^T
  double b = 0.0;
  Vector v;
};

// Full random SPD B (eigen-structure like sample_sigma, unscaled).
Matrix sample_b_full(Index n, RngHandle& rng, EigDist eig_dist = EigDist::kExponential);

// Rank-one B = I + b v v^T with b = 2 + Exp(4) (mean convention by default)
// and v uniform on the sphere.
RankOneB sample_b_rank1(Index n, RngHandle& rng,
                        ExpConvention convention = ExpConvention::kMean);

// c = Exp(1) multiplier times E[x^T x] = tr(sigma) + mu^T mu.
double sample_c(const GaussianParams& params, RngHandle& rng);

}  // namespace projnorm
