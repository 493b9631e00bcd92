#include "projnorm/spd.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace projnorm {

namespace {

constexpr double kSqrtEigTol = 1e-10;

}  // namespace

SymEig sym_eig(const Matrix& m) {
  require_symmetric(m, "matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) {
    throw NumericError("self-adjoint eigendecomposition failed");
  }
  return {eig.eigenvectors(), eig.eigenvalues()};
}

SpdSqrt spd_sqrt(const Matrix& m) {
  require_spd(m, "matrix");
  const SymEig eig = sym_eig(m);
  const double lmax = eig.values.maxCoeff();
  if (eig.values.minCoeff() <= kSqrtEigTol * lmax) {
    throw NotSpdError("matrix is too ill-conditioned for a stable square root");
  }
  const Vector root = eig.values.cwiseSqrt();
  SpdSqrt out;
  out.sqrt = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
  out.inv_sqrt = eig.vectors * root.cwiseInverse().asDiagonal() * eig.vectors.transpose();
  out.log_det_sqrt = 0.5 * eig.values.array().log().sum();
  // Round-off symmetrization keeps downstream symmetry checks exact.
  out.sqrt = 0.5 * (out.sqrt + out.sqrt.transpose()).eval();
  out.inv_sqrt = 0.5 * (out.inv_sqrt + out.inv_sqrt.transpose()).eval();
  return out;
}

GaussianParams to_primed(const GaussianParams& params, const ProjectionVariant& variant) {
  variant.require_dim(params.dim());
  if (!variant.has_b()) {
    return params;
  }
  const SpdSqrt root = spd_sqrt(*variant.b);
  Vector mu_p = root.sqrt * params.mu;
  Matrix sigma_p = root.sqrt * params.sigma * root.sqrt;
  sigma_p = 0.5 * (sigma_p + sigma_p.transpose()).eval();
  return GaussianParams(std::move(mu_p), std::move(sigma_p));
}

Moments from_primed_moments(const Moments& primed, const Matrix& inv_sqrt_b) {
  if (inv_sqrt_b.rows() != primed.dim() || inv_sqrt_b.cols() != primed.dim()) {
    throw DimensionError("inv_sqrt_b shape does not match the moments");
  }
  require_symmetric(inv_sqrt_b, "inv_sqrt_b");
  Vector gamma = inv_sqrt_b * primed.gamma;
  Matrix sm = inv_sqrt_b * primed.second_moment * inv_sqrt_b;
  sm = 0.5 * (sm + sm.transpose()).eval();
  return Moments::from_gamma_and_second(std::move(gamma), std::move(sm));
}

Matrix expm_sym(const SymEig& eig) {
  Matrix out = eig.vectors * eig.values.array().exp().matrix().asDiagonal() *
               eig.vectors.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

Matrix expm_sym(const Matrix& w) {
  return expm_sym(sym_eig(w));
}

Matrix logm_sym(const Matrix& s, double floor_rel) {
  const SymEig eig = sym_eig(s);
  const double lmax = eig.values.maxCoeff();
  if (!(lmax > 0.0)) {
    throw NotSpdError("matrix log requires a positive definite argument");
  }
  const double floor = lmax * floor_rel;
  Vector logs(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) {
    logs[i] = std::log(std::max(eig.values[i], floor));
  }
  Matrix out = eig.vectors * logs.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

Matrix exp_divided_differences(const Vector& eigenvalues) {
  const Index n = eigenvalues.size();
  Matrix phi(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double a = eigenvalues[i];
      const double b = eigenvalues[j];
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (a - b);
      // (e^a - e^b)/(a - b) = e^{(a+b)/2} sinh(h)/h with h = (a-b)/2; the
      // sinhc form stays accurate when a and b nearly coincide.
      double sinhc;
      if (std::abs(half) < 1e-5) {
        const double h2 = half * half;
        sinhc = 1.0 + h2 / 6.0 * (1.0 + h2 / 20.0);
      } else {
        sinhc = std::sinh(half) / half;
      }
      phi(i, j) = std::exp(mid) * sinhc;
    }
  }
  return phi;
}

}  // namespace projnorm
