#pragma once

#include "projnorm/types.hpp"

namespace projnorm {

// Symmetric square root pair of an SPD matrix, computed from one
// self-adjoint eigendecomposition.
struct SpdSqrt {
  Matrix sqrt;               // B^{1/2}
  Matrix inv_sqrt;           // B^{-1/2}
  double log_det_sqrt = 0.0; // log det B^{1/2} = (1/2) log det B
};

SpdSqrt spd_sqrt(const Matrix& m);

// Maps parameters of x into the whitened space where the elliptical
// denominator becomes spherical: mu' = B^{1/2} mu, sigma' = B^{1/2} sigma B^{1/2}.
// Identity passthrough when the variant carries no b.
GaussianParams to_primed(const GaussianParams& params, const ProjectionVariant& variant);

// Pulls moments computed in the whitened space back: gamma = R gamma',
// E[y y^T] = R E[y'y'^T] R, psi likewise, with R = B^{-1/2}.
Moments from_primed_moments(const Moments& primed, const Matrix& inv_sqrt_b);

// Eigendecomposition of a symmetric matrix, reused by the matrix-function
// helpers below and by gradient code that needs the factors.
struct SymEig {
  Matrix vectors;  // columns are eigenvectors
  Vector values;
};

SymEig sym_eig(const Matrix& m);

// exp(W) for symmetric W via eigendecomposition; result is SPD.
Matrix expm_sym(const Matrix& w);
Matrix expm_sym(const SymEig& eig);

// log(S) for SPD S. Eigenvalues below floor_rel * max_eigenvalue are clamped
// before the log so nearly singular sample covariances stay usable.
Matrix logm_sym(const Matrix& s, double floor_rel = 1e-14);

// First divided differences of exp at the eigenvalues:
// phi_ij = (e^{l_i} - e^{l_j}) / (l_i - l_j), continuous limit on the diagonal.
// This is the kernel of the derivative of expm_sym (Daleckii-Krein), used by
// the reverse-mode gradient of SPD-embedded fits.
Matrix exp_divided_differences(const Vector& eigenvalues);

}  // namespace projnorm
