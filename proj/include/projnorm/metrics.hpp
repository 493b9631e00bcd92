#pragma once

#include "projnorm/types.hpp"

namespace projnorm {

// 100 * ||estimate - truth||_F^2 / ||truth||_F^2. ZeroTruth is an error.
double rel_error_pct(const Matrix& estimate, const Matrix& truth);
double rel_error_pct(const Vector& estimate, const Vector& truth);

// Cosine similarity <a, b> / (||a|| ||b||) under the Frobenius inner product
// (for symmetric matrices this is tr(a b) / (||a||_F ||b||_F)).
double cosine_sim(const Matrix& a, const Matrix& b);
double cosine_sim(const Vector& a, const Vector& b);

}  // namespace projnorm
