#include "projnorm/fit.hpp"

#include "projnorm/moments.hpp"
#include "projnorm/sampling.hpp"
#include "projnorm/spd.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace projnorm {

double lr_schedule(int iteration, const FitConfig& config) {
  if (iteration < 0) {
    throw DomainError("iteration must be >= 0");
  }
  const int cycle = iteration / config.iters_per_cycle;
  const int within = iteration % config.iters_per_cycle;
  const int steps = within / config.lr_decay_every;
  return config.lr_initial * std::pow(config.cycle_decay, cycle) *
         std::pow(config.lr_decay, steps);
}

Vector sphere_embed(const Vector& u) {
  const double norm = u.norm();
  if (norm < 1e-14) {
    throw DomainError("cannot normalize a zero vector onto the sphere");
  }
  return u / norm;
}

double loss(const GaussianParams& candidate, const ProjectionVariant& variant,
            const Moments& observed, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("lambda must lie in [0, 1]");
  }
  if (observed.dim() != candidate.dim()) {
    throw DimensionError("observed moments do not match the candidate dimension");
  }
  const Moments approx = approx_moments(candidate, variant);
  const double value = (1.0 - lambda) * (approx.gamma - observed.gamma).squaredNorm() +
                       lambda * (approx.psi - observed.psi).squaredNorm();
  if (!std::isfinite(value)) {
    throw NumericError("moment loss is not finite");
  }
  return value;
}

namespace detail {

namespace {

Index sym_pack_size(Index n) { return n * (n + 1) / 2; }

Matrix unpack_sym(const double* w, Index n) {
  Matrix out(n, n);
  Index k = 0;
  for (Index p = 0; p < n; ++p) {
    for (Index q = p; q < n; ++q) {
      out(p, q) = w[k];
      out(q, p) = w[k];
      ++k;
    }
  }
  return out;
}

void pack_sym_grad(const Matrix& bar, double* g) {
  const Index n = bar.rows();
  Index k = 0;
  for (Index p = 0; p < n; ++p) {
    for (Index q = p; q < n; ++q) {
      g[k] = (p == q) ? bar(p, p) : bar(p, q) + bar(q, p);
      ++k;
    }
  }
}

// Forward tape of the spherical-denominator moment approximation.
struct CoreTape {
  Vector mu;
  Matrix sigma;
  double c = 0.0;
  Vector diag;     // sigma diagonal
  Vector v;        // sigma mu
  Matrix t;        // sigma^2
  double s0 = 0.0; // E[d]
  Vector zbar;
  double q = 0.0;  // var(d)
  Vector varz;
  Vector covxz;
  Vector d;        // mu^2 + zbar
  Vector avec;
  Matrix nbar;
  Matrix cmat;     // cov(N, d)
  Vector gamma;
  Matrix sm;
};

void core_forward(const Vector& mu, const Matrix& sigma, double c, CoreTape& tape) {
  const Index n = mu.size();
  tape.mu = mu;
  tape.sigma = sigma;
  tape.c = c;
  tape.diag = sigma.diagonal();
  tape.v.noalias() = sigma * mu;
  tape.t.noalias() = sigma * sigma;

  const Vector mu2 = mu.cwiseProduct(mu);
  tape.s0 = tape.diag.sum() + mu2.sum() + c;
  tape.zbar = Vector::Constant(n, tape.s0) - tape.diag - mu2;
  tape.q = 2.0 * tape.t.trace() + 4.0 * mu.dot(tape.v);
  tape.varz = Vector::Constant(n, tape.q) -
              2.0 * (2.0 * tape.t.diagonal() - tape.diag.cwiseProduct(tape.diag)) -
              4.0 * (2.0 * mu.cwiseProduct(tape.v) - mu2.cwiseProduct(tape.diag));
  tape.covxz = 2.0 * (tape.v - mu.cwiseProduct(tape.diag));
  tape.d = mu2 + tape.zbar;
  if (!(tape.d.minCoeff() > 0.0)) {
    throw NumericError("Taylor mean expansion point must be positive");
  }
  tape.avec = (-1.5) * tape.diag.cwiseProduct(mu).cwiseProduct(tape.zbar) +
              0.375 * tape.varz.cwiseProduct(mu) +
              tape.covxz.cwiseProduct(mu2 - 0.5 * tape.zbar);
  const Vector inv_sqrt = tape.d.array().pow(-0.5);
  const Vector inv_52 = tape.d.array().pow(-2.5);
  tape.gamma = mu.cwiseProduct(inv_sqrt) + tape.avec.cwiseProduct(inv_52);

  tape.nbar = sigma + mu * mu.transpose();
  tape.cmat = 2.0 * (tape.t + mu * tape.v.transpose() + tape.v * mu.transpose());
  const double s0 = tape.s0;
  const double u1 = 1.0 / s0 + tape.q / (s0 * s0 * s0);
  const double u2 = 1.0 / (s0 * s0);
  Matrix sm_raw = tape.nbar * u1 - tape.cmat * u2;
  tape.sm = 0.5 * (sm_raw + sm_raw.transpose());
}

struct CoreGrad {
  Vector mu;
  Matrix sigma;
  double c = 0.0;
};

void core_backward(const CoreTape& tape, const Vector& bar_gamma, const Matrix& bar_sm_in,
                   CoreGrad& grad) {
  const Vector& mu = tape.mu;
  const Matrix& sigma = tape.sigma;
  const double s0 = tape.s0;
  const double q = tape.q;

  const Matrix bar_sm = 0.5 * (bar_sm_in + bar_sm_in.transpose());
  const double u1 = 1.0 / s0 + q / (s0 * s0 * s0);
  const double u2 = 1.0 / (s0 * s0);

  Matrix bar_n = u1 * bar_sm;
  Matrix bar_cmat = -u2 * bar_sm;
  const double dot_gn = bar_sm.cwiseProduct(tape.nbar).sum();
  const double dot_gc = bar_sm.cwiseProduct(tape.cmat).sum();
  double bar_q = dot_gn / (s0 * s0 * s0);
  double bar_s0 = dot_gn * (-1.0 / (s0 * s0) - 3.0 * q / (s0 * s0 * s0 * s0)) +
                  dot_gc * 2.0 / (s0 * s0 * s0);

  Matrix bar_t = 2.0 * bar_cmat;
  Vector bar_mu = 4.0 * (bar_cmat * tape.v);
  Vector bar_v = 4.0 * (bar_cmat * mu);
  Matrix bar_sigma = bar_n;
  bar_mu += 2.0 * (bar_n * mu);

  // mean block
  const Vector mu2 = mu.cwiseProduct(mu);
  const Vector inv_sqrt = tape.d.array().pow(-0.5);
  const Vector inv_32 = tape.d.array().pow(-1.5);
  const Vector inv_52 = tape.d.array().pow(-2.5);
  const Vector inv_72 = tape.d.array().pow(-3.5);
  const Vector bar_d = bar_gamma.cwiseProduct(
      (-0.5) * mu.cwiseProduct(inv_32) - 2.5 * tape.avec.cwiseProduct(inv_72));
  const Vector bar_a = bar_gamma.cwiseProduct(inv_52);
  bar_mu += bar_gamma.cwiseProduct(inv_sqrt);
  bar_mu += bar_a.cwiseProduct((-1.5) * tape.diag.cwiseProduct(tape.zbar) + 0.375 * tape.varz +
                               2.0 * tape.covxz.cwiseProduct(mu));
  bar_mu += 2.0 * bar_d.cwiseProduct(mu);
  Vector bar_zbar = bar_a.cwiseProduct((-1.5) * tape.diag.cwiseProduct(mu) - 0.5 * tape.covxz) +
                    bar_d;
  Vector bar_diag = bar_a.cwiseProduct((-1.5) * mu.cwiseProduct(tape.zbar));
  const Vector bar_varz = 0.375 * bar_a.cwiseProduct(mu);
  const Vector bar_covxz = bar_a.cwiseProduct(mu2 - 0.5 * tape.zbar);

  // covxz = 2 (v - mu o diag)
  bar_v += 2.0 * bar_covxz;
  bar_mu -= 2.0 * bar_covxz.cwiseProduct(tape.diag);
  bar_diag -= 2.0 * bar_covxz.cwiseProduct(mu);

  // varz = q 1 - 2 (2 diag(T) - diag^2) - 4 (2 mu o v - mu^2 o diag)
  bar_q += bar_varz.sum();
  Vector bar_diag_t = -4.0 * bar_varz;
  bar_diag += 4.0 * bar_varz.cwiseProduct(tape.diag) + 4.0 * bar_varz.cwiseProduct(mu2);
  bar_mu += -8.0 * bar_varz.cwiseProduct(tape.v) + 8.0 * bar_varz.cwiseProduct(mu).cwiseProduct(tape.diag);
  bar_v += -8.0 * bar_varz.cwiseProduct(mu);

  // zbar = s0 1 - diag - mu^2
  bar_s0 += bar_zbar.sum();
  bar_diag -= bar_zbar;
  bar_mu -= 2.0 * bar_zbar.cwiseProduct(mu);

  // q = 2 tr(T) + 4 mu^T v
  bar_t.diagonal().array() += 2.0 * bar_q;
  bar_mu += 4.0 * bar_q * tape.v;
  bar_v += 4.0 * bar_q * mu;

  // s0 = tr(sigma) + mu^T mu + c
  bar_sigma.diagonal().array() += bar_s0;
  bar_mu += 2.0 * bar_s0 * mu;
  grad.c = bar_s0;

  // roll the diagonal accumulators into their matrices
  bar_sigma.diagonal() += bar_diag;
  bar_t.diagonal() += bar_diag_t;

  // T = sigma sigma
  bar_sigma += bar_t * sigma + sigma * bar_t;

  // v = sigma mu
  bar_sigma += bar_v * mu.transpose();
  bar_mu += sigma * bar_v;

  grad.mu = std::move(bar_mu);
  grad.sigma = std::move(bar_sigma);
}

// Rank-one whitening pair Q = B^{1/2}, R = B^{-1/2} for B = I + b v v^T.
struct RankOneRoots {
  double alpha_q = 0.0;
  double alpha_r = 0.0;
  Matrix q;
  Matrix r;
};

RankOneRoots rank_one_roots(double b, const Vector& v) {
  RankOneRoots out;
  const double s = std::sqrt(1.0 + b);
  out.alpha_q = s - 1.0;
  out.alpha_r = 1.0 / s - 1.0;
  const Matrix vvt = v * v.transpose();
  out.q = Matrix::Identity(v.size(), v.size()) + out.alpha_q * vvt;
  out.r = Matrix::Identity(v.size(), v.size()) + out.alpha_r * vvt;
  return out;
}

}  // namespace

Index CoordLayout::size() const {
  Index total = n;  // u block
  total += sigma_mode == SigmaMode::kFull ? sym_pack_size(n) : 1;
  if (b_mode == BMode::kRank1) total += 1 + n;
  if (b_mode == BMode::kFull) total += sym_pack_size(n);
  if (fit_c) total += 1;
  return total;
}

CoordLayout layout_for(const FitProblem& problem) {
  CoordLayout layout;
  layout.n = problem.dim();
  layout.sigma_mode = problem.sigma_mode;
  layout.b_mode = problem.b_mode;
  layout.fit_c = problem.fit_c;
  return layout;
}

namespace {

struct Blocks {
  Index u = 0;       // start of u
  Index sigma = 0;   // start of sigma block
  Index b = 0;       // start of b block (if any)
  Index c = 0;       // start of c block (if any)
};

Blocks block_offsets(const CoordLayout& layout) {
  Blocks off;
  off.u = 0;
  off.sigma = layout.n;
  off.b = off.sigma + (layout.sigma_mode == SigmaMode::kFull ? sym_pack_size(layout.n) : 1);
  off.c = off.b + (layout.b_mode == BMode::kRank1 ? 1 + layout.n
                   : layout.b_mode == BMode::kFull ? sym_pack_size(layout.n)
                                                   : 0);
  return off;
}

}  // namespace

namespace {

// exp(W) with a relative ridge. When the optimizer drives log-eigenvalues
// tens of units apart, the eigenreconstruction of exp(W) can acquire a
// round-off-negative eigenvalue (~ -1e-18) that the strict SPD boundary of
// GaussianParams / ProjectionVariant rejects; the ridge is far below every
// tolerance in play but keeps the decoded matrix strictly inside the cone.
Matrix expm_sym_interior(const Matrix& w) {
  Matrix out = expm_sym(w);
  const double ridge = 1e-13 * sym_eig(out).values.maxCoeff();
  out += ridge * Matrix::Identity(w.rows(), w.cols());
  return out;
}

}  // namespace

Candidate decode(const Vector& coords, const CoordLayout& layout, double fixed_c) {
  if (coords.size() != layout.size()) {
    throw DimensionError("coordinate vector does not match the layout");
  }
  const Index n = layout.n;
  const Blocks off = block_offsets(layout);

  const Vector mu_hat = sphere_embed(coords.segment(off.u, n));

  Matrix sigma_hat;
  if (layout.sigma_mode == SigmaMode::kFull) {
    sigma_hat = expm_sym_interior(unpack_sym(coords.data() + off.sigma, n));
  } else {
    sigma_hat = std::max(std::exp(coords[off.sigma]), 1e-300) * Matrix::Identity(n, n);
  }

  const double c = layout.fit_c ? std::exp(coords[off.c]) : fixed_c;

  std::optional<Matrix> b;
  if (layout.b_mode == BMode::kRank1) {
    const double b_scalar = std::exp(coords[off.b]);
    const Vector v = sphere_embed(coords.segment(off.b + 1, n));
    b = Matrix(Matrix::Identity(n, n) + b_scalar * (v * v.transpose()));
  } else if (layout.b_mode == BMode::kFull) {
    b = expm_sym_interior(unpack_sym(coords.data() + off.b, n));
  }

  return Candidate{GaussianParams(mu_hat, std::move(sigma_hat)),
                   ProjectionVariant(std::move(b), c)};
}

double loss_and_grad(const Vector& coords, const FitProblem& problem, double lambda,
                     Vector& grad) {
  const CoordLayout layout = layout_for(problem);
  if (coords.size() != layout.size()) {
    throw DimensionError("coordinate vector does not match the problem");
  }
  const Index n = layout.n;
  const Blocks off = block_offsets(layout);
  const Moments& obs = problem.observed;

  // ---- forward: decode with tapes ----
  const Vector u_raw = coords.segment(off.u, n);
  const double u_norm = u_raw.norm();
  if (u_norm < 1e-14) {
    throw DomainError("mean direction coordinates collapsed to zero");
  }
  const Vector mu_hat = u_raw / u_norm;

  Matrix sigma_hat;
  SymEig sigma_eig;  // valid in full mode only
  double sigma2 = 0.0;
  if (layout.sigma_mode == SigmaMode::kFull) {
    sigma_eig = sym_eig(unpack_sym(coords.data() + off.sigma, n));
    sigma_hat = expm_sym(sigma_eig);
  } else {
    sigma2 = std::exp(coords[off.sigma]);
    sigma_hat = sigma2 * Matrix::Identity(n, n);
  }

  const double c = layout.fit_c ? std::exp(coords[off.c]) : problem.fixed_c;

  // b-block tapes
  double b_scalar = 0.0;
  Vector v_raw, v_hat;
  RankOneRoots roots;
  SymEig b_eig;
  Matrix q_mat, r_mat;
  const bool has_b = layout.b_mode != BMode::kNone;
  if (layout.b_mode == BMode::kRank1) {
    b_scalar = std::exp(coords[off.b]);
    v_raw = coords.segment(off.b + 1, n);
    const double v_norm = v_raw.norm();
    if (v_norm < 1e-14) {
      throw DomainError("b direction coordinates collapsed to zero");
    }
    v_hat = v_raw / v_norm;
    roots = rank_one_roots(b_scalar, v_hat);
    q_mat = roots.q;
    r_mat = roots.r;
  } else if (layout.b_mode == BMode::kFull) {
    b_eig = sym_eig(unpack_sym(coords.data() + off.b, n));
    q_mat = b_eig.vectors * (0.5 * b_eig.values).array().exp().matrix().asDiagonal() *
            b_eig.vectors.transpose();
    r_mat = b_eig.vectors * (-0.5 * b_eig.values).array().exp().matrix().asDiagonal() *
            b_eig.vectors.transpose();
  }

  Vector mu_core = mu_hat;
  Matrix sigma_core = sigma_hat;
  if (has_b) {
    mu_core = q_mat * mu_hat;
    sigma_core = q_mat * sigma_hat * q_mat;
    sigma_core = 0.5 * (sigma_core + sigma_core.transpose()).eval();
  }

  CoreTape tape;
  core_forward(mu_core, sigma_core, c, tape);

  Vector gamma = tape.gamma;
  Matrix sm = tape.sm;
  if (has_b) {
    gamma = r_mat * tape.gamma;
    sm = r_mat * tape.sm * r_mat;
    sm = 0.5 * (sm + sm.transpose()).eval();
  }
  const Matrix psi = sm - gamma * gamma.transpose();

  const double value = (1.0 - lambda) * (gamma - obs.gamma).squaredNorm() +
                       lambda * (psi - obs.psi).squaredNorm();
  if (!std::isfinite(value)) {
    throw NumericError("moment loss is not finite");
  }

  // ---- backward ----
  const Matrix bar_psi = 2.0 * lambda * (psi - obs.psi);
  Matrix bar_sm = bar_psi;
  Vector bar_gamma = 2.0 * (1.0 - lambda) * (gamma - obs.gamma) - 2.0 * (bar_psi * gamma);

  Vector bar_mu_core;
  Matrix bar_sigma_core;
  double bar_c = 0.0;
  Vector bar_mu_hat;
  Matrix bar_sigma_hat;
  Matrix bar_q_mat, bar_r_mat;

  if (has_b) {
    const Vector bar_gamma_core = r_mat * bar_gamma;
    bar_r_mat = bar_gamma * tape.gamma.transpose();
    const Matrix bar_sm_sym = 0.5 * (bar_sm + bar_sm.transpose());
    const Matrix bar_sm_core = r_mat * bar_sm_sym * r_mat;
    bar_r_mat += bar_sm_sym * r_mat * tape.sm + tape.sm * r_mat * bar_sm_sym;

    CoreGrad cg;
    core_backward(tape, bar_gamma_core, bar_sm_core, cg);
    bar_c = cg.c;

    bar_q_mat = cg.mu * mu_hat.transpose();
    bar_mu_hat = q_mat * cg.mu;
    bar_q_mat += cg.sigma * q_mat * sigma_hat + sigma_hat * q_mat * cg.sigma;
    bar_sigma_hat = q_mat * cg.sigma * q_mat;
  } else {
    CoreGrad cg;
    core_backward(tape, bar_gamma, bar_sm, cg);
    bar_c = cg.c;
    bar_mu_hat = std::move(cg.mu);
    bar_sigma_hat = std::move(cg.sigma);
  }

  // ---- embedding chain rules ----
  grad.setZero(layout.size());

  // sphere: mu_hat = u / ||u||
  grad.segment(off.u, n) =
      (bar_mu_hat - mu_hat * mu_hat.dot(bar_mu_hat)) / u_norm;

  if (layout.sigma_mode == SigmaMode::kFull) {
    const Matrix phi = exp_divided_differences(sigma_eig.values);
    const Matrix inner = sigma_eig.vectors.transpose() * bar_sigma_hat * sigma_eig.vectors;
    const Matrix bar_w = sigma_eig.vectors * inner.cwiseProduct(phi) * sigma_eig.vectors.transpose();
    pack_sym_grad(bar_w, grad.data() + off.sigma);
  } else {
    grad[off.sigma] = bar_sigma_hat.trace() * sigma2;  // d/d log sigma2
  }

  if (layout.b_mode == BMode::kRank1) {
    const double s = std::sqrt(1.0 + b_scalar);
    double bar_b = v_hat.dot(bar_q_mat * v_hat) * 0.5 / s +
                   v_hat.dot(bar_r_mat * v_hat) * (-0.5 / (s * s * s));
    Vector bar_v = roots.alpha_q * ((bar_q_mat + bar_q_mat.transpose()) * v_hat) +
                   roots.alpha_r * ((bar_r_mat + bar_r_mat.transpose()) * v_hat);
    grad[off.b] = bar_b * b_scalar;  // d/d log b
    grad.segment(off.b + 1, n) =
        (bar_v - v_hat * v_hat.dot(bar_v)) / v_raw.norm();
  } else if (layout.b_mode == BMode::kFull) {
    const Matrix phi_q = 0.5 * exp_divided_differences(0.5 * b_eig.values);
    const Matrix phi_r = -0.5 * exp_divided_differences(-0.5 * b_eig.values);
    const Matrix inner_q = b_eig.vectors.transpose() * bar_q_mat * b_eig.vectors;
    const Matrix inner_r = b_eig.vectors.transpose() * bar_r_mat * b_eig.vectors;
    const Matrix bar_wb = b_eig.vectors *
                          (inner_q.cwiseProduct(phi_q) + inner_r.cwiseProduct(phi_r)) *
                          b_eig.vectors.transpose();
    pack_sym_grad(bar_wb, grad.data() + off.b);
  }

  if (layout.fit_c) {
    grad[off.c] = bar_c * c;  // d/d log c
  }

  return value;
}

double loss_value(const Vector& coords, const FitProblem& problem, double lambda) {
  const Candidate cand = decode(coords, layout_for(problem), problem.fixed_c);
  return loss(cand.params, cand.variant, problem.observed, lambda);
}

Vector initial_coords(const FitProblem& problem) {
  const CoordLayout layout = layout_for(problem);
  const Index n = layout.n;
  const Blocks off = block_offsets(layout);
  const Moments& obs = problem.observed;

  Vector coords = Vector::Zero(layout.size());

  // direction of the observed mean; arbitrary axis if it vanishes
  Vector dir = obs.gamma;
  if (dir.norm() < 1e-12) {
    dir = Vector::Unit(n, 0);
  } else {
    dir /= dir.norm();
  }

  double sigma2_init = obs.psi.trace() / static_cast<double>(n);
  if (!(sigma2_init > 0.0)) sigma2_init = 1e-6;

  if (layout.sigma_mode == SigmaMode::kFull) {
    const Matrix w0 = logm_sym(obs.psi, 1e-12);
    Index k = 0;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p; q < n; ++q) {
        coords[off.sigma + k] = w0(p, q);
        ++k;
      }
    }
  } else {
    coords[off.sigma] = std::log(sigma2_init);
  }

  if (layout.b_mode == BMode::kRank1) {
    coords[off.b] = 0.0;  // b = 1
    // direction of least observed variance
    const SymEig psi_eig = sym_eig(0.5 * (obs.psi + obs.psi.transpose()));
    Index min_idx = 0;
    psi_eig.values.minCoeff(&min_idx);
    coords.segment(off.b + 1, n) = psi_eig.vectors.col(min_idx);
    // mu starts at B^{1/2} gamma renormalized
    const Vector v0 = psi_eig.vectors.col(min_idx);
    const RankOneRoots roots = rank_one_roots(1.0, v0);
    Vector mu0 = roots.q * dir;
    const double norm = mu0.norm();
    dir = norm > 1e-12 ? Vector(mu0 / norm) : dir;
  }
  // full-B mode starts at B = I (zero block), nothing to set

  coords.segment(off.u, n) = dir;

  if (layout.fit_c) {
    coords[off.c] = std::log(obs.psi.trace() + 1.0);
  }
  return coords;
}

}  // namespace detail

namespace {

// BFGS refinement from the schedule's best iterate. The moment loss is a
// smooth sum of squares whose valley floor has curvature ratios around 1e5;
// adaptive first-order steps bounce along it without descending further,
// while quasi-Newton steps follow it to the bottom.
void polish_bfgs(const FitProblem& problem, const FitConfig& config,
                 Vector& best_coords, double& best_loss,
                 std::vector<double>& trace) {
  const Index dim = best_coords.size();
  Vector coords = best_coords;
  Vector grad(dim);
  double value = detail::loss_and_grad(coords, problem, config.lambda, grad);

  Matrix h_inv = Matrix::Identity(dim, dim);
  bool h_scaled = false;

  for (int it = 0; it < config.polish_iters; ++it) {
    if (grad.cwiseAbs().maxCoeff() < config.polish_grad_tol) break;

    Vector direction = -(h_inv * grad);
    double slope = direction.dot(grad);
    if (!(slope < 0.0)) {
      h_inv = Matrix::Identity(dim, dim);
      h_scaled = false;
      direction = -grad;
      slope = -grad.squaredNorm();
      if (!(slope < 0.0)) break;
    }

    // Backtracking Armijo line search. A trial step can leave the numeric
    // range of the moment formulas entirely; that is a rejection, not an
    // error.
    double step = 1.0;
    double next_value = value;
    Vector next_coords;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      next_coords = coords + step * direction;
      try {
        next_value = detail::loss_value(next_coords, problem, config.lambda);
      } catch (const Error&) {
        next_value = std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(next_value) && next_value <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Vector next_grad(dim);
    detail::loss_and_grad(next_coords, problem, config.lambda, next_grad);
    const Vector s = next_coords - coords;
    const Vector y = next_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!h_scaled) {
        h_inv *= sy / y.squaredNorm();
        h_scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector hy = h_inv * y;
      h_inv += (rho * rho * (s.dot(y) + y.dot(hy))) * (s * s.transpose()) -
               rho * (hy * s.transpose() + s * hy.transpose());
    }

    coords = std::move(next_coords);
    grad = std::move(next_grad);
    value = next_value;
    if (value < best_loss) {
      best_loss = value;
      best_coords = coords;
    }
    trace.push_back(best_loss);
  }
}

FitResult run_nadam(const FitProblem& problem, const FitConfig& config,
                    const Vector& start) {
  const detail::CoordLayout layout = detail::layout_for(problem);
  Vector coords = start;
  const Index dim = coords.size();

  Vector grad(dim);

  const int total_iters = config.cycles * config.iters_per_cycle;

  double best_loss = std::numeric_limits<double>::infinity();
  Vector best_coords = coords;
  std::vector<double> trace;
  trace.reserve(total_iters);

  double cycle_start_best = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iter = 0;

  // Optimizer state restarts with each cycle: aside from its starting
  // learning rate, every cycle repeats the first.
  Vector m = Vector::Zero(dim);
  Vector v = Vector::Zero(dim);
  double mu_product = 1.0;
  double beta2_power = 1.0;

  for (; iter < total_iters; ++iter) {
    if (iter % config.iters_per_cycle == 0) {
      m.setZero();
      v.setZero();
      mu_product = 1.0;
      beta2_power = 1.0;
    }
    const double value = detail::loss_and_grad(coords, problem, config.lambda, grad);
    if (value < best_loss) {
      best_loss = value;
      best_coords = coords;
    }
    trace.push_back(best_loss);

    // NAdam step (PyTorch-style momentum decay schedule), t restarting at 1
    // with the cycle
    const double t = static_cast<double>(iter % config.iters_per_cycle + 1);
    const double mu_t = config.beta1 *
        (1.0 - 0.5 * std::pow(0.96, t * config.momentum_decay));
    const double mu_next = config.beta1 *
        (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * config.momentum_decay));
    mu_product *= mu_t;
    beta2_power *= config.beta2;
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
    const double lr = lr_schedule(iter, config);
    const Vector m_hat = (mu_next / (1.0 - mu_product * mu_next)) * m +
                         ((1.0 - mu_t) / (1.0 - mu_product)) * grad;
    const Vector v_hat = v / (1.0 - beta2_power);
    const Vector denom = (v_hat.cwiseSqrt().array() + config.eps).matrix();
    coords -= lr * m_hat.cwiseQuotient(denom);

    // end-of-cycle convergence check on the best loss
    if ((iter + 1) % config.iters_per_cycle == 0) {
      if (std::isfinite(cycle_start_best)) {
        const double rel = (cycle_start_best - best_loss) /
                           std::max(cycle_start_best, 1e-300);
        if (rel < config.rel_tol) {
          converged = true;
          ++iter;
          break;
        }
      }
      cycle_start_best = best_loss;
    }
  }
  if (!converged && iter == total_iters && std::isfinite(cycle_start_best)) {
    const double rel = (cycle_start_best - best_loss) / std::max(cycle_start_best, 1e-300);
    converged = rel < config.rel_tol;
  }

  if (config.polish_iters > 0) {
    polish_bfgs(problem, config, best_coords, best_loss, trace);
  }

  const detail::Candidate cand = detail::decode(best_coords, layout, problem.fixed_c);
  FitResult result{cand.params, cand.variant, best_loss,
                   static_cast<int>(trace.size()), converged, std::move(trace)};
  if (!result.loss_trace.empty()) result.loss_trace.back() = best_loss;
  return result;
}

}  // namespace

FitResult fit_moments(const FitProblem& problem, const FitConfig& config) {
  problem.observed.validate(1e-6, 1e-8);
  if (!problem.fit_c && !(problem.fixed_c >= 0.0)) {
    throw DomainError("fixed_c must be >= 0");
  }
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
    throw DomainError("lambda must lie in [0, 1]");
  }
  if (config.cycles <= 0 || config.iters_per_cycle <= 0 || config.lr_decay_every <= 0) {
    throw DomainError("schedule lengths must be positive");
  }

  const Vector start = detail::initial_coords(problem);
  FitResult best = run_nadam(problem, config, start);
  for (int attempt = 1;
       attempt <= config.restarts && !(best.final_loss < config.restart_tol);
       ++attempt) {
    RngHandle rng(config.restart_seed, static_cast<std::uint64_t>(attempt));
    Vector jittered = start;
    // widen the perturbation with each failed attempt
    const double scale = config.restart_jitter * static_cast<double>(attempt);
    for (Index i = 0; i < jittered.size(); ++i) {
      jittered[i] += scale * rng.gaussian();
    }
    FitResult retry = run_nadam(problem, config, jittered);
    if (retry.final_loss < best.final_loss) best = std::move(retry);
  }
  return best;
}

FitResult fit_pn(const Moments& observed, const FitConfig& config) {
  FitProblem problem{observed, SigmaMode::kFull, BMode::kNone, false, 0.0};
  return fit_moments(problem, config);
}

FitResult fit_pnbc(const Moments& observed, const FitConfig& config) {
  FitProblem problem{observed, SigmaMode::kIsotropic, BMode::kRank1, true, 0.0};
  return fit_moments(problem, config);
}

}  // namespace projnorm
