#pragma once

#include "projnorm/types.hpp"

#include <cstdint>
#include <vector>

namespace projnorm {

enum class SigmaMode { kFull, kIsotropic };
enum class BMode { kNone, kRank1, kFull };

// Moment-matching problem: find parameters whose approximate projected
// moments reproduce the observed ones.
struct FitProblem {
  Moments observed;
  SigmaMode sigma_mode = SigmaMode::kFull;
  BMode b_mode = BMode::kNone;
  bool fit_c = false;     // when true, c is estimated (log-parameterized)
  double fixed_c = 0.0;   // denominator constant used when fit_c is false

  Index dim() const { return observed.dim(); }
};

struct FitConfig {
  double lambda = 0.9;         // weight of the covariance term in the loss
  int cycles = 12;
  int iters_per_cycle = 80;
  double lr_initial = 0.4;
  double lr_decay = 0.85;      // applied every lr_decay_every iterations within a cycle
  int lr_decay_every = 5;
  double cycle_decay = 0.85;   // applied to the cycle's starting rate
  double beta1 = 0.9;          // NAdam first-moment rate
  double beta2 = 0.999;        // NAdam second-moment rate
  double eps = 1e-8;
  double momentum_decay = 0.004;
  double rel_tol = 1e-10;      // relative best-loss improvement per cycle

  // Quasi-Newton refinement after the cyclic schedule. The moment-matching
  // valley is extremely ill-conditioned near its optimum (curvature ratios
  // of ~1e5), where first-order steps stall; BFGS with a backtracking line
  // search finishes the descent. 0 disables the stage.
  int polish_iters = 400;
  double polish_grad_tol = 1e-13;  // stop when ||grad||_inf falls below this

  // Optional keep-best-of-k restarts. The loss surface has isolated shallow
  // basins; when a run lands in one (final loss above restart_tol), retrying
  // from a Gaussian perturbation of the moment-derived start usually escapes
  // it. 0 disables retries, which is the right default when the observed
  // moments are themselves noisy estimates and the attainable floor is far
  // above restart_tol.
  int restarts = 0;
  double restart_tol = 1e-8;
  double restart_jitter = 0.5;          // stddev of the coordinate perturbation
  std::uint64_t restart_seed = 0x5eed;  // restarts stay deterministic
};

struct FitResult {
  GaussianParams params;                 // estimated (mu, sigma)
  ProjectionVariant variant;             // estimated (B, c) for B/c modes
  double final_loss = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_trace;        // best loss so far, one entry per iteration
};

// Squared-distance moment loss
//   (1 - lambda) ||gamma_hat - gamma_obs||^2 + lambda ||psi_hat - psi_obs||_F^2
// where (gamma_hat, psi_hat) are the Taylor-approximated moments of the
// candidate. NonFinite candidates raise NumericError.
double loss(const GaussianParams& candidate, const ProjectionVariant& variant,
            const Moments& observed, double lambda);

// Cyclic decayed learning rate: restarts every iters_per_cycle iterations at
// lr_initial * cycle_decay^cycle and decays by lr_decay every lr_decay_every
// iterations within the cycle.
double lr_schedule(int iteration, const FitConfig& config);

// u / ||u||: trivialization of the unit sphere used for the mean direction.
Vector sphere_embed(const Vector& u);

// Generic entry point honoring every mode combination in the problem.
FitResult fit_moments(const FitProblem& problem, const FitConfig& config = {});

// Unconstrained variant: full sigma, no B, c = 0.
FitResult fit_pn(const Moments& observed, const FitConfig& config = {});

// Constrained variant: sigma = sigma2 I, B = I + b v v^T, c estimated.
FitResult fit_pnbc(const Moments& observed, const FitConfig& config = {});

namespace detail {

// Unconstrained coordinate vector layout for a fit problem:
//   [u (n)] [sigma block] [b block] [log c (1 if fit_c)]
// sigma block: packed upper triangle of W with sigma = exp(W) (full mode) or
// log sigma2 (isotropic). b block: packed W_B with B = exp(W_B) (full mode)
// or [log b, v_raw (n)] (rank1).
struct CoordLayout {
  Index n = 0;
  SigmaMode sigma_mode = SigmaMode::kFull;
  BMode b_mode = BMode::kNone;
  bool fit_c = false;
  Index size() const;
};

CoordLayout layout_for(const FitProblem& problem);

// Decoded candidate corresponding to a coordinate vector.
struct Candidate {
  GaussianParams params;
  ProjectionVariant variant;
};

Candidate decode(const Vector& coords, const CoordLayout& layout, double fixed_c);

// Initial coordinates from the observed moments (moment-matching heuristics).
Vector initial_coords(const FitProblem& problem);

// Loss and its exact gradient in coordinate space (hand-derived reverse mode;
// finite differences are used only as a test oracle).
double loss_and_grad(const Vector& coords, const FitProblem& problem,
                     double lambda, Vector& grad);

double loss_value(const Vector& coords, const FitProblem& problem, double lambda);

}  // namespace detail

}  // namespace projnorm
