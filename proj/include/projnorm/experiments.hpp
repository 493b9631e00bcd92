#pragma once

#include "projnorm/sampling.hpp"
#include "projnorm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace projnorm {

// Grid configuration shared by the accuracy and matching experiments.
struct ExperimentConfig {
  std::vector<Index> dims{3, 12, 48};
  std::vector<double> scales{0.125, 0.5};
  int trials = 20;
  Index mc_samples = 1000000;
  ProjectionVariant::Kind variant = ProjectionVariant::Kind::kPn;
  double lambda = 0.9;
  std::vector<double> lambda_grid;  // matching only; non-empty -> per-cell sweep
  std::uint64_t seed = 42;
  EigDist eig_dist = EigDist::kExponential;
  ExpConvention exp_convention = ExpConvention::kMean;
};

// One grid cell trial. Metrics that do not apply to the experiment that
// produced the record stay NaN and serialize as empty CSV cells.
struct ExperimentRecord {
  std::string experiment;  // "accuracy" | "matching"
  std::string variant;     // "pn" | "pnc" | "pnb" | "pnbc"
  Index n = 0;
  double s = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double lambda = std::numeric_limits<double>::quiet_NaN();

  // accuracy: approximation vs Monte Carlo ground truth
  double error_gamma_pct = std::numeric_limits<double>::quiet_NaN();
  double cosine_gamma = std::numeric_limits<double>::quiet_NaN();
  double error_psi_pct = std::numeric_limits<double>::quiet_NaN();
  double cosine_psi = std::numeric_limits<double>::quiet_NaN();

  // matching: recovered parameters vs generating parameters
  double error_mu_pct = std::numeric_limits<double>::quiet_NaN();
  double cosine_mu = std::numeric_limits<double>::quiet_NaN();
  double error_sigma_pct = std::numeric_limits<double>::quiet_NaN();
  double cosine_sigma = std::numeric_limits<double>::quiet_NaN();
  double error_b_pct = std::numeric_limits<double>::quiet_NaN();
  double cosine_b = std::numeric_limits<double>::quiet_NaN();
  double error_c_pct = std::numeric_limits<double>::quiet_NaN();
  double final_loss = std::numeric_limits<double>::quiet_NaN();

  double wall_time = 0.0;  // seconds; excluded from CSV so reruns stay byte-identical
};

// Taylor-approximation accuracy against Monte Carlo ground truth over the
// (dims x scales x trials) grid. Deterministic given config.seed: every cell
// draws from its own stream keyed by (n, s, trial).
std::vector<ExperimentRecord> run_moment_accuracy(const ExperimentConfig& config);

// Moment matching: sample generating parameters, observe Monte Carlo moments,
// fit, and score parameter recovery. Supports the unconstrained variant (pn)
// and the constrained rank-one variant (pnbc). With a non-empty lambda_grid,
// every lambda is fit per trial and the grid keeps the per-cell winner by
// median error_b_pct (pnbc) or error_sigma_pct (pn).
std::vector<ExperimentRecord> run_moment_matching(const ExperimentConfig& config);

enum class ReportFormat { kCsv, kJson };

// Serializes records plus a per-(n, s) summary block (median and quartiles of
// each populated metric). CSV output is canonical: fixed column order, 17
// significant digits, byte-identical across reruns of the same config/seed.
std::string report(const std::vector<ExperimentRecord>& records, ReportFormat format);

}  // namespace projnorm
