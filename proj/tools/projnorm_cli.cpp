// projnorm: command-line access to the projected normal toolkit.
//
// Subcommands:
//   moments     approximate / exact-isotropic / Monte Carlo moments of y
//   pdf         log-density at given points
//   sample      draws from the distribution, as CSV
//   fit         moment matching against observed moments
//   experiment  accuracy / matching grids with CSV or JSON reports

#include "projnorm/density.hpp"
#include "projnorm/exact.hpp"
#include "projnorm/experiments.hpp"
#include "projnorm/fit.hpp"
#include "projnorm/json_io.hpp"
#include "projnorm/moments.hpp"
#include "projnorm/sampling.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using projnorm::GaussianParams;
using projnorm::Index;
using projnorm::Json;
using projnorm::Matrix;
using projnorm::Moments;
using projnorm::ProjectionVariant;
using projnorm::Vector;

ProjectionVariant::Kind kind_from_string(const std::string& name) {
  if (name == "pn") return ProjectionVariant::Kind::kPn;
  if (name == "pnc") return ProjectionVariant::Kind::kPnC;
  if (name == "pnb") return ProjectionVariant::Kind::kPnB;
  if (name == "pnbc") return ProjectionVariant::Kind::kPnBc;
  throw projnorm::DomainError("unknown variant '" + name + "' (expected pn|pnc|pnb|pnbc)");
}

// Parameter files hold mu/sigma plus optional b/c. An explicit --variant must
// be satisfiable from the file's contents; without it the variant is whatever
// the file provides.
ProjectionVariant resolve_variant(const Json& file, const std::string& flag) {
  ProjectionVariant provided = projnorm::variant_from_json(file);
  if (flag.empty()) return provided;
  switch (kind_from_string(flag)) {
    case ProjectionVariant::Kind::kPn:
      return ProjectionVariant::pn();
    case ProjectionVariant::Kind::kPnC:
      if (provided.c <= 0.0) {
        throw projnorm::DomainError("variant pnc requires a positive 'c' in the parameter file");
      }
      return ProjectionVariant::pn_c(provided.c);
    case ProjectionVariant::Kind::kPnB:
      if (!provided.has_b()) {
        throw projnorm::DomainError("variant pnb requires 'b' in the parameter file");
      }
      return ProjectionVariant::pn_b(*provided.b);
    case ProjectionVariant::Kind::kPnBc:
      if (!provided.has_b() || provided.c <= 0.0) {
        throw projnorm::DomainError(
            "variant pnbc requires 'b' and a positive 'c' in the parameter file");
      }
      return ProjectionVariant::pn_bc(*provided.b, provided.c);
  }
  throw projnorm::DomainError("unknown projection variant kind");
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    projnorm::write_text_file(out_path, text);
  }
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// sigma must be sigma2 * I for the exact isotropic formulas.
double isotropic_sigma2(const Matrix& sigma) {
  const Index n = sigma.rows();
  const double sigma2 = sigma(0, 0);
  const double tol = 1e-12 * std::max(1.0, std::abs(sigma2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double expected = i == j ? sigma2 : 0.0;
      if (std::abs(sigma(i, j) - expected) > tol) {
        throw projnorm::DomainError(
            "exact moments require an isotropic covariance (sigma = sigma2 * I)");
      }
    }
  }
  return sigma2;
}

struct MomentsArgs {
  std::string params_path;
  std::string method = "approx";
  std::string variant;
  std::string out;
  Index samples = 1000000;
  std::uint64_t seed = 42;
};

void run_moments(const MomentsArgs& args) {
  const Json file = projnorm::load_json_file(args.params_path);
  const GaussianParams params = projnorm::gaussian_params_from_json(file);
  const ProjectionVariant variant = resolve_variant(file, args.variant);
  variant.require_dim(params.dim());

  Moments result;
  if (args.method == "approx") {
    result = projnorm::approx_moments(params, variant);
  } else if (args.method == "exact") {
    if (variant.kind() != ProjectionVariant::Kind::kPn) {
      throw projnorm::DomainError("exact moments are available for the pn variant only");
    }
    result = projnorm::exact_moments_isotropic(params.mu, isotropic_sigma2(params.sigma));
  } else if (args.method == "mc") {
    projnorm::RngHandle rng(args.seed);
    result = projnorm::mc_moments(params, variant, args.samples, rng);
  } else {
    throw projnorm::DomainError("unknown method '" + args.method + "' (expected approx|exact|mc)");
  }

  Json out = projnorm::to_json(result);
  out["method"] = args.method;
  out["variant"] = projnorm::to_string(variant.kind());
  emit(out.dump(2) + "\n", args.out);
}

struct PdfArgs {
  std::string params_path;
  std::string points_path;
  std::string variant;
  std::string out;
};

void run_pdf(const PdfArgs& args) {
  const Json file = projnorm::load_json_file(args.params_path);
  const GaussianParams params = projnorm::gaussian_params_from_json(file);
  const ProjectionVariant variant = resolve_variant(file, args.variant);
  variant.require_dim(params.dim());

  Json points_json = projnorm::load_json_file(args.points_path);
  if (points_json.is_object() && points_json.contains("points")) {
    points_json = points_json.at("points");
  }
  const Matrix points = projnorm::matrix_from_json(points_json);
  if (points.cols() != params.dim()) {
    throw projnorm::DimensionError("points have " + std::to_string(points.cols()) +
                                   " columns, parameters have dimension " +
                                   std::to_string(params.dim()));
  }

  Json values = Json::array();
  for (Index i = 0; i < points.rows(); ++i) {
    values.push_back(projnorm::pnbc_logpdf(points.row(i).transpose(), params, variant));
  }
  Json out;
  out["variant"] = projnorm::to_string(variant.kind());
  out["log_pdf"] = std::move(values);
  emit(out.dump(2) + "\n", args.out);
}

struct SampleArgs {
  std::string params_path;
  std::string variant;
  std::string out;
  Index samples = 1000;
  std::uint64_t seed = 42;
};

void run_sample(const SampleArgs& args) {
  const Json file = projnorm::load_json_file(args.params_path);
  const GaussianParams params = projnorm::gaussian_params_from_json(file);
  const ProjectionVariant variant = resolve_variant(file, args.variant);
  variant.require_dim(params.dim());

  projnorm::RngHandle rng(args.seed);
  const Matrix x = projnorm::sample_gaussian(params, args.samples, rng);

  std::string csv;
  for (Index j = 0; j < params.dim(); ++j) {
    if (j > 0) csv += ',';
    csv += "y" + std::to_string(j);
  }
  csv += '\n';
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector y = projnorm::project(x.row(i).transpose(), variant);
    for (Index j = 0; j < y.size(); ++j) {
      if (j > 0) csv += ',';
      csv += format_double(y[j]);
    }
    csv += '\n';
  }
  emit(csv, args.out);
}

struct FitArgs {
  std::string moments_path;
  std::string config_path;
  std::string variant = "pn";
  std::string out;
  std::optional<double> lambda;
};

void run_fit(const FitArgs& args) {
  Json file = projnorm::load_json_file(args.moments_path);
  if (!file.contains("second_moment") && file.contains("gamma") && file.contains("psi")) {
    // Accept (gamma, psi) files by rebuilding the second moment.
    const Vector gamma = projnorm::vector_from_json(file.at("gamma"));
    const Matrix psi = projnorm::matrix_from_json(file.at("psi"));
    file["second_moment"] = projnorm::to_json(Matrix(psi + gamma * gamma.transpose()));
  }
  const Moments observed = projnorm::moments_from_json(file);

  projnorm::FitConfig config;
  if (!args.config_path.empty()) {
    config = projnorm::fit_config_from_json(projnorm::load_json_file(args.config_path));
  }
  if (args.lambda) config.lambda = *args.lambda;
  const projnorm::FitResult result = [&] {
    if (args.variant == "pn") return projnorm::fit_pn(observed, config);
    if (args.variant == "pnbc") return projnorm::fit_pnbc(observed, config);
    throw projnorm::DomainError("fit supports variants pn and pnbc");
  }();
  emit(projnorm::to_json(result).dump(2) + "\n", args.out);
}

struct ExperimentArgs {
  std::string config_path;
  std::string variant;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  bool matching = false;
};

void run_experiment(const ExperimentArgs& args) {
  projnorm::ExperimentConfig config;
  if (!args.config_path.empty()) {
    config = projnorm::experiment_config_from_json(projnorm::load_json_file(args.config_path));
  }
  if (!args.variant.empty()) config.variant = kind_from_string(args.variant);
  if (args.seed) config.seed = *args.seed;

  const auto records = args.matching ? projnorm::run_moment_matching(config)
                                     : projnorm::run_moment_accuracy(config);
  const auto format = args.format == "json" ? projnorm::ReportFormat::kJson
                                            : projnorm::ReportFormat::kCsv;
  if (args.format != "csv" && args.format != "json") {
    throw projnorm::DomainError("unknown format '" + args.format + "' (expected csv|json)");
  }
  emit(projnorm::report(records, format), args.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected normal distributions: moments, densities, sampling, and fits"};
  app.require_subcommand(1);

  MomentsArgs moments_args;
  auto* moments_cmd = app.add_subcommand("moments", "Compute moments of the projected variable");
  moments_cmd->add_option("--params", moments_args.params_path, "Parameter JSON file")
      ->required();
  moments_cmd->add_option("--method", moments_args.method, "approx|exact|mc");
  moments_cmd->add_option("--variant", moments_args.variant, "pn|pnc|pnb|pnbc");
  moments_cmd->add_option("--samples", moments_args.samples, "Monte Carlo sample count");
  moments_cmd->add_option("--seed", moments_args.seed, "Monte Carlo seed");
  moments_cmd->add_option("--out", moments_args.out, "Output path (default stdout)");

  PdfArgs pdf_args;
  auto* pdf_cmd = app.add_subcommand("pdf", "Evaluate the log-density at points");
  pdf_cmd->add_option("--params", pdf_args.params_path, "Parameter JSON file")->required();
  pdf_cmd->add_option("--points", pdf_args.points_path, "Points JSON file")->required();
  pdf_cmd->add_option("--variant", pdf_args.variant, "pn|pnc|pnb|pnbc");
  pdf_cmd->add_option("--out", pdf_args.out, "Output path (default stdout)");

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples, written as CSV");
  sample_cmd->add_option("--params", sample_args.params_path, "Parameter JSON file")->required();
  sample_cmd->add_option("--samples,-m", sample_args.samples, "Number of draws");
  sample_cmd->add_option("--seed", sample_args.seed, "Sampling seed");
  sample_cmd->add_option("--variant", sample_args.variant, "pn|pnc|pnb|pnbc");
  sample_cmd->add_option("--out", sample_args.out, "Output path (default stdout)");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Moment matching against observed moments");
  fit_cmd->add_option("--moments", fit_args.moments_path, "Observed moments JSON file")
      ->required();
  fit_cmd->add_option("--variant", fit_args.variant, "pn|pnbc");
  fit_cmd->add_option("--config", fit_args.config_path, "Fit config JSON file");
  fit_cmd->add_option("--lambda", fit_args.lambda, "Covariance weight in the loss");
  fit_cmd->add_option("--out", fit_args.out, "Output path (default stdout)");

  ExperimentArgs experiment_args;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run an experiment grid");
  experiment_cmd->require_subcommand(1);
  auto* accuracy_cmd =
      experiment_cmd->add_subcommand("accuracy", "Approximation accuracy vs Monte Carlo");
  auto* matching_cmd =
      experiment_cmd->add_subcommand("matching", "Parameter recovery via moment matching");
  for (auto* cmd : {accuracy_cmd, matching_cmd}) {
    cmd->add_option("--config", experiment_args.config_path, "Experiment config JSON file");
    cmd->add_option("--variant", experiment_args.variant, "pn|pnc|pnb|pnbc");
    cmd->add_option("--seed", experiment_args.seed, "Override the config seed");
    cmd->add_option("--out", experiment_args.out, "Output path (default stdout)");
    cmd->add_option("--format", experiment_args.format, "csv|json");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (moments_cmd->parsed()) run_moments(moments_args);
    if (pdf_cmd->parsed()) run_pdf(pdf_args);
    if (sample_cmd->parsed()) run_sample(sample_args);
    if (fit_cmd->parsed()) run_fit(fit_args);
    if (experiment_cmd->parsed()) {
      experiment_args.matching = matching_cmd->parsed();
      run_experiment(experiment_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
