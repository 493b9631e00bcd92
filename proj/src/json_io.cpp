#include "projnorm/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace projnorm {

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) {
    throw IoError("expected a JSON array for a vector");
  }
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& x : j) {
    if (!x.is_number()) throw IoError("vector entries must be numbers");
    v[i++] = x.get<double>();
  }
  return v;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) {
    throw IoError("expected a non-empty JSON array of rows for a matrix");
  }
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  Index i = 0;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw IoError("matrix rows must be arrays of equal length");
    }
    Index k = 0;
    for (const auto& x : row) {
      if (!x.is_number()) throw IoError("matrix entries must be numbers");
      m(i, k++) = x.get<double>();
    }
    ++i;
  }
  return m;
}

Json to_json(const GaussianParams& params) {
  return Json{{"mu", to_json(params.mu)}, {"sigma", to_json(params.sigma)}};
}

GaussianParams gaussian_params_from_json(const Json& j) {
  if (!j.contains("mu") || !j.contains("sigma")) {
    throw IoError("parameters JSON must contain 'mu' and 'sigma'");
  }
  return GaussianParams(vector_from_json(j.at("mu")), matrix_from_json(j.at("sigma")));
}

Json to_json(const ProjectionVariant& variant) {
  Json out;
  out["b"] = variant.has_b() ? to_json(*variant.b) : Json(nullptr);
  out["c"] = variant.c;
  return out;
}

ProjectionVariant variant_from_json(const Json& j) {
  std::optional<Matrix> b;
  if (j.contains("b") && !j.at("b").is_null()) {
    b = matrix_from_json(j.at("b"));
  }
  const double c = j.contains("c") ? j.at("c").get<double>() : 0.0;
  return ProjectionVariant(std::move(b), c);
}

Json to_json(const Moments& moments) {
  return Json{{"gamma", to_json(moments.gamma)},
              {"second_moment", to_json(moments.second_moment)},
              {"psi", to_json(moments.psi)}};
}

Moments moments_from_json(const Json& j) {
  if (!j.contains("gamma") || !j.contains("second_moment")) {
    throw IoError("moments JSON must contain 'gamma' and 'second_moment'");
  }
  Moments m = Moments::from_gamma_and_second(vector_from_json(j.at("gamma")),
                                             matrix_from_json(j.at("second_moment")));
  if (j.contains("psi")) {
    // Cross-check a redundant psi if present rather than trusting it.
    const Matrix psi = matrix_from_json(j.at("psi"));
    if ((psi - m.psi).cwiseAbs().maxCoeff() > 1e-8) {
      throw IoError("moments JSON 'psi' is inconsistent with gamma/second_moment");
    }
  }
  return m;
}

Json to_json(const FitResult& result) {
  Json out;
  out["params"] = to_json(result.params);
  out["variant"] = to_json(result.variant);
  out["final_loss"] = result.final_loss;
  out["iterations"] = result.iterations;
  out["converged"] = result.converged;
  out["loss_trace"] = result.loss_trace;
  return out;
}

namespace {

void put_metric(Json& j, const char* key, double value) {
  if (std::isfinite(value)) {
    j[key] = value;
  } else {
    j[key] = nullptr;
  }
}

double get_metric(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.at(key).get<double>();
}

}  // namespace

Json to_json(const ExperimentRecord& r) {
  Json out;
  out["experiment"] = r.experiment;
  out["variant"] = r.variant;
  out["n"] = r.n;
  out["s"] = r.s;
  out["trial"] = r.trial;
  out["seed"] = r.seed;
  put_metric(out, "lambda", r.lambda);
  put_metric(out, "error_gamma_pct", r.error_gamma_pct);
  put_metric(out, "cosine_gamma", r.cosine_gamma);
  put_metric(out, "error_psi_pct", r.error_psi_pct);
  put_metric(out, "cosine_psi", r.cosine_psi);
  put_metric(out, "error_mu_pct", r.error_mu_pct);
  put_metric(out, "cosine_mu", r.cosine_mu);
  put_metric(out, "error_sigma_pct", r.error_sigma_pct);
  put_metric(out, "cosine_sigma", r.cosine_sigma);
  put_metric(out, "error_b_pct", r.error_b_pct);
  put_metric(out, "cosine_b", r.cosine_b);
  put_metric(out, "error_c_pct", r.error_c_pct);
  put_metric(out, "final_loss", r.final_loss);
  out["wall_time"] = r.wall_time;
  return out;
}

ExperimentRecord experiment_record_from_json(const Json& j) {
  ExperimentRecord r;
  r.experiment = j.at("experiment").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  r.n = j.at("n").get<Index>();
  r.s = j.at("s").get<double>();
  r.trial = j.at("trial").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.lambda = get_metric(j, "lambda");
  r.error_gamma_pct = get_metric(j, "error_gamma_pct");
  r.cosine_gamma = get_metric(j, "cosine_gamma");
  r.error_psi_pct = get_metric(j, "error_psi_pct");
  r.cosine_psi = get_metric(j, "cosine_psi");
  r.error_mu_pct = get_metric(j, "error_mu_pct");
  r.cosine_mu = get_metric(j, "cosine_mu");
  r.error_sigma_pct = get_metric(j, "error_sigma_pct");
  r.cosine_sigma = get_metric(j, "cosine_sigma");
  r.error_b_pct = get_metric(j, "error_b_pct");
  r.cosine_b = get_metric(j, "cosine_b");
  r.error_c_pct = get_metric(j, "error_c_pct");
  r.final_loss = get_metric(j, "final_loss");
  r.wall_time = j.contains("wall_time") ? j.at("wall_time").get<double>() : 0.0;
  return r;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  if (j.contains("dims")) {
    cfg.dims.clear();
    for (const auto& d : j.at("dims")) cfg.dims.push_back(d.get<Index>());
  }
  if (j.contains("scales")) {
    cfg.scales.clear();
    for (const auto& s : j.at("scales")) cfg.scales.push_back(s.get<double>());
  }
  if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
  if (j.contains("mc_samples")) cfg.mc_samples = j.at("mc_samples").get<Index>();
  if (j.contains("variant")) {
    const std::string v = j.at("variant").get<std::string>();
    if (v == "pn") cfg.variant = ProjectionVariant::Kind::kPn;
    else if (v == "pnc") cfg.variant = ProjectionVariant::Kind::kPnC;
    else if (v == "pnb") cfg.variant = ProjectionVariant::Kind::kPnB;
    else if (v == "pnbc") cfg.variant = ProjectionVariant::Kind::kPnBc;
    else throw IoError("unknown variant '" + v + "'");
  }
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  if (j.contains("lambda_grid")) {
    cfg.lambda_grid.clear();
    for (const auto& l : j.at("lambda_grid")) cfg.lambda_grid.push_back(l.get<double>());
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("eig_dist")) {
    const std::string e = j.at("eig_dist").get<std::string>();
    if (e == "exponential") cfg.eig_dist = EigDist::kExponential;
    else if (e == "uniform") cfg.eig_dist = EigDist::kUniform;
    else throw IoError("unknown eig_dist '" + e + "'");
  }
  if (j.contains("exp_convention")) {
    const std::string e = j.at("exp_convention").get<std::string>();
    if (e == "mean") cfg.exp_convention = ExpConvention::kMean;
    else if (e == "rate") cfg.exp_convention = ExpConvention::kRate;
    else throw IoError("unknown exp_convention '" + e + "'");
  }
  return cfg;
}

FitConfig fit_config_from_json(const Json& j) {
  FitConfig cfg;
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  if (j.contains("cycles")) cfg.cycles = j.at("cycles").get<int>();
  if (j.contains("iters_per_cycle")) cfg.iters_per_cycle = j.at("iters_per_cycle").get<int>();
  if (j.contains("lr_initial")) cfg.lr_initial = j.at("lr_initial").get<double>();
  if (j.contains("lr_decay")) cfg.lr_decay = j.at("lr_decay").get<double>();
  if (j.contains("lr_decay_every")) cfg.lr_decay_every = j.at("lr_decay_every").get<int>();
  if (j.contains("cycle_decay")) cfg.cycle_decay = j.at("cycle_decay").get<double>();
  if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  if (j.contains("momentum_decay")) cfg.momentum_decay = j.at("momentum_decay").get<double>();
  if (j.contains("rel_tol")) cfg.rel_tol = j.at("rel_tol").get<double>();
  if (j.contains("polish_iters")) cfg.polish_iters = j.at("polish_iters").get<int>();
  if (j.contains("polish_grad_tol")) cfg.polish_grad_tol = j.at("polish_grad_tol").get<double>();
  if (j.contains("restarts")) cfg.restarts = j.at("restarts").get<int>();
  if (j.contains("restart_tol")) cfg.restart_tol = j.at("restart_tol").get<double>();
  if (j.contains("restart_jitter")) cfg.restart_jitter = j.at("restart_jitter").get<double>();
  if (j.contains("restart_seed")) cfg.restart_seed = j.at("restart_seed").get<std::uint64_t>();
  return cfg;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << content;
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

}  // namespace projnorm
