#pragma once

#include "projnorm/experiments.hpp"
#include "projnorm/fit.hpp"
#include "projnorm/types.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace projnorm {

using Json = nlohmann::json;

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

Json to_json(const GaussianParams& params);
GaussianParams gaussian_params_from_json(const Json& j);

Json to_json(const ProjectionVariant& variant);
ProjectionVariant variant_from_json(const Json& j);

Json to_json(const Moments& moments);
Moments moments_from_json(const Json& j);

Json to_json(const FitResult& result);

Json to_json(const ExperimentRecord& record);
ExperimentRecord experiment_record_from_json(const Json& j);

ExperimentConfig experiment_config_from_json(const Json& j);

// Every field optional; absent keys keep the FitConfig defaults.
FitConfig fit_config_from_json(const Json& j);

// File helpers; IoError on missing/bad files.
Json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace projnorm
