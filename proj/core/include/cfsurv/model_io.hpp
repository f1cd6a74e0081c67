#ifndef CFSURV_MODEL_IO_HPP
#define CFSURV_MODEL_IO_HPP

#include <string>

#include <json.hpp>

#include "cfsurv/conformal.hpp"

namespace cfsurv {

/// JSON document describing a fitted model: score kind, parameters,
/// standardization statistics, calibration scores and weights. Reloading
/// reproduces predictions exactly (doubles round-trip via shortest
/// representation).
nlohmann::json model_to_json(const ConformalModel& model);
ConformalModel model_from_json(const nlohmann::json& j);

void save_model(const ConformalModel& model, const std::string& path);
ConformalModel load_model(const std::string& path);

std::string score_kind_name(ScoreKind kind);
ScoreKind score_kind_from_name(const std::string& name);

} // namespace cfsurv

#endif
