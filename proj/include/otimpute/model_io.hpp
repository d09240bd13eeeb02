#pragma once

#include <string>

#include "json.hpp"

#include "otimpute/imputers.hpp"

namespace otimpute {

/// Version written into every saved model document.
inline constexpr int kModelSchemaVersion = 1;

/// JSON document: schema_version, kind, d, means, order, cycles, epsilon and
/// one flat parameter array per column (layout as in `flatten`).
nlohmann::json model_to_json(const RoundRobinModel& model);
RoundRobinModel model_from_json(const nlohmann::json& doc);

void save_model(const std::string& path, const RoundRobinModel& model);
RoundRobinModel load_model(const std::string& path);

}  // namespace otimpute
