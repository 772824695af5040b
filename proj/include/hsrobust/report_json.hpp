#pragma once

#include "hsrobust/estimators.hpp"
#include "hsrobust/hscore.hpp"
#include "hsrobust/simulator.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hsrobust {

/// Non-finite values serialize as null.
nlohmann::json number(double v);

/// feature_names labels beta entries when given (same length as beta).
nlohmann::json to_json(const FitResult& fit, const std::vector<std::string>& feature_names = {});
nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const SelectionResult& sel, const std::string& method,
                       const std::vector<std::string>& feature_names = {});
nlohmann::json to_json(const SimulationReport& report);

/// One "gamma,score" row per grid point (empty score for failed points).
std::string curve_csv(const SelectionResult& sel);

}  // namespace hsrobust
