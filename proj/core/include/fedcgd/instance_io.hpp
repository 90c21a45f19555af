#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "fedcgd/schedulers.hpp"

namespace fedcgd {

// Wire schema:
//   {"global_dist": [...],
//    "devices": [{"dist": [...], "min_bw_hz": number|null}, ...],
//    "sigma": number, "batch": int, "g_weights": [...],
//    "total_bw_hz": number}
// A null min_bw_hz encodes an infeasible link.
nlohmann::json instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const nlohmann::json& j);

// Reads and validates an instance file; throws std::runtime_error with
// path and field context on failure.
ProblemInstance load_instance(const std::string& path);
void save_instance(const ProblemInstance& instance, const std::string& path);

nlohmann::json report_to_json(const SolveReport& report);

}  // namespace fedcgd
