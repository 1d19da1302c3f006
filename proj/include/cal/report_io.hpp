#pragma once

#include <string>

#include <json.hpp>

#include "cal/config.hpp"
#include "cal/orchestrator.hpp"

namespace cal {

// ISO-8601 UTC; the only nondeterministic field besides wall-clock times.
std::string current_timestamp();

nlohmann::ordered_json config_to_json(const RunConfig& config);

nlohmann::ordered_json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& js);

void save_report(const RunReport& report, const std::string& path);
RunReport load_report(const std::string& path);

} // namespace cal
