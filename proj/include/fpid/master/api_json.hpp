#pragma once

#include <json.hpp>

#include "fpid/master/master_core.hpp"

namespace fpid::master {

// JSON bodies of the client HTTP API.
nlohmann::json answer_to_json(const tasks::MatchAnswer& a, const std::string& source);
nlohmann::json snapshot_to_json(const QueryJobSnapshot& s);
nlohmann::json worker_to_json(const WorkerInfo& w);
nlohmann::json status_to_json(const StatusSummary& s);
nlohmann::json error_json(std::string_view error, std::string_view detail);

}  // namespace fpid::master
