#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fpid/core/minutiae.hpp"

namespace fpid::core {

// {width, height, minutiae: [{x, y, direction, kind}]}, kind is "ending" or
// "bifurcation".
void to_json(nlohmann::json& j, const Minutia& m);
void from_json(const nlohmann::json& j, Minutia& m);
void to_json(nlohmann::json& j, const MinutiaeTemplate& t);
void from_json(const nlohmann::json& j, MinutiaeTemplate& t);

/// Parses and validates a template; throws FormatError on any schema problem.
MinutiaeTemplate template_from_json(const nlohmann::json& j);

MinutiaeTemplate read_template(const std::filesystem::path& path);
void write_template(const std::filesystem::path& path, const MinutiaeTemplate& t);

}  // namespace fpid::core
