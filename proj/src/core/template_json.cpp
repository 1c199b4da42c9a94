#include "fpid/core/template_json.hpp"

#include <fstream>

#include "fpid/core/error.hpp"

namespace fpid::core {

void to_json(nlohmann::json& j, const Minutia& m) {
  j = nlohmann::json{{"x", m.x}, {"y", m.y}, {"direction", m.direction}, {"kind", to_string(m.kind)}};
}

void from_json(const nlohmann::json& j, Minutia& m) {
  m.x = j.at("x").get<int>();
  m.y = j.at("y").get<int>();
  m.direction = j.at("direction").get<double>();
  m.kind = minutia_kind_from_string(j.at("kind").get<std::string>());
}

void to_json(nlohmann::json& j, const MinutiaeTemplate& t) {
  j = nlohmann::json{{"width", t.width}, {"height", t.height}, {"minutiae", t.minutiae}};
}

void from_json(const nlohmann::json& j, MinutiaeTemplate& t) {
  t.width = j.at("width").get<int>();
  t.height = j.at("height").get<int>();
  t.minutiae = j.at("minutiae").get<std::vector<Minutia>>();
}

MinutiaeTemplate template_from_json(const nlohmann::json& j) {
  MinutiaeTemplate t;
  try {
    t = j.get<MinutiaeTemplate>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed template: ") + e.what());
  }
  t.validate();
  return t;
}

MinutiaeTemplate read_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return template_from_json(j);
}

void write_template(const std::filesystem::path& path, const MinutiaeTemplate& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << nlohmann::json(t).dump(2) << '\n';
}

}  // namespace fpid::core
