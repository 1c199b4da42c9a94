#include "fpid/bench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "fpid/core/angles.hpp"
#include "fpid/core/error.hpp"
#include "fpid/core/template_json.hpp"

namespace fpid::bench {

using core::kPi;
using core::kTwoPi;

namespace {

// Portable uniform draws; std distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

 private:
  std::mt19937_64 eng_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string padded(std::size_t n) {
  std::string s = std::to_string(n);
  return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

}  // namespace

double RidgeModel::phase(double x, double y) const {
  double p = kTwoPi / wavelength * std::hypot(x - centre_x, y - centre_y) + phase_offset;
  for (const auto& s : singularities) p += s.sign * std::atan2(y - s.y, x - s.x);
  return p;
}

double RidgeModel::ridge_direction(double x, double y) const {
  return core::wrap_pi(std::atan2(y - centre_y, x - centre_x) + kPi / 2.0);
}

core::GrayImage render_ridges(const RidgeModel& model) {
  core::GrayImage img(model.width, model.height, 255);
  for (int y = 0; y < model.height; ++y) {
    for (int x = 0; x < model.width; ++x) {
      const double v = 128.0 + 96.0 * std::cos(model.phase(x, y));
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return img;
}

core::MinutiaeTemplate model_template(const RidgeModel& model) {
  core::MinutiaeTemplate t;
  t.width = model.width;
  t.height = model.height;
  for (const auto& s : model.singularities) {
    const int x = static_cast<int>(std::lround(s.x));
    const int y = static_cast<int>(std::lround(s.y));
    if (x < 0 || y < 0 || x >= model.width || y >= model.height) continue;
    t.minutiae.push_back({x, y, core::wrap_two_pi(model.ridge_direction(s.x, s.y)),
                          s.sign > 0 ? core::MinutiaKind::Ending : core::MinutiaKind::Bifurcation});
  }
  return t;
}

RidgeModel transform_model(const RidgeModel& m, double rotation, double tx, double ty) {
  const double cx = m.width / 2.0, cy = m.height / 2.0;
  const double cs = std::cos(rotation), sn = std::sin(rotation);
  auto move = [&](double x, double y) {
    const double dx = x - cx, dy = y - cy;
    return std::pair{cs * dx - sn * dy + cx + tx, sn * dx + cs * dy + cy + ty};
  };
  RidgeModel out = m;
  std::tie(out.centre_x, out.centre_y) = move(m.centre_x, m.centre_y);
  int winding = 0;
  for (auto& s : out.singularities) {
    std::tie(s.x, s.y) = move(s.x, s.y);
    winding += s.sign;
  }
  // Each atan2 term gains `rotation` under the rotation; cancel it.
  out.phase_offset = m.phase_offset - winding * rotation;
  return out;
}

SynthRecord synth_record(const SynthSpec& spec, std::size_t index) {
  Rng rng(mix(spec.seed, index));
  SynthRecord rec;
  rec.id = "s" + padded(index + 1);
  rec.name = "Person " + padded(index + 1);

  RidgeModel& g = rec.gallery;
  g.width = spec.width;
  g.height = spec.height;
  g.wavelength = rng.uniform(8.0, 10.0);
  g.phase_offset = rng.uniform(0.0, kTwoPi);
  const double cx = spec.width / 2.0, cy = spec.height / 2.0;
  const double core_angle = rng.uniform(0.0, kTwoPi);
  const double core_dist = rng.uniform(180.0, 320.0);
  g.centre_x = cx + core_dist * std::cos(core_angle);
  g.centre_y = cy + core_dist * std::sin(core_angle);

  // Minutiae stay inside a disc that remains well within the frame under the
  // largest allowed rotation and translation.
  const double margin = 10.0 + 16.0 + spec.perturbation.max_translation;
  const double radius = std::max(10.0, std::min(cx, cy) - margin - 7.0);
  const int lo = std::min(spec.min_minutiae, spec.max_minutiae);
  const int hi = std::max(spec.min_minutiae, spec.max_minutiae);
  const int target = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  const double min_sep = 22.0;
  for (int attempt = 0; attempt < 20000 && static_cast<int>(g.singularities.size()) < target; ++attempt) {
    const double r = radius * std::sqrt(rng.uniform(0.0, 1.0));
    const double a = rng.uniform(0.0, kTwoPi);
    const double x = cx + r * std::cos(a), y = cy + r * std::sin(a);
    const bool crowded = std::any_of(g.singularities.begin(), g.singularities.end(),
                                     [&](const Singularity& s) { return std::hypot(s.x - x, s.y - y) < min_sep; });
    if (crowded) continue;
    g.singularities.push_back({x, y, rng.uniform(0.0, 1.0) < 0.5 ? 1 : -1});
  }

  const auto& p = spec.perturbation;
  rec.rotation = rng.uniform(-p.max_rotation, p.max_rotation);
  rec.translate_x = rng.uniform(-p.max_translation, p.max_translation);
  rec.translate_y = rng.uniform(-p.max_translation, p.max_translation);
  rec.probe = transform_model(g, rec.rotation, rec.translate_x, rec.translate_y);

  const auto n = g.singularities.size();
  auto drop = static_cast<std::size_t>(std::lround(p.drop_fraction * static_cast<double>(n)));
  drop = std::min(drop, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < drop; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  rec.dropped.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(drop));
  std::sort(rec.dropped.begin(), rec.dropped.end());
  std::vector<Singularity> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::binary_search(rec.dropped.begin(), rec.dropped.end(), i)) kept.push_back(rec.probe.singularities[i]);
  rec.probe.singularities = std::move(kept);
  return rec;
}

Dataset synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "gallery");
  fs::create_directories(out_dir / "probes");

  Dataset ds;
  ds.root = out_dir;
  ds.seed = spec.seed;
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t i = 0; i < spec.count; ++i) {
    const SynthRecord rec = synth_record(spec, i);
    DatasetEntry e;
    e.id = rec.id;
    e.name = rec.name;
    e.gallery_image = fs::path("gallery") / (rec.id + ".pgm");
    e.gallery_template = fs::path("gallery") / (rec.id + ".json");
    e.probe_image = fs::path("probes") / (rec.id + ".pgm");
    e.probe_template = fs::path("probes") / (rec.id + ".json");
    core::write_pgm(out_dir / e.gallery_image, render_ridges(rec.gallery));
    core::write_template(out_dir / e.gallery_template, model_template(rec.gallery));
    core::write_pgm(out_dir / e.probe_image, render_ridges(rec.probe));
    core::write_template(out_dir / e.probe_template, model_template(rec.probe));
    records.push_back({{"id", e.id},
                       {"name", e.name},
                       {"gallery_image", e.gallery_image.generic_string()},
                       {"gallery_template", e.gallery_template.generic_string()},
                       {"probe_image", e.probe_image.generic_string()},
                       {"probe_template", e.probe_template.generic_string()}});
    ds.entries.push_back(std::move(e));
  }
  nlohmann::json manifest = {{"version", 1},
                             {"seed", spec.seed},
                             {"count", spec.count},
                             {"width", spec.width},
                             {"height", spec.height},
                             {"records", records}};
  std::ofstream(out_dir / "manifest.json", std::ios::trunc) << manifest.dump(2) << '\n';
  return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw core::FormatError("no dataset manifest in " + dir.string());
  const auto j = nlohmann::json::parse(in);
  Dataset ds;
  ds.root = dir;
  ds.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& r : j.at("records")) {
    ds.entries.push_back({r.at("id").get<std::string>(), r.at("name").get<std::string>(),
                          r.at("gallery_image").get<std::string>(), r.at("gallery_template").get<std::string>(),
                          r.at("probe_image").get<std::string>(), r.at("probe_template").get<std::string>()});
  }
  return ds;
}

}  // namespace fpid::bench
