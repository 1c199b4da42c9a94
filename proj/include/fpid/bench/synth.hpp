#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpid/core/image.hpp"
#include "fpid/core/minutiae.hpp"

namespace fpid::bench {

struct Perturbation {
  double max_rotation = 15.0 * 3.14159265358979323846 / 180.0;  // radians
  double max_translation = 10.0;                                 // px
  double drop_fraction = 0.10;
};

struct SynthSpec {
  std::size_t count = 100;
  int min_minutiae = 20;
  int max_minutiae = 40;
  int width = 256;
  int height = 256;
  std::uint64_t seed = 1;
  Perturbation perturbation;
};

/// Point phase singularity; each one adds a ridge ending or bifurcation.
struct Singularity {
  double x = 0.0;
  double y = 0.0;
  int sign = 1;
};

/// Analytic ridge pattern: arcs centred on a distant point plus one spiral
/// phase term per minutia.
struct RidgeModel {
  int width = 256;
  int height = 256;
  double centre_x = 0.0;
  double centre_y = 0.0;
  double wavelength = 9.0;
  double phase_offset = 0.0;
  std::vector<Singularity> singularities;

  double phase(double x, double y) const;
  /// Ridge (tangent) direction of the background arcs at (x, y), in [0, pi).
  double ridge_direction(double x, double y) const;
};

core::GrayImage render_ridges(const RidgeModel& model);

/// Nominal template of a model: one minutia per singularity that lies inside
/// the image.
core::MinutiaeTemplate model_template(const RidgeModel& model);

struct SynthRecord {
  std::string id;        // "s0001", ...
  std::string name;      // "Person 0001", ...
  RidgeModel gallery;
  RidgeModel probe;
  double rotation = 0.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  std::vector<std::size_t> dropped;  // indices into gallery.singularities
};

/// Deterministic in (spec, index).
SynthRecord synth_record(const SynthSpec& spec, std::size_t index);

/// Rigidly moves a model about the image centre, then translates. Keeps the
/// pattern an exact rotated copy by compensating the spiral phase offsets.
RidgeModel transform_model(const RidgeModel& m, double rotation, double tx, double ty);

struct DatasetEntry {
  std::string id;
  std::string name;
  std::filesystem::path gallery_image;
  std::filesystem::path gallery_template;
  std::filesystem::path probe_image;
  std::filesystem::path probe_template;
};

struct Dataset {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  std::vector<DatasetEntry> entries;  // paths relative to root
};

/// Writes manifest.json, gallery/ and probes/ under out_dir.
Dataset synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace fpid::bench
