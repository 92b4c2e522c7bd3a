#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irscene/compositing.hpp"
#include "irscene/grading.hpp"
#include "irscene/sensor.hpp"
#include "irscene/thermal.hpp"

namespace irscene {

namespace fs = std::filesystem;

struct PlacementPolicy {
  enum class Kind { Fixed, Uniform };
  Kind kind = Kind::Uniform;
  Offset fixed;    // target top-left, Kind::Fixed
  int margin = 0;  // keep-out border, Kind::Uniform
};

enum class ImageFormat { Png, Pgm };

/// Everything one scenario needs; paths are absolute after parsing.
struct ScenarioConfig {
  fs::path background;
  fs::path signature_db;
  std::optional<fs::path> occluder;
  std::optional<std::string> vehicle_id;
  std::optional<double> aspect_azimuth;
  OperatingConfiguration operating;
  QualitySpec quality;
  SensorConfig sensor;
  int ring_width = kDefaultRingWidth;
  double occlusion_epsilon = 0.01;
  PlacementPolicy placement;
  int count = 1;
  std::uint64_t master_seed = 0;
  ImageFormat format = ImageFormat::Png;

  void validate() const;
};

/// Parses a scenario document; relative paths resolve against `base_dir`.
/// Malformed input raises ConfigError.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const fs::path& base_dir);
ScenarioConfig load_scenario(const fs::path& path);
nlohmann::json to_json(const ScenarioConfig& cfg);

QualitySpec parse_quality(const nlohmann::json& j);
nlohmann::json to_json(const QualitySpec& q);
SensorConfig parse_sensor(const nlohmann::json& j);
nlohmann::json to_json(const SensorConfig& s);
OperatingConfiguration parse_operating_configuration(const nlohmann::json& j);
nlohmann::json to_json(const OperatingConfiguration& c);
nlohmann::json to_json(const RegionLambdas& lambdas);
RegionLambdas lambdas_from_json(const nlohmann::json& j);

/// Configuration for the `expand-db` command.
struct ExpansionConfig {
  fs::path signature_db;
  std::vector<OperatingConfiguration> configurations;
  int variants = 1;
  std::uint64_t master_seed = 0;
};

ExpansionConfig load_expansion(const fs::path& path);

}  // namespace irscene
