#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irscene/compositing.hpp"
#include "irscene/grading.hpp"
#include "irscene/metrics.hpp"
#include "irscene/scenario.hpp"
#include "irscene/thermal.hpp"

namespace irscene {

/// A scene failure, tagged with the pipeline stage that raised it.
class SceneError : public Error {
 public:
  SceneError(std::string stage, const Error& cause)
      : Error(cause.code(), std::string("stage ") + stage + ": " + cause.what()),
        stage_(std::move(stage)),
        detail_(cause.what()) {}

  const std::string& stage() const { return stage_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string stage_;
  std::string detail_;
};

/// Scenario inputs loaded once and shared read-only by every scene.
struct SceneResources {
  ScenarioConfig config;
  Image background;
  std::vector<ThermalSignature> signatures;
  std::vector<Occluder> occluders;
};

SceneResources load_resources(const ScenarioConfig& cfg);

struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct GroundTruth {
  std::string scene_id;
  std::uint64_t scene_seed = 0;
  std::size_t signature_index = 0;
  std::string vehicle_id;
  double aspect_azimuth = 0;
  std::string operating_configuration;
  RegionLambdas lambdas;
  Extent frame;
  Extent sensor_frame;
  BoundingBox bbox;                  // full silhouette, frame coordinates
  BoundingBox bbox_sensor;           // same box on the sampled grid
  std::optional<BoundingBox> bbox_visible;
  QualitySpec requested;
  MetricSet<double> achieved_pre_sensor;
  std::optional<MetricSet<double>> achieved_post_sensor;
  std::string post_sensor_note;
  GradingSolution grading;
  ScenePlacement placement;
  std::optional<std::string> occluder_name;
  std::optional<OcclusionSolution> occlusion;
  Eigen::Index target_area = 0;  // full silhouette after scaling
  SensorConfig sensor;
  std::uint64_t thermal_seed = 0;
  std::uint64_t selection_seed = 0;
  std::uint64_t placement_seed = 0;
  std::uint64_t noise_seed = 0;
  nlohmann::json files = nlohmann::json::object();
};

nlohmann::json to_json(const GroundTruth& truth);

/// Optional overrides used by trajectory sequences.
struct SceneRequest {
  std::uint64_t seed = 0;
  std::optional<std::size_t> signature_index;
  std::optional<RegionLambdas> lambdas;
};

struct SceneOutput {
  Raster<std::uint16_t> exported;  // quantised sensor image
  Image composed;                  // after compositing, before grading
  Image graded;                    // pre-sensor
  ScenePartition partition;
  GroundTruth truth;
};

/// Runs one scene: thermal draw, blend, scale, occlusion, placement,
/// grading, sensor. Any failure is rethrown as SceneError naming the stage.
SceneOutput generate_scene(const SceneResources& res, const SceneRequest& request);

/// Zone labels of a partition: 0 = F2, 1 = F1, 2 = C, 3 = occluded,
/// 4 = occluder. 255 marks mixed cells on a sampled grid.
LabelMap partition_labels(const ScenePartition& part);
ScenePartition partition_from_labels(const LabelMap& labels);
/// Majority vote over factor x factor cells; cells without a strict
/// majority are marked 255 and belong to no zone.
LabelMap downsample_labels(const LabelMap& labels, int factor);

/// Writes the exported image, partition labels and truth.json (plus exact
/// pre-sensor intermediates when `debug`); fills `truth.files`.
void write_scene(const fs::path& dir, SceneOutput& scene, ImageFormat format, bool debug);

std::string scene_name(std::size_t index);

struct BatchOptions {
  int count = 1;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  bool debug = false;
};

struct BatchReport {
  int successes = 0;
  int failures = 0;
  nlohmann::json manifest;
};

/// Scene i uses seed derive_seed(master_seed, i). Failed scenes are recorded
/// in the manifest and skipped. The manifest's `generated_at` is the only
/// time-dependent field.
BatchReport generate_batch(const SceneResources& res, const fs::path& out_dir,
                           const BatchOptions& opts);

struct TrajectoryPoint {
  double target_x = 0;  // metres, east
  double target_y = 0;  // metres, north
  double heading_deg = 0;  // clockwise from north
  double sensor_x = 0;
  double sensor_y = 0;
  double timestamp = 0;
};

std::vector<TrajectoryPoint> load_trajectory(const fs::path& path);
std::vector<TrajectoryPoint> parse_trajectory(const nlohmann::json& doc);

/// Angle between the target heading and the target-to-sensor bearing, in
/// [0, 360): 0 is frontal, 90 sees the target's right flank.
double aspect_angle(const TrajectoryPoint& pt);

/// Index of the entry of `vehicle_id` whose azimuth is circularly closest to
/// the aspect of `pt`; ties go to the smaller azimuth.
std::size_t select_view(const TrajectoryPoint& pt, const std::vector<ThermalSignature>& db,
                        const std::string& vehicle_id);

struct SequenceFrame {
  std::size_t signature_index;
  double aspect;
  std::uint64_t seed;
};

/// Frame i uses seed derive_seed(master_seed, i). One lambda map, drawn from
/// frame 0's thermal stream, is shared by all frames.
std::vector<SequenceFrame> plan_sequence(const SceneResources& res,
                                         const std::vector<TrajectoryPoint>& trajectory,
                                         std::uint64_t master_seed, RegionLambdas* lambdas);

BatchReport generate_sequence(const SceneResources& res,
                              const std::vector<TrajectoryPoint>& trajectory,
                              const fs::path& out_dir, std::uint64_t master_seed, bool debug);

}  // namespace irscene
