#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "irscene/io.hpp"
#include "irscene/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace irscene;
namespace fs = std::filesystem;
using fixture::rel_err;

namespace {

QualitySpec default_spec() {
  QualitySpec q = fixture::spec(2.0, 1.5, -0.3, 10);
  q.qd = 1200;
  q.rx = 0.2;
  return q;
}

SceneResources small_resources(const SensorConfig& sensor = {1.0, 2, 2.0, 16}) {
  return fixture::demo_resources(200, 160, default_spec(), sensor, true);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TrajectoryPoint point(double tx, double ty, double heading, double sx, double sy) {
  TrajectoryPoint p;
  p.target_x = tx;
  p.target_y = ty;
  p.heading_deg = heading;
  p.sensor_x = sx;
  p.sensor_y = sy;
  return p;
}

std::vector<ThermalSignature> four_views(const std::string& id = "veh") {
  std::vector<ThermalSignature> db;
  for (int a : {0, 90, 180, 270}) db.push_back(demo::make_vehicle(id, a, 1));
  return db;
}

}  // namespace

TEST(GenerateScene, Deterministic) {
  const auto res = small_resources();
  const auto a = generate_scene(res, {77, {}, {}});
  const auto b = generate_scene(res, {77, {}, {}});
  EXPECT_TRUE((a.exported == b.exported).all());
  EXPECT_TRUE((a.graded == b.graded).all());
  EXPECT_EQ(to_json(a.truth).dump(), to_json(b.truth).dump());
  const auto c = generate_scene(res, {78, {}, {}});
  EXPECT_FALSE(a.exported.rows() == c.exported.rows() && (a.exported == c.exported).all());
}

TEST(GenerateScene, IdentitySensorRoundTrip) {
  const auto res = small_resources(SensorConfig{});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_scene(res, {seed, {}, {}});
    const auto& m = s.truth.achieved_pre_sensor;
    EXPECT_LE(rel_err(m.rss, 2.0), 1e-9);
    EXPECT_LE(rel_err(m.rsc, 1.5), 1e-9);
    EXPECT_LE(rel_err(*m.k, -0.3), 1e-9);
    EXPECT_LE(std::abs(m.rx - 0.2), 0.01);
    EXPECT_EQ(s.exported.rows(), 160);
    // Independent re-measure of the pre-sensor image.
    const auto again = compute_all(s.graded, s.partition, CalibrationNuK(10));
    EXPECT_EQ(again.rss, m.rss);
    EXPECT_EQ(*again.k, *m.k);
  }
}

TEST(GenerateScene, QdWithinFivePercent) {
  const auto res = small_resources();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_scene(res, {seed, {}, {}});
    EXPECT_LE(rel_err(s.truth.achieved_pre_sensor.qd, 1200), 0.05) << seed;
  }
}

TEST(GenerateScene, InfeasibleContrastNamesStage) {
  auto res = small_resources();
  res.config.quality.k = 2;
  try {
    generate_scene(res, {1, {}, {}});
    FAIL();
  } catch (const SceneError& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleContrast);
    EXPECT_EQ(e.stage(), "grade");
  }
}

TEST(GenerateScene, OcclusionWithoutOccluder) {
  auto res = fixture::demo_resources(200, 160, default_spec(), SensorConfig{}, false);
  try {
    generate_scene(res, {1, {}, {}});
    FAIL();
  } catch (const SceneError& e) {
    EXPECT_EQ(e.code(), ErrorCode::OcclusionInfeasible);
    EXPECT_EQ(e.stage(), "solve_occlusion");
  }
  res.config.quality.rx = 0;
  EXPECT_NO_THROW(generate_scene(res, {1, {}, {}}));
}

TEST(GenerateScene, TruthIsComplete) {
  const auto res = small_resources();
  const auto s = generate_scene(res, {5, {}, {}});
  const auto j = to_json(s.truth);
  for (const char* key : {"vehicle_id", "aspect_azimuth", "lambdas", "requested", "achieved_pre_sensor",
                          "achieved_post_sensor", "grading", "placement", "seeds", "bbox"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const auto& b = s.truth.bbox;
  EXPECT_GE(b.x, 0);
  EXPECT_GE(b.y, 0);
  EXPECT_LE(b.x + b.width, 200);
  EXPECT_LE(b.y + b.height, 160);
  const auto& bs = s.truth.bbox_sensor;
  EXPECT_LE(bs.x + bs.width, 100);
  EXPECT_LE(bs.y + bs.height, 80);
  EXPECT_EQ(s.truth.lambdas.size(), 5u);
}

TEST(GenerateScene, SensorDegradesContrastWithoutOccluder) {
  // RSS is the RMS deviation of C from the F1 mean; blur and block averaging
  // mix C with its surroundings and can only shrink it. An occluder is left
  // ungraded and its blurred radiometry can push the other way, so this
  // property is checked on unoccluded scenes.
  QualitySpec q = default_spec();
  q.rx = 0;
  const auto res = fixture::demo_resources(200, 160, q, SensorConfig{1.5, 2, 2.0, 16}, false);
  int lower = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = generate_scene(res, {seed, {}, {}});
    ASSERT_TRUE(s.truth.achieved_post_sensor.has_value()) << s.truth.post_sensor_note;
    ++total;
    if (s.truth.achieved_post_sensor->rss <= s.truth.achieved_pre_sensor.rss) ++lower;
  }
  EXPECT_EQ(lower, total);
}

TEST(Labels, RoundTripAndDownsample) {
  const auto res = small_resources();
  const auto s = generate_scene(res, {3, {}, {}});
  const LabelMap l = partition_labels(s.partition);
  const auto back = partition_from_labels(l);
  EXPECT_TRUE((back.target == s.partition.target).all());
  EXPECT_TRUE((back.ring == s.partition.ring).all());
  EXPECT_TRUE((back.occluder == s.partition.occluder).all());

  LabelMap tiny(2, 4);
  tiny << 2, 2, 2, 1,  //
      2, 0, 1, 0;
  const LabelMap d = downsample_labels(tiny, 2);
  EXPECT_EQ(d(0, 0), 2);    // 3 of 4
  EXPECT_EQ(d(0, 1), 255);  // no strict majority
}

TEST(Batch, CardinalityAndManifest) {
  const auto res = small_resources();
  const auto dir = fixture::temp_dir("batch10");
  const auto report = generate_batch(res, dir, {10, 9, 2, false});
  EXPECT_EQ(report.successes + report.failures, 10);
  EXPECT_EQ(report.successes, 10);
  const auto manifest = io::read_json(dir / "manifest.json");
  ASSERT_EQ(manifest["scenes"].size(), 10u);
  for (const auto& e : manifest["scenes"]) {
    EXPECT_TRUE(fs::exists(dir / e["image"].get<std::string>()));
    EXPECT_TRUE(fs::exists(dir / e["truth"].get<std::string>()));
  }
}

TEST(Batch, FailuresAreReported) {
  auto res = small_resources();
  res.config.quality.k = 2;
  const auto dir = fixture::temp_dir("batchfail");
  const auto report = generate_batch(res, dir, {3, 1, 1, false});
  EXPECT_EQ(report.failures, 3);
  for (const auto& e : report.manifest["scenes"]) {
    EXPECT_EQ(e["status"], "failed");
    EXPECT_EQ(e["stage"], "grade");
    EXPECT_EQ(e["error_code"], "InfeasibleContrast");
  }
}

TEST(Batch, SingleSceneMatchesChildSeed) {
  const auto res = small_resources();
  const auto dir = fixture::temp_dir("batch1");
  generate_batch(res, dir, {1, 123, 1, false});
  auto direct = generate_scene(res, {derive_seed(123, 0), {}, {}});
  const auto stored = io::read_samples(dir / "scene_000000.png");
  EXPECT_TRUE((stored == direct.exported).all());
  direct.truth.scene_id = scene_name(0);
  const auto truth = io::read_json(dir / "scene_000000_truth.json");
  EXPECT_EQ(truth["seeds"]["scene"].get<std::uint64_t>(), derive_seed(123, 0));
}

TEST(Batch, ParallelMatchesSerial) {
  const auto res = small_resources();
  const auto a = fixture::temp_dir("serial"), b = fixture::temp_dir("parallel");
  generate_batch(res, a, {6, 4, 1, false});
  generate_batch(res, b, {6, 4, 3, false});
  for (int i = 0; i < 6; ++i) {
    const auto name = scene_name(i);
    EXPECT_EQ(slurp(a / (name + ".png")), slurp(b / (name + ".png")));
    EXPECT_EQ(slurp(a / (name + "_truth.json")), slurp(b / (name + "_truth.json")));
  }
}

TEST(Batch, TruthConsistencyFromDebugIntermediates) {
  const auto res = small_resources();
  const auto dir = fixture::temp_dir("debug");
  generate_batch(res, dir, {4, 17, 1, true});
  for (int i = 0; i < 4; ++i) {
    const auto truth = io::read_json(dir / (scene_name(i) + "_truth.json"));
    const auto& files = truth["files"];
    const Image pre = io::read_image(dir / files["pre_sensor"].get<std::string>());
    const auto part = partition_from_labels(io::read_labels(dir / files["partition"].get<std::string>()));
    const auto m = compute_all(pre, part, CalibrationNuK(truth["requested"]["nu_k"].get<double>()));
    const auto rec = metric_set_from_json(truth["achieved_pre_sensor"]);
    EXPECT_EQ(m.rss, rec.rss);
    EXPECT_EQ(m.rsc, rec.rsc);
    EXPECT_EQ(m.qd, rec.qd);
    EXPECT_EQ(m.rx, rec.rx);
    EXPECT_EQ(*m.k, *rec.k);

    // Zone masks agree with the label image.
    const Mask c = io::read_mask(dir / files["masks"]["C"].get<std::string>());
    EXPECT_TRUE((c == part.target).all());

    // Post-sensor values re-measured from the exported integers.
    const Image exported = io::read_image(dir / files["image"].get<std::string>());
    const auto grid = downsample_labels(io::read_labels(dir / files["partition"].get<std::string>()), 2);
    const auto post = compute_all(exported, partition_from_labels(grid), CalibrationNuK(10));
    const auto rec_post = metric_set_from_json(truth["achieved_post_sensor"]);
    EXPECT_EQ(post.rss, rec_post.rss);
    EXPECT_EQ(post.rsc, rec_post.rsc);
  }
}

TEST(SelectView, AspectGeometry) {
  EXPECT_DOUBLE_EQ(aspect_angle(point(0, 0, 0, 0, 100)), 0.0);
  EXPECT_DOUBLE_EQ(aspect_angle(point(0, 0, 0, 100, 0)), 90.0);
  EXPECT_DOUBLE_EQ(aspect_angle(point(0, 0, 0, 0, -100)), 180.0);
  EXPECT_DOUBLE_EQ(aspect_angle(point(0, 0, 90, 0, 100)), 270.0);
  EXPECT_NEAR(aspect_angle(point(10, 10, 45, 20, 20)), 0.0, 1e-12);
  EXPECT_THROW(aspect_angle(point(1, 1, 0, 1, 1)), Error);
}

TEST(SelectView, Examples) {
  const auto db = four_views();
  EXPECT_EQ(db[select_view(point(0, 0, 0, 0, 50), db, "veh")].aspect_azimuth, 0);
  EXPECT_EQ(db[select_view(point(0, 0, 0, 50, 0), db, "veh")].aspect_azimuth, 90);
  // Sensor at bearing 350 from a north-heading target.
  const double b = 350 * std::numbers::pi / 180;
  EXPECT_EQ(db[select_view(point(0, 0, 0, 50 * std::sin(b), 50 * std::cos(b)), db, "veh")].aspect_azimuth, 0);
  // Exactly between 0 and 90: the smaller azimuth wins.
  EXPECT_EQ(db[select_view(point(0, 0, 0, 50, 50), db, "veh")].aspect_azimuth, 0);
  try {
    select_view(point(0, 0, 0, 0, 50), db, "other");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotFound);
  }
}

TEST(Sequence, CircularTrajectoryCyclesViews) {
  auto res = small_resources();
  res.signatures = four_views();
  std::vector<TrajectoryPoint> traj;
  for (int i = 0; i < 8; ++i) {
    const double a = 2 * std::numbers::pi * i / 8;
    traj.push_back(point(500 * std::sin(a), 500 * std::cos(a), 90, 0, 0));
  }
  const auto frames = plan_sequence(res, traj, 1, nullptr);
  std::set<double> seen;
  for (const auto& f : frames) seen.insert(res.signatures[f.signature_index].aspect_azimuth);
  EXPECT_EQ(seen, (std::set<double>{0, 90, 180, 270}));
}

TEST(Sequence, IdenticalGeometryGivesIdenticalViews) {
  auto res = small_resources();
  res.signatures = four_views();
  const auto frames = plan_sequence(res, {point(3, 4, 30, 100, -20), point(3, 4, 30, 100, -20)}, 1, nullptr);
  EXPECT_EQ(frames[0].signature_index, frames[1].signature_index);
}

TEST(Sequence, SinglePointEqualsGenerateScene) {
  auto res = small_resources();
  res.config.vehicle_id = "tracked_a";
  const auto dir = fixture::temp_dir("seq1");
  const std::vector<TrajectoryPoint> traj{point(0, 0, 0, 80, 0)};
  const auto report = generate_sequence(res, traj, dir, 55, false);
  ASSERT_EQ(report.successes, 1);
  const std::size_t view = select_view(traj[0], res.signatures, "tracked_a");
  const auto direct = generate_scene(res, {derive_seed(55, 0), view, {}});
  EXPECT_TRUE((io::read_samples(dir / "scene_000000.png") == direct.exported).all());
  EXPECT_EQ(report.manifest["scenes"][0]["view_azimuth"].get<double>(), 90.0);
}

TEST(Sequence, LambdasHeldFixed) {
  auto res = small_resources();
  res.config.vehicle_id = "tracked_a";
  res.config.operating = preset_configuration("moving");
  const auto dir = fixture::temp_dir("seqfixed");
  std::vector<TrajectoryPoint> traj;
  for (int i = 0; i < 4; ++i) traj.push_back(point(0, 0, 90.0 * i, 0, 100));
  const auto report = generate_sequence(res, traj, dir, 8, false);
  ASSERT_EQ(report.successes, 4);
  const auto first = io::read_json(dir / "scene_000000_truth.json")["lambdas"];
  for (int i = 1; i < 4; ++i) {
    EXPECT_EQ(io::read_json(dir / (scene_name(i) + "_truth.json"))["lambdas"], first);
  }
}

TEST(Trajectory, Parse) {
  const auto doc = nlohmann::json::parse(R"({"points": [
    {"t": 0.5, "target": {"x": 1, "y": 2}, "heading_deg": 45, "sensor": {"x": 3, "y": 4}}]})");
  const auto pts = parse_trajectory(doc);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].timestamp, 0.5);
  EXPECT_EQ(pts[0].target_y, 2);
  EXPECT_EQ(pts[0].sensor_x, 3);
  EXPECT_EQ(parse_trajectory(doc["points"]).size(), 1u);
  EXPECT_THROW(parse_trajectory(nlohmann::json::parse(R"({"points": [{"t": 1}]})")), Error);
}

TEST(Scenario, ParseAndValidate) {
  const auto dir = fixture::temp_dir("scenario");
  const auto layout = demo::write_demo_assets(dir, 96, 80, 3);
  const auto cfg = load_scenario(layout.scenario);
  EXPECT_TRUE(cfg.background.is_absolute());
  EXPECT_EQ(cfg.quality.rss, 3.0);
  EXPECT_EQ(*cfg.quality.qd, 3000.0);
  EXPECT_EQ(cfg.sensor.sampling_factor, 2);
  EXPECT_EQ(cfg.operating.name, "engine_running");
  EXPECT_NO_THROW(cfg.validate());

  auto doc = io::read_json(layout.scenario);
  doc["quality"]["rss"] = -1;
  EXPECT_THROW(parse_scenario(doc, dir), Error);
  doc = io::read_json(layout.scenario);
  doc["background"] = "nope.png";
  EXPECT_THROW(parse_scenario(doc, dir).validate(), Error);
  doc = io::read_json(layout.scenario);
  doc["operating_configuration"] = "flying";
  try {
    parse_scenario(doc, dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}
