#include "irscene/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <thread>

#include "irscene/io.hpp"
#include "irscene/sensor.hpp"

namespace irscene {

using nlohmann::json;

namespace {

template <typename F>
auto run_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const SceneError&) {
    throw;
  } catch (const Error& e) {
    throw SceneError(stage, e);
  }
}

bool within(double achieved, double requested, double tol) {
  const double scale = requested == 0 ? 1.0 : std::abs(requested);
  return std::abs(achieved - requested) <= tol * scale;
}

std::optional<BoundingBox> mask_bbox(const Mask& m) {
  int x0 = INT32_MAX, y0 = INT32_MAX, x1 = -1, y1 = -1;
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
      if (!m(y, x)) continue;
      x0 = std::min(x0, static_cast<int>(x));
      y0 = std::min(y0, static_cast<int>(y));
      x1 = std::max(x1, static_cast<int>(x));
      y1 = std::max(y1, static_cast<int>(y));
    }
  }
  if (x1 < 0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

BoundingBox to_sensor_grid(const BoundingBox& b, int factor, Extent sensor) {
  const int x0 = b.x / factor, y0 = b.y / factor;
  const int x1 = std::min(sensor.width, (b.x + b.width + factor - 1) / factor);
  const int y1 = std::min(sensor.height, (b.y + b.height + factor - 1) / factor);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

json to_json(const BoundingBox& b) {
  return {{"x", b.x}, {"y", b.y}, {"width", b.width}, {"height", b.height}};
}

json to_json(Offset o) { return {{"x", o.x}, {"y", o.y}}; }
json to_json(Extent e) { return {{"width", e.width}, {"height", e.height}}; }

/// Refines a closed-form scale so the nearest-neighbour silhouette area gets
/// as close as possible to `wanted_area`.
double fit_scale(const TargetChip& chip, double initial, double wanted_area) {
  auto area_at = [&](double s) -> double {
    try {
      return static_cast<double>(rescale_chip(chip, s).silhouette.count());
    } catch (const Error&) {
      return 0.0;
    }
  };
  double best = initial;
  double best_err = std::abs(area_at(initial) - wanted_area);
  if (best_err <= 0.005 * wanted_area) return best;

  double lo = initial * 0.8, hi = initial * 1.25;
  if (area_at(lo) > wanted_area || area_at(hi) < wanted_area) return best;
  for (int i = 0; i < 24; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double a = area_at(mid);
    const double err = std::abs(a - wanted_area);
    if (err < best_err) {
      best_err = err;
      best = mid;
    }
    (a < wanted_area ? lo : hi) = mid;
  }
  return best;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

SceneResources load_resources(const ScenarioConfig& cfg) {
  cfg.validate();
  SceneResources res{cfg, io::read_image(cfg.background), io::load_signature_db(cfg.signature_db), {}};
  validate_image(res.background, "background");
  if (cfg.occluder) res.occluders = io::load_occluders(*cfg.occluder);
  return res;
}

json to_json(const GroundTruth& t) {
  json j;
  j["scene_id"] = t.scene_id;
  j["vehicle_id"] = t.vehicle_id;
  j["aspect_azimuth"] = t.aspect_azimuth;
  j["signature_index"] = t.signature_index;
  j["operating_configuration"] = t.operating_configuration;
  j["lambdas"] = to_json(t.lambdas);
  j["frame"] = to_json(t.frame);
  j["sensor_frame"] = to_json(t.sensor_frame);
  j["bbox"] = {{"frame", to_json(t.bbox)}, {"sensor", to_json(t.bbox_sensor)}};
  j["bbox_visible"] = t.bbox_visible ? to_json(*t.bbox_visible) : json(nullptr);
  j["requested"] = to_json(t.requested);
  j["achieved_pre_sensor"] = to_json(t.achieved_pre_sensor);
  j["achieved_post_sensor"] = t.achieved_post_sensor ? to_json(*t.achieved_post_sensor) : json(nullptr);
  if (!t.post_sensor_note.empty()) j["post_sensor_note"] = t.post_sensor_note;
  j["grading"] = {{"gain_background", t.grading.gain_background},
                  {"offset_background", t.grading.offset_background},
                  {"gain_target", t.grading.gain_target},
                  {"offset_target", t.grading.offset_target},
                  {"scale_target", t.grading.scale_target}};
  json placement = {{"target", to_json(t.placement.target)},
                    {"occluder", t.placement.occluder ? to_json(*t.placement.occluder) : json(nullptr)},
                    {"occluder_name", t.occluder_name ? json(*t.occluder_name) : json(nullptr)},
                    {"occluder_graded", false}};
  if (t.occlusion) {
    placement["occluder_relative"] = to_json(t.occlusion->relative);
    placement["rx_achieved"] = t.occlusion->achieved;
    placement["occlusion_search"] = t.occlusion->bisection ? "bisection" : "exhaustive";
  }
  j["placement"] = placement;
  j["target_area_px"] = t.target_area;
  j["sensor"] = to_json(t.sensor);
  j["seeds"] = {{"scene", t.scene_seed},
                {"thermal", t.thermal_seed},
                {"selection", t.selection_seed},
                {"placement", t.placement_seed},
                {"noise", t.noise_seed}};
  j["files"] = t.files;
  return j;
}

LabelMap partition_labels(const ScenePartition& part) {
  LabelMap labels = LabelMap::Constant(part.target.rows(), part.target.cols(), 255);
  labels = part.rest.select(LabelMap::Constant(labels.rows(), labels.cols(), 0), labels);
  labels = part.ring.select(LabelMap::Constant(labels.rows(), labels.cols(), 1), labels);
  labels = part.target.select(LabelMap::Constant(labels.rows(), labels.cols(), 2), labels);
  labels = part.occluded.select(LabelMap::Constant(labels.rows(), labels.cols(), 3), labels);
  labels = part.occluder.select(LabelMap::Constant(labels.rows(), labels.cols(), 4), labels);
  return labels;
}

ScenePartition partition_from_labels(const LabelMap& labels) {
  return {labels == 2, labels == 1, labels == 0, labels == 3, labels == 4};
}

LabelMap downsample_labels(const LabelMap& labels, int factor) {
  if (factor < 1) throw Error(ErrorCode::ValueError, "factor must be >= 1");
  if (factor == 1) return labels;
  const Eigen::Index rows = labels.rows() / factor, cols = labels.cols() / factor;
  if (rows < 1 || cols < 1) throw Error(ErrorCode::TargetTooSmall, "sampled grid below 1x1");
  LabelMap out(rows, cols);
  const int cells = factor * factor;
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      std::array<int, 5> votes{};
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) {
          const std::uint8_t l = labels(y * factor + dy, x * factor + dx);
          if (l < votes.size()) ++votes[l];
        }
      }
      std::uint8_t winner = 255;
      for (std::size_t l = 0; l < votes.size(); ++l) {
        if (2 * votes[l] > cells) winner = static_cast<std::uint8_t>(l);
      }
      out(y, x) = winner;
    }
  }
  return out;
}

std::string scene_name(std::size_t index) {
  std::ostringstream os;
  os << "scene_" << std::setw(6) << std::setfill('0') << index;
  return os.str();
}

SceneOutput generate_scene(const SceneResources& res, const SceneRequest& request) {
  const ScenarioConfig& cfg = res.config;
  SceneOutput out;
  GroundTruth& t = out.truth;
  t.scene_seed = request.seed;
  t.thermal_seed = derive_seed(request.seed, SceneStream::Thermal);
  t.selection_seed = derive_seed(request.seed, SceneStream::Selection);
  t.placement_seed = derive_seed(request.seed, SceneStream::Placement);
  t.noise_seed = derive_seed(request.seed, SceneStream::Noise);
  t.requested = cfg.quality;
  t.sensor = cfg.sensor;
  t.operating_configuration = cfg.operating.name;

  const std::size_t sig_index = run_stage("select_signature", [&] {
    if (request.signature_index) {
      if (*request.signature_index >= res.signatures.size()) {
        throw Error(ErrorCode::NotFound, "signature index out of range");
      }
      return *request.signature_index;
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < res.signatures.size(); ++i) {
      const auto& s = res.signatures[i];
      if (cfg.vehicle_id && s.vehicle_id != *cfg.vehicle_id) continue;
      if (cfg.aspect_azimuth && std::abs(s.aspect_azimuth - *cfg.aspect_azimuth) > 1e-9) continue;
      candidates.push_back(i);
    }
    if (candidates.empty()) throw Error(ErrorCode::NotFound, "no signature matches the scenario");
    Rng rng(t.selection_seed);
    return candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  });
  const ThermalSignature& sig = res.signatures[sig_index];
  t.signature_index = sig_index;
  t.vehicle_id = sig.vehicle_id;
  t.aspect_azimuth = sig.aspect_azimuth;

  t.lambdas = run_stage("sample_lambda", [&] {
    if (request.lambdas) return *request.lambdas;
    Rng rng(t.thermal_seed);
    return assign_lambdas(cfg.operating, rng);
  });

  TargetChip chip = run_stage("synthesize_signature", [&] {
    return TargetChip{synthesize_signature(sig, t.lambdas), sig.silhouette, sig.regions};
  });

  const QualitySpec& spec = cfg.quality;
  double scale = 1.0;
  if (spec.qd) {
    chip = run_stage("solve_scale", [&] {
      const double native = static_cast<double>(chip.silhouette.count());
      // Q_D counts visible pixels, so the full silhouette is sized for the
      // requested occlusion.
      const double visible_fraction = spec.rx < 1 ? 1.0 - spec.rx : 1.0;
      scale = solve_scale(native * visible_fraction, spec);
      scale = fit_scale(chip, scale, *spec.qd / spec.rss / visible_fraction);
      return rescale_chip(chip, scale);
    });
  }
  t.target_area = chip.silhouette.count();

  const Occluder* occluder = nullptr;
  if (!res.occluders.empty()) {
    Rng rng(derive_seed(t.selection_seed, 1));
    occluder = &res.occluders[std::uniform_int_distribution<std::size_t>(0, res.occluders.size() - 1)(rng)];
    t.occluder_name = occluder->name;
    t.occlusion = run_stage("solve_occlusion", [&] {
      return solve_occlusion(chip.silhouette, occluder->silhouette, spec.rx,
                             {cfg.occlusion_epsilon, std::nullopt});
    });
  } else if (spec.rx > cfg.occlusion_epsilon) {
    throw SceneError("solve_occlusion", Error(ErrorCode::OcclusionInfeasible,
                                              "occlusion requested but no occluder configured"));
  }

  t.placement = run_stage("place_target", [&] {
    const Extent frame = extent_of(res.background);
    const int tw = static_cast<int>(chip.silhouette.cols()), th = static_cast<int>(chip.silhouette.rows());
    int bx0 = 0, by0 = 0, bx1 = tw, by1 = th;
    if (t.occlusion) {
      const Offset r = t.occlusion->relative;
      bx0 = std::min(0, r.x);
      by0 = std::min(0, r.y);
      bx1 = std::max(tw, r.x + static_cast<int>(occluder->silhouette.cols()));
      by1 = std::max(th, r.y + static_cast<int>(occluder->silhouette.rows()));
    }
    const int uw = bx1 - bx0, uh = by1 - by0;
    ScenePlacement p;
    if (cfg.placement.kind == PlacementPolicy::Kind::Fixed) {
      p.target = cfg.placement.fixed;
      const int ox = p.target.x + bx0, oy = p.target.y + by0;
      if (ox < 0 || oy < 0 || ox + uw > frame.width || oy + uh > frame.height) {
        throw Error(ErrorCode::PlacementError, "fixed placement leaves the frame");
      }
    } else {
      const int m = cfg.placement.margin;
      const int max_x = frame.width - uw - m, max_y = frame.height - uh - m;
      if (max_x < m || max_y < m) {
        throw Error(ErrorCode::PlacementError, "target and occluder do not fit inside the frame margin");
      }
      Rng rng(t.placement_seed);
      const int ox = std::uniform_int_distribution<int>(m, max_x)(rng);
      const int oy = std::uniform_int_distribution<int>(m, max_y)(rng);
      p.target = {ox - bx0, oy - by0};
    }
    if (t.occlusion) {
      p.occluder = Offset{p.target.x + t.occlusion->relative.x, p.target.y + t.occlusion->relative.y};
    }
    return p;
  });

  Composition comp = run_stage("composite", [&] {
    return composite(res.background, chip, occluder, t.placement, cfg.ring_width);
  });
  out.composed = std::move(comp.scene);
  out.partition = std::move(comp.partition);
  t.frame = extent_of(out.composed);
  const auto sil = place_mask(chip.silhouette, t.placement.target, t.frame);
  t.bbox = *mask_bbox(sil);
  t.bbox_visible = mask_bbox(out.partition.target);

  auto graded = run_stage("grade", [&] {
    auto g = grade_scene(out.composed, out.partition, spec);
    const auto& m = g.metrics;
    if (!within(m.rss, spec.rss, spec.tolerance) || !within(m.rsc, spec.rsc, spec.tolerance) ||
        !m.k || !within(*m.k, spec.k, spec.tolerance)) {
      throw Error(ErrorCode::ValueError, "graded metrics miss the requested tolerance");
    }
    return g;
  });
  out.graded = std::move(graded.image);
  t.achieved_pre_sensor = graded.metrics;
  t.grading = graded.solution;
  t.grading.scale_target = scale;

  out.exported = run_stage("sensor", [&] {
    Rng rng(t.noise_seed);
    return quantize(apply_sensor(out.graded, cfg.sensor, rng), cfg.sensor.bits);
  });
  t.sensor_frame = extent_of(out.exported);
  t.bbox_sensor = to_sensor_grid(t.bbox, cfg.sensor.sampling_factor, t.sensor_frame);

  // Post-sensor metrics are measured on the stored integer image.
  try {
    const auto labels = downsample_labels(partition_labels(out.partition), cfg.sensor.sampling_factor);
    t.achieved_post_sensor = compute_all(Image(out.exported.cast<double>()),
                                         partition_from_labels(labels), spec.calibration());
  } catch (const Error& e) {
    t.post_sensor_note = e.what();
  }
  return out;
}

void write_scene(const fs::path& dir, SceneOutput& scene, ImageFormat format, bool debug) {
  GroundTruth& t = scene.truth;
  const std::string id = t.scene_id;
  const std::string image = id + (format == ImageFormat::Png ? ".png" : ".pgm");
  if (format == ImageFormat::Png) {
    io::write_png16(dir / image, scene.exported);
  } else {
    io::write_pgm(dir / image, scene.exported, t.sensor.bits);
  }
  const std::string partition = id + "_partition.png";
  io::write_png8(dir / partition, partition_labels(scene.partition));
  t.files = {{"image", image}, {"partition", partition}};
  if (debug) {
    io::write_f64(dir / (id + "_composed.f64"), scene.composed);
    io::write_f64(dir / (id + "_pre_sensor.f64"), scene.graded);
    const std::pair<const char*, const Mask*> masks[] = {{"C", &scene.partition.target},
                                                         {"F1", &scene.partition.ring},
                                                         {"F2", &scene.partition.rest},
                                                         {"occluded", &scene.partition.occluded},
                                                         {"occluder", &scene.partition.occluder}};
    json mask_files = json::object();
    for (const auto& [name, mask] : masks) {
      const std::string file = id + "_mask_" + name + ".png";
      io::write_mask(dir / file, *mask);
      mask_files[name] = file;
    }
    t.files["composed"] = id + "_composed.f64";
    t.files["pre_sensor"] = id + "_pre_sensor.f64";
    t.files["masks"] = mask_files;
  }
  t.files["truth"] = id + "_truth.json";
  io::write_json(dir / (id + "_truth.json"), to_json(t));
}

namespace {

json failure_entry(const std::string& stage, ErrorCode code, const std::string& message) {
  return {{"status", "failed"}, {"stage", stage}, {"error_code", std::string(to_string(code))},
          {"message", message}};
}

/// Runs `work(i)` for i in [0, n) on `jobs` threads.
template <typename F>
void parallel_for(int n, int jobs, F&& work) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) work(i);
    });
  }
}

json run_one(const SceneResources& res, const fs::path& out_dir, std::size_t index,
             const SceneRequest& request, bool debug) {
  json entry = {{"index", index}, {"scene_id", scene_name(index)}, {"seed", request.seed}};
  try {
    SceneOutput scene = generate_scene(res, request);
    scene.truth.scene_id = scene_name(index);
    run_stage("export", [&] {
      write_scene(out_dir, scene, res.config.format, debug);
      return 0;
    });
    entry["status"] = "ok";
    entry["image"] = scene.truth.files["image"];
    entry["truth"] = scene.truth.files["truth"];
    entry["partition"] = scene.truth.files["partition"];
  } catch (const SceneError& e) {
    entry.update(failure_entry(e.stage(), e.code(), e.detail()));
  }
  return entry;
}

BatchReport finish_manifest(std::vector<json> entries, json header) {
  BatchReport report;
  for (const auto& e : entries) (e["status"] == "ok" ? report.successes : report.failures)++;
  header["successes"] = report.successes;
  header["failures"] = report.failures;
  header["scenes"] = std::move(entries);
  header["generated_at"] = utc_timestamp();
  report.manifest = std::move(header);
  return report;
}

}  // namespace

BatchReport generate_batch(const SceneResources& res, const fs::path& out_dir, const BatchOptions& opts) {
  if (opts.count < 1) throw Error(ErrorCode::ConfigError, "count must be >= 1");
  fs::create_directories(out_dir);
  std::vector<json> entries(static_cast<std::size_t>(opts.count));
  parallel_for(opts.count, opts.jobs, [&](int i) {
    const SceneRequest request{derive_seed(opts.master_seed, static_cast<std::uint64_t>(i)), {}, {}};
    entries[i] = run_one(res, out_dir, static_cast<std::size_t>(i), request, opts.debug);
  });
  auto report = finish_manifest(std::move(entries), {{"master_seed", opts.master_seed},
                                                     {"count", opts.count},
                                                     {"scenario", to_json(res.config)}});
  io::write_json(out_dir / "manifest.json", report.manifest);
  return report;
}

double aspect_angle(const TrajectoryPoint& pt) {
  const double dx = pt.sensor_x - pt.target_x, dy = pt.sensor_y - pt.target_y;
  if (dx == 0 && dy == 0) throw Error(ErrorCode::ValueError, "sensor and target coincide");
  const double bearing = std::atan2(dx, dy) * 180.0 / std::numbers::pi;
  double a = std::fmod(bearing - pt.heading_deg, 360.0);
  if (a < 0) a += 360.0;
  return a >= 360.0 ? 0.0 : a;
}

std::size_t select_view(const TrajectoryPoint& pt, const std::vector<ThermalSignature>& db,
                        const std::string& vehicle_id) {
  const double aspect = aspect_angle(pt);
  std::optional<std::size_t> best;
  double best_dist = 0;
  for (std::size_t i = 0; i < db.size(); ++i) {
    if (db[i].vehicle_id != vehicle_id) continue;
    double d = std::fmod(std::abs(db[i].aspect_azimuth - aspect), 360.0);
    d = std::min(d, 360.0 - d);
    const bool closer = !best || d < best_dist - 1e-9;
    const bool tie_smaller = best && std::abs(d - best_dist) <= 1e-9 &&
                             db[i].aspect_azimuth < db[*best].aspect_azimuth;
    if (closer || tie_smaller) {
      best = i;
      best_dist = d;
    }
  }
  if (!best) throw Error(ErrorCode::NotFound, "no view of vehicle '" + vehicle_id + "'");
  return *best;
}

std::vector<SequenceFrame> plan_sequence(const SceneResources& res,
                                         const std::vector<TrajectoryPoint>& trajectory,
                                         std::uint64_t master_seed, RegionLambdas* lambdas) {
  if (trajectory.empty()) throw Error(ErrorCode::ConfigError, "trajectory is empty");
  const std::string vehicle = res.config.vehicle_id.value_or(res.signatures.front().vehicle_id);
  std::vector<SequenceFrame> frames;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    frames.push_back({select_view(trajectory[i], res.signatures, vehicle), aspect_angle(trajectory[i]),
                      derive_seed(master_seed, static_cast<std::uint64_t>(i))});
  }
  if (lambdas) {
    Rng rng(derive_seed(frames.front().seed, SceneStream::Thermal));
    *lambdas = assign_lambdas(res.config.operating, rng);
  }
  return frames;
}

BatchReport generate_sequence(const SceneResources& res, const std::vector<TrajectoryPoint>& trajectory,
                              const fs::path& out_dir, std::uint64_t master_seed, bool debug) {
  RegionLambdas lambdas;
  const auto frames = plan_sequence(res, trajectory, master_seed, &lambdas);
  fs::create_directories(out_dir);
  std::vector<json> entries;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const SceneRequest request{frames[i].seed, frames[i].signature_index, lambdas};
    json entry = run_one(res, out_dir, i, request, debug);
    entry["timestamp"] = trajectory[i].timestamp;
    entry["aspect_deg"] = frames[i].aspect;
    entry["view_azimuth"] = res.signatures[frames[i].signature_index].aspect_azimuth;
    entries.push_back(std::move(entry));
  }
  auto report = finish_manifest(std::move(entries), {{"master_seed", master_seed},
                                                     {"count", frames.size()},
                                                     {"lambdas", to_json(lambdas)},
                                                     {"scenario", to_json(res.config)}});
  io::write_json(out_dir / "manifest.json", report.manifest);
  return report;
}

}  // namespace irscene
