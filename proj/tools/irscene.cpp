// irscene: infrared scene dataset generator.
//
// Exit codes: 0 success, 1 runtime failure or verification mismatch,
// 2 configuration error, 3 infeasible quality request in single-scene mode.

#include <CLI11.hpp>

#include <iostream>
#include <limits>
#include <optional>

#include "irscene/io.hpp"
#include "irscene/metrics.hpp"
#include "irscene/pipeline.hpp"
#include "irscene/scenario.hpp"
#include "irscene/thermal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace irscene;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

bool is_infeasible(ErrorCode c) {
  switch (c) {
    case ErrorCode::InfeasibleContrast:
    case ErrorCode::FlatTarget:
    case ErrorCode::DegenerateBackground:
    case ErrorCode::OcclusionInfeasible:
    case ErrorCode::TargetTooSmall:
    case ErrorCode::EmptyRegion:
      return true;
    default:
      return false;
  }
}

bool is_config(ErrorCode c) {
  return c == ErrorCode::ConfigError || c == ErrorCode::IoError || c == ErrorCode::NotFound;
}

int report_error(const Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  if (is_config(e.code())) return kExitConfig;
  return kExitFailure;
}

struct GenerateArgs {
  std::string config, out;
  std::optional<int> count;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool debug = false;
};

int run_generate(const GenerateArgs& a) {
  const SceneResources res = load_resources(load_scenario(a.config));
  BatchOptions opts;
  opts.count = a.count.value_or(res.config.count);
  opts.master_seed = a.seed.value_or(res.config.master_seed);
  opts.jobs = a.jobs;
  opts.debug = a.debug;
  const BatchReport report = generate_batch(res, a.out, opts);

  std::cout << report.successes << " scene(s) written, " << report.failures << " failed -> "
            << (fs::path(a.out) / "manifest.json").string() << "\n";
  if (opts.count == 1 && report.failures == 1) {
    const json& f = report.manifest["scenes"][0];
    std::cerr << "scene failed at stage " << f["stage"].get<std::string>() << ": "
              << f["error_code"].get<std::string>() << ": " << f["message"].get<std::string>() << "\n";
    const std::string code = f["error_code"].get<std::string>();
    for (int i = 0; i <= static_cast<int>(ErrorCode::IoError); ++i) {
      const auto c = static_cast<ErrorCode>(i);
      if (code != to_string(c)) continue;
      if (is_infeasible(c)) return kExitInfeasible;
      if (is_config(c)) return kExitConfig;
    }
    return kExitFailure;
  }
  return 0;
}

int run_expand(const std::string& config, const std::string& out) {
  const ExpansionConfig cfg = load_expansion(config);
  const auto signatures = io::load_signature_db(cfg.signature_db);
  const auto variants = expand_database(signatures, cfg.configurations, cfg.variants, cfg.master_seed);
  fs::create_directories(out);
  json entries = json::array();
  for (const auto& v : variants) {
    const auto& sig = signatures[v.signature_index];
    const std::string name = v.vehicle_id + "_az" + std::to_string(static_cast<int>(v.aspect_azimuth)) +
                             "_" + v.configuration + "_v" + std::to_string(v.variant);
    const fs::path dir = fs::path(out) / name;
    fs::create_directories(dir);
    io::write_png16(dir / "chip.png", quantize(v.chip));
    io::write_mask(dir / "silhouette.png", sig.silhouette);
    io::write_region_labels(dir / "regions.png", sig.regions);
    const json meta = {{"vehicle_id", v.vehicle_id},
                       {"aspect_azimuth", v.aspect_azimuth},
                       {"configuration", v.configuration},
                       {"variant", v.variant},
                       {"seed", v.seed},
                       {"lambdas", to_json(v.lambdas)}};
    io::write_json(dir / "meta.json", meta);
    entries.push_back({{"dir", name}, {"seed", v.seed}, {"lambdas", to_json(v.lambdas)}});
  }
  io::write_json(fs::path(out) / "manifest.json",
                 {{"master_seed", cfg.master_seed}, {"variants", entries}});
  std::cout << variants.size() << " variant chip(s) written to " << out << "\n";
  return 0;
}

int run_sequence(const std::string& config, const std::string& trajectory, const std::string& out,
                 std::optional<std::uint64_t> seed, bool debug) {
  const SceneResources res = load_resources(load_scenario(config));
  const auto points = load_trajectory(trajectory);
  const BatchReport report =
      generate_sequence(res, points, out, seed.value_or(res.config.master_seed), debug);
  std::cout << report.successes << " frame(s) written, " << report.failures << " failed\n";
  return report.failures == 0 ? 0 : kExitFailure;
}

int run_metrics(const std::string& image_path, const std::string& truth_path, double tolerance) {
  const json truth = io::read_json(truth_path);
  const fs::path dir = fs::path(truth_path).parent_path();
  const LabelMap labels = io::read_labels(dir / truth.at("files").at("partition").get<std::string>());
  const Image img = io::read_image(image_path);
  const CalibrationNuK calib(truth.at("requested").at("nu_k").get<double>());

  std::string stage;
  LabelMap grid;
  if (img.rows() == labels.rows() && img.cols() == labels.cols()) {
    stage = "achieved_pre_sensor";
    grid = labels;
  } else {
    stage = "achieved_post_sensor";
    grid = downsample_labels(labels, truth.at("sensor").at("sampling_factor").get<int>());
    require_same_shape(img, grid, "image vs sampled partition");
  }
  const MetricSet<double> measured = compute_all(img, partition_from_labels(grid), calib);
  json out = {{"image", image_path}, {"compared_with", stage}, {"measured", to_json(measured)}};

  if (truth.at(stage).is_null()) {
    out["consistent"] = nullptr;
    std::cout << out.dump(2) << "\n";
    return kExitFailure;
  }
  const MetricSet<double> recorded = metric_set_from_json(truth.at(stage));
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  double worst = std::max({rel(measured.rss, recorded.rss), rel(measured.qd, recorded.qd),
                           rel(measured.rsc, recorded.rsc), std::abs(measured.rx - recorded.rx)});
  if (measured.k.has_value() != recorded.k.has_value()) {
    worst = std::numeric_limits<double>::infinity();
  } else if (measured.k) {
    worst = std::max(worst, std::abs(*measured.k - *recorded.k) / std::max(std::abs(*recorded.k), 1.0));
  }
  out["recorded"] = to_json(recorded);
  out["max_relative_difference"] = worst;
  out["tolerance"] = tolerance;
  out["consistent"] = worst <= tolerance;
  std::cout << out.dump(2) << "\n";
  return worst <= tolerance ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infrared scene dataset generator"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a batch of annotated scenes");
  generate->add_option("--config", gen.config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--count", gen.count, "Number of scenes (default: scenario count)");
  generate->add_option("--seed", gen.seed, "Master seed (default: scenario master_seed)");
  generate->add_option("--jobs", gen.jobs, "Worker threads")->check(CLI::PositiveNumber);
  generate->add_flag("--debug-intermediates", gen.debug,
                     "Also write exact pre-sensor rasters and zone masks");

  std::string expand_config, expand_out;
  auto* expand = app.add_subcommand("expand-db", "Write thermal variants of a signature database");
  expand->add_option("--config", expand_config, "Expansion JSON")->required()->check(CLI::ExistingFile);
  expand->add_option("--out", expand_out, "Output directory")->required();

  std::string seq_config, seq_traj, seq_out;
  std::optional<std::uint64_t> seq_seed;
  bool seq_debug = false;
  auto* sequence = app.add_subcommand("sequence", "Generate frames along a target trajectory");
  sequence->add_option("--config", seq_config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sequence->add_option("--trajectory", seq_traj, "Trajectory JSON")->required()->check(CLI::ExistingFile);
  sequence->add_option("--out", seq_out, "Output directory")->required();
  sequence->add_option("--seed", seq_seed, "Master seed (default: scenario master_seed)");
  sequence->add_flag("--debug-intermediates", seq_debug, "Also write exact pre-sensor rasters");

  std::string m_image, m_truth;
  double m_tol = 1e-9;
  auto* metrics = app.add_subcommand("metrics", "Re-measure a scene and compare with its truth file");
  metrics->add_option("--image", m_image, "Scene image (.png, .pgm or .f64)")->required()->check(CLI::ExistingFile);
  metrics->add_option("--truth", m_truth, "Truth JSON")->required()->check(CLI::ExistingFile);
  metrics->add_option("--tolerance", m_tol, "Relative tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*expand) return run_expand(expand_config, expand_out);
    if (*sequence) return run_sequence(seq_config, seq_traj, seq_out, seq_seed, seq_debug);
    if (*metrics) return run_metrics(m_image, m_truth, m_tol);
  } catch (const SceneError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_infeasible(e.code()) ? kExitInfeasible : kExitFailure;
  } catch (const Error& e) {
    return report_error(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
