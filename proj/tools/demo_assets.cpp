#include "demo_assets.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "irscene/io.hpp"
#include "irscene/sensor.hpp"

namespace irscene::demo {

namespace fs = std::filesystem;
using nlohmann::json;

Image make_background(int width, int height, std::uint64_t seed, double mean, double stddev) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Image noise(height, width);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = gauss(rng);
  Image field = apply_mtf(noise, 3.0);
  field = (field - field.mean()) / std::sqrt((field - field.mean()).square().mean());

  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double ramp = 0.8 * std::sin(2 * std::numbers::pi * (0.6 * y / height + 0.2 * x / width));
      img(y, x) = mean + stddev * (0.8 * field(y, x) + 0.6 * ramp);
    }
  }
  return img.round();
}

namespace {

void paint_rect(LabelMap& m, int x0, int y0, int w, int h, Region r) {
  for (int y = std::max(0, y0); y < std::min<int>(m.rows(), y0 + h); ++y) {
    for (int x = std::max(0, x0); x < std::min<int>(m.cols(), x0 + w); ++x) {
      m(y, x) = static_cast<std::uint8_t>(r);
    }
  }
}

}  // namespace

ThermalSignature make_vehicle(const std::string& vehicle_id, double aspect, std::uint64_t seed,
                              double size) {
  const double a = std::fmod(std::fmod(aspect, 360.0) + 360.0, 360.0);
  const bool flank = (a > 45 && a < 135) || (a > 225 && a < 315);
  const int w = static_cast<int>(std::lround((flank ? 60 : 34) * size));
  const int h = static_cast<int>(std::lround(26 * size));
  auto sx = [&](double f) { return static_cast<int>(std::lround(f * w)); };
  auto sy = [&](double f) { return static_cast<int>(std::lround(f * h)); };

  LabelMap labels = LabelMap::Zero(h, w);
  paint_rect(labels, 0, sy(0.35), w, sy(0.45), Region::Body);                 // hull
  paint_rect(labels, sx(0.3), sy(0.08), sx(0.4), sy(0.3), Region::Body);    // turret
  paint_rect(labels, 0, sy(0.75), w, h - sy(0.75), Region::RunningGear);
  if (flank) {
    const bool rear_left = a > 225;  // left flank shows the rear on the left
    const int ex = rear_left ? 0 : w - sx(0.25);
    paint_rect(labels, ex, sy(0.4), sx(0.25), sy(0.3), Region::Engine);
    paint_rect(labels, rear_left ? sx(0.02) : w - sx(0.1), sy(0.3), sx(0.08), sy(0.1), Region::Exhaust);
    paint_rect(labels, rear_left ? sx(0.55) : sx(0.35), sy(0.12), sx(0.1), sy(0.1), Region::Windows);
  } else if (a >= 135 && a <= 225) {
    paint_rect(labels, sx(0.15), sy(0.4), sx(0.7), sy(0.3), Region::Engine);
    paint_rect(labels, sx(0.7), sy(0.3), sx(0.15), sy(0.1), Region::Exhaust);
  } else {
    paint_rect(labels, sx(0.35), sy(0.12), sx(0.3), sy(0.12), Region::Windows);
  }

  Rng rng(seed);
  std::normal_distribution<double> grain(0.0, 1.0);
  ThermalSignature sig;
  sig.vehicle_id = vehicle_id;
  sig.aspect_azimuth = aspect;
  sig.regions = labels;
  sig.silhouette = labels != 0;
  sig.ta = Image::Zero(h, w);
  sig.tf = Image::Zero(h, w);
  // Hot-state increments per region label, in GL.
  const double heat[6] = {0, 900, 120, 1500, 60, 450};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto l = labels(y, x);
      if (l == 0) continue;
      const double base = 7950 + 25 * std::sin(0.7 * x) + 15 * std::cos(0.9 * y) + 12 * grain(rng);
      sig.ta(y, x) = std::round(base);
      sig.tf(y, x) = std::round(base + heat[l] * (0.85 + 0.15 * std::sin(0.5 * x + 0.3 * y)) +
                                20 * grain(rng));
    }
  }
  return sig;
}

Occluder make_occluder(const std::string& name, int diameter, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Occluder occ;
  occ.name = name;
  occ.chip = Image::Zero(diameter, diameter);
  occ.silhouette = Mask::Constant(diameter, diameter, false);
  const double c = (diameter - 1) / 2.0;
  for (int y = 0; y < diameter; ++y) {
    for (int x = 0; x < diameter; ++x) {
      const double r = std::hypot(x - c, y - c);
      if (r > diameter / 2.0) continue;
      occ.silhouette(y, x) = true;
      occ.chip(y, x) = std::round(7700 + 60 * std::sin(0.8 * x) * std::cos(0.6 * y) + 25 * gauss(rng));
    }
  }
  return occ;
}

DemoLayout write_demo_assets(const fs::path& root, int width, int height, std::uint64_t seed) {
  DemoLayout out{root, root / "scenario.json", root / "expand.json", root / "trajectory.json"};
  fs::create_directories(root);
  io::write_png16(root / "background.png", quantize(make_background(width, height, seed)));

  const fs::path db = root / "signatures";
  std::uint64_t k = 0;
  for (const char* vehicle : {"tracked_a", "tracked_b"}) {
    for (int aspect : {0, 90, 180, 270}) {
      const double size = std::string(vehicle) == "tracked_a" ? 1.0 : 0.8;
      auto sig = make_vehicle(vehicle, aspect, derive_seed(seed, ++k), size);
      io::save_signature(db / (std::string(vehicle) + "_az" + std::to_string(aspect)), sig);
    }
  }
  io::save_occluder(root / "occluders" / "bush", make_occluder("bush", 40, derive_seed(seed, 100)));
  io::save_occluder(root / "occluders" / "rock", make_occluder("rock", 30, derive_seed(seed, 101)));

  io::write_json(out.scenario, {{"background", "background.png"},
                                {"signature_db", "signatures"},
                                {"occluder", "occluders"},
                                {"vehicle_id", "tracked_a"},
                                {"operating_configuration", "engine_running"},
                                {"quality", {{"rss", 3.0}, {"rsc", 1.5}, {"k", -0.4}, {"qd", 3000.0},
                                             {"rx", 0.25}, {"nu_k", 10.0}}},
                                {"sensor", {{"mtf_sigma", 1.0}, {"sampling_factor", 2},
                                            {"noise_sigma", 2.0}, {"bits", 16}}},
                                {"ring_width", 5},
                                {"placement", {{"policy", "uniform"}, {"margin", 8}}},
                                {"count", 20},
                                {"master_seed", 42}});
  io::write_json(out.expansion, {{"signature_db", "signatures"},
                                 {"configurations", {"ambient", "engine_running", "moving"}},
                                 {"variants", 3},
                                 {"master_seed", 7}});
  json points = json::array();
  for (int i = 0; i < 8; ++i) {
    const double angle = 2 * std::numbers::pi * i / 8;
    points.push_back({{"t", i * 0.5},
                      {"target", {{"x", 500 * std::sin(angle)}, {"y", 500 * std::cos(angle)}}},
                      {"heading_deg", 90.0},
                      {"sensor", {{"x", 0.0}, {"y", 0.0}}}});
  }
  io::write_json(out.trajectory, {{"points", points}});
  return out;
}

}  // namespace irscene::demo
