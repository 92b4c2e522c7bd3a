#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "demo_assets.hpp"
#include "irscene/pipeline.hpp"
#include "irscene/raster.hpp"
#include "irscene/seeding.hpp"

namespace fixture {

using namespace irscene;

inline Image random_image(Eigen::Index rows, Eigen::Index cols, Rng& rng, double mean = 100,
                          double sd = 10) {
  std::normal_distribution<double> g(mean, sd);
  Image img(rows, cols);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = g(rng);
  return img;
}

inline Mask random_mask(Eigen::Index rows, Eigen::Index cols, Rng& rng, double p = 0.3) {
  std::bernoulli_distribution b(p);
  Mask m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = b(rng);
  return m;
}

/// Union of a few random ellipses inside a w x h box; never empty.
inline Mask random_blob(int w, int h, Rng& rng) {
  Mask m = Mask::Constant(h, w, false);
  std::uniform_real_distribution<double> u(0, 1);
  const int lobes = 2 + static_cast<int>(u(rng) * 3);
  for (int l = 0; l < lobes; ++l) {
    const double cx = w * (0.3 + 0.4 * u(rng)), cy = h * (0.3 + 0.4 * u(rng));
    const double rx = w * (0.15 + 0.3 * u(rng)), ry = h * (0.15 + 0.3 * u(rng));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1) m(y, x) = true;
      }
  }
  m(h / 2, w / 2) = true;
  return m;
}

inline Mask rect_mask(int w, int h) { return Mask::Constant(h, w, true); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline QualitySpec spec(double rss, double rsc, double k, double nu_k = 1.0) {
  QualitySpec q;
  q.rss = rss;
  q.rsc = rsc;
  q.k = k;
  q.nu_k = nu_k;
  return q;
}

/// In-memory scenario built from the demo generators; no files involved.
inline SceneResources demo_resources(int width, int height, const QualitySpec& quality,
                                     const SensorConfig& sensor, bool with_occluder,
                                     std::uint64_t seed = 1) {
  SceneResources res;
  res.config.quality = quality;
  res.config.sensor = sensor;
  res.config.operating = preset_configuration("engine_running");
  res.config.placement.kind = PlacementPolicy::Kind::Uniform;
  res.config.placement.margin = 4;
  res.background = demo::make_background(width, height, derive_seed(seed, 1));
  std::uint64_t k = 10;
  for (const char* v : {"tracked_a", "tracked_b"}) {
    for (int aspect : {0, 90, 180, 270}) {
      res.signatures.push_back(demo::make_vehicle(v, aspect, derive_seed(seed, ++k)));
    }
  }
  if (with_occluder) res.occluders.push_back(demo::make_occluder("bush", 36, derive_seed(seed, 99)));
  return res;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("irscene_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixture
