#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "irscene/compositing.hpp"
#include "irscene/thermal.hpp"

namespace irscene::demo {

/// Smooth random clutter around `mean` GL with roughly `stddev` GL spread.
Image make_background(int width, int height, std::uint64_t seed, double mean = 8000,
                      double stddev = 150);

/// Box-shaped tracked vehicle seen from `aspect` degrees (0 frontal, 90 right
/// flank, 180 rear, 270 left flank). `size` scales the chip.
ThermalSignature make_vehicle(const std::string& vehicle_id, double aspect, std::uint64_t seed,
                              double size = 1.0);

/// Textured, roughly round occluder such as a bush.
Occluder make_occluder(const std::string& name, int diameter, std::uint64_t seed);

struct DemoLayout {
  std::filesystem::path root;
  std::filesystem::path scenario;
  std::filesystem::path expansion;
  std::filesystem::path trajectory;
};

/// Writes background, signature database, occluder library and example
/// config files under `root`.
DemoLayout write_demo_assets(const std::filesystem::path& root, int width = 640, int height = 512,
                             std::uint64_t seed = 1);

}  // namespace irscene::demo
