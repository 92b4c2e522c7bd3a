#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irscene/raster.hpp"
#include "irscene/seeding.hpp"

namespace irscene {

/// Vehicle sub-parts with independent thermal behaviour. Values are the
/// palette indices of the region label rasters.
enum class Region : std::uint8_t {
  None = 0,
  Engine = 1,
  Body = 2,
  Exhaust = 3,
  Windows = 4,
  RunningGear = 5,
};

inline constexpr std::array<Region, 5> kVehicleRegions = {
    Region::Engine, Region::Body, Region::Exhaust, Region::Windows, Region::RunningGear};

std::string_view to_string(Region r);
Region region_from_string(std::string_view name);

enum class ThermalMode { Ambient, Intermediate, Operating };

std::string_view to_string(ThermalMode m);
ThermalMode thermal_mode_from_string(std::string_view name);

/// Gaussian law of the blend coefficient for one mode, restricted to the
/// mode's interval. The ambient and operating laws are half-Gaussians
/// anchored at 0 and 1; sigma puts 3 sigma at the interval width.
struct LambdaLaw {
  ThermalMode mode;
  double center;
  double sigma;
  double lower;
  double upper;
  bool open_interval;  // the intermediate interval excludes its bounds

  bool contains(double lambda) const {
    return open_interval ? (lambda > lower && lambda < upper)
                         : (lambda >= lower && lambda <= upper);
  }
};

const LambdaLaw& law_for(ThermalMode mode);

struct LambdaDraw {
  double value;
  int attempts;  // proposals consumed, >= 1
};

/// Rejection sampler: proposes from the (folded, at the ends) Gaussian and
/// resamples on an interval miss.
LambdaDraw draw_lambda(ThermalMode mode, Rng& rng);

inline double sample_lambda(ThermalMode mode, Rng& rng) { return draw_lambda(mode, rng).value; }

using RegionLambdas = std::map<Region, double>;

struct OperatingConfiguration {
  std::string name;
  std::map<Region, ThermalMode> modes;

  void validate() const;
};

/// Named configurations: "ambient", "engine_running" (stationary with engine
/// and exhaust hot), "operating", "recently_stopped" and "moving".
std::vector<OperatingConfiguration> preset_configurations();
OperatingConfiguration preset_configuration(std::string_view name);

RegionLambdas assign_lambdas(const OperatingConfiguration& config, Rng& rng);

struct ThermalSignature {
  Image ta;  // ambient-temperature chip
  Image tf;  // operating-temperature chip
  LabelMap regions;
  Mask silhouette;
  double aspect_azimuth = 0;  // degrees, 0 = frontal, clockwise
  std::string vehicle_id;

  Extent extent() const { return extent_of(ta); }
  void validate() const;
};

/// Per-region convex blend (1 - lambda_R) TA + lambda_R TF. Pixels outside
/// the silhouette are zero.
Image synthesize_signature(const ThermalSignature& sig, const RegionLambdas& lambdas);

struct SignatureVariant {
  std::size_t signature_index;
  std::string vehicle_id;
  double aspect_azimuth;
  std::string configuration;
  int variant;
  std::uint64_t seed;
  RegionLambdas lambdas;
  Image chip;
};

/// n_variants blends per (signature, configuration) pair. Each variant draws
/// from its own child stream of `master_seed`, so the result does not depend
/// on generation order.
std::vector<SignatureVariant> expand_database(const std::vector<ThermalSignature>& signatures,
                                              const std::vector<OperatingConfiguration>& configs,
                                              int n_variants, std::uint64_t master_seed);

}  // namespace irscene
