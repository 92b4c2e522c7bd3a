#include "irscene/thermal.hpp"

#include <cmath>
#include <random>

namespace irscene {

std::string_view to_string(Region r) {
  switch (r) {
    case Region::None: return "none";
    case Region::Engine: return "engine";
    case Region::Body: return "body";
    case Region::Exhaust: return "exhaust";
    case Region::Windows: return "windows";
    case Region::RunningGear: return "running_gear";
  }
  return "none";
}

Region region_from_string(std::string_view name) {
  for (Region r : kVehicleRegions) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::ConfigError, "unknown region '" + std::string(name) + "'");
}

std::string_view to_string(ThermalMode m) {
  switch (m) {
    case ThermalMode::Ambient: return "TA";
    case ThermalMode::Intermediate: return "TI";
    case ThermalMode::Operating: return "TF";
  }
  return "TA";
}

ThermalMode thermal_mode_from_string(std::string_view name) {
  if (name == "TA") return ThermalMode::Ambient;
  if (name == "TI") return ThermalMode::Intermediate;
  if (name == "TF") return ThermalMode::Operating;
  throw Error(ErrorCode::ConfigError, "unknown thermal mode '" + std::string(name) + "'");
}

const LambdaLaw& law_for(ThermalMode mode) {
  static const LambdaLaw ambient{ThermalMode::Ambient, 0.0, 0.1 / 3.0, 0.0, 0.1, false};
  static const LambdaLaw intermediate{ThermalMode::Intermediate, 0.5, 0.4 / 3.0, 0.1, 0.9, true};
  static const LambdaLaw operating{ThermalMode::Operating, 1.0, 0.1 / 3.0, 0.9, 1.0, false};
  switch (mode) {
    case ThermalMode::Ambient: return ambient;
    case ThermalMode::Intermediate: return intermediate;
    case ThermalMode::Operating: return operating;
  }
  return ambient;
}

LambdaDraw draw_lambda(ThermalMode mode, Rng& rng) {
  const LambdaLaw& law = law_for(mode);
  std::normal_distribution<double> gauss(0.0, law.sigma);
  for (int attempts = 1;; ++attempts) {
    double x;
    switch (mode) {
      case ThermalMode::Ambient: x = std::abs(gauss(rng)); break;
      case ThermalMode::Operating: x = 1.0 - std::abs(gauss(rng)); break;
      default: x = law.center + gauss(rng); break;
    }
    if (law.contains(x)) return {x, attempts};
  }
}

void OperatingConfiguration::validate() const {
  for (Region r : kVehicleRegions) {
    if (!modes.contains(r)) {
      throw Error(ErrorCode::ConfigError,
                  "configuration '" + name + "' leaves region " + std::string(to_string(r)) +
                      " unassigned");
    }
  }
}

std::vector<OperatingConfiguration> preset_configurations() {
  using enum ThermalMode;
  auto make = [](std::string name, ThermalMode engine, ThermalMode body, ThermalMode exhaust,
                 ThermalMode windows, ThermalMode gear) {
    return OperatingConfiguration{std::move(name),
                                  {{Region::Engine, engine},
                                   {Region::Body, body},
                                   {Region::Exhaust, exhaust},
                                   {Region::Windows, windows},
                                   {Region::RunningGear, gear}}};
  };
  return {
      make("ambient", Ambient, Ambient, Ambient, Ambient, Ambient),
      make("engine_running", Operating, Ambient, Operating, Ambient, Ambient),
      make("operating", Operating, Operating, Operating, Operating, Operating),
      make("recently_stopped", Intermediate, Ambient, Intermediate, Ambient, Intermediate),
      make("moving", Operating, Intermediate, Operating, Ambient, Operating),
  };
}

OperatingConfiguration preset_configuration(std::string_view name) {
  for (auto& c : preset_configurations()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::ConfigError, "unknown operating configuration '" + std::string(name) + "'");
}

RegionLambdas assign_lambdas(const OperatingConfiguration& config, Rng& rng) {
  config.validate();
  RegionLambdas out;
  // Fixed region order keeps the draw sequence reproducible.
  for (Region r : kVehicleRegions) out[r] = sample_lambda(config.modes.at(r), rng);
  return out;
}

void ThermalSignature::validate() const {
  validate_image(ta, "ta chip");
  validate_image(tf, "tf chip");
  require_same_shape(ta, tf, "signature ta/tf");
  require_same_shape(ta, regions, "signature regions");
  require_same_shape(ta, silhouette, "signature silhouette");
  for (Eigen::Index y = 0; y < regions.rows(); ++y) {
    for (Eigen::Index x = 0; x < regions.cols(); ++x) {
      const std::uint8_t label = regions(y, x);
      if (label > static_cast<std::uint8_t>(Region::RunningGear)) {
        throw Error(ErrorCode::ValueError, "region label " + std::to_string(label) + " out of range");
      }
      if (silhouette(y, x) != (label != 0)) {
        throw Error(ErrorCode::ValueError,
                    "region labels disagree with the silhouette for '" + vehicle_id + "'");
      }
    }
  }
}

Image synthesize_signature(const ThermalSignature& sig, const RegionLambdas& lambdas) {
  require_same_shape(sig.ta, sig.tf, "synthesize_signature");
  require_same_shape(sig.ta, sig.regions, "synthesize_signature");

  std::array<double, 6> weight{};
  std::array<bool, 6> present{};
  for (Eigen::Index i = 0; i < sig.regions.size(); ++i) present[sig.regions.data()[i]] = true;
  for (Region r : kVehicleRegions) {
    const auto idx = static_cast<std::size_t>(r);
    if (!present[idx]) continue;
    auto it = lambdas.find(r);
    if (it == lambdas.end()) {
      throw Error(ErrorCode::ConfigError, "no lambda for region " + std::string(to_string(r)));
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) {
      throw Error(ErrorCode::ValueError, "lambda for " + std::string(to_string(r)) + " outside [0,1]");
    }
    weight[idx] = it->second;
  }

  Image out = Image::Zero(sig.ta.rows(), sig.ta.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const std::uint8_t label = sig.regions.data()[i];
    if (label == 0) continue;
    // std::lerp is exact at both ends and never leaves [ta, tf].
    out.data()[i] = std::lerp(sig.ta.data()[i], sig.tf.data()[i], weight[label]);
  }
  return out;
}

std::vector<SignatureVariant> expand_database(const std::vector<ThermalSignature>& signatures,
                                              const std::vector<OperatingConfiguration>& configs,
                                              int n_variants, std::uint64_t master_seed) {
  if (n_variants < 1) throw Error(ErrorCode::ConfigError, "n_variants must be >= 1");
  std::vector<SignatureVariant> out;
  out.reserve(signatures.size() * configs.size() * static_cast<std::size_t>(n_variants));
  for (std::size_t s = 0; s < signatures.size(); ++s) {
    const auto& sig = signatures[s];
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const std::uint64_t pair_seed = derive_seed(derive_seed(master_seed, s), c);
      for (int v = 0; v < n_variants; ++v) {
        const std::uint64_t seed = derive_seed(pair_seed, static_cast<std::uint64_t>(v));
        Rng rng(seed);
        SignatureVariant var{s, sig.vehicle_id, sig.aspect_azimuth, configs[c].name, v, seed, {}, {}};
        var.lambdas = assign_lambdas(configs[c], rng);
        var.chip = synthesize_signature(sig, var.lambdas);
        out.push_back(std::move(var));
      }
    }
  }
  return out;
}

}  // namespace irscene
