#include "irscene/scenario.hpp"

#include "irscene/io.hpp"

namespace irscene {

using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename F>
auto config_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

QualitySpec parse_quality(const json& j) {
  return config_guard("quality", [&] {
    QualitySpec q;
    q.rss = j.at("rss").get<double>();
    q.rsc = j.at("rsc").get<double>();
    q.k = j.at("k").get<double>();
    if (j.contains("qd") && !j.at("qd").is_null()) q.qd = j.at("qd").get<double>();
    q.rx = j.value("rx", 0.0);
    q.nu_k = j.value("nu_k", 1.0);
    q.tolerance = j.value("tolerance", 1e-9);
    q.validate();
    return q;
  });
}

json to_json(const QualitySpec& q) {
  return {{"rss", q.rss},
          {"rsc", q.rsc},
          {"k", q.k},
          {"qd", q.qd ? json(*q.qd) : json(nullptr)},
          {"rx", q.rx},
          {"nu_k", q.nu_k},
          {"tolerance", q.tolerance}};
}

SensorConfig parse_sensor(const json& j) {
  return config_guard("sensor", [&] {
    SensorConfig s;
    s.mtf_sigma = j.value("mtf_sigma", 0.0);
    s.sampling_factor = j.value("sampling_factor", 1);
    s.noise_sigma = j.value("noise_sigma", 0.0);
    s.bits = j.value("bits", 16);
    s.validate();
    return s;
  });
}

json to_json(const SensorConfig& s) {
  return {{"mtf_sigma", s.mtf_sigma},
          {"sampling_factor", s.sampling_factor},
          {"noise_sigma", s.noise_sigma},
          {"bits", s.bits}};
}

OperatingConfiguration parse_operating_configuration(const json& j) {
  return config_guard("operating_configuration", [&] {
    if (j.is_string()) return preset_configuration(j.get<std::string>());
    OperatingConfiguration c;
    c.name = j.at("name").get<std::string>();
    for (const auto& [region, mode] : j.at("modes").items()) {
      c.modes[region_from_string(region)] = thermal_mode_from_string(mode.get<std::string>());
    }
    c.validate();
    return c;
  });
}

json to_json(const OperatingConfiguration& c) {
  json modes = json::object();
  for (const auto& [r, m] : c.modes) modes[std::string(to_string(r))] = std::string(to_string(m));
  return {{"name", c.name}, {"modes", modes}};
}

json to_json(const RegionLambdas& lambdas) {
  json j = json::object();
  for (const auto& [r, l] : lambdas) j[std::string(to_string(r))] = l;
  return j;
}

RegionLambdas lambdas_from_json(const json& j) {
  return config_guard("lambdas", [&] {
    RegionLambdas out;
    for (const auto& [region, value] : j.items()) out[region_from_string(region)] = value.get<double>();
    return out;
  });
}

void ScenarioConfig::validate() const {
  quality.validate();
  sensor.validate();
  operating.validate();
  if (ring_width < 1) throw Error(ErrorCode::ConfigError, "ring_width must be >= 1");
  if (!(occlusion_epsilon > 0)) throw Error(ErrorCode::ConfigError, "occlusion_epsilon must be > 0");
  if (count < 1) throw Error(ErrorCode::ConfigError, "count must be >= 1");
  if (placement.margin < 0) throw Error(ErrorCode::ConfigError, "placement margin must be >= 0");
  auto must_exist = [](const fs::path& p, const char* what) {
    if (!fs::exists(p)) {
      throw Error(ErrorCode::ConfigError, std::string(what) + " not found: " + p.string());
    }
  };
  must_exist(background, "background");
  must_exist(signature_db, "signature database");
  if (occluder) must_exist(*occluder, "occluder");
}

ScenarioConfig parse_scenario(const json& doc, const fs::path& base_dir) {
  ScenarioConfig cfg = config_guard("scenario", [&] {
    ScenarioConfig c;
    c.background = resolve(base_dir, doc.at("background").get<std::string>());
    c.signature_db = resolve(base_dir, doc.at("signature_db").get<std::string>());
    if (doc.contains("occluder") && !doc.at("occluder").is_null()) {
      c.occluder = resolve(base_dir, doc.at("occluder").get<std::string>());
    }
    if (doc.contains("vehicle_id") && !doc.at("vehicle_id").is_null()) {
      c.vehicle_id = doc.at("vehicle_id").get<std::string>();
    }
    if (doc.contains("aspect_azimuth") && !doc.at("aspect_azimuth").is_null()) {
      c.aspect_azimuth = doc.at("aspect_azimuth").get<double>();
    }
    c.operating = parse_operating_configuration(doc.value("operating_configuration", json("ambient")));
    c.quality = parse_quality(doc.at("quality"));
    c.sensor = parse_sensor(doc.value("sensor", json::object()));
    c.ring_width = doc.value("ring_width", kDefaultRingWidth);
    c.occlusion_epsilon = doc.value("occlusion_epsilon", 0.01);
    const json placement = doc.value("placement", json{{"policy", "uniform"}});
    const std::string policy = placement.value("policy", "uniform");
    if (policy == "fixed") {
      c.placement.kind = PlacementPolicy::Kind::Fixed;
      c.placement.fixed = {placement.at("x").get<int>(), placement.at("y").get<int>()};
    } else if (policy == "uniform") {
      c.placement.kind = PlacementPolicy::Kind::Uniform;
      c.placement.margin = placement.value("margin", 0);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown placement policy '" + policy + "'");
    }
    c.count = doc.value("count", 1);
    c.master_seed = doc.value("master_seed", std::uint64_t{0});
    const std::string format = doc.value("image_format", "png");
    if (format == "png") {
      c.format = ImageFormat::Png;
    } else if (format == "pgm") {
      c.format = ImageFormat::Pgm;
    } else {
      throw Error(ErrorCode::ConfigError, "image_format must be png or pgm");
    }
    return c;
  });
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) {
  const json doc = io::read_json(path);
  return parse_scenario(doc, path.parent_path());
}

json to_json(const ScenarioConfig& cfg) {
  json j;
  j["background"] = cfg.background.string();
  j["signature_db"] = cfg.signature_db.string();
  j["occluder"] = cfg.occluder ? json(cfg.occluder->string()) : json(nullptr);
  j["vehicle_id"] = cfg.vehicle_id ? json(*cfg.vehicle_id) : json(nullptr);
  j["aspect_azimuth"] = cfg.aspect_azimuth ? json(*cfg.aspect_azimuth) : json(nullptr);
  j["operating_configuration"] = to_json(cfg.operating);
  j["quality"] = to_json(cfg.quality);
  j["sensor"] = to_json(cfg.sensor);
  j["ring_width"] = cfg.ring_width;
  j["occlusion_epsilon"] = cfg.occlusion_epsilon;
  if (cfg.placement.kind == PlacementPolicy::Kind::Fixed) {
    j["placement"] = {{"policy", "fixed"}, {"x", cfg.placement.fixed.x}, {"y", cfg.placement.fixed.y}};
  } else {
    j["placement"] = {{"policy", "uniform"}, {"margin", cfg.placement.margin}};
  }
  j["count"] = cfg.count;
  j["master_seed"] = cfg.master_seed;
  j["image_format"] = cfg.format == ImageFormat::Png ? "png" : "pgm";
  return j;
}

ExpansionConfig load_expansion(const fs::path& path) {
  const json doc = io::read_json(path);
  return config_guard("expand-db config", [&] {
    ExpansionConfig c;
    c.signature_db = resolve(path.parent_path(), doc.at("signature_db").get<std::string>());
    if (doc.contains("configurations")) {
      for (const auto& entry : doc.at("configurations")) {
        c.configurations.push_back(parse_operating_configuration(entry));
      }
    } else {
      c.configurations = preset_configurations();
    }
    c.variants = doc.value("variants", 1);
    c.master_seed = doc.value("master_seed", std::uint64_t{0});
    if (c.variants < 1) throw Error(ErrorCode::ConfigError, "variants must be >= 1");
    if (c.configurations.empty()) throw Error(ErrorCode::ConfigError, "no configurations");
    if (!fs::exists(c.signature_db)) {
      throw Error(ErrorCode::ConfigError, "signature database not found: " + c.signature_db.string());
    }
    return c;
  });
}

}  // namespace irscene
