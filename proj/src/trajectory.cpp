#include "irscene/io.hpp"
#include "irscene/pipeline.hpp"

namespace irscene {

using nlohmann::json;

std::vector<TrajectoryPoint> parse_trajectory(const json& doc) {
  try {
    const json& points = doc.is_array() ? doc : doc.at("points");
    std::vector<TrajectoryPoint> out;
    for (const auto& p : points) {
      TrajectoryPoint pt;
      pt.target_x = p.at("target").at("x").get<double>();
      pt.target_y = p.at("target").at("y").get<double>();
      pt.heading_deg = p.at("heading_deg").get<double>();
      pt.sensor_x = p.at("sensor").at("x").get<double>();
      pt.sensor_y = p.at("sensor").at("y").get<double>();
      pt.timestamp = p.value("t", static_cast<double>(out.size()));
      if (pt.sensor_x == pt.target_x && pt.sensor_y == pt.target_y) {
        throw Error(ErrorCode::ConfigError, "trajectory point " + std::to_string(out.size()) +
                                                " puts the sensor on the target");
      }
      out.push_back(pt);
    }
    if (out.empty()) throw Error(ErrorCode::ConfigError, "trajectory has no points");
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("trajectory: ") + e.what());
  }
}

std::vector<TrajectoryPoint> load_trajectory(const fs::path& path) {
  return parse_trajectory(io::read_json(path));
}

}  // namespace irscene
