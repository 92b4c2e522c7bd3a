#pragma once

#include <cmath>
#include <optional>

#include <json.hpp>

#include "irscene/partition.hpp"
#include "irscene/raster.hpp"

namespace irscene {

/// Gray levels per kelvin.
class CalibrationNuK {
 public:
  explicit CalibrationNuK(double gl_per_kelvin) : value_(gl_per_kelvin) {
    if (!(std::isfinite(value_) && value_ > 0)) {
      throw Error(ErrorCode::ValueError, "nu_k must be positive and finite");
    }
  }
  double value() const { return value_; }

 private:
  double value_;
};

/// Image-quality metrics of one scene. `k` is empty when RSS is zero, where
/// the internal contrast is 0/0.
template <typename Scalar = double>
struct MetricSet {
  Scalar rss = 0;  // K
  Scalar qd = 0;   // K.px
  Scalar rsc = 0;
  Scalar rx = 0;
  std::optional<Scalar> k;
};

/// Local contrast in kelvin: sqrt((mu_C - mu_F1)^2 + sigma_C^2) / nu_k.
template <typename Scalar>
Scalar compute_rss(const RegionStats<Scalar>& target, const RegionStats<Scalar>& ring,
                   const CalibrationNuK& calib) {
  return std::hypot(target.mean - ring.mean, target.stddev) / static_cast<Scalar>(calib.value());
}

template <typename Scalar>
Scalar compute_qd(Scalar rss, Eigen::Index target_area) {
  if (target_area < 1) throw Error(ErrorCode::EmptyRegion, "Q_D needs a non-empty target");
  return rss * static_cast<Scalar>(target_area);
}

/// Signal-to-clutter ratio against the global background F = F1 u F2.
template <typename Scalar>
Scalar compute_rsc(Scalar rss, const RegionStats<Scalar>& background, const CalibrationNuK& calib) {
  if (!(background.stddev > 0)) {
    throw Error(ErrorCode::DegenerateBackground, "background standard deviation is zero");
  }
  return static_cast<Scalar>(calib.value()) * rss / background.stddev;
}

inline double compute_rx(Eigen::Index occluded_area, Eigen::Index total_target_area) {
  if (total_target_area < 1) throw Error(ErrorCode::EmptyRegion, "target silhouette is empty");
  if (occluded_area < 0 || occluded_area > total_target_area) {
    throw Error(ErrorCode::ValueError, "occluded area outside [0, total target area]");
  }
  return static_cast<double>(occluded_area) / static_cast<double>(total_target_area);
}

/// Internal contrast (mu_F1 - mu_C) / (nu_k RSS); empty when RSS is zero.
template <typename Scalar>
std::optional<Scalar> compute_k(const RegionStats<Scalar>& target, const RegionStats<Scalar>& ring,
                                Scalar rss, const CalibrationNuK& calib) {
  if (!(rss > 0)) return std::nullopt;
  return (ring.mean - target.mean) / (static_cast<Scalar>(calib.value()) * rss);
}

/// All five metrics from one set of region statistics. Contrast terms use the
/// visible target; R_x uses the full silhouette.
template <typename Derived>
MetricSet<typename Derived::Scalar> compute_all(const Eigen::DenseBase<Derived>& scene,
                                                const ScenePartition& part,
                                                const CalibrationNuK& calib) {
  using Scalar = typename Derived::Scalar;
  MetricSet<Scalar> m;
  const Eigen::Index visible = part.target.count();
  const Eigen::Index occluded = part.occluded.count();
  m.rx = static_cast<Scalar>(compute_rx(occluded, visible + occluded));

  // Statistics are taken about the F1 level: the subtraction is exact for
  // nearby samples and the small centred means keep the mean difference
  // precise when it is tiny next to the gray levels.
  const Scalar ref = region_stats(scene, part.ring).mean;
  const Raster<Scalar> centred = scene.derived().array() - ref;
  const auto c = region_stats(centred, part.target);
  const auto f1 = region_stats(centred, part.ring);
  const auto f = region_stats(centred, part.background());
  m.rss = compute_rss(c, f1, calib);
  m.qd = compute_qd(m.rss, c.area);
  m.rsc = compute_rsc(m.rss, f, calib);
  m.k = compute_k(c, f1, m.rss, calib);
  return m;
}

template <typename Scalar>
nlohmann::json to_json(const MetricSet<Scalar>& m) {
  nlohmann::json j;
  j["rss_K"] = m.rss;
  j["qd_Kpx"] = m.qd;
  j["rsc"] = m.rsc;
  j["rx"] = m.rx;
  j["k"] = m.k ? nlohmann::json(*m.k) : nlohmann::json(nullptr);
  return j;
}

inline MetricSet<double> metric_set_from_json(const nlohmann::json& j) {
  MetricSet<double> m;
  m.rss = j.at("rss_K").get<double>();
  m.qd = j.at("qd_Kpx").get<double>();
  m.rsc = j.at("rsc").get<double>();
  m.rx = j.at("rx").get<double>();
  if (!j.at("k").is_null()) m.k = j.at("k").get<double>();
  return m;
}

}  // namespace irscene
