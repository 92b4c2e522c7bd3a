#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "irscene/metrics.hpp"
#include "irscene/partition.hpp"
#include "irscene/raster.hpp"

namespace irscene {

/// Requested scene quality. RSS in kelvin, Q_D in kelvin-pixels.
struct QualitySpec {
  double rss = 1;
  double rsc = 1;
  double k = 0;
  std::optional<double> qd;
  double rx = 0;
  double nu_k = 1;
  double tolerance = 1e-9;

  CalibrationNuK calibration() const { return CalibrationNuK(nu_k); }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
    if (!(std::isfinite(rss) && rss > 0)) fail("rss must be > 0");
    if (!(std::isfinite(rsc) && rsc > 0)) fail("rsc must be > 0");
    if (!std::isfinite(k)) fail("k must be finite");
    if (!(rx >= 0 && rx <= 1)) fail("rx must lie in [0, 1]");
    if (!(std::isfinite(nu_k) && nu_k > 0)) fail("nu_k must be > 0");
    if (qd && !(std::isfinite(*qd) && *qd > 0)) fail("qd must be > 0");
    if (!(tolerance > 0)) fail("tolerance must be > 0");
    // |k| > 1 is checked by the target solver so it surfaces as InfeasibleContrast.
  }
};

/// v -> gain * v + offset, also kept as v -> level + gain * (v - pivot).
template <typename Scalar = double>
struct AffineMap {
  Scalar gain = 1;
  Scalar offset = 0;
  Scalar pivot = 0;
  Scalar level = 0;

  static AffineMap about(Scalar gain, Scalar pivot, Scalar level) {
    return {gain, level - gain * pivot, pivot, level};
  }
};

struct GradingSolution {
  double gain_background = 1;
  double offset_background = 0;
  double gain_target = 1;
  double offset_target = 0;
  double scale_target = 1;
};

/// Background transform that sets sigma_F to nu_k RSS* / RSC* while keeping
/// the background mean fixed.
template <typename Scalar>
AffineMap<Scalar> solve_background(const RegionStats<Scalar>& background, const QualitySpec& spec) {
  if (!(background.stddev > 0)) {
    throw Error(ErrorCode::DegenerateBackground, "flat background cannot be given clutter by a gain");
  }
  const Scalar wanted = static_cast<Scalar>(spec.nu_k * spec.rss / spec.rsc);
  const Scalar gain = wanted / background.stddev;
  return AffineMap<Scalar>::about(gain, background.mean, background.mean);
}

/// Target transform reaching RSS* and K* against the graded local background.
///
/// From the RSS definition, (nu_k RSS)^2 = dmu^2 + sigma_C^2, and from the K
/// definition dmu = K nu_k RSS; hence sigma_C = nu_k RSS sqrt(1 - K^2) and
/// |K| <= 1 is a feasibility condition. The mean lands at mu_F1' - dmu.
template <typename Scalar>
AffineMap<Scalar> solve_target(const RegionStats<Scalar>& target, Scalar ring_mean_graded,
                               const QualitySpec& spec) {
  const Scalar k = static_cast<Scalar>(spec.k);
  if (!(std::abs(k) <= Scalar(1))) {
    throw Error(ErrorCode::InfeasibleContrast,
                "|k| = " + std::to_string(std::abs(spec.k)) + " exceeds 1");
  }
  const Scalar contrast = static_cast<Scalar>(spec.nu_k * spec.rss);
  const Scalar delta_mu = k * contrast;
  const Scalar sigma_wanted = contrast * std::sqrt(std::max(Scalar(0), Scalar(1) - k * k));

  Scalar gain = 0;
  if (sigma_wanted != Scalar(0)) {
    if (!(target.stddev > 0)) {
      throw Error(ErrorCode::FlatTarget, "flat target cannot be given internal contrast");
    }
    gain = sigma_wanted / target.stddev;
  }
  return AffineMap<Scalar>::about(gain, target.mean, ring_mean_graded - delta_mu);
}

/// Linear factor bringing a target of `native_area` pixels to Q_D* / RSS*.
inline double solve_scale(double native_area, const QualitySpec& spec) {
  if (!spec.qd) throw Error(ErrorCode::ConfigError, "solve_scale needs a requested Q_D");
  if (!(native_area >= 1)) throw Error(ErrorCode::TargetTooSmall, "native target area below 1 px");
  const double wanted_area = *spec.qd / spec.rss;
  if (wanted_area < 1) {
    throw Error(ErrorCode::TargetTooSmall,
                "requested target area " + std::to_string(wanted_area) + " px is below 1 px");
  }
  return std::sqrt(wanted_area / native_area);
}

template <typename Scalar>
struct GradedScene {
  Raster<Scalar> image;
  MetricSet<Scalar> metrics;
  GradingSolution solution;
};

/// Grades a composed scene: one affine transform on the background F, then
/// one on the visible target computed against the graded F1 mean. Occluder
/// pixels are left untouched.
template <typename Derived>
GradedScene<typename Derived::Scalar> grade_scene(const Eigen::DenseBase<Derived>& composed,
                                                  const ScenePartition& part,
                                                  const QualitySpec& spec) {
  using Scalar = typename Derived::Scalar;
  spec.validate();
  require_same_shape(composed, part.target, "grade_scene");
  const Mask background = part.background();

  const auto bg = solve_background(region_stats(composed, background), spec);
  Raster<Scalar> graded = apply_gain_about(composed, background, bg.gain, bg.pivot, bg.level);

  const Scalar ring_mean = region_stats(graded, part.ring).mean;
  const auto tg = solve_target(region_stats(graded, part.target), ring_mean, spec);
  const Scalar delta_mu = static_cast<Scalar>(spec.k * spec.nu_k * spec.rss);

  // The level carries the rounding of mu_F1' - dmu, which dominates K when
  // dmu is tiny next to the gray levels. Measure the mean difference about
  // the ring level and feed the residual back below the level so the
  // per-pixel roundings absorb it.
  const auto& src = graded.array();
  const Scalar ring_dev = region_stats((src - ring_mean).eval(), part.ring).mean;
  Scalar shift = 0;
  Raster<Scalar> trial;
  for (int pass = 0; pass < 4; ++pass) {
    trial = part.target.select(tg.level + (tg.gain * (src - tg.pivot) + shift), src);
    const Scalar target_dev = region_stats((trial - ring_mean).eval(), part.target).mean;
    const Scalar residual = (ring_dev - target_dev) - delta_mu;
    if (std::abs(residual) <= std::numeric_limits<Scalar>::epsilon() * std::abs(delta_mu)) break;
    shift += residual;
  }
  graded = std::move(trial);

  GradedScene<Scalar> out;
  out.metrics = compute_all(graded, part, spec.calibration());
  out.image = std::move(graded);
  out.solution.gain_background = static_cast<double>(bg.gain);
  out.solution.offset_background = static_cast<double>(bg.offset);
  out.solution.gain_target = static_cast<double>(tg.gain);
  out.solution.offset_target = static_cast<double>(tg.offset);
  return out;
}

}  // namespace irscene
