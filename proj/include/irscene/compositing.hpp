#pragma once

#include <optional>
#include <string>

#include "irscene/partition.hpp"
#include "irscene/raster.hpp"

namespace irscene {

struct Occluder {
  Image chip;
  Mask silhouette;
  std::string name;

  void validate() const;
};

/// A target chip with its silhouette and (optionally empty) region labels.
struct TargetChip {
  Image radiance;
  Mask silhouette;
  LabelMap regions;
};

/// Absolute top-left anchors in the frame.
struct ScenePlacement {
  Offset target;
  std::optional<Offset> occluder;
};

struct OcclusionOptions {
  double epsilon = 0.01;
  /// Vertical offset of the occluder relative to the target along which the
  /// horizontal approach runs; defaults to centre alignment.
  std::optional<int> dy;
};

struct OcclusionSolution {
  Offset relative;  // occluder anchor minus target anchor
  Eigen::Index overlap = 0;
  double achieved = 0;
  bool bisection = false;  // found on the horizontal approach
};

/// Number of target pixels covered when the occluder sits at `relative`.
Eigen::Index occlusion_overlap(const Mask& target, const Mask& occluder, Offset relative);

/// Horizontal approach from the left at fixed dy: bisects for the first
/// offset whose overlap reaches the requested ratio, assuming overlap grows
/// monotonically until centre alignment (true for convex silhouettes).
OcclusionSolution solve_occlusion_bisection(const Mask& target, const Mask& occluder,
                                            double rx_star, const OcclusionOptions& opts = {});

/// Scans every relative offset; ties go to the lowest dx, then lowest dy.
OcclusionSolution solve_occlusion_exhaustive(const Mask& target, const Mask& occluder,
                                             double rx_star);

/// Bisection first, exhaustive scan as fallback. Throws OcclusionInfeasible
/// when no integer offset reaches |R_x - rx_star| <= epsilon.
OcclusionSolution solve_occlusion(const Mask& target, const Mask& occluder, double rx_star,
                                  const OcclusionOptions& opts = {});

struct Composition {
  Image scene;
  ScenePartition partition;
};

/// Paints background, then target, then occluder.
Composition composite(const Image& background, const TargetChip& target,
                      const Occluder* occluder, const ScenePlacement& placement,
                      int ring_width = kDefaultRingWidth);

/// Bilinear resampling of the radiance (restricted to silhouette pixels),
/// nearest neighbour for silhouette and labels.
TargetChip rescale_chip(const TargetChip& chip, double scale);

}  // namespace irscene
