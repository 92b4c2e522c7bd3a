#pragma once

#include "irscene/raster.hpp"

namespace irscene {

/// Disjoint zones of a composed scene.
///
/// `target` is the visible target C, `ring` the local background F1 and
/// `rest` the remaining background F2. `occluded` holds target pixels hidden
/// by the occluder and `occluder` the occluder footprint outside the target
/// silhouette; neither takes part in background statistics. Together the five
/// masks tile the frame.
struct ScenePartition {
  Mask target;
  Mask ring;
  Mask rest;
  Mask occluded;
  Mask occluder;

  Extent frame() const { return extent_of(target); }
  Mask background() const { return ring || rest; }
  Mask silhouette() const { return target || occluded; }
};

inline constexpr int kDefaultRingWidth = 5;

/// Places `silhouette` at `placement` inside `frame` and builds C, F1 (square
/// dilation of C by `ring_width`, minus C) and F2.
ScenePartition make_partition(const Mask& silhouette, Offset placement, Extent frame,
                              int ring_width = kDefaultRingWidth);

/// Removes `footprint` (frame-sized) from the background zones, moving the
/// covered target pixels into `occluded`.
void apply_occluder(ScenePartition& part, const Mask& footprint);

/// Pastes a chip-sized mask into a frame-sized one at `at`.
Mask place_mask(const Mask& chip, Offset at, Extent frame);

/// Checks disjointness and full coverage; throws ShapeError otherwise.
void check_partition(const ScenePartition& part);

}  // namespace irscene
