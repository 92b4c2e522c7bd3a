#include "irscene/partition.hpp"

#include <string>

namespace irscene {

namespace {

bool fits(Extent chip, Offset at, Extent frame) {
  return at.x >= 0 && at.y >= 0 && at.x + chip.width <= frame.width &&
         at.y + chip.height <= frame.height;
}

}  // namespace

Mask place_mask(const Mask& chip, Offset at, Extent frame) {
  const Extent ce = extent_of(chip);
  if (!fits(ce, at, frame)) {
    throw Error(ErrorCode::PlacementError,
                "chip " + std::to_string(ce.width) + "x" + std::to_string(ce.height) + " at (" +
                    std::to_string(at.x) + "," + std::to_string(at.y) + ") leaves the " +
                    std::to_string(frame.width) + "x" + std::to_string(frame.height) + " frame");
  }
  Mask out = Mask::Constant(frame.height, frame.width, false);
  out.block(at.y, at.x, ce.height, ce.width) = chip;
  return out;
}

ScenePartition make_partition(const Mask& silhouette, Offset placement, Extent frame,
                              int ring_width) {
  if (ring_width < 1) throw Error(ErrorCode::PlacementError, "ring_width must be >= 1");
  if (frame.width <= 0 || frame.height <= 0) {
    throw Error(ErrorCode::ShapeError, "frame has zero extent");
  }
  ScenePartition p;
  p.target = place_mask(silhouette, placement, frame);
  p.ring = dilate(p.target, ring_width) && !p.target;
  p.rest = !(p.target || p.ring);
  p.occluded = Mask::Constant(frame.height, frame.width, false);
  p.occluder = p.occluded;
  return p;
}

void apply_occluder(ScenePartition& part, const Mask& footprint) {
  require_same_shape(part.target, footprint, "apply_occluder");
  part.occluded = part.occluded || (part.target && footprint);
  part.target = part.target && !footprint;
  part.occluder = part.occluder || (footprint && !part.occluded);
  part.ring = part.ring && !footprint;
  part.rest = part.rest && !footprint;
}

void check_partition(const ScenePartition& part) {
  const Mask* masks[] = {&part.target, &part.ring, &part.rest, &part.occluded, &part.occluder};
  Raster<int> cover = Raster<int>::Zero(part.target.rows(), part.target.cols());
  for (const Mask* m : masks) {
    require_same_shape(part.target, *m, "partition");
    cover += m->cast<int>();
  }
  if ((cover != 1).any()) {
    throw Error(ErrorCode::ShapeError, "partition zones overlap or leave gaps");
  }
}

}  // namespace irscene
