#include "irscene/compositing.hpp"

#include <cmath>
#include <limits>

namespace irscene {

void Occluder::validate() const {
  validate_image(chip, "occluder chip");
  require_same_shape(chip, silhouette, "occluder");
  if (silhouette.count() == 0) throw Error(ErrorCode::EmptyRegion, "occluder '" + name + "' is empty");
}

Eigen::Index occlusion_overlap(const Mask& target, const Mask& occluder, Offset rel) {
  const int tw = static_cast<int>(target.cols()), th = static_cast<int>(target.rows());
  const int ow = static_cast<int>(occluder.cols()), oh = static_cast<int>(occluder.rows());
  const int x0 = std::max(0, rel.x), x1 = std::min(tw, rel.x + ow);
  const int y0 = std::max(0, rel.y), y1 = std::min(th, rel.y + oh);
  if (x0 >= x1 || y0 >= y1) return 0;
  return (target.block(y0, x0, y1 - y0, x1 - x0) &&
          occluder.block(y0 - rel.y, x0 - rel.x, y1 - y0, x1 - x0))
      .count();
}

namespace {

void check_occlusion_inputs(const Mask& target, const Mask& occluder, double rx_star) {
  if (!(rx_star >= 0 && rx_star <= 1)) throw Error(ErrorCode::ValueError, "rx* outside [0,1]");
  if (target.count() == 0) throw Error(ErrorCode::EmptyRegion, "empty target silhouette");
  if (occluder.count() == 0) throw Error(ErrorCode::EmptyRegion, "empty occluder silhouette");
}

OcclusionSolution make_solution(const Mask& target, const Mask& occluder, Offset rel, bool bis) {
  OcclusionSolution s;
  s.relative = rel;
  s.overlap = occlusion_overlap(target, occluder, rel);
  s.achieved = static_cast<double>(s.overlap) / static_cast<double>(target.count());
  s.bisection = bis;
  return s;
}

}  // namespace

OcclusionSolution solve_occlusion_bisection(const Mask& target, const Mask& occluder,
                                            double rx_star, const OcclusionOptions& opts) {
  check_occlusion_inputs(target, occluder, rx_star);
  const int tw = static_cast<int>(target.cols()), th = static_cast<int>(target.rows());
  const int ow = static_cast<int>(occluder.cols()), oh = static_cast<int>(occluder.rows());
  const int dy = opts.dy.value_or((th - oh) / 2);
  const double need = rx_star * static_cast<double>(target.count());
  auto reaches = [&](int dx) {
    return static_cast<double>(occlusion_overlap(target, occluder, {dx, dy})) >= need;
  };

  // Invariant: overlap(lo) < need <= overlap(hi), with lo = -ow fully clear.
  int lo = -ow;
  int hi = (tw - ow) / 2;
  if (reaches(lo)) return make_solution(target, occluder, {lo, dy}, true);
  if (!reaches(hi)) return make_solution(target, occluder, {hi, dy}, true);
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (reaches(mid) ? hi : lo) = mid;
  }
  const auto above = make_solution(target, occluder, {hi, dy}, true);
  const auto below = make_solution(target, occluder, {lo, dy}, true);
  return std::abs(below.achieved - rx_star) < std::abs(above.achieved - rx_star) ? below : above;
}

OcclusionSolution solve_occlusion_exhaustive(const Mask& target, const Mask& occluder,
                                             double rx_star) {
  check_occlusion_inputs(target, occluder, rx_star);
  const int tw = static_cast<int>(target.cols()), th = static_cast<int>(target.rows());
  const int ow = static_cast<int>(occluder.cols()), oh = static_cast<int>(occluder.rows());
  const double total = static_cast<double>(target.count());

  Offset best{-ow, -oh};
  double best_err = std::numeric_limits<double>::infinity();
  for (int dx = -ow; dx <= tw; ++dx) {
    for (int dy = -oh; dy <= th; ++dy) {
      const double rx = static_cast<double>(occlusion_overlap(target, occluder, {dx, dy})) / total;
      const double err = std::abs(rx - rx_star);
      if (err < best_err) {
        best_err = err;
        best = {dx, dy};
        if (err == 0) return make_solution(target, occluder, best, false);
      }
    }
  }
  return make_solution(target, occluder, best, false);
}

OcclusionSolution solve_occlusion(const Mask& target, const Mask& occluder, double rx_star,
                                  const OcclusionOptions& opts) {
  if (!(opts.epsilon > 0)) throw Error(ErrorCode::ValueError, "epsilon must be > 0");
  check_occlusion_inputs(target, occluder, rx_star);
  const double max_rx = static_cast<double>(std::min(target.count(), occluder.count())) /
                        static_cast<double>(target.count());
  if (rx_star - max_rx > opts.epsilon) {
    throw Error(ErrorCode::OcclusionInfeasible,
                "occluder can cover at most R_x = " + std::to_string(max_rx));
  }
  auto sol = solve_occlusion_bisection(target, occluder, rx_star, opts);
  if (std::abs(sol.achieved - rx_star) <= opts.epsilon) return sol;
  sol = solve_occlusion_exhaustive(target, occluder, rx_star);
  if (std::abs(sol.achieved - rx_star) <= opts.epsilon) return sol;
  throw Error(ErrorCode::OcclusionInfeasible,
              "closest achievable R_x is " + std::to_string(sol.achieved) + " for requested " +
                  std::to_string(rx_star));
}

Composition composite(const Image& background, const TargetChip& target,
                      const Occluder* occluder, const ScenePlacement& placement, int ring_width) {
  validate_image(background, "background");
  require_same_shape(target.radiance, target.silhouette, "target chip");
  const Extent frame = extent_of(background);

  Composition out{background, make_partition(target.silhouette, placement.target, frame, ring_width)};
  const Mask placed_target = out.partition.target;
  {
    const Offset at = placement.target;
    auto region = out.scene.block(at.y, at.x, target.radiance.rows(), target.radiance.cols());
    region = target.silhouette.select(target.radiance, region);
  }
  if (occluder) {
    if (!placement.occluder) throw Error(ErrorCode::PlacementError, "occluder has no placement");
    const Offset at = *placement.occluder;
    const Mask footprint = place_mask(occluder->silhouette, at, frame);
    auto region = out.scene.block(at.y, at.x, occluder->chip.rows(), occluder->chip.cols());
    region = occluder->silhouette.select(occluder->chip, region);
    apply_occluder(out.partition, footprint);
  }
  return out;
}

TargetChip rescale_chip(const TargetChip& chip, double scale) {
  if (!(std::isfinite(scale) && scale > 0)) throw Error(ErrorCode::ValueError, "scale must be > 0");
  require_same_shape(chip.radiance, chip.silhouette, "rescale_chip");
  const bool has_labels = chip.regions.size() > 0;
  if (has_labels) require_same_shape(chip.radiance, chip.regions, "rescale_chip");

  const int in_w = static_cast<int>(chip.radiance.cols()), in_h = static_cast<int>(chip.radiance.rows());
  const int out_w = static_cast<int>(std::lround(in_w * scale));
  const int out_h = static_cast<int>(std::lround(in_h * scale));
  if (out_w < 1 || out_h < 1) throw Error(ErrorCode::TargetTooSmall, "rescaled chip below 1x1");

  const double sx = static_cast<double>(in_w) / out_w;
  const double sy = static_cast<double>(in_h) / out_h;
  TargetChip out;
  out.radiance = Image::Zero(out_h, out_w);
  out.silhouette = Mask::Constant(out_h, out_w, false);
  if (has_labels) out.regions = LabelMap::Zero(out_h, out_w);

  for (int y = 0; y < out_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int ny = std::clamp(static_cast<int>(std::floor((y + 0.5) * sy)), 0, in_h - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int x = 0; x < out_w; ++x) {
      const int nx = std::clamp(static_cast<int>(std::floor((x + 0.5) * sx)), 0, in_w - 1);
      if (!chip.silhouette(ny, nx)) continue;
      out.silhouette(y, x) = true;
      if (has_labels) out.regions(y, x) = chip.regions(ny, nx);

      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, in_w - 1);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      const int xs[2] = {x0, x1}, ys[2] = {y0, y1};
      const double wxs[2] = {1 - wx, wx}, wys[2] = {1 - wy, wy};
      double acc = 0, wsum = 0;
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const double w = wxs[i] * wys[j];
          if (w == 0 || !chip.silhouette(ys[j], xs[i])) continue;
          acc += w * chip.radiance(ys[j], xs[i]);
          wsum += w;
        }
      }
      out.radiance(y, x) = wsum > 0 ? acc / wsum : chip.radiance(ny, nx);
    }
  }
  if (out.silhouette.count() == 0) throw Error(ErrorCode::TargetTooSmall, "rescaled silhouette is empty");
  return out;
}

}  // namespace irscene
