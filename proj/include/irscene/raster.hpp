#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "irscene/error.hpp"

namespace irscene {

/// Row-major single-channel raster; rows index y, columns index x.
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Gray levels (GL) carried as reals until export.
using Image = Raster<double>;
using Mask = Raster<bool>;
using LabelMap = Raster<std::uint8_t>;

struct Offset {
  int x = 0;
  int y = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

struct Extent {
  int width = 0;
  int height = 0;
  friend bool operator==(const Extent&, const Extent&) = default;
};

template <typename Derived>
Extent extent_of(const Eigen::DenseBase<Derived>& a) {
  return {static_cast<int>(a.cols()), static_cast<int>(a.rows())};
}

template <typename A, typename B>
void require_same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeError,
                std::string(what) + ": " + std::to_string(a.cols()) + "x" +
                    std::to_string(a.rows()) + " vs " + std::to_string(b.cols()) + "x" +
                    std::to_string(b.rows()));
  }
}

/// Checks the RadiometricImage invariants: non-empty and every sample finite.
template <typename Derived>
void validate_image(const Eigen::DenseBase<Derived>& img, const char* what = "image") {
  if (img.rows() <= 0 || img.cols() <= 0) {
    throw Error(ErrorCode::ShapeError, std::string(what) + " has zero extent");
  }
  if (!img.derived().array().isFinite().all()) {
    throw Error(ErrorCode::ValueError, std::string(what) + " contains non-finite samples");
  }
}

inline Eigen::Index area(const Mask& m) { return m.count(); }

template <typename Scalar>
struct RegionStats {
  Scalar mean = 0;
  Scalar stddev = 0;  // population convention
  Eigen::Index area = 0;
};

/// Mean, population standard deviation and pixel count of the masked samples.
/// Two passes: the deviation sum is taken about the exact mean.
template <typename Derived>
RegionStats<typename Derived::Scalar> region_stats(const Eigen::DenseBase<Derived>& img,
                                                   const Mask& mask) {
  using Scalar = typename Derived::Scalar;
  require_same_shape(img, mask, "region_stats");
  const Eigen::Index n = mask.count();
  if (n == 0) throw Error(ErrorCode::EmptyRegion, "region_stats on empty mask");

  const auto& a = img.derived().array();
  const Scalar count = static_cast<Scalar>(n);
  const Scalar rough = mask.select(a, Scalar(0)).sum() / count;
  // Second pass corrects the rounding of the first sum.
  const Scalar mean = rough + mask.select(a - rough, Scalar(0)).sum() / count;
  const Scalar ss = mask.select((a - mean).square(), Scalar(0)).sum();
  return {mean, std::sqrt(ss / count), n};
}

/// Returns a copy where masked pixels become gain * v + offset.
template <typename Derived>
Raster<typename Derived::Scalar> apply_gain_offset(const Eigen::DenseBase<Derived>& img,
                                                   const Mask& mask,
                                                   typename Derived::Scalar gain,
                                                   typename Derived::Scalar offset) {
  require_same_shape(img, mask, "apply_gain_offset");
  if (!std::isfinite(gain) || !std::isfinite(offset)) {
    throw Error(ErrorCode::ValueError, "gain and offset must be finite");
  }
  const auto& a = img.derived().array();
  return mask.select(gain * a + offset, a);
}

/// Same map as apply_gain_offset with offset = level - gain * pivot, but
/// evaluated as level + gain * (v - pivot). With the pivot near the masked
/// values this keeps small contrasts exact on large gray levels.
template <typename Derived>
Raster<typename Derived::Scalar> apply_gain_about(const Eigen::DenseBase<Derived>& img,
                                                  const Mask& mask,
                                                  typename Derived::Scalar gain,
                                                  typename Derived::Scalar pivot,
                                                  typename Derived::Scalar level) {
  require_same_shape(img, mask, "apply_gain_about");
  if (!std::isfinite(gain) || !std::isfinite(pivot) || !std::isfinite(level)) {
    throw Error(ErrorCode::ValueError, "gain, pivot and level must be finite");
  }
  const auto& a = img.derived().array();
  return mask.select(level + gain * (a - pivot), a);
}

/// Square (Chebyshev) dilation by `radius` pixels, clipped to the raster.
inline Mask dilate(const Mask& m, int radius) {
  if (radius <= 0) return m;
  const Eigen::Index rows = m.rows(), cols = m.cols();
  Mask horiz = Mask::Constant(rows, cols, false);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      if (!m(y, x)) continue;
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - radius);
      const Eigen::Index x1 = std::min<Eigen::Index>(cols - 1, x + radius);
      horiz.row(y).segment(x0, x1 - x0 + 1).setConstant(true);
    }
  }
  Mask out = Mask::Constant(rows, cols, false);
  for (Eigen::Index y = 0; y < rows; ++y) {
    const Eigen::Index y0 = std::max<Eigen::Index>(0, y - radius);
    const Eigen::Index y1 = std::min<Eigen::Index>(rows - 1, y + radius);
    for (Eigen::Index x = 0; x < cols; ++x) {
      if (horiz(y, x)) out.col(x).segment(y0, y1 - y0 + 1).setConstant(true);
    }
  }
  return out;
}

}  // namespace irscene
