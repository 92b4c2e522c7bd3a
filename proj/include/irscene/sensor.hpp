#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "irscene/raster.hpp"
#include "irscene/seeding.hpp"

namespace irscene {

struct SensorConfig {
  double mtf_sigma = 0;     // Gaussian PSF std in pixels, 0 disables blur
  int sampling_factor = 1;  // block size of the integrate-then-decimate step
  double noise_sigma = 0;   // additive white Gaussian noise in GL
  int bits = 16;            // export bit depth

  void validate() const {
    if (!(std::isfinite(mtf_sigma) && mtf_sigma >= 0)) {
      throw Error(ErrorCode::ConfigError, "mtf_sigma must be >= 0");
    }
    if (sampling_factor < 1) throw Error(ErrorCode::ConfigError, "sampling_factor must be >= 1");
    if (!(std::isfinite(noise_sigma) && noise_sigma >= 0)) {
      throw Error(ErrorCode::ConfigError, "noise_sigma must be >= 0");
    }
    if (bits < 1 || bits > 16) throw Error(ErrorCode::ConfigError, "bits must be in [1, 16]");
  }

  bool is_identity() const { return mtf_sigma == 0 && sampling_factor == 1 && noise_sigma == 0; }
};

/// The PSF is truncated at +-4 sigma.
inline int mtf_radius(double sigma) { return static_cast<int>(std::floor(4.0 * sigma)); }

namespace detail {

/// Half-sample symmetric reflection ("abc|cba"), valid for any offset.
inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  const Eigen::Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

template <typename Scalar>
std::vector<Scalar> gaussian_taps(double sigma) {
  const int r = mtf_radius(sigma);
  std::vector<Scalar> taps(2 * r + 1);
  Scalar sum = 0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = static_cast<Scalar>(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += taps[i + r];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

}  // namespace detail

/// Separable convolution with the normalised, truncated Gaussian PSF and
/// mirror boundaries.
template <typename Derived>
Raster<typename Derived::Scalar> apply_mtf(const Eigen::DenseBase<Derived>& img, double sigma) {
  using Scalar = typename Derived::Scalar;
  if (!(sigma >= 0)) throw Error(ErrorCode::ValueError, "mtf_sigma must be >= 0");
  Raster<Scalar> src = img.derived();
  if (sigma == 0) return src;

  const auto taps = detail::gaussian_taps<Scalar>(sigma);
  const int r = mtf_radius(sigma);
  const Eigen::Index rows = src.rows(), cols = src.cols();

  Raster<Scalar> tmp(rows, cols);
  std::vector<Scalar> line;
  for (Eigen::Index y = 0; y < rows; ++y) {
    line.resize(cols + 2 * r);
    for (Eigen::Index i = 0; i < cols + 2 * r; ++i) line[i] = src(y, detail::reflect(i - r, cols));
    for (Eigen::Index x = 0; x < cols; ++x) {
      Scalar acc = 0;
      for (int k = 0; k <= 2 * r; ++k) acc += taps[k] * line[x + k];
      tmp(y, x) = acc;
    }
  }
  Raster<Scalar> out(rows, cols);
  for (Eigen::Index x = 0; x < cols; ++x) {
    line.resize(rows + 2 * r);
    for (Eigen::Index i = 0; i < rows + 2 * r; ++i) line[i] = tmp(detail::reflect(i - r, rows), x);
    for (Eigen::Index y = 0; y < rows; ++y) {
      Scalar acc = 0;
      for (int k = 0; k <= 2 * r; ++k) acc += taps[k] * line[y + k];
      out(y, x) = acc;
    }
  }
  return out;
}

/// Block mean over factor x factor cells; trailing partial blocks are dropped.
template <typename Derived>
Raster<typename Derived::Scalar> subsample(const Eigen::DenseBase<Derived>& img, int factor) {
  using Scalar = typename Derived::Scalar;
  if (factor < 1) throw Error(ErrorCode::ValueError, "sampling factor must be >= 1");
  if (factor == 1) return img.derived();
  const Eigen::Index rows = img.rows() / factor, cols = img.cols() / factor;
  if (rows < 1 || cols < 1) throw Error(ErrorCode::TargetTooSmall, "subsampled image below 1x1");
  Raster<Scalar> out(rows, cols);
  const Scalar n = static_cast<Scalar>(factor * factor);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      out(y, x) = img.derived().block(y * factor, x * factor, factor, factor).sum() / n;
    }
  }
  return out;
}

template <typename Derived>
Raster<typename Derived::Scalar> add_noise(const Eigen::DenseBase<Derived>& img, double sigma,
                                           Rng& rng) {
  using Scalar = typename Derived::Scalar;
  if (!(sigma >= 0)) throw Error(ErrorCode::ValueError, "noise_sigma must be >= 0");
  Raster<Scalar> out = img.derived();
  if (sigma == 0) return out;
  std::normal_distribution<double> gauss(0.0, sigma);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] += static_cast<Scalar>(gauss(rng));
  return out;
}

/// Blur, then sampling, then noise.
template <typename Derived>
Raster<typename Derived::Scalar> apply_sensor(const Eigen::DenseBase<Derived>& img,
                                              const SensorConfig& cfg, Rng& rng) {
  cfg.validate();
  return add_noise(subsample(apply_mtf(img, cfg.mtf_sigma), cfg.sampling_factor), cfg.noise_sigma,
                   rng);
}

/// Export quantisation: round to nearest and clamp to [0, 2^bits - 1].
template <typename Derived>
Raster<std::uint16_t> quantize(const Eigen::DenseBase<Derived>& img, int bits = 16) {
  if (bits < 1 || bits > 16) throw Error(ErrorCode::ValueError, "bits must be in [1, 16]");
  const double top = static_cast<double>((1u << bits) - 1u);
  return img.derived()
      .array()
      .unaryExpr([top](auto v) {
        return static_cast<std::uint16_t>(std::clamp(std::nearbyint(static_cast<double>(v)), 0.0, top));
      })
      .eval();
}

}  // namespace irscene
