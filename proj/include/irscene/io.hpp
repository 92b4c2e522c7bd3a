#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "irscene/compositing.hpp"
#include "irscene/raster.hpp"
#include "irscene/thermal.hpp"

namespace irscene::io {

namespace fs = std::filesystem;

/// Reads a grayscale raster as GL. Accepts 8/16-bit PNG, binary PGM (P5) and
/// raw little-endian float64 (`.f64`, with a `.f64.json` sidecar).
Image read_image(const fs::path& path);

/// Raw stored samples of a PNG or PGM (no scaling, palette indices kept).
Raster<std::uint16_t> read_samples(const fs::path& path);

/// Nonzero samples are set.
Mask read_mask(const fs::path& path);
LabelMap read_labels(const fs::path& path);

void write_png16(const fs::path& path, const Raster<std::uint16_t>& samples);
void write_png8(const fs::path& path, const LabelMap& samples);
/// 8-bit PNG, 0/255.
void write_mask(const fs::path& path, const Mask& mask);
/// Palette-indexed PNG for region label maps.
void write_region_labels(const fs::path& path, const LabelMap& labels);
void write_pgm(const fs::path& path, const Raster<std::uint16_t>& samples, int bits = 16);
/// Exact real-valued dump: raw float64 LE plus a JSON sidecar.
void write_f64(const fs::path& path, const Image& img);

nlohmann::json read_json(const fs::path& path);
/// Writes `j` pretty-printed with a trailing newline.
void write_json(const fs::path& path, const nlohmann::json& j);

/// One signature directory: ta.png, tf.png, regions.png, silhouette.png, meta.json.
ThermalSignature load_signature(const fs::path& dir);
void save_signature(const fs::path& dir, const ThermalSignature& sig);
/// Every signature directory under `root`, sorted by directory name.
std::vector<ThermalSignature> load_signature_db(const fs::path& root);

/// One occluder directory: chip.png, silhouette.png, meta.json.
Occluder load_occluder(const fs::path& dir);
void save_occluder(const fs::path& dir, const Occluder& occ);
/// `path` may be a single occluder directory or a library of them.
std::vector<Occluder> load_occluders(const fs::path& path);

}  // namespace irscene::io
