#include "irscene/io.hpp"

#include "irscene/sensor.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <bit>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace irscene::io {

namespace {

[[noreturn]] void io_fail(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::IoError, path.string() + ": " + what);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) io_fail(path, std::string("cannot open (") + std::strerror(errno) + ")");
  return f;
}

void png_quiet_warning(png_structp, png_const_charp) {}

struct PngRaw {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

// libpng reports errors by longjmp; only trivially destructible locals are
// created between setjmp and the end of the decode.
bool decode_png(std::FILE* fp, PngRaw& out, std::vector<std::uint8_t>& rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_quiet_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color & PNG_COLOR_MASK_COLOR && color != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (depth < 8) png_set_packing(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  const std::size_t stride = png_get_rowbytes(png, info);
  rows.resize(stride * h);
  for (png_uint_32 y = 0; y < h; ++y) png_read_row(png, rows.data() + y * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.bit_depth = depth == 16 ? 16 : 8;
  out.samples.resize(static_cast<std::size_t>(w) * h);
  for (png_uint_32 y = 0; y < h; ++y) {
    const std::uint8_t* row = rows.data() + y * stride;
    for (png_uint_32 x = 0; x < w; ++x) {
      std::uint16_t v;
      if (depth == 16) {
        std::memcpy(&v, row + 2 * x, 2);
      } else {
        v = row[x];
      }
      out.samples[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  return true;
}

struct PngWrite {
  int width;
  int height;
  int bit_depth;
  int color_type;
  const std::uint8_t* data;  // tightly packed rows in native byte order
  const png_color* palette = nullptr;
  int palette_size = 0;
};

bool encode_png(std::FILE* fp, const PngWrite& img) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_quiet_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               img.bit_depth, img.color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (img.palette) png_set_PLTE(png, info, img.palette, img.palette_size);
  png_write_info(png, info);
  if (img.bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  const std::size_t stride = static_cast<std::size_t>(img.width) * (img.bit_depth / 8);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, img.data + static_cast<std::size_t>(y) * stride);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

PngRaw read_png_raw(const fs::path& path) {
  auto fp = open_file(path, "rb");
  PngRaw raw;
  std::vector<std::uint8_t> rows;
  if (!decode_png(fp.get(), raw, rows)) io_fail(path, "not a readable grayscale PNG");
  return raw;
}

void write_png_raw(const fs::path& path, const PngWrite& img) {
  auto fp = open_file(path, "wb");
  if (!encode_png(fp.get(), img)) io_fail(path, "PNG encoding failed");
  if (std::fflush(fp.get()) != 0) io_fail(path, "write failed");
}

std::string next_pgm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

Raster<std::uint16_t> read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open");
  if (next_pgm_token(in) != "P5") io_fail(path, "not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_pgm_token(in));
    h = std::stoi(next_pgm_token(in));
    maxval = std::stoi(next_pgm_token(in));
  } catch (const std::exception&) {
    io_fail(path, "malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) io_fail(path, "bad PGM header values");
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * bytes);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    io_fail(path, "truncated PGM data");
  }
  Raster<std::uint16_t> out(h, w);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = bytes == 2 ? static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1])
                               : buf[i];
  }
  return out;
}

bool has_ext(const fs::path& p, const char* ext) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ext;
}

Image read_f64(const fs::path& path) {
  const auto meta = read_json(fs::path(path.string() + ".json"));
  const int w = meta.at("width").get<int>();
  const int h = meta.at("height").get<int>();
  if (meta.value("dtype", "") != "float64" || meta.value("byte_order", "") != "little") {
    io_fail(path, "unsupported raw sample format");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open");
  Image img(h, w);
  static_assert(std::endian::native == std::endian::little, "raw float64 I/O assumes a little-endian host");
  if (!in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size() * 8))) {
    io_fail(path, "truncated raw data");
  }
  return img;
}

nlohmann::json read_meta(const fs::path& dir) { return read_json(dir / "meta.json"); }

}  // namespace

Raster<std::uint16_t> read_samples(const fs::path& path) {
  if (has_ext(path, ".pgm")) return read_pgm(path);
  const PngRaw raw = read_png_raw(path);
  Raster<std::uint16_t> out(raw.height, raw.width);
  std::copy(raw.samples.begin(), raw.samples.end(), out.data());
  return out;
}

Image read_image(const fs::path& path) {
  if (has_ext(path, ".f64")) return read_f64(path);
  return read_samples(path).cast<double>();
}

Mask read_mask(const fs::path& path) { return read_samples(path) != 0; }

LabelMap read_labels(const fs::path& path) {
  const auto s = read_samples(path);
  if ((s > 255).any()) io_fail(path, "label values exceed 8 bits");
  return s.cast<std::uint8_t>();
}

void write_png16(const fs::path& path, const Raster<std::uint16_t>& samples) {
  write_png_raw(path, {static_cast<int>(samples.cols()), static_cast<int>(samples.rows()), 16,
                       PNG_COLOR_TYPE_GRAY, reinterpret_cast<const std::uint8_t*>(samples.data())});
}

void write_png8(const fs::path& path, const LabelMap& samples) {
  write_png_raw(path, {static_cast<int>(samples.cols()), static_cast<int>(samples.rows()), 8,
                       PNG_COLOR_TYPE_GRAY, samples.data()});
}

void write_mask(const fs::path& path, const Mask& mask) {
  const LabelMap bytes = mask.select(LabelMap::Constant(mask.rows(), mask.cols(), 255),
                                     LabelMap::Zero(mask.rows(), mask.cols()));
  write_png8(path, bytes);
}

void write_region_labels(const fs::path& path, const LabelMap& labels) {
  static const png_color palette[6] = {
      {0, 0, 0}, {230, 25, 75}, {60, 180, 75}, {255, 225, 25}, {0, 130, 200}, {245, 130, 48}};
  if ((labels > 5).any()) io_fail(path, "region labels must be in [0, 5]");
  PngWrite img{static_cast<int>(labels.cols()), static_cast<int>(labels.rows()), 8,
               PNG_COLOR_TYPE_PALETTE, labels.data()};
  img.palette = palette;
  img.palette_size = 6;
  write_png_raw(path, img);
}

void write_pgm(const fs::path& path, const Raster<std::uint16_t>& samples, int bits) {
  if (bits < 1 || bits > 16) io_fail(path, "bits must be in [1, 16]");
  const int maxval = (1 << bits) - 1;
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open for writing");
  out << "P5\n" << samples.cols() << " " << samples.rows() << "\n" << maxval << "\n";
  std::vector<unsigned char> buf;
  buf.reserve(static_cast<std::size_t>(samples.size()) * 2);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const std::uint16_t v = std::min<std::uint16_t>(samples.data()[i], static_cast<std::uint16_t>(maxval));
    if (maxval > 255) buf.push_back(static_cast<unsigned char>(v >> 8));
    buf.push_back(static_cast<unsigned char>(v & 0xff));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) io_fail(path, "write failed");
}

void write_f64(const fs::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size() * 8));
  if (!out) io_fail(path, "write failed");
  write_json(fs::path(path.string() + ".json"), {{"width", img.cols()},
                                                 {"height", img.rows()},
                                                 {"dtype", "float64"},
                                                 {"byte_order", "little"},
                                                 {"layout", "row-major"}});
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) io_fail(path, "write failed");
}

ThermalSignature load_signature(const fs::path& dir) {
  ThermalSignature sig;
  sig.ta = read_image(dir / "ta.png");
  sig.tf = read_image(dir / "tf.png");
  sig.regions = read_labels(dir / "regions.png");
  sig.silhouette = read_mask(dir / "silhouette.png");
  const auto meta = read_meta(dir);
  try {
    sig.vehicle_id = meta.at("vehicle_id").get<std::string>();
    sig.aspect_azimuth = meta.at("aspect_azimuth").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, (dir / "meta.json").string() + ": " + e.what());
  }
  sig.validate();
  return sig;
}

void save_signature(const fs::path& dir, const ThermalSignature& sig) {
  sig.validate();
  fs::create_directories(dir);
  write_png16(dir / "ta.png", quantize(sig.ta));
  write_png16(dir / "tf.png", quantize(sig.tf));
  write_region_labels(dir / "regions.png", sig.regions);
  write_mask(dir / "silhouette.png", sig.silhouette);
  write_json(dir / "meta.json", {{"vehicle_id", sig.vehicle_id},
                                 {"aspect_azimuth", sig.aspect_azimuth},
                                 {"aspect_convention", "degrees, 0 = frontal, clockwise"},
                                 {"gray_levels", "16-bit GL; kelvin = GL / nu_k of the scenario"}});
}

std::vector<ThermalSignature> load_signature_db(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::IoError, root.string() + ": not a directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "meta.json") && fs::exists(e.path() / "ta.png")) {
      dirs.push_back(e.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorCode::NotFound, root.string() + ": no signatures");
  std::vector<ThermalSignature> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(load_signature(d));
  return out;
}

Occluder load_occluder(const fs::path& dir) {
  Occluder occ;
  occ.chip = read_image(dir / "chip.png");
  occ.silhouette = read_mask(dir / "silhouette.png");
  occ.name = read_meta(dir).value("name", dir.filename().string());
  occ.validate();
  return occ;
}

void save_occluder(const fs::path& dir, const Occluder& occ) {
  occ.validate();
  fs::create_directories(dir);
  write_png16(dir / "chip.png", quantize(occ.chip));
  write_mask(dir / "silhouette.png", occ.silhouette);
  write_json(dir / "meta.json", {{"name", occ.name}});
}

std::vector<Occluder> load_occluders(const fs::path& path) {
  if (fs::exists(path / "chip.png")) return {load_occluder(path)};
  if (!fs::is_directory(path)) throw Error(ErrorCode::IoError, path.string() + ": not a directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_directory() && fs::exists(e.path() / "chip.png")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorCode::NotFound, path.string() + ": no occluders");
  std::vector<Occluder> out;
  for (const auto& d : dirs) out.push_back(load_occluder(d));
  return out;
}

}  // namespace irscene::io
