#pragma once

/**
 * @file io.hpp
 * @brief Image and label-map files: 8-bit PNG/PGM/PPM rasters, label maps
 *        as 16-bit grayscale PNG or CSV, and key=value manifests.
 *
 * CSV label maps start with a `width,height` line followed by one line of
 * comma-separated labels per image row.
 */

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nnsc/error.hpp"
#include "nnsc/image.hpp"
#include "nnsc/metrics.hpp"

namespace nnsc {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw InputError("cannot open '" + path + "'");
  return f;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    const char a = s[s.size() - suffix.size() + i];
    const char b = suffix[i];
    if (std::tolower(static_cast<unsigned char>(a)) != b) return false;
  }
  return true;
}

/// Decoded PNG samples, 8 or 16 bits per sample, rows packed.
struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

inline void png_error_to_buffer(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  std::longjmp(png_jmpbuf(png), 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

inline PngData read_png(const std::string& path) {
  FilePtr file = open_file(path, "rb");
  std::string message;
  PngData out;
  std::vector<png_bytep> rows;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_to_buffer, png_warning_ignore);
  if (!png) throw InputError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw InputError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("png '" + path + "': " + message);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);  // native little-endian 16-bit samples
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

inline void write_png(const std::string& path, int width, int height, int channels, int bit_depth,
                      const std::vector<std::uint8_t>& bytes) {
  FilePtr file = open_file(path, "wb");
  std::string message;
  std::vector<png_bytep> rows(height);
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(bytes.data() + rowbytes * y);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_to_buffer, png_warning_ignore);
  if (!png) throw InputError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw InputError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("png '" + path + "': " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline Raster read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw InputError("pnm '" + path + "': only binary P5/P6 supported");
  auto next_int = [&](const char* what) {
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    int v = 0;
    if (!(in >> v)) throw InputError("pnm '" + path + "': bad " + std::string(what));
    return v;
  };
  const int w = next_int("width");
  const int h = next_int("height");
  const int maxval = next_int("maxval");
  if (maxval < 1 || maxval > 255) throw InputError("pnm '" + path + "': only 8-bit samples supported");
  in.get();
  Raster r(w, h, magic == "P5" ? 1 : 3);
  in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(r.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(r.data.size()))
    throw InputError("pnm '" + path + "': truncated pixel data");
  return r;
}

}  // namespace detail

/// Reads an 8-bit gray or RGB PNG, or a binary PGM/PPM.
inline Raster read_image(const std::string& path) {
  unsigned char sig[8] = {};
  {
    detail::FilePtr f = detail::open_file(path, "rb");
    if (std::fread(sig, 1, 8, f.get()) < 2) throw InputError("'" + path + "': file too short");
  }
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return detail::read_pnm(path);
  if (png_sig_cmp(sig, 0, 8) != 0) throw InputError("'" + path + "': not a PNG or binary PNM file");

  detail::PngData png = detail::read_png(path);
  if (png.bit_depth != 8) throw InputError("'" + path + "': 16-bit images are not supported");
  if (png.channels != 1 && png.channels != 3)
    throw InputError("'" + path + "': alpha channels are not supported");
  Raster r(png.width, png.height, png.channels);
  r.data = std::move(png.bytes);
  return r;
}

/// Writes an 8-bit PNG, or a PGM/PPM when the path ends in .pgm/.ppm.
inline void write_image(const std::string& path, const Raster& raster) {
  raster.validate();
  if (detail::ends_with(path, ".pgm") || detail::ends_with(path, ".ppm")) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "'");
    out << (raster.channels == 1 ? "P5" : "P6") << "\n"
        << raster.width << " " << raster.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.data.data()),
              static_cast<std::streamsize>(raster.data.size()));
    return;
  }
  detail::write_png(path, raster.width, raster.height, raster.channels, 8, raster.data);
}

/// Largest label count a 16-bit PNG label map can hold.
inline constexpr std::int64_t kPngLabelLimit = 65536;

inline void save_label_map_csv(const LabelMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "'");
  out << map.width() << "," << map.height() << "\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (x) out << ",";
      out << map.at(x, y);
    }
    out << "\n";
  }
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline void save_label_map_png(const LabelMap& map, const std::string& path) {
  if (map.label_count() > kPngLabelLimit)
    throw InputError("label overflow: " + std::to_string(map.label_count()) +
                     " labels exceed the 16-bit PNG limit of 65536; use .csv");
  std::vector<std::uint8_t> bytes(map.size() * 2);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(map[i]);
    bytes[2 * i] = static_cast<std::uint8_t>(v & 0xff);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(v >> 8);
  }
  detail::write_png(path, map.width(), map.height(), 1, 16, bytes);
}

/// CSV when the path ends in .csv, 16-bit grayscale PNG otherwise.
inline void save_label_map(const LabelMap& map, const std::string& path) {
  if (detail::ends_with(path, ".csv"))
    save_label_map_csv(map, path);
  else
    save_label_map_png(map, path);
}

inline LabelMap load_label_map_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string line;
  auto fail = [&](int lineno, std::size_t offset, const std::string& what) {
    return InputError(path + ":" + std::to_string(lineno) + ":" + std::to_string(offset + 1) +
                      ": " + what);
  };
  if (!std::getline(in, line)) throw fail(1, 0, "missing width,height header");
  int w = 0, h = 0;
  {
    char comma = 0;
    std::istringstream hs(line);
    if (!(hs >> w >> comma >> h) || comma != ',' || w < 1 || h < 1)
      throw fail(1, 0, "malformed width,height header");
  }
  std::vector<std::int32_t> labels;
  labels.reserve(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const int lineno = y + 2;
    if (!std::getline(in, line)) throw fail(lineno, 0, "missing row " + std::to_string(y));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = 0;
    for (int x = 0; x < w; ++x) {
      if (x > 0) {
        if (pos >= line.size() || line[pos] != ',') throw fail(lineno, pos, "expected ','");
        ++pos;
      }
      const std::size_t start = pos;
      std::int64_t v = 0;
      while (pos < line.size() && line[pos] >= '0' && line[pos] <= '9') {
        v = v * 10 + (line[pos] - '0');
        if (v > INT32_MAX) throw fail(lineno, start, "label out of range");
        ++pos;
      }
      if (pos == start) throw fail(lineno, pos, "expected a non-negative integer label");
      labels.push_back(static_cast<std::int32_t>(v));
    }
    if (pos != line.size()) throw fail(lineno, pos, "trailing characters after " + std::to_string(w) + " labels");
  }
  return LabelMap(w, h, std::move(labels));
}

inline LabelMap load_label_map_png(const std::string& path) {
  detail::PngData png = detail::read_png(path);
  if (png.channels != 1) throw InputError("label map '" + path + "': expected a grayscale PNG");
  std::vector<std::int32_t> labels(static_cast<std::size_t>(png.width) * png.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = png.bit_depth == 16
                    ? static_cast<std::int32_t>(png.bytes[2 * i] | (png.bytes[2 * i + 1] << 8))
                    : static_cast<std::int32_t>(png.bytes[i]);
  }
  return LabelMap(png.width, png.height, std::move(labels));
}

inline LabelMap load_label_map(const std::string& path) {
  if (detail::ends_with(path, ".csv")) return load_label_map_csv(path);
  unsigned char sig[8] = {};
  {
    detail::FilePtr f = detail::open_file(path, "rb");
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
      throw InputError("label map '" + path + "': not a PNG file (use .csv for text maps)");
  }
  return load_label_map_png(path);
}

/// Region ids are compacted to 0..G-1 in order of first appearance.
inline GroundTruth load_ground_truth(const std::string& path) {
  return GroundTruth::from_labels(load_label_map(path));
}

/// Ordered key=value text file.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = value;
        return;
      }
    entries_.emplace_back(key, value);
  }
  template <class T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    set(key, os.str());
  }

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return true;
    return false;
  }
  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    throw InputError("manifest: missing key '" + key + "'");
  }
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "'");
    out << str();
  }

  static Manifest read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    Manifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0)
        throw InputError(path + ":" + std::to_string(lineno) + ": expected key=value");
      m.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return m;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace nnsc
