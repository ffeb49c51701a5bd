#pragma once

/**
 * @file image.hpp
 * @brief Rasters, CIELab feature images, label maps and patch access.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nnsc/error.hpp"

namespace nnsc {

struct PixelPos {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(PixelPos, PixelPos) = default;
};

/// 8-bit interleaved raster as read from disk (1 = gray, 3 = RGB).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Raster() = default;
  Raster(int w, int h, int c) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1 || (c != 1 && c != 3))
      throw InputError("raster: invalid dimensions " + std::to_string(w) + "x" +
                       std::to_string(h) + "x" + std::to_string(c));
    data.assign(static_cast<std::size_t>(w) * h * c, 0);
  }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  void validate() const {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3) ||
        data.size() != static_cast<std::size_t>(width) * height * channels)
      throw InputError("raster: malformed dimensions");
  }
};

/// Feature image in CIELab (3 channels) or lightness only (1 channel).
class LabImage {
 public:
  LabImage() = default;
  LabImage(int width, int height, int channels)
      : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3))
      throw InputError("lab image: invalid dimensions");
    data_.assign(static_cast<std::size_t>(width) * height * channels, 0.0f);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool contains(PixelPos p) const noexcept {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }

  float& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::span<const float> pixel(int x, int y) const {
    return {data_.data() + (static_cast<std::size_t>(y) * width_ + x) * channels_,
            static_cast<std::size_t>(channels_)};
  }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Per-pixel superpixel ids, row-major.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, std::int32_t fill = 0)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) throw InputError("label map: invalid dimensions");
    labels_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  LabelMap(int width, int height, std::vector<std::int32_t> labels)
      : width_(width), height_(height), labels_(std::move(labels)) {
    if (width < 1 || height < 1 ||
        labels_.size() != static_cast<std::size_t>(width) * height)
      throw InputError("label map: size does not match dimensions");
    if (std::any_of(labels_.begin(), labels_.end(), [](auto l) { return l < 0; }))
      throw InputError("label map: negative label");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::int32_t& at(int x, int y) { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::int32_t at(int x, int y) const {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::int32_t& at(PixelPos p) { return at(p.x, p.y); }
  std::int32_t at(PixelPos p) const { return at(p.x, p.y); }
  std::int32_t& operator[](std::size_t i) { return labels_[i]; }
  std::int32_t operator[](std::size_t i) const { return labels_[i]; }

  std::span<const std::int32_t> labels() const noexcept { return labels_; }

  /// One past the largest label present.
  std::int32_t label_count() const noexcept {
    if (labels_.empty()) return 0;
    return *std::max_element(labels_.begin(), labels_.end()) + 1;
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int32_t> labels_;
};

/// Square patch of odd side length.
class PatchSpec {
 public:
  explicit PatchSpec(int side = 7) : side_(side) {
    if (side < 1 || side % 2 == 0)
      throw InputError("patch side must be odd and >= 1, got " + std::to_string(side));
  }
  int side() const noexcept { return side_; }
  int radius() const noexcept { return side_ / 2; }
  int n() const noexcept { return side_ * side_; }

 private:
  int side_;
};

namespace detail {

inline double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double eps = 216.0 / 24389.0;
  constexpr double kappa = 24389.0 / 27.0;
  return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

}  // namespace detail

/// sRGB (D65) to CIELab. The white point is the row sum of the RGB->XYZ
/// matrix, so neutral grays map exactly onto the L axis.
inline LabImage rgb_to_lab(const Raster& rgb) {
  rgb.validate();
  if (rgb.channels != 3) throw InputError("rgb_to_lab: expected 3 channels");

  constexpr std::array<std::array<double, 3>, 3> m{{
      {0.4124564, 0.3575761, 0.1804375},
      {0.2126729, 0.7151522, 0.0721750},
      {0.0193339, 0.1191920, 0.9503041},
  }};
  const double xn = m[0][0] + m[0][1] + m[0][2];
  const double yn = m[1][0] + m[1][1] + m[1][2];
  const double zn = m[2][0] + m[2][1] + m[2][2];

  std::array<double, 256> lin{};
  for (int v = 0; v < 256; ++v) lin[v] = detail::srgb_to_linear(v / 255.0);

  LabImage out(rgb.width, rgb.height, 3);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      const double r = lin[rgb.at(x, y, 0)];
      const double g = lin[rgb.at(x, y, 1)];
      const double b = lin[rgb.at(x, y, 2)];
      const double fx = detail::lab_f((m[0][0] * r + m[0][1] * g + m[0][2] * b) / xn);
      const double fy = detail::lab_f((m[1][0] * r + m[1][1] * g + m[1][2] * b) / yn);
      const double fz = detail::lab_f((m[2][0] * r + m[2][1] * g + m[2][2] * b) / zn);
      out.at(x, y, 0) = static_cast<float>(std::clamp(116.0 * fy - 16.0, 0.0, 100.0));
      out.at(x, y, 1) = static_cast<float>(500.0 * (fx - fy));
      out.at(x, y, 2) = static_cast<float>(200.0 * (fy - fz));
    }
  }
  return out;
}

/// Gray levels mapped linearly onto L in [0, 100].
inline LabImage gray_to_lab(const Raster& gray) {
  gray.validate();
  if (gray.channels != 1) throw InputError("gray_to_lab: expected 1 channel");
  LabImage out(gray.width, gray.height, 1);
  auto dst = out.data();
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    dst[i] = static_cast<float>(100.0 * gray.data[i] / 255.0);
  return out;
}

inline LabImage to_lab(const Raster& raster) {
  return raster.channels == 1 ? gray_to_lab(raster) : rgb_to_lab(raster);
}

/// side x side neighborhood around center, border-replicated. Layout is
/// row-major over the window with channels interleaved per pixel.
inline std::vector<float> patch_at(const LabImage& image, PixelPos center, const PatchSpec& spec) {
  const int r = spec.radius();
  const int c = image.channels();
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(spec.n()) * c);
  for (int dy = -r; dy <= r; ++dy) {
    const int y = std::clamp(center.y + dy, 0, image.height() - 1);
    for (int dx = -r; dx <= r; ++dx) {
      const int x = std::clamp(center.x + dx, 0, image.width() - 1);
      for (int ch = 0; ch < c; ++ch) out.push_back(image.at(x, y, ch));
    }
  }
  return out;
}

/// L2 norm of the patch difference over all channels, divided by sqrt(n):
/// the root-mean-square per-pixel difference of the two patches.
inline double patch_distance(const LabImage& image, PixelPos a, PixelPos b, const PatchSpec& spec) {
  if (a == b) return 0.0;
  const int r = spec.radius();
  const int c = image.channels();
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    const int ya = std::clamp(a.y + dy, 0, image.height() - 1);
    const int yb = std::clamp(b.y + dy, 0, image.height() - 1);
    for (int dx = -r; dx <= r; ++dx) {
      const int xa = std::clamp(a.x + dx, 0, image.width() - 1);
      const int xb = std::clamp(b.x + dx, 0, image.width() - 1);
      for (int ch = 0; ch < c; ++ch) {
        const double d = static_cast<double>(image.at(xa, ya, ch)) - image.at(xb, yb, ch);
        sum += d * d;
      }
    }
  }
  return std::sqrt(sum / spec.n());
}

/// Border-replicated copy of an image padded by the patch radius, so that
/// every patch row is one contiguous run of side * channels values.
/// Distances agree with patch_distance up to float rounding.
class PaddedImage {
 public:
  PaddedImage(const LabImage& image, const PatchSpec& spec)
      : width_(image.width()),
        height_(image.height()),
        channels_(image.channels()),
        side_(spec.side()),
        radius_(spec.radius()),
        n_(spec.n()) {
    const int pw = width_ + 2 * radius_;
    const int ph = height_ + 2 * radius_;
    stride_ = static_cast<std::size_t>(pw) * channels_;
    data_.resize(stride_ * ph);
    for (int y = 0; y < ph; ++y) {
      const int sy = std::clamp(y - radius_, 0, height_ - 1);
      for (int x = 0; x < pw; ++x) {
        const int sx = std::clamp(x - radius_, 0, width_ - 1);
        for (int c = 0; c < channels_; ++c)
          data_[y * stride_ + static_cast<std::size_t>(x) * channels_ + c] = image.at(sx, sy, c);
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int patch_n() const noexcept { return n_; }

  /// Sum of squared differences between the patches centered at a and b.
  float squared_distance(PixelPos a, PixelPos b) const noexcept {
    // Top-left corner of the patch in padded coordinates is (x, y).
    const float* pa = data_.data() + a.y * stride_ + static_cast<std::size_t>(a.x) * channels_;
    const float* pb = data_.data() + b.y * stride_ + static_cast<std::size_t>(b.x) * channels_;
    const int run = side_ * channels_;
    constexpr int lanes = 8;
    float acc[lanes] = {};
    float tail = 0.0f;
    for (int row = 0; row < side_; ++row) {
      int j = 0;
      for (; j + lanes <= run; j += lanes) {
        for (int k = 0; k < lanes; ++k) {
          const float d = pa[j + k] - pb[j + k];
          acc[k] += d * d;
        }
      }
      for (; j < run; ++j) {
        const float d = pa[j] - pb[j];
        tail += d * d;
      }
      pa += stride_;
      pb += stride_;
    }
    float sum = tail;
    for (float v : acc) sum += v;
    return sum;
  }

  double distance(PixelPos a, PixelPos b) const noexcept {
    if (a == b) return 0.0;
    return std::sqrt(static_cast<double>(squared_distance(a, b)) / n_);
  }

 private:
  int width_;
  int height_;
  int channels_;
  int side_;
  int radius_;
  int n_;
  std::size_t stride_ = 0;
  std::vector<float> data_;
};

}  // namespace nnsc
