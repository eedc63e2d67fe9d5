#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace mitoforge {

using Rgb = std::array<double, 3>;

// H x W x 3 raster, row-major and channel-interleaved, values in [0, 1].
class ImageBuffer {
 public:
  static constexpr std::size_t kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(std::size_t height, std::size_t width, double fill = 0.0);
  // Takes ownership of `data`; its length must be height * width * 3 and all
  // values must lie in [0, 1].
  ImageBuffer(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return kChannels; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) noexcept {
    return data_[(y * width_ + x) * kChannels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return data_[(y * width_ + x) * kChannels + c];
  }

  Rgb pixel(std::size_t y, std::size_t x) const noexcept {
    const double* p = &data_[(y * width_ + x) * kChannels];
    return {p[0], p[1], p[2]};
  }
  void set_pixel(std::size_t y, std::size_t x, const Rgb& v) noexcept;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

enum class Border { Clamp, Constant };

// Bilinear is the only interpolation mode.
struct Interpolator {
  Border border = Border::Clamp;
  double fill = 0.0;  // used when border == Constant

  static Interpolator clamp() { return {Border::Clamp, 0.0}; }
  static Interpolator constant(double value) { return {Border::Constant, value}; }
};

// Bilinear sample at (x, y) in pixel coordinates (x = column, y = row).
// Integer coordinates return the stored pixel exactly. With Clamp the
// coordinate is clamped into [0, W-1] x [0, H-1]; with Constant, taps that
// fall outside the image contribute the fill value.
Rgb sample_bilinear(const ImageBuffer& img, double x, double y,
                    const Interpolator& interp);

// Fit `img` into a height x width box preserving aspect ratio (bilinear,
// half-pixel centers), centered, zero padding. Odd remainders put the extra
// row/column on the bottom/right.
ImageBuffer resize_pad_to(const ImageBuffer& img, std::size_t height,
                          std::size_t width);

inline ImageBuffer resize_pad(const ImageBuffer& img, std::size_t side) {
  return resize_pad_to(img, side, side);
}

// v -> clamp(contrast * (v - 0.5) + 0.5 + brightness, 0, 1); contrast > 0.
ImageBuffer brightness_contrast(const ImageBuffer& img, double brightness,
                                double contrast);

// Rotates content counter-clockwise (as displayed, y pointing down) by
// `degrees` about the image center. Multiples of 90 degrees use exact
// trigonometric values, so they reduce to index permutations.
ImageBuffer rotate(const ImageBuffer& img, double degrees,
                   const Interpolator& interp = Interpolator::clamp());

// Exact cos/sin for multiples of 90 degrees; std::cos/std::sin otherwise.
std::array<double, 2> cos_sin_degrees(double degrees);

// PNG I/O. Files are 8-bit RGB: grayscale is replicated, alpha dropped,
// 16-bit samples reduced to 8. Loading maps v -> v/255; storing maps
// v -> round(v * 255).
ImageBuffer load_png(const std::filesystem::path& path);
void save_png(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace mitoforge
