#include "mitoforge/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mitoforge/error.hpp"

namespace mitoforge {

namespace {

double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

}  // namespace

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width),
      data_(height * width * kChannels, clamp01(fill)) {}

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width,
                         std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  require(data_.size() == height_ * width_ * kChannels,
          "image data length " + std::to_string(data_.size()) +
              " does not match " + std::to_string(height_) + "x" +
              std::to_string(width_) + "x3");
  for (double v : data_) {
    require(v >= 0.0 && v <= 1.0, "image values must lie in [0, 1]");
  }
}

void ImageBuffer::set_pixel(std::size_t y, std::size_t x,
                            const Rgb& v) noexcept {
  double* p = &data_[(y * width_ + x) * kChannels];
  p[0] = v[0];
  p[1] = v[1];
  p[2] = v[2];
}

Rgb sample_bilinear(const ImageBuffer& img, double x, double y,
                    const Interpolator& interp) {
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  if (w == 0 || h == 0) fail(ErrorKind::InvalidInput, "sampling an empty image");

  if (interp.border == Border::Clamp) {
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  }
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double tx = x - fx;
  const double ty = y - fy;
  const auto x0 = static_cast<std::ptrdiff_t>(fx);
  const auto y0 = static_cast<std::ptrdiff_t>(fy);

  auto tap = [&](std::ptrdiff_t yy, std::ptrdiff_t xx, std::size_t c) {
    if (xx < 0 || yy < 0 || xx >= w || yy >= h) {
      if (interp.border == Border::Clamp) {
        xx = std::clamp<std::ptrdiff_t>(xx, 0, w - 1);
        yy = std::clamp<std::ptrdiff_t>(yy, 0, h - 1);
      } else {
        return interp.fill;
      }
    }
    return img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c);
  };

  Rgb out{};
  for (std::size_t c = 0; c < 3; ++c) {
    const double top = (1.0 - tx) * tap(y0, x0, c) + tx * tap(y0, x0 + 1, c);
    const double bot =
        (1.0 - tx) * tap(y0 + 1, x0, c) + tx * tap(y0 + 1, x0 + 1, c);
    out[c] = clamp01((1.0 - ty) * top + ty * bot);
  }
  return out;
}

ImageBuffer resize_pad_to(const ImageBuffer& img, std::size_t height,
                          std::size_t width) {
  if (img.empty()) fail(ErrorKind::InvalidInput, "resize_pad: empty image");
  require(height >= 1 && width >= 1, "resize_pad: target side must be >= 1");

  const std::size_t src_h = img.height();
  const std::size_t src_w = img.width();

  // Active region: the limiting dimension fills the box exactly, the other is
  // scaled by the same factor and rounded to the nearest pixel.
  std::size_t act_h = height;
  std::size_t act_w = width;
  if (src_h * width >= src_w * height) {
    act_w = (2 * src_w * height + src_h) / (2 * src_h);
  } else {
    act_h = (2 * src_h * width + src_w) / (2 * src_w);
  }
  act_h = std::clamp<std::size_t>(act_h, 1, height);
  act_w = std::clamp<std::size_t>(act_w, 1, width);

  const std::size_t top = (height - act_h) / 2;
  const std::size_t left = (width - act_w) / 2;
  const double ry = static_cast<double>(src_h) / static_cast<double>(act_h);
  const double rx = static_cast<double>(src_w) / static_cast<double>(act_w);
  const auto interp = Interpolator::clamp();

  ImageBuffer out(height, width, 0.0);
  for (std::size_t oy = 0; oy < act_h; ++oy) {
    const double sy = (static_cast<double>(oy) + 0.5) * ry - 0.5;
    for (std::size_t ox = 0; ox < act_w; ++ox) {
      const double sx = (static_cast<double>(ox) + 0.5) * rx - 0.5;
      out.set_pixel(top + oy, left + ox, sample_bilinear(img, sx, sy, interp));
    }
  }
  return out;
}

ImageBuffer brightness_contrast(const ImageBuffer& img, double brightness,
                                double contrast) {
  require(contrast > 0.0, "brightness_contrast: contrast must be > 0");
  require(std::isfinite(brightness) && std::isfinite(contrast),
          "brightness_contrast: parameters must be finite");
  ImageBuffer out = img;
  // Written as v + (contrast - 1)(v - 0.5) + brightness so neutral parameters
  // reproduce v bit-exactly.
  for (double& v : out.data()) {
    v = clamp01(v + (contrast - 1.0) * (v - 0.5) + brightness);
  }
  return out;
}

std::array<double, 2> cos_sin_degrees(double degrees) {
  double r = std::fmod(degrees, 360.0);
  if (r < 0.0) r += 360.0;
  if (r == 0.0) return {1.0, 0.0};
  if (r == 90.0) return {0.0, 1.0};
  if (r == 180.0) return {-1.0, 0.0};
  if (r == 270.0) return {0.0, -1.0};
  const double rad = r * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

ImageBuffer rotate(const ImageBuffer& img, double degrees,
                   const Interpolator& interp) {
  require(std::isfinite(degrees), "rotate: angle must be finite");
  if (img.empty()) return img;
  const auto [c, s] = cos_sin_degrees(degrees);
  const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;

  ImageBuffer out(img.height(), img.width(), 0.0);
  for (std::size_t y = 0; y < img.height(); ++y) {
    const double dy = static_cast<double>(y) - cy;
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double dx = static_cast<double>(x) - cx;
      // Inverse map: rotate the destination offset by -angle.
      const double sx = cx + (c * dx - s * dy);
      const double sy = cy + (s * dx + c * dy);
      out.set_pixel(y, x, sample_bilinear(img, sx, sy, interp));
    }
  }
  return out;
}

}  // namespace mitoforge
