#include "mitoforge/fisheye.hpp"

#include <cmath>

#include "mitoforge/error.hpp"

namespace mitoforge {

double fisheye_source_radius(double r_dest, double k) noexcept {
  return r_dest * (1.0 + k * r_dest * r_dest) / (1.0 + k);
}

ImageBuffer fisheye(const ImageBuffer& img, const FisheyeParams& params) {
  if (img.empty()) fail(ErrorKind::InvalidInput, "fisheye: empty image");
  require(img.height() == img.width(), "fisheye: image must be square");
  require(std::isfinite(params.k) && params.k > -1.0,
          "fisheye: coefficient k must satisfy k > -1");

  const double k = params.k;
  const auto side = static_cast<double>(img.width());
  const double center = (side - 1.0) / 2.0;
  const double half = side / 2.0;

  ImageBuffer out(img.height(), img.width(), 0.0);
  for (std::size_t y = 0; y < img.height(); ++y) {
    const double dy = static_cast<double>(y) - center;
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double dx = static_cast<double>(x) - center;
      const double r2 = (dx * dx + dy * dy) / (half * half);
      // r_src / r_dest, applied to the offset so the polar angle is kept and
      // k = 0 gives a factor of exactly 1.
      const double factor = (1.0 + k * r2) / (1.0 + k);
      out.set_pixel(y, x,
                    sample_bilinear(img, center + dx * factor,
                                    center + dy * factor, params.interp));
    }
  }
  return out;
}

}  // namespace mitoforge
