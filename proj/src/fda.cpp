#include "mitoforge/fda.hpp"

#include <algorithm>
#include <cmath>

#include "mitoforge/error.hpp"
#include "mitoforge/fft.hpp"

namespace mitoforge {

FdaWindow fda_window(std::size_t rows, std::size_t cols, double beta) {
  require(beta >= 0.0 && beta <= 1.0, "fda: beta must lie in [0, 1]");
  return {static_cast<std::size_t>(std::floor(beta * static_cast<double>(rows) / 2.0)),
          static_cast<std::size_t>(std::floor(beta * static_cast<double>(cols) / 2.0))};
}

std::ptrdiff_t signed_frequency(std::size_t index, std::size_t size) noexcept {
  const std::size_t center = size / 2;
  const auto i = static_cast<std::ptrdiff_t>(index);
  return index + center < size ? i : i - static_cast<std::ptrdiff_t>(size);
}

bool in_fda_window(std::size_t u, std::size_t v, std::size_t rows,
                   std::size_t cols, const FdaWindow& window) noexcept {
  const auto fu = signed_frequency(u, rows);
  const auto fv = signed_frequency(v, cols);
  return static_cast<std::size_t>(std::abs(fu)) <= window.half_rows &&
         static_cast<std::size_t>(std::abs(fv)) <= window.half_cols;
}

std::vector<double> fda_transfer_unclamped(const ImageBuffer& source,
                                           const ImageBuffer& target,
                                           const FdaParams& params) {
  if (source.empty()) fail(ErrorKind::InvalidInput, "fda: empty source image");
  if (target.empty()) fail(ErrorKind::InvalidInput, "fda: empty target image");
  const std::size_t rows = source.height();
  const std::size_t cols = source.width();
  const FdaWindow window = fda_window(rows, cols, params.beta);

  const ImageBuffer fitted = (target.height() == rows && target.width() == cols)
                                 ? target
                                 : resize_pad_to(target, rows, cols);

  std::vector<bool> mask(rows * cols);
  for (std::size_t u = 0; u < rows; ++u) {
    for (std::size_t v = 0; v < cols; ++v) {
      mask[u * cols + v] = in_fda_window(u, v, rows, cols, window);
    }
  }

  const std::size_t n = rows * cols;
  std::vector<double> out(n * ImageBuffer::kChannels);
  std::vector<double> plane(n);
  for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
    for (std::size_t i = 0; i < n; ++i) plane[i] = source.data()[i * 3 + c];
    auto spectrum = fft2d(plane, rows, cols);
    for (std::size_t i = 0; i < n; ++i) plane[i] = fitted.data()[i * 3 + c];
    const auto target_spectrum = fft2d(plane, rows, cols);

    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) {
        spectrum[i] = std::polar(std::abs(target_spectrum[i]), std::arg(spectrum[i]));
      }
    }
    const auto restored = ifft2d(spectrum, rows, cols);
    for (std::size_t i = 0; i < n; ++i) out[i * 3 + c] = restored[i].real();
  }
  return out;
}

ImageBuffer fda_transfer(const ImageBuffer& source, const ImageBuffer& target,
                         const FdaParams& params) {
  auto values = fda_transfer_unclamped(source, target, params);
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return ImageBuffer(source.height(), source.width(), std::move(values));
}

}  // namespace mitoforge
