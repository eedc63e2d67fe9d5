#pragma once

#include <cstddef>
#include <vector>

#include "mitoforge/imaging.hpp"

namespace mitoforge {

struct FdaParams {
  // Fraction of the spectrum covered by the low-frequency window, in [0, 1].
  double beta = 0.01;
};

// Half-extents of the DC-centred window: floor(beta * rows / 2) and
// floor(beta * cols / 2). beta = 0 still swaps the DC bin.
struct FdaWindow {
  std::size_t half_rows = 0;
  std::size_t half_cols = 0;
};

FdaWindow fda_window(std::size_t rows, std::size_t cols, double beta);

// Signed frequency of an unshifted DFT bin, i.e. its offset from the centre
// bin (index size / 2) after an fftshift.
std::ptrdiff_t signed_frequency(std::size_t index, std::size_t size) noexcept;

// True when unshifted bin (u, v) falls inside the window. The window is
// closed under the conjugate mirror (u, v) -> (-u, -v), so swapping it keeps
// the spectrum of a real image Hermitian.
bool in_fda_window(std::size_t u, std::size_t v, std::size_t rows,
                   std::size_t cols, const FdaWindow& window) noexcept;

// Real parts of the inverse transform before clamping, interleaved like
// ImageBuffer::data(). Exposed for spectral diagnostics.
std::vector<double> fda_transfer_unclamped(const ImageBuffer& source,
                                           const ImageBuffer& target,
                                           const FdaParams& params);

// Fourier domain adaptation: per channel, the source amplitude inside the
// low-frequency window is replaced by the target's while the source phase is
// kept everywhere. The target is first resize_pad'ed to the source shape.
// Output is clamped to [0, 1].
ImageBuffer fda_transfer(const ImageBuffer& source, const ImageBuffer& target,
                         const FdaParams& params);

}  // namespace mitoforge
