#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mitoforge {

using Complex = std::complex<double>;

// Unnormalised forward 2D DFT of a rows x cols real field (row-major):
//   X[u, v] = sum_{y, x} f[y, x] exp(-2 pi i (u y / rows + v x / cols))
// Output is the full complex spectrum, row-major, DC at index 0.
std::vector<Complex> fft2d(std::span<const double> field, std::size_t rows,
                           std::size_t cols);

// Inverse 2D DFT including the 1 / (rows * cols) normalisation.
std::vector<Complex> ifft2d(std::span<const Complex> spectrum, std::size_t rows,
                            std::size_t cols);

}  // namespace mitoforge
