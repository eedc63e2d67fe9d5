#include "mitoforge/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "mitoforge/error.hpp"

namespace mitoforge {

namespace {

struct FftwFree {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex, FftwFree>;

FftwBuffer allocate(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer(p);
}

// FFTW planning is not thread-safe; executing an existing plan on new arrays
// is. Plans are created once per (rows, cols, sign) under a lock and reused.
// FFTW_ESTIMATE keeps plan selection independent of timing, so results are
// reproducible run to run.
fftw_plan plan_for(std::size_t rows, std::size_t cols, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans;

  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(rows, cols, sign);
  if (auto it = plans.find(key); it != plans.end()) return it->second;

  auto in = allocate(rows * cols);
  auto out = allocate(rows * cols);
  fftw_plan plan =
      fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), in.get(),
                       out.get(), sign, FFTW_ESTIMATE);
  if (plan == nullptr) fail(ErrorKind::InvalidInput, "FFTW planning failed");
  plans.emplace(key, plan);
  return plan;
}

std::vector<Complex> execute(const FftwBuffer& in, std::size_t rows,
                             std::size_t cols, int sign) {
  const std::size_t n = rows * cols;
  auto out = allocate(n);
  fftw_execute_dft(plan_for(rows, cols, sign), in.get(), out.get());
  std::vector<Complex> result(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = {out.get()[i][0], out.get()[i][1]};
  return result;
}

}  // namespace

std::vector<Complex> fft2d(std::span<const double> field, std::size_t rows,
                           std::size_t cols) {
  require(rows > 0 && cols > 0 && field.size() == rows * cols,
          "fft2d: field size does not match shape");
  auto in = allocate(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    in.get()[i][0] = field[i];
    in.get()[i][1] = 0.0;
  }
  return execute(in, rows, cols, FFTW_FORWARD);
}

std::vector<Complex> ifft2d(std::span<const Complex> spectrum, std::size_t rows,
                            std::size_t cols) {
  require(rows > 0 && cols > 0 && spectrum.size() == rows * cols,
          "ifft2d: spectrum size does not match shape");
  auto in = allocate(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    in.get()[i][0] = spectrum[i].real();
    in.get()[i][1] = spectrum[i].imag();
  }
  auto out = execute(in, rows, cols, FFTW_BACKWARD);
  const double norm = 1.0 / static_cast<double>(rows * cols);
  for (auto& z : out) z *= norm;
  return out;
}

}  // namespace mitoforge
