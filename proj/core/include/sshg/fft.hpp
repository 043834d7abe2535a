#pragma once

#include <complex>
#include <memory>
#include <span>

namespace sshg {

using cd = std::complex<double>;

/// Square 2D complex FFT of side n backed by FFTW plans.
///
/// Plans are created once (under a global lock, FFTW's planner is not
/// reentrant) and executed through the new-array interface, so a single
/// instance may be shared across threads.
class Fft2d {
 public:
  explicit Fft2d(int n);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  int n() const noexcept { return n_; }

  /// out_k = n^-2 * sum_j in_j exp(-2 pi i k.j / n). `in` and `out` must not alias.
  void forward(std::span<const cd> in, std::span<cd> out) const;
  /// out_j = sum_k in_k exp(+2 pi i k.j / n). `in` and `out` must not alias.
  void inverse(std::span<const cd> in, std::span<cd> out) const;

 private:
  struct Plans;
  int n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace sshg
