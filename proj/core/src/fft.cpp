#include "sshg/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "sshg/errors.hpp"

namespace sshg {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::shape: return "shape";
    case ErrorKind::domain: return "domain";
    case ErrorKind::spectral_gap: return "spectral_gap";
    case ErrorKind::ill_posed: return "ill_posed";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::format: return "format";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

struct Fft2d::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

Fft2d::Fft2d(int n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n <= 0) fail(ErrorKind::shape, "FFT size must be positive");
  std::vector<cd> a(static_cast<std::size_t>(n) * n), b(a.size());
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_2d(n, n, pa, pb, FFTW_FORWARD, flags);
  plans_->inv = fftw_plan_dft_2d(n, n, pa, pb, FFTW_BACKWARD, flags);
  if (!plans_->fwd || !plans_->inv) fail(ErrorKind::internal, "FFTW planning failed");
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
  if (plans_->inv) fftw_destroy_plan(plans_->inv);
}

void Fft2d::forward(std::span<const cd> in, std::span<cd> out) const {
  const std::size_t total = static_cast<std::size_t>(n_) * n_;
  if (in.size() != total || out.size() != total) fail(ErrorKind::shape, "FFT buffer size mismatch");
  // Out-of-place complex transforms preserve their input.
  fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(const_cast<cd*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(total);
  for (auto& z : out) z *= scale;
}

void Fft2d::inverse(std::span<const cd> in, std::span<cd> out) const {
  const std::size_t total = static_cast<std::size_t>(n_) * n_;
  if (in.size() != total || out.size() != total) fail(ErrorKind::shape, "FFT buffer size mismatch");
  fftw_execute_dft(plans_->inv, reinterpret_cast<fftw_complex*>(const_cast<cd*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace sshg
