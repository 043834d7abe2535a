#pragma once

#include <cmath>
#include <random>

#include "sshg/spin_spectral.hpp"

namespace sshg::testing {

inline TorusGeometry geometry(int n, double d1 = 0.5, double d2 = 0.5) {
  TorusGeometry g;
  g.grid_n = n;
  g.spin_delta = {d1, d2};
  return g;
}

/// Smooth random scalar: a few low Fourier modes plus a constant.
inline ScalarField random_scalar(const SpectralBasis& basis, std::mt19937_64& rng, double amp = 0.5,
                                 int kmax = 3) {
  std::normal_distribution<double> nd;
  const TorusGeometry& g = basis.geometry();
  ScalarField u(basis.points());
  const int n = g.grid_n;
  const double unit = g.frequency_unit(), h = g.spacing();
  u.values.assign(u.size(), amp * 0.3 * nd(rng));
  for (int k1 = 0; k1 <= kmax; ++k1) {
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const double a = amp * nd(rng) / (1 + k1 * k1 + k2 * k2);
      const double b = amp * nd(rng) / (1 + k1 * k1 + k2 * k2);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double arg = unit * h * (k1 * i + k2 * j);
          u.values[static_cast<std::size_t>(i) * n + j] += a * std::cos(arg) + b * std::sin(arg);
        }
    }
  }
  return u;
}

/// Random spinor on the active modes with algebraic decay in |xi|.
inline SpinorField random_spinor(const SpectralBasis& basis, std::mt19937_64& rng, double amp = 1.0,
                                 double decay = 2.0) {
  std::normal_distribution<double> nd;
  SpinorField psi = basis.zero_spinor();
  const std::size_t np = basis.points();
  const double w = amp / std::sqrt(basis.geometry().volume());
  for (std::size_t p : basis.active_modes()) {
    const double s = w / std::pow(1.0 + basis.abs_xi(p), decay);
    psi.coeffs[p] = s * cd(nd(rng), nd(rng));
    psi.coeffs[np + p] = s * cd(nd(rng), nd(rng));
  }
  return psi;
}

inline double max_abs(const SpinorField& a) {
  double m = 0.0;
  for (auto z : a.coeffs) m = std::max(m, std::abs(z));
  return m;
}

inline double max_abs(const ScalarField& a) {
  double m = 0.0;
  for (auto x : a.values) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace sshg::testing
