#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sshg {

using cd = std::complex<double>;

/// Real function on the torus, stored as grid samples in row-major order
/// (index a*n + b for the point (a*h, b*h)).
struct ScalarField {
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(std::size_t size, double fill = 0.0) : values(size, fill) {}

  std::size_t size() const noexcept { return values.size(); }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double a);
  /// this += a * x
  ScalarField& axpy(double a, const ScalarField& x);
};

/// Two-component spinor field stored by Fourier coefficients over the twisted
/// modes k + delta, FFT ordering, component 0 in [0, n^2) and component 1 in
/// [n^2, 2 n^2). Coefficients outside the active mode set are kept at zero.
struct SpinorField {
  std::vector<cd> coeffs;

  SpinorField() = default;
  explicit SpinorField(std::size_t size) : coeffs(size) {}

  std::size_t size() const noexcept { return coeffs.size(); }

  SpinorField& operator+=(const SpinorField& o);
  SpinorField& operator-=(const SpinorField& o);
  SpinorField& operator*=(double a);
  SpinorField& axpy(double a, const SpinorField& x);
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
SpinorField operator+(SpinorField a, const SpinorField& b);
SpinorField operator-(SpinorField a, const SpinorField& b);
SpinorField operator*(double s, SpinorField a);

/// A point (u, psi) of the configuration space, also used for tangent directions.
struct FieldPair {
  ScalarField u;
  SpinorField psi;

  FieldPair& operator+=(const FieldPair& o);
  FieldPair& operator-=(const FieldPair& o);
  FieldPair& operator*=(double a);
  FieldPair& axpy(double a, const FieldPair& x);
};

FieldPair operator+(FieldPair a, const FieldPair& b);
FieldPair operator-(FieldPair a, const FieldPair& b);
FieldPair operator*(double s, FieldPair a);

}  // namespace sshg
