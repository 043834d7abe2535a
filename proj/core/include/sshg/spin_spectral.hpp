#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "sshg/fft.hpp"
#include "sshg/fields.hpp"

namespace sshg {

struct TorusGeometry {
  double side_length = 2.0 * std::numbers::pi;
  int grid_n = 32;
  std::array<double, 2> spin_delta{0.5, 0.5};

  /// Throws config error on a bad spin structure, resolution error on a bad grid.
  void validate() const;

  std::size_t points() const { return static_cast<std::size_t>(grid_n) * grid_n; }
  double spacing() const { return side_length / grid_n; }
  /// Quadrature weight of one grid point.
  double weight() const { return spacing() * spacing(); }
  double volume() const { return side_length * side_length; }
  /// Dual lattice spacing 2 pi / L.
  double frequency_unit() const { return 2.0 * std::numbers::pi / side_length; }
  /// Largest admissible spinor cutoff, (n/2 - 1) 2 pi / L.
  double nyquist_cutoff() const { return (grid_n / 2 - 1) * frequency_unit(); }

  bool operator==(const TorusGeometry&) const = default;
};

enum class Subspace { plus, minus, zero, plus_a, plus_b };
enum class SobolevSpace { H1_scalar, Hhalf_spinor, Hminus_half_spinor, Hminus1_scalar };

/// One real basis direction of the spinor space.
///
/// For sign = +1 the spinor is phase * v_plus(xi) e^{i xi.x} / sqrt(Vol) with
/// phase in {1, i}; for sign = -1 it is omega applied to the sign = +1 entry.
/// Harmonic entries (sign = 0) are constant unit spinors along component
/// `component` with the given phase.
struct BasisEntry {
  std::size_t mode = 0;
  int k1 = 0;
  int k2 = 0;
  int sign = 0;
  bool imaginary_phase = false;
  int component = 0;
  double lambda = 0.0;
};

class SpectralBasis {
 public:
  SpectralBasis(const TorusGeometry& geom, double cutoff);

  const TorusGeometry& geometry() const noexcept { return geom_; }
  double cutoff() const noexcept { return cutoff_; }
  int grid_n() const noexcept { return geom_.grid_n; }
  std::size_t points() const noexcept { return geom_.points(); }
  std::size_t spinor_size() const noexcept { return 2 * geom_.points(); }

  /// Real dimension of ker D.
  int harmonic_dim() const noexcept { return harmonic_dim_; }
  /// Number of real basis directions with positive eigenvalue.
  std::size_t positive_count() const noexcept { return positive_.size(); }

  /// All basis directions: harmonic block first, then ordered by |k+delta|,
  /// lexicographically by k, positive before negative, real before imaginary phase.
  std::span<const BasisEntry> entries() const noexcept { return entries_; }

  /// lambda_j for j != 0; lambda_{-j} = -lambda_j.
  double eigenvalue(long j) const;
  /// Psi_j for j != 0, with Psi_{-j} = omega Psi_j.
  SpinorField eigenspinor(long j) const;
  /// Harmonic basis spinor Psi_{0,l}, 0 <= l < h.
  SpinorField harmonic(int l) const;
  SpinorField entry_spinor(const BasisEntry& e) const;

  /// Distinct positive eigenvalues in increasing order, with real multiplicities.
  std::vector<std::pair<double, int>> distinct_positive() const;
  /// Index k with lambda_k < rho < lambda_{k+1}, counted with multiplicity
  /// (0 if rho < lambda_1). Throws spectral-gap error when rho sits on the spectrum.
  std::size_t count_below(double rho) const;
  /// Throws spectral-gap error if rho is within 1e-9 of an eigenvalue (including 0 when h > 0).
  void require_gap(double rho) const;

  // Per-mode data, indexed in FFT order p = a*n + b.
  bool active(std::size_t p) const { return active_[p] != 0; }
  std::span<const std::size_t> active_modes() const noexcept { return active_list_; }
  /// Twisted spinor frequency (k + delta) 2 pi / L.
  double xi1(std::size_t p) const { return xi1_[p]; }
  double xi2(std::size_t p) const { return xi2_[p]; }
  double abs_xi(std::size_t p) const { return abs_xi_[p]; }
  /// Untwisted scalar |k|^2 (2 pi / L)^2.
  double scalar_xi_sq(std::size_t p) const { return scalar_xi_sq_[p]; }
  /// Signed integer wavenumber for FFT index i along one axis.
  int signed_index(int i) const { return i < geom_.grid_n / 2 ? i : i - geom_.grid_n; }
  /// FFT index of the mode -(k + delta) for the mode at p.
  std::size_t mirror_mode(std::size_t p) const { return mirror_[p]; }

  // Transforms.
  void spinor_to_grid(const SpinorField& psi, std::vector<cd>& g0, std::vector<cd>& g1) const;
  /// Truncated projection P_V of grid spinor samples onto the active modes.
  SpinorField spinor_from_grid(const std::vector<cd>& g0, const std::vector<cd>& g1) const;
  std::vector<cd> scalar_to_fourier(const ScalarField& u) const;
  ScalarField scalar_from_fourier(const std::vector<cd>& coeffs) const;

  /// P_V(f psi), the grid product truncated back onto the active modes.
  SpinorField multiply(const ScalarField& f, const SpinorField& psi) const;
  /// |psi(x)|^2 on the grid.
  ScalarField density(const SpinorField& psi) const;
  /// Re <psi(x), phi(x)> on the grid.
  ScalarField pointwise_inner(const SpinorField& psi, const SpinorField& phi) const;

  ScalarField zero_scalar() const { return ScalarField(points()); }
  SpinorField zero_spinor() const { return SpinorField(spinor_size()); }

  void check(const ScalarField& u) const;
  void check(const SpinorField& psi) const;

 private:
  TorusGeometry geom_;
  double cutoff_;
  int harmonic_dim_ = 0;
  std::shared_ptr<const Fft2d> fft_;
  std::vector<char> active_;
  std::vector<std::size_t> active_list_;
  std::vector<double> xi1_, xi2_, abs_xi_, scalar_xi_sq_;
  std::vector<std::size_t> mirror_;
  std::vector<cd> twist_;
  std::vector<BasisEntry> entries_;
  std::vector<BasisEntry> positive_;
  std::vector<BasisEntry> harmonic_;
};

/// Basis containing every mode with |k+delta| 2 pi / L <= cutoff.
SpectralBasis build_basis(const TorusGeometry& geom, double cutoff);
/// Basis at the largest admissible cutoff for the grid.
SpectralBasis build_basis(const TorusGeometry& geom);

/// Dirac operator D = sum gamma_j d_j with gamma_j = i sigma_j.
SpinorField dirac_apply(const SpinorField& psi, const SpectralBasis& basis);
/// Delta = div grad, Fourier symbol -|xi|^2.
ScalarField laplace_apply(const ScalarField& u, const SpectralBasis& basis);
/// |D|^s.
SpinorField fractional_apply(const SpinorField& psi, double s, const SpectralBasis& basis);

double l2_inner(const ScalarField& a, const ScalarField& b, const SpectralBasis& basis);
/// Real part of the Hermitian L^2 pairing.
double l2_inner(const SpinorField& a, const SpinorField& b, const SpectralBasis& basis);
double sobolev_inner(const ScalarField& a, const ScalarField& b, SobolevSpace space,
                     const SpectralBasis& basis);
double sobolev_inner(const SpinorField& a, const SpinorField& b, SobolevSpace space,
                     const SpectralBasis& basis);
double sobolev_norm(const ScalarField& a, SobolevSpace space, const SpectralBasis& basis);
double sobolev_norm(const SpinorField& a, SobolevSpace space, const SpectralBasis& basis);

/// Multiply each spinor mode by (1 + |xi|)^power.
SpinorField spinor_weight(const SpinorField& psi, double power, const SpectralBasis& basis);
/// Multiply each scalar mode by (1 + |xi|^2)^power.
ScalarField scalar_weight(const ScalarField& u, double power, const SpectralBasis& basis);

/// Spectral projection; rho is only consulted for plus_a and plus_b.
SpinorField project(const SpinorField& psi, Subspace subspace, const SpectralBasis& basis,
                    double rho = 0.0);

/// Clifford multiplication by the volume element, omega = gamma_1 gamma_2.
SpinorField omega_mult(const SpinorField& psi, const SpectralBasis& basis);
/// Quaternionic structure j(psi) = i sigma_2 conj(psi).
SpinorField quaternion_j(const SpinorField& psi, const SpectralBasis& basis);

/// Clifford symbol matrices gamma_1, gamma_2 (row-major 2x2).
std::array<std::array<cd, 4>, 2> clifford_generators();

}  // namespace sshg
