#include "sshg/spin_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "sshg/errors.hpp"

namespace sshg {

namespace {

constexpr double kGapTol = 1e-9;

cd twist_phase(double d1, double d2, int a, int b, int n) {
  const double arg = 2.0 * std::numbers::pi * (d1 * a + d2 * b) / n;
  return {std::cos(arg), std::sin(arg)};
}

/// e^{i theta} = (xi1 + i xi2) / |xi| for a nonzero frequency.
cd unit_phase(double x1, double x2) {
  const double r = std::hypot(x1, x2);
  return {x1 / r, x2 / r};
}

}  // namespace

void TorusGeometry::validate() const {
  for (double d : spin_delta) {
    if (d != 0.0 && d != 0.5) {
      std::ostringstream os;
      os << "spin_delta components must be 0 or 1/2, got " << d;
      fail(ErrorKind::config, os.str());
    }
  }
  if (!(side_length > 0.0) || !std::isfinite(side_length))
    fail(ErrorKind::config, "side_length must be positive");
  if (grid_n < 8 || grid_n % 2 != 0) {
    std::ostringstream os;
    os << "grid_n must be even and >= 8, got " << grid_n;
    fail(ErrorKind::resolution, os.str());
  }
}

SpectralBasis::SpectralBasis(const TorusGeometry& geom, double cutoff)
    : geom_(geom), cutoff_(cutoff) {
  geom_.validate();
  if (!(cutoff >= 0.0)) fail(ErrorKind::config, "cutoff must be nonnegative");
  if (cutoff > geom_.nyquist_cutoff() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "cutoff " << cutoff << " exceeds the Nyquist bound " << geom_.nyquist_cutoff();
    fail(ErrorKind::resolution, os.str());
  }

  const int n = geom_.grid_n;
  const std::size_t np = geom_.points();
  const double unit = geom_.frequency_unit();
  const double d1 = geom_.spin_delta[0], d2 = geom_.spin_delta[1];
  const int s1 = static_cast<int>(2 * d1), s2 = static_cast<int>(2 * d2);

  fft_ = std::make_shared<const Fft2d>(n);
  active_.assign(np, 0);
  xi1_.resize(np);
  xi2_.resize(np);
  abs_xi_.resize(np);
  scalar_xi_sq_.resize(np);
  mirror_.resize(np);
  twist_.resize(np);

  auto wrap = [n](int k) { return static_cast<std::size_t>(((k % n) + n) % n); };

  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const std::size_t p = static_cast<std::size_t>(a) * n + b;
      const int k1 = signed_index(a), k2 = signed_index(b);
      xi1_[p] = (k1 + d1) * unit;
      xi2_[p] = (k2 + d2) * unit;
      abs_xi_[p] = std::hypot(xi1_[p], xi2_[p]);
      scalar_xi_sq_[p] = (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2) * unit * unit;
      mirror_[p] = wrap(-k1 - s1) * n + wrap(-k2 - s2);
      twist_[p] = twist_phase(d1, d2, a, b, n);
      if (abs_xi_[p] <= cutoff * (1.0 + 1e-12) + 1e-14) {
        active_[p] = 1;
        active_list_.push_back(p);
      }
    }
  }

  for (std::size_t p : active_list_) {
    const int k1 = signed_index(static_cast<int>(p) / n);
    const int k2 = signed_index(static_cast<int>(p) % n);
    if (abs_xi_[p] == 0.0) {
      for (int comp = 0; comp < 2; ++comp)
        for (bool im : {false, true})
          harmonic_.push_back({p, k1, k2, 0, im, comp, 0.0});
      continue;
    }
    for (int sign : {1, -1})
      for (bool im : {false, true})
        entries_.push_back({p, k1, k2, sign, im, 0, sign * abs_xi_[p]});
  }
  harmonic_dim_ = static_cast<int>(harmonic_.size());

  auto key = [s1, s2](const BasisEntry& e) {
    const long t1 = 2L * e.k1 + s1, t2 = 2L * e.k2 + s2;
    return std::make_tuple(t1 * t1 + t2 * t2, e.k1, e.k2, -e.sign, e.imaginary_phase);
  };
  std::sort(entries_.begin(), entries_.end(),
            [&](const BasisEntry& x, const BasisEntry& y) { return key(x) < key(y); });
  entries_.insert(entries_.begin(), harmonic_.begin(), harmonic_.end());
  for (const auto& e : entries_)
    if (e.sign > 0) positive_.push_back(e);
}

double SpectralBasis::eigenvalue(long j) const {
  if (j == 0) fail(ErrorKind::parameter, "eigenvalue index must be nonzero");
  const std::size_t idx = static_cast<std::size_t>(std::labs(j)) - 1;
  if (idx >= positive_.size()) fail(ErrorKind::resolution, "eigenvalue index beyond cutoff");
  return j > 0 ? positive_[idx].lambda : -positive_[idx].lambda;
}

SpinorField SpectralBasis::entry_spinor(const BasisEntry& e) const {
  SpinorField out = zero_spinor();
  const std::size_t np = points();
  const double inv = 1.0 / std::sqrt(geom_.volume());
  const cd phase = e.imaginary_phase ? cd(0.0, 1.0) : cd(1.0, 0.0);
  if (e.sign == 0) {
    out.coeffs[e.component * np + e.mode] = phase * inv;
    return out;
  }
  const cd eith = unit_phase(xi1_[e.mode], xi2_[e.mode]);
  const double r = inv / std::sqrt(2.0);
  cd c0 = phase * r, c1 = -phase * eith * r;
  if (e.sign < 0) {
    c0 *= cd(0.0, -1.0);
    c1 *= cd(0.0, 1.0);
  }
  out.coeffs[e.mode] = c0;
  out.coeffs[np + e.mode] = c1;
  return out;
}

SpinorField SpectralBasis::eigenspinor(long j) const {
  if (j == 0) fail(ErrorKind::parameter, "eigenspinor index must be nonzero");
  const std::size_t idx = static_cast<std::size_t>(std::labs(j)) - 1;
  if (idx >= positive_.size()) fail(ErrorKind::resolution, "eigenspinor index beyond cutoff");
  BasisEntry e = positive_[idx];
  if (j < 0) {
    e.sign = -1;
    e.lambda = -e.lambda;
  }
  return entry_spinor(e);
}

SpinorField SpectralBasis::harmonic(int l) const {
  if (l < 0 || l >= harmonic_dim_) fail(ErrorKind::parameter, "harmonic index out of range");
  return entry_spinor(harmonic_[static_cast<std::size_t>(l)]);
}

std::vector<std::pair<double, int>> SpectralBasis::distinct_positive() const {
  std::vector<std::pair<double, int>> out;
  for (const auto& e : positive_) {
    if (!out.empty() && std::abs(out.back().first - e.lambda) <= 1e-12 * e.lambda)
      ++out.back().second;
    else
      out.emplace_back(e.lambda, 1);
  }
  return out;
}

void SpectralBasis::require_gap(double rho) const {
  auto gap_error = [rho](double lambda) {
    std::ostringstream os;
    os.precision(17);
    os << "rho = " << rho << " lies within 1e-9 of the eigenvalue " << lambda;
    fail(ErrorKind::spectral_gap, os.str());
  };
  if (harmonic_dim_ > 0 && std::abs(rho) < kGapTol) gap_error(0.0);
  for (const auto& [lambda, mult] : distinct_positive()) {
    (void)mult;
    if (std::abs(std::abs(rho) - lambda) < kGapTol) gap_error(rho < 0 ? -lambda : lambda);
  }
}

std::size_t SpectralBasis::count_below(double rho) const {
  require_gap(rho);
  return static_cast<std::size_t>(
      std::count_if(positive_.begin(), positive_.end(),
                    [rho](const BasisEntry& e) { return e.lambda < rho; }));
}

void SpectralBasis::check(const ScalarField& u) const {
  if (u.size() != points()) fail(ErrorKind::shape, "scalar field does not match the grid");
}

void SpectralBasis::check(const SpinorField& psi) const {
  if (psi.size() != spinor_size()) fail(ErrorKind::shape, "spinor field does not match the grid");
}

void SpectralBasis::spinor_to_grid(const SpinorField& psi, std::vector<cd>& g0,
                                   std::vector<cd>& g1) const {
  check(psi);
  const std::size_t np = points();
  g0.resize(np);
  g1.resize(np);
  std::span<const cd> all(psi.coeffs);
  fft_->inverse(all.subspan(0, np), g0);
  fft_->inverse(all.subspan(np, np), g1);
  for (std::size_t p = 0; p < np; ++p) {
    g0[p] *= twist_[p];
    g1[p] *= twist_[p];
  }
}

SpinorField SpectralBasis::spinor_from_grid(const std::vector<cd>& g0,
                                            const std::vector<cd>& g1) const {
  const std::size_t np = points();
  if (g0.size() != np || g1.size() != np) fail(ErrorKind::shape, "grid spinor size mismatch");
  std::vector<cd> tmp(np);
  SpinorField out = zero_spinor();
  std::span<cd> all(out.coeffs);
  for (int c = 0; c < 2; ++c) {
    const auto& g = c == 0 ? g0 : g1;
    for (std::size_t p = 0; p < np; ++p) tmp[p] = g[p] * std::conj(twist_[p]);
    fft_->forward(tmp, all.subspan(c * np, np));
  }
  for (std::size_t p = 0; p < np; ++p) {
    if (!active_[p]) {
      out.coeffs[p] = 0.0;
      out.coeffs[np + p] = 0.0;
    }
  }
  return out;
}

std::vector<cd> SpectralBasis::scalar_to_fourier(const ScalarField& u) const {
  check(u);
  std::vector<cd> in(u.values.begin(), u.values.end()), out(points());
  fft_->forward(in, out);
  return out;
}

ScalarField SpectralBasis::scalar_from_fourier(const std::vector<cd>& coeffs) const {
  if (coeffs.size() != points()) fail(ErrorKind::shape, "scalar coefficient size mismatch");
  std::vector<cd> out(points());
  fft_->inverse(coeffs, out);
  ScalarField u(points());
  for (std::size_t p = 0; p < points(); ++p) u.values[p] = out[p].real();
  return u;
}

SpinorField SpectralBasis::multiply(const ScalarField& f, const SpinorField& psi) const {
  check(f);
  std::vector<cd> g0, g1;
  spinor_to_grid(psi, g0, g1);
  for (std::size_t p = 0; p < points(); ++p) {
    g0[p] *= f.values[p];
    g1[p] *= f.values[p];
  }
  return spinor_from_grid(g0, g1);
}

ScalarField SpectralBasis::density(const SpinorField& psi) const {
  std::vector<cd> g0, g1;
  spinor_to_grid(psi, g0, g1);
  ScalarField out(points());
  for (std::size_t p = 0; p < points(); ++p) out.values[p] = std::norm(g0[p]) + std::norm(g1[p]);
  return out;
}

ScalarField SpectralBasis::pointwise_inner(const SpinorField& psi, const SpinorField& phi) const {
  std::vector<cd> a0, a1, b0, b1;
  spinor_to_grid(psi, a0, a1);
  spinor_to_grid(phi, b0, b1);
  ScalarField out(points());
  for (std::size_t p = 0; p < points(); ++p)
    out.values[p] = (std::conj(a0[p]) * b0[p] + std::conj(a1[p]) * b1[p]).real();
  return out;
}

SpectralBasis build_basis(const TorusGeometry& geom, double cutoff) {
  return SpectralBasis(geom, cutoff);
}

SpectralBasis build_basis(const TorusGeometry& geom) {
  geom.validate();
  return SpectralBasis(geom, geom.nyquist_cutoff());
}

SpinorField dirac_apply(const SpinorField& psi, const SpectralBasis& basis) {
  basis.check(psi);
  const std::size_t np = basis.points();
  SpinorField out = basis.zero_spinor();
  for (std::size_t p : basis.active_modes()) {
    const cd minus(basis.xi1(p), -basis.xi2(p));  // xi1 - i xi2
    const cd plus(basis.xi1(p), basis.xi2(p));
    out.coeffs[p] = -minus * psi.coeffs[np + p];
    out.coeffs[np + p] = -plus * psi.coeffs[p];
  }
  return out;
}

ScalarField laplace_apply(const ScalarField& u, const SpectralBasis& basis) {
  auto c = basis.scalar_to_fourier(u);
  for (std::size_t p = 0; p < c.size(); ++p) c[p] *= -basis.scalar_xi_sq(p);
  return basis.scalar_from_fourier(c);
}

SpinorField fractional_apply(const SpinorField& psi, double s, const SpectralBasis& basis) {
  basis.check(psi);
  const std::size_t np = basis.points();
  SpinorField out = basis.zero_spinor();
  for (std::size_t p : basis.active_modes()) {
    const double a = basis.abs_xi(p);
    double m;
    if (a > 0.0) {
      m = std::pow(a, s);
    } else if (s > 0.0) {
      m = 0.0;
    } else if (s == 0.0) {
      m = 1.0;
    } else {
      if (psi.coeffs[p] != 0.0 || psi.coeffs[np + p] != 0.0)
        fail(ErrorKind::ill_posed, "negative power of |D| applied to a harmonic component");
      m = 0.0;
    }
    out.coeffs[p] = m * psi.coeffs[p];
    out.coeffs[np + p] = m * psi.coeffs[np + p];
  }
  return out;
}

double l2_inner(const ScalarField& a, const ScalarField& b, const SpectralBasis& basis) {
  basis.check(a);
  basis.check(b);
  double s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) s += a.values[p] * b.values[p];
  return s * basis.geometry().weight();
}

double l2_inner(const SpinorField& a, const SpinorField& b, const SpectralBasis& basis) {
  basis.check(a);
  basis.check(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (std::conj(a.coeffs[i]) * b.coeffs[i]).real();
  return s * basis.geometry().volume();
}

double sobolev_inner(const ScalarField& a, const ScalarField& b, SobolevSpace space,
                     const SpectralBasis& basis) {
  double power;
  if (space == SobolevSpace::H1_scalar)
    power = 1.0;
  else if (space == SobolevSpace::Hminus1_scalar)
    power = -1.0;
  else
    fail(ErrorKind::shape, "spinor Sobolev space requested for a scalar field");
  const auto fa = basis.scalar_to_fourier(a);
  const auto fb = basis.scalar_to_fourier(b);
  double s = 0.0;
  for (std::size_t p = 0; p < fa.size(); ++p)
    s += std::pow(1.0 + basis.scalar_xi_sq(p), power) * (std::conj(fa[p]) * fb[p]).real();
  return s * basis.geometry().volume();
}

double sobolev_inner(const SpinorField& a, const SpinorField& b, SobolevSpace space,
                     const SpectralBasis& basis) {
  double power;
  if (space == SobolevSpace::Hhalf_spinor)
    power = 1.0;
  else if (space == SobolevSpace::Hminus_half_spinor)
    power = -1.0;
  else
    fail(ErrorKind::shape, "scalar Sobolev space requested for a spinor field");
  basis.check(a);
  basis.check(b);
  const std::size_t np = basis.points();
  double s = 0.0;
  for (std::size_t p : basis.active_modes()) {
    const double w = power > 0 ? 1.0 + basis.abs_xi(p) : 1.0 / (1.0 + basis.abs_xi(p));
    s += w * ((std::conj(a.coeffs[p]) * b.coeffs[p]).real() +
              (std::conj(a.coeffs[np + p]) * b.coeffs[np + p]).real());
  }
  return s * basis.geometry().volume();
}

double sobolev_norm(const ScalarField& a, SobolevSpace space, const SpectralBasis& basis) {
  return std::sqrt(std::max(0.0, sobolev_inner(a, a, space, basis)));
}

double sobolev_norm(const SpinorField& a, SobolevSpace space, const SpectralBasis& basis) {
  return std::sqrt(std::max(0.0, sobolev_inner(a, a, space, basis)));
}

SpinorField spinor_weight(const SpinorField& psi, double power, const SpectralBasis& basis) {
  basis.check(psi);
  const std::size_t np = basis.points();
  SpinorField out = basis.zero_spinor();
  for (std::size_t p : basis.active_modes()) {
    const double w = power == 1.0    ? 1.0 + basis.abs_xi(p)
                     : power == -1.0 ? 1.0 / (1.0 + basis.abs_xi(p))
                                     : std::pow(1.0 + basis.abs_xi(p), power);
    out.coeffs[p] = w * psi.coeffs[p];
    out.coeffs[np + p] = w * psi.coeffs[np + p];
  }
  return out;
}

ScalarField scalar_weight(const ScalarField& u, double power, const SpectralBasis& basis) {
  auto c = basis.scalar_to_fourier(u);
  for (std::size_t p = 0; p < c.size(); ++p) c[p] *= std::pow(1.0 + basis.scalar_xi_sq(p), power);
  return basis.scalar_from_fourier(c);
}

SpinorField project(const SpinorField& psi, Subspace subspace, const SpectralBasis& basis,
                    double rho) {
  basis.check(psi);
  if (subspace == Subspace::plus_a || subspace == Subspace::plus_b) basis.require_gap(rho);
  const std::size_t np = basis.points();
  const double r2 = 1.0 / std::sqrt(2.0);
  SpinorField out = basis.zero_spinor();
  for (std::size_t p : basis.active_modes()) {
    const cd c0 = psi.coeffs[p], c1 = psi.coeffs[np + p];
    const double lam = basis.abs_xi(p);
    if (lam == 0.0) {
      if (subspace == Subspace::zero) {
        out.coeffs[p] = c0;
        out.coeffs[np + p] = c1;
      }
      continue;
    }
    bool keep_plus = false, keep_minus = false;
    switch (subspace) {
      case Subspace::plus: keep_plus = true; break;
      case Subspace::minus: keep_minus = true; break;
      case Subspace::zero: break;
      case Subspace::plus_a: keep_plus = lam > rho; break;
      case Subspace::plus_b: keep_plus = lam < rho; break;
    }
    if (!keep_plus && !keep_minus) continue;
    // v_plus = (1, -e^{i theta}) / sqrt 2
    const cd e = unit_phase(basis.xi1(p), basis.xi2(p));
    const cd v0 = r2, v1 = -e * r2;
    const cd a = std::conj(v0) * c0 + std::conj(v1) * c1;
    const cd p0 = a * v0, p1 = a * v1;
    if (keep_plus) {
      out.coeffs[p] = p0;
      out.coeffs[np + p] = p1;
    } else {
      out.coeffs[p] = c0 - p0;
      out.coeffs[np + p] = c1 - p1;
    }
  }
  return out;
}

SpinorField omega_mult(const SpinorField& psi, const SpectralBasis& basis) {
  basis.check(psi);
  const std::size_t np = basis.points();
  SpinorField out = basis.zero_spinor();
  for (std::size_t p = 0; p < np; ++p) {
    out.coeffs[p] = cd(0.0, -1.0) * psi.coeffs[p];
    out.coeffs[np + p] = cd(0.0, 1.0) * psi.coeffs[np + p];
  }
  return out;
}

SpinorField quaternion_j(const SpinorField& psi, const SpectralBasis& basis) {
  basis.check(psi);
  const std::size_t np = basis.points();
  SpinorField out = basis.zero_spinor();
  for (std::size_t p : basis.active_modes()) {
    const std::size_t q = basis.mirror_mode(p);
    out.coeffs[q] = std::conj(psi.coeffs[np + p]);
    out.coeffs[np + q] = -std::conj(psi.coeffs[p]);
  }
  return out;
}

std::array<std::array<cd, 4>, 2> clifford_generators() {
  const cd i(0.0, 1.0);
  return {{{0.0, i, i, 0.0}, {0.0, 1.0, -1.0, 0.0}}};
}

}  // namespace sshg
