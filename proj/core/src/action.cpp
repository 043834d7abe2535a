#include "sshg/action.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sshg/errors.hpp"

namespace sshg {

double rho_from_physics(double mu, double b) {
  if (!(mu > 0.0) || !(b > 0.0)) fail(ErrorKind::config, "mu and b must be positive");
  return 2.0 * std::numbers::pi * mu * b * b;
}

Variation to_riesz(const Variation& v, const SpectralBasis& basis) {
  if (v.rep == Representation::riesz) return v;
  return {scalar_weight(v.du, -1.0, basis), spinor_weight(v.dpsi, -1.0, basis),
          Representation::riesz};
}

Variation to_dual(const Variation& v, const SpectralBasis& basis) {
  if (v.rep == Representation::dual) return v;
  return {scalar_weight(v.du, 1.0, basis), spinor_weight(v.dpsi, 1.0, basis),
          Representation::dual};
}

double pair(const Variation& dual, const FieldPair& direction, const SpectralBasis& basis) {
  if (dual.rep != Representation::dual) fail(ErrorKind::shape, "pairing requires dual data");
  return l2_inner(dual.du, direction.u, basis) + l2_inner(dual.dpsi, direction.psi, basis);
}

double scalar_norm(const Variation& v, const SpectralBasis& basis) {
  return sobolev_norm(v.du,
                      v.rep == Representation::dual ? SobolevSpace::Hminus1_scalar
                                                    : SobolevSpace::H1_scalar,
                      basis);
}

double spinor_norm(const Variation& v, const SpectralBasis& basis) {
  return sobolev_norm(v.dpsi,
                      v.rep == Representation::dual ? SobolevSpace::Hminus_half_spinor
                                                    : SobolevSpace::Hhalf_spinor,
                      basis);
}

double norm(const Variation& v, const SpectralBasis& basis) {
  return std::hypot(scalar_norm(v, basis), spinor_norm(v, basis));
}

void check_overflow(const ScalarField& u, const ActionParams& params) {
  double m = 0.0;
  for (double x : u.values) {
    if (!std::isfinite(x)) fail(ErrorKind::domain, "non-finite value in u");
    m = std::max(m, std::abs(x));
  }
  if (m > params.u_cap) {
    std::ostringstream os;
    os << "overflow guard: max|u| = " << m << " exceeds u_cap = " << params.u_cap;
    fail(ErrorKind::domain, os.str());
  }
}

double evaluate_J(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                  const SpectralBasis& basis) {
  basis.check(u);
  basis.check(psi);
  check_overflow(u, params);
  const double rho = params.rho;
  const auto uh = basis.scalar_to_fourier(u);
  double grad_sq = 0.0;
  for (std::size_t p = 0; p < uh.size(); ++p) grad_sq += basis.scalar_xi_sq(p) * std::norm(uh[p]);
  grad_sq *= basis.geometry().volume();

  const double dirac = l2_inner(dirac_apply(psi, basis), psi, basis);
  const ScalarField dens = basis.density(psi);
  double pot = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double s = std::sinh(u.values[p]);
    pot += -8.0 * rho * std::cosh(u.values[p]) * dens.values[p] + 4.0 * rho * rho * s * s;
  }
  pot *= basis.geometry().weight();
  return grad_sq + 8.0 * dirac + pot;
}

Variation gradient_J(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                     const SpectralBasis& basis) {
  basis.check(u);
  basis.check(psi);
  check_overflow(u, params);
  const double rho = params.rho;
  Variation g;
  g.rep = Representation::dual;
  g.du = laplace_apply(u, basis);
  g.du *= -2.0;
  const ScalarField dens = basis.density(psi);
  ScalarField ch(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double s = std::sinh(u.values[p]), c = std::cosh(u.values[p]);
    g.du.values[p] += 8.0 * rho * rho * s * c - 8.0 * rho * s * dens.values[p];
    ch.values[p] = rho * c;
  }
  g.dpsi = dirac_apply(psi, basis);
  g.dpsi -= basis.multiply(ch, psi);
  g.dpsi *= 16.0;
  return g;
}

ElResidual el_residual(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                       const SpectralBasis& basis) {
  Variation g = gradient_J(u, psi, params, basis);
  g.du *= -0.5;
  g.dpsi *= 1.0 / 16.0;
  ElResidual r;
  r.res_u_norm = scalar_norm(g, basis);
  r.res_psi_norm = spinor_norm(g, basis);
  r.residual = std::move(g);
  return r;
}

Variation hess_vec(const ScalarField& u, const SpinorField& psi, const FieldPair& direction,
                   const ActionParams& params, const SpectralBasis& basis) {
  basis.check(u);
  basis.check(psi);
  basis.check(direction.u);
  basis.check(direction.psi);
  check_overflow(u, params);
  const double rho = params.rho;
  const ScalarField& v = direction.u;
  const SpinorField& phi = direction.psi;

  Variation h;
  h.rep = Representation::dual;
  h.du = laplace_apply(v, basis);
  h.du *= -2.0;
  const ScalarField dens = basis.density(psi);
  const ScalarField cross = basis.pointwise_inner(psi, phi);
  ScalarField ch(u.size()), shv(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double x = u.values[p];
    const double s = std::sinh(x), c = std::cosh(x);
    h.du.values[p] += 8.0 * rho * rho * std::cosh(2.0 * x) * v.values[p] -
                      8.0 * rho * c * dens.values[p] * v.values[p] -
                      16.0 * rho * s * cross.values[p];
    ch.values[p] = rho * c;
    shv.values[p] = rho * s * v.values[p];
  }
  h.dpsi = dirac_apply(phi, basis);
  h.dpsi -= basis.multiply(ch, phi);
  h.dpsi -= basis.multiply(shv, psi);
  h.dpsi *= 16.0;
  return h;
}

Variation hess_vec(const ScalarField& u, const SpinorField& psi, const Variation& direction,
                   const ActionParams& params, const SpectralBasis& basis) {
  if (direction.rep != Representation::riesz)
    fail(ErrorKind::precondition, "hess_vec expects a direction (Riesz-tagged variation)");
  return hess_vec(u, psi, direction.fields(), params, basis);
}

}  // namespace sshg
