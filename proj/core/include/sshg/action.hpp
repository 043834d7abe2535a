#pragma once

#include "sshg/fields.hpp"
#include "sshg/spin_spectral.hpp"

namespace sshg {

struct ActionParams {
  double rho = 0.5;
  /// Largest admissible max|u| on the grid.
  double u_cap = 50.0;
};

/// rho = 2 pi mu b^2.
double rho_from_physics(double mu, double b);

enum class Representation {
  /// Linear functional data: pairs with directions through the L^2 product.
  dual,
  /// Riesz representative in H^1 x H^{1/2}.
  riesz,
};

struct Variation {
  ScalarField du;
  SpinorField dpsi;
  Representation rep = Representation::dual;

  FieldPair fields() const { return {du, dpsi}; }
};

Variation to_riesz(const Variation& v, const SpectralBasis& basis);
Variation to_dual(const Variation& v, const SpectralBasis& basis);
/// Pairs a dual variation with a direction (L^2 on both factors).
double pair(const Variation& dual, const FieldPair& direction, const SpectralBasis& basis);
/// Norm in H^{-1} x H^{-1/2} (dual) or H^1 x H^{1/2} (riesz), per component.
double scalar_norm(const Variation& v, const SpectralBasis& basis);
double spinor_norm(const Variation& v, const SpectralBasis& basis);
double norm(const Variation& v, const SpectralBasis& basis);

/// Throws domain error when max|u| exceeds the cap.
void check_overflow(const ScalarField& u, const ActionParams& params);

double evaluate_J(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                  const SpectralBasis& basis);
inline double evaluate_J(const FieldPair& x, const ActionParams& params, const SpectralBasis& basis) {
  return evaluate_J(x.u, x.psi, params, basis);
}

/// First variation as dual data:
/// du = -2 Delta u + 8 rho^2 sinh u cosh u - 8 rho sinh(u) |psi|^2,
/// dpsi = 16 (D psi - rho P_V(cosh(u) psi)).
Variation gradient_J(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                     const SpectralBasis& basis);

struct ElResidual {
  /// (Delta u - 2 rho^2 sinh 2u + 4 rho sinh(u)|psi|^2, D psi - rho cosh(u) psi), dual.
  Variation residual;
  double res_u_norm = 0.0;
  double res_psi_norm = 0.0;
};

ElResidual el_residual(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                       const SpectralBasis& basis);

/// Second variation at (u, psi) applied to a Riesz-tagged direction; dual result.
Variation hess_vec(const ScalarField& u, const SpinorField& psi, const Variation& direction,
                   const ActionParams& params, const SpectralBasis& basis);
Variation hess_vec(const ScalarField& u, const SpinorField& psi, const FieldPair& direction,
                   const ActionParams& params, const SpectralBasis& basis);

}  // namespace sshg
