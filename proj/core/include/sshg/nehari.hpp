#pragma once

#include <optional>

#include "sshg/action.hpp"
#include "sshg/iterative.hpp"

namespace sshg {

/// H^{1/2} norms of the rho-splitting psi = psi+_a + psi+_b + psi0 + psi-.
struct SplitNorms {
  double plus_a = 0.0;
  double plus_b = 0.0;
  double zero = 0.0;
  double minus = 0.0;
};

struct NehariPoint {
  ScalarField u;
  SpinorField psi;
  /// ||G(u, psi)||_{H^{1/2}} measured after the solve.
  double constraint_norm = 0.0;
  /// Empty when rho sits on the spectrum and the a/b split is undefined.
  std::optional<SplitNorms> split;

  FieldPair fields() const { return {u, psi}; }
};

struct MultiplierData {
  /// Negative-subspace multiplier phi, scaled so that the constrained
  /// Euler-Lagrange system reads dJ - 16 dG^*(phi) = 0 with G taken without
  /// the (1 + |D|)^{-1} factor.
  SpinorField varphi;
  /// Residual of the normal equations relative to max(1, ||rhs||).
  double solve_residual = 0.0;
  SolveReport report;
};

struct ConstrainedGradient {
  /// Riesz representative of dJ restricted to the tangent space.
  Variation tangent;
  double norm = 0.0;
  /// dJ - 16 dG^*(phi) as dual data.
  Variation residual;
  MultiplierData multiplier;
  /// ||residual_u||_{H^-1} / 2 and ||residual_psi||_{H^-1/2} / 16; these reduce
  /// to the Euler-Lagrange residual norms when phi = 0.
  double alpha = 0.0;
  double beta = 0.0;
};

/// Certification threshold for ||G||_{H^{1/2}}.
inline constexpr double kConstraintTol = 1e-10;

SpinorField constraint_G(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                         const SpectralBasis& basis);

/// Derivative of P^-(D psi - rho P_V(cosh(u) psi)) in direction (v, chi).
SpinorField constraint_derivative(const ScalarField& u, const SpinorField& psi,
                                  const FieldPair& direction, const ActionParams& params,
                                  const SpectralBasis& basis);

/// Solves for the negative part so that (u, psi_free + psi-) lies on the
/// manifold. psi_free must have no negative component. `warm` (optional) is an
/// initial guess for psi-.
NehariPoint fiber_solve(const ScalarField& u, const SpinorField& psi_free,
                        const ActionParams& params, const SpectralBasis& basis,
                        const SpinorField* warm = nullptr, SolveReport* report = nullptr);

/// Keeps u and the non-negative part of psi and re-solves the negative part.
NehariPoint project_to_manifold(const ScalarField& u, const SpinorField& psi,
                                const ActionParams& params, const SpectralBasis& basis);
inline NehariPoint project_to_manifold(const FieldPair& x, const ActionParams& params,
                                       const SpectralBasis& basis) {
  return project_to_manifold(x.u, x.psi, params, basis);
}

/// Split norms for psi, or empty when rho is within the spectral-gap tolerance.
std::optional<SplitNorms> split_norms(const SpinorField& psi, double rho, const SpectralBasis& basis);

MultiplierData lagrange_multiplier(const NehariPoint& point, const ActionParams& params,
                                   const SpectralBasis& basis);

ConstrainedGradient constrained_gradient(const NehariPoint& point, const ActionParams& params,
                                         const SpectralBasis& basis);

}  // namespace sshg
