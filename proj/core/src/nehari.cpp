#include "sshg/nehari.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sshg/errors.hpp"

namespace sshg {

namespace {

ScalarField rho_cosh(const ScalarField& u, double rho) {
  ScalarField out(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) out.values[p] = rho * std::cosh(u.values[p]);
  return out;
}

ScalarField rho_sinh(const ScalarField& u, double rho) {
  ScalarField out(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) out.values[p] = rho * std::sinh(u.values[p]);
  return out;
}

/// Pieces of the linearized constraint at a fixed base point.
struct Linearization {
  const SpectralBasis& basis;
  const SpinorField& psi;
  ScalarField ch;  // rho cosh u
  ScalarField sh;  // rho sinh u

  Linearization(const ScalarField& u, const SpinorField& psi_, double rho, const SpectralBasis& b)
      : basis(b), psi(psi_), ch(rho_cosh(u, rho)), sh(rho_sinh(u, rho)) {}

  /// dF(v, chi) = P^-(D chi - P_V(ch chi) - P_V(sh v psi)).
  SpinorField forward(const FieldPair& d) const {
    SpinorField r = dirac_apply(d.psi, basis);
    r -= basis.multiply(ch, d.psi);
    ScalarField shv = sh;
    for (std::size_t p = 0; p < shv.size(); ++p) shv.values[p] *= d.u.values[p];
    r -= basis.multiply(shv, psi);
    return project(r, Subspace::minus, basis);
  }

  /// dF^*(eta) as dual data.
  FieldPair adjoint(const SpinorField& eta) const {
    FieldPair out;
    out.u = basis.pointwise_inner(psi, eta);
    for (std::size_t p = 0; p < out.u.size(); ++p) out.u.values[p] *= -sh.values[p];
    out.psi = dirac_apply(eta, basis);
    out.psi -= basis.multiply(ch, eta);
    return out;
  }
};

FieldPair riesz(const FieldPair& dual, const SpectralBasis& basis) {
  return {scalar_weight(dual.u, -1.0, basis), spinor_weight(dual.psi, -1.0, basis)};
}

}  // namespace

SpinorField constraint_G(const ScalarField& u, const SpinorField& psi, const ActionParams& params,
                         const SpectralBasis& basis) {
  check_overflow(u, params);
  SpinorField r = dirac_apply(psi, basis);
  r -= basis.multiply(rho_cosh(u, params.rho), psi);
  return project(spinor_weight(r, -1.0, basis), Subspace::minus, basis);
}

SpinorField constraint_derivative(const ScalarField& u, const SpinorField& psi,
                                  const FieldPair& direction, const ActionParams& params,
                                  const SpectralBasis& basis) {
  check_overflow(u, params);
  Linearization lin(u, psi, params.rho, basis);
  return spinor_weight(lin.forward(direction), -1.0, basis);
}

std::optional<SplitNorms> split_norms(const SpinorField& psi, double rho,
                                      const SpectralBasis& basis) {
  try {
    basis.require_gap(rho);
  } catch (const Error&) {
    return std::nullopt;
  }
  auto nrm = [&](Subspace s) {
    return sobolev_norm(project(psi, s, basis, rho), SobolevSpace::Hhalf_spinor, basis);
  };
  return SplitNorms{nrm(Subspace::plus_a), nrm(Subspace::plus_b), nrm(Subspace::zero),
                    nrm(Subspace::minus)};
}

NehariPoint fiber_solve(const ScalarField& u, const SpinorField& psi_free,
                        const ActionParams& params, const SpectralBasis& basis,
                        const SpinorField* warm, SolveReport* report) {
  basis.check(u);
  basis.check(psi_free);
  check_overflow(u, params);
  const SpinorField neg = project(psi_free, Subspace::minus, basis);
  const double scale = sobolev_norm(psi_free, SobolevSpace::Hhalf_spinor, basis);
  if (sobolev_norm(neg, SobolevSpace::Hhalf_spinor, basis) > 1e-12 * std::max(1.0, scale))
    fail(ErrorKind::precondition, "fiber_solve: free spinor has a negative component");

  const ScalarField ch = rho_cosh(u, params.rho);
  const SpinorField full = basis.multiply(ch, psi_free);
  SpinorField b = project(full, Subspace::minus, basis);
  b *= -1.0;

  auto apply_a = [&](const SpinorField& x) {
    SpinorField y = fractional_apply(x, 1.0, basis);
    y += project(basis.multiply(ch, x), Subspace::minus, basis);
    return y;
  };
  auto apply_m = [&](const SpinorField& x) { return spinor_weight(x, -1.0, basis); };
  auto dot = [&](const SpinorField& x, const SpinorField& y) { return l2_inner(x, y, basis); };

  SpinorField x = warm ? project(*warm, Subspace::minus, basis) : basis.zero_spinor();
  const double floor = 1e-15 * sobolev_norm(full, SobolevSpace::Hminus_half_spinor, basis);
  const SolveControl ctl{1e-12, 1e-13, 500, floor};
  const SolveReport rep = pcg(apply_a, apply_m, dot, b, x, ctl);
  if (report) *report = rep;
  if (!rep.converged) {
    std::ostringstream os;
    os << "fiber_solve did not converge in " << ctl.max_iter
       << " iterations; relative residual " << rep.relative();
    fail(ErrorKind::conditioning, os.str());
  }

  NehariPoint pt;
  pt.u = u;
  pt.psi = psi_free + x;
  pt.constraint_norm =
      sobolev_norm(constraint_G(pt.u, pt.psi, params, basis), SobolevSpace::Hhalf_spinor, basis);
  pt.split = split_norms(pt.psi, params.rho, basis);
  return pt;
}

NehariPoint project_to_manifold(const ScalarField& u, const SpinorField& psi,
                                const ActionParams& params, const SpectralBasis& basis) {
  basis.check(psi);
  const SpinorField neg = project(psi, Subspace::minus, basis);
  return fiber_solve(u, psi - neg, params, basis, &neg);
}

namespace {

struct MultiplierSolve {
  MultiplierData data;
  FieldPair dj;
};

MultiplierSolve solve_multiplier(const NehariPoint& point, const ActionParams& params,
                                 const SpectralBasis& basis) {
  const Variation g = gradient_J(point.u, point.psi, params, basis);
  Linearization lin(point.u, point.psi, params.rho, basis);
  const FieldPair dj = g.fields();

  SpinorField rhs = lin.forward(riesz(dj, basis));
  auto apply_s = [&](const SpinorField& eta) { return lin.forward(riesz(lin.adjoint(eta), basis)); };
  auto apply_m = [&](const SpinorField& x) { return spinor_weight(x, -1.0, basis); };
  auto dot = [&](const SpinorField& x, const SpinorField& y) { return l2_inner(x, y, basis); };

  SpinorField eta = basis.zero_spinor();
  const double scale = norm(g, basis);
  const SolveControl ctl{1e-12, 1e-12, 500, 1e-15 * scale};
  MultiplierSolve out;
  out.data.report = pcg(apply_s, apply_m, dot, rhs, eta, ctl);
  if (!out.data.report.converged) {
    std::ostringstream os;
    os << "multiplier solve did not converge; relative residual " << out.data.report.relative();
    fail(ErrorKind::conditioning, os.str());
  }
  SpinorField res = rhs - apply_s(eta);
  const double rn = std::sqrt(std::max(0.0, dot(res, apply_m(res))));
  out.data.solve_residual = rn / std::max({1.0, out.data.report.rhs_norm, scale});
  out.data.varphi = (1.0 / 16.0) * eta;
  out.dj = dj;
  return out;
}

}  // namespace

MultiplierData lagrange_multiplier(const NehariPoint& point, const ActionParams& params,
                                   const SpectralBasis& basis) {
  return solve_multiplier(point, params, basis).data;
}

ConstrainedGradient constrained_gradient(const NehariPoint& point, const ActionParams& params,
                                         const SpectralBasis& basis) {
  MultiplierSolve ms = solve_multiplier(point, params, basis);
  Linearization lin(point.u, point.psi, params.rho, basis);
  const FieldPair adj = lin.adjoint(16.0 * ms.data.varphi);

  ConstrainedGradient cg;
  cg.residual.rep = Representation::dual;
  cg.residual.du = ms.dj.u - adj.u;
  cg.residual.dpsi = ms.dj.psi - adj.psi;
  cg.tangent = to_riesz(cg.residual, basis);
  cg.norm = std::sqrt(std::max(0.0, pair(cg.residual, cg.tangent.fields(), basis)));
  cg.alpha = scalar_norm(cg.residual, basis) / 2.0;
  cg.beta = spinor_norm(cg.residual, basis) / 16.0;
  cg.multiplier = std::move(ms.data);
  return cg;
}

}  // namespace sshg
