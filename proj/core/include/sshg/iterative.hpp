#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace sshg {

struct SolveReport {
  int iterations = 0;
  /// Final residual in the preconditioner norm sqrt(r . M r).
  double residual = 0.0;
  double rhs_norm = 0.0;
  bool converged = false;

  double relative() const { return rhs_norm > 0.0 ? residual / rhs_norm : 0.0; }
};

struct SolveControl {
  double rel_tol = 1e-12;
  /// After rel_tol is met, keep iterating (within max_iter) until the residual
  /// also drops below this absolute level; 0 disables.
  double abs_target = 0.0;
  int max_iter = 500;
  /// Residuals at or below this level count as converged regardless of the
  /// right-hand side (guards against roundoff-sized right-hand sides).
  double abs_floor = 0.0;
};

/// Preconditioned conjugate gradients for A x = b with A symmetric positive
/// definite under `dot`. `x` holds the initial guess on entry.
///
/// X needs copy, `*=`, and `axpy(a, y)`; apply_a / apply_m map X -> X.
template <class X, class ApplyA, class ApplyM, class Dot>
SolveReport pcg(ApplyA&& apply_a, ApplyM&& apply_m, Dot&& dot, const X& b, X& x,
                const SolveControl& ctl) {
  SolveReport rep;
  rep.rhs_norm = std::sqrt(std::max(0.0, dot(b, apply_m(b))));
  X r = b;
  r.axpy(-1.0, apply_a(x));
  X z = apply_m(r);
  double rz = dot(r, z);
  rep.residual = std::sqrt(std::max(0.0, rz));
  if (rep.rhs_norm == 0.0) {
    x *= 0.0;
    rep.residual = 0.0;
    rep.converged = true;
    return rep;
  }
  auto done = [&](bool rel_ok) {
    if (rep.residual <= ctl.abs_floor) return true;
    if (!rel_ok) return false;
    return ctl.abs_target <= 0.0 || rep.residual <= ctl.abs_target;
  };
  auto rel_met = [&] {
    return rep.residual <= ctl.rel_tol * rep.rhs_norm || rep.residual <= ctl.abs_floor;
  };
  bool rel_ok = rel_met();
  if (done(rel_ok)) {
    rep.converged = true;
    return rep;
  }
  X p = z;
  for (int it = 1; it <= ctl.max_iter; ++it) {
    X ap = apply_a(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    x.axpy(alpha, p);
    r.axpy(-alpha, ap);
    z = apply_m(r);
    const double rz_new = dot(r, z);
    rep.iterations = it;
    rep.residual = std::sqrt(std::max(0.0, rz_new));
    rel_ok = rel_ok || rel_met();
    if (done(rel_ok)) break;
    const double beta = rz_new / rz;
    rz = rz_new;
    p *= beta;
    p.axpy(1.0, z);
  }
  rep.converged = rel_ok;
  return rep;
}

/// Preconditioned MINRES for symmetric (possibly indefinite or singular but
/// consistent) A x = b with a symmetric positive definite preconditioner M.
/// `dot` pairs residual-space vectors with solution-space vectors.
template <class X, class ApplyA, class ApplyM, class Dot>
SolveReport minres(ApplyA&& apply_a, ApplyM&& apply_m, Dot&& dot, const X& b, X& x,
                   const SolveControl& ctl) {
  SolveReport rep;
  X r1 = b;
  r1.axpy(-1.0, apply_a(x));
  X y = apply_m(r1);
  const double beta1 = std::sqrt(std::max(0.0, dot(r1, y)));
  rep.rhs_norm = std::sqrt(std::max(0.0, dot(b, apply_m(b))));
  rep.residual = beta1;
  if (beta1 <= ctl.abs_floor || rep.rhs_norm == 0.0) {
    rep.converged = true;
    return rep;
  }
  const double eps = std::numeric_limits<double>::epsilon();
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  X r2 = r1;
  X w = x;
  w *= 0.0;
  X w2 = w;
  for (int it = 1; it <= ctl.max_iter; ++it) {
    X v = y;
    v *= 1.0 / beta;
    y = apply_a(v);
    if (it >= 2) y.axpy(-beta / oldb, r1);
    const double alfa = dot(v, y);
    y.axpy(-alfa / beta, r2);
    r1 = r2;
    r2 = y;
    y = apply_m(r2);
    oldb = beta;
    beta = std::sqrt(std::max(0.0, dot(r2, y)));
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;
    X w1 = w2;
    w2 = w;
    w = v;
    w.axpy(-oldeps, w1);
    w.axpy(-delta, w2);
    w *= 1.0 / gamma;
    x.axpy(phi, w);
    rep.iterations = it;
    rep.residual = phibar;
    if (phibar <= ctl.rel_tol * rep.rhs_norm || phibar <= ctl.abs_floor) {
      rep.converged = true;
      break;
    }
    if (beta <= eps * beta1) break;
  }
  if (!rep.converged) rep.converged = rep.residual <= ctl.rel_tol * rep.rhs_norm;
  return rep;
}

}  // namespace sshg
