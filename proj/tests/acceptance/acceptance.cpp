// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sshg/errors.hpp"
#include "sshg/minmax.hpp"
#include "sshg/runner.hpp"
#include "sshg/sweepout.hpp"
#include "support.hpp"

using namespace sshg;
using sshg::testing::geometry;
using sshg::testing::max_abs;
using sshg::testing::random_scalar;
using sshg::testing::random_spinor;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Converged records from the pipeline criteria, inspected again by criterion 10.
std::vector<NamedRecord> g_records;
double g_newton_tol = MinmaxConfig{}.newton_tol;

void keep_records(const RunOutput& out) {
  for (const auto& r : out.records) g_records.push_back(r);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

/// Moduli |k + delta| 2 pi / L over a box, four real directions each (two per sign, or four harmonic).
std::vector<double> lattice_moduli(const TorusGeometry& g, std::size_t count) {
  std::vector<double> v;
  for (int a = -8; a <= 8; ++a)
    for (int b = -8; b <= 8; ++b) {
      const double r = std::hypot(a + g.spin_delta[0], b + g.spin_delta[1]) * g.frequency_unit();
      v.insert(v.end(), 4, r);
    }
  std::sort(v.begin(), v.end());
  v.resize(count);
  return v;
}

// 1. Spectrum conformance.
void spectrum(Outcome& o) {
  double worst = 0.0;
  for (auto [d1, d2] : {std::pair{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}}) {
    const auto g = geometry(32, d1, d2);
    const auto basis = build_basis(g);
    std::vector<double> moduli;
    for (const auto& e : basis.entries()) {
      if (moduli.size() == 40) break;
      // Each entry against its own lattice point and sign.
      const double r = std::hypot(e.k1 + d1, e.k2 + d2) * g.frequency_unit();
      worst = std::max(worst, e.sign == 0 ? std::abs(e.lambda) : rel_err(e.lambda, e.sign * r));
      moduli.push_back(std::abs(e.lambda));
    }
    std::sort(moduli.begin(), moduli.end());
    const auto want = lattice_moduli(g, 40);
    o.require(moduli.size() == 40, "40 eigenvalues");
    for (std::size_t i = 0; i < moduli.size(); ++i)
      worst = std::max(worst, want[i] == 0.0 ? moduli[i] : rel_err(moduli[i], want[i]));
    const int h_expect = (d1 == 0.0 && d2 == 0.0) ? 4 : 0;
    o.require(basis.harmonic_dim() == h_expect, "harmonic dimension");
  }
  o.require(worst <= 1e-10, "eigenvalue accuracy");
  o.detail << "max rel err " << worst;
}

// 2. Operator algebra.
void algebra(Outcome& o) {
  const auto gam = clifford_generators();
  double cliff = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          cd s = 0;
          for (int k = 0; k < 2; ++k)
            s += gam[a][r * 2 + k] * gam[b][k * 2 + c] + gam[b][r * 2 + k] * gam[a][k * 2 + c];
          cliff = std::max(cliff, std::abs(s - cd((a == b && r == c) ? -2.0 : 0.0, 0.0)));
        }
  o.require(cliff == 0.0, "Clifford relation exact");

  double sa = 0, om = 0, jj = 0, par = 0;
  std::mt19937_64 rng(2024);
  const std::pair<double, double> deltas[] = {{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}};
  for (const auto& [d1, d2] : deltas) {
    const auto basis = build_basis(geometry(32, d1, d2));
    for (int t = 0; t < 25; ++t) {
      const auto psi = random_spinor(basis, rng);
      const auto phi = random_spinor(basis, rng);
      const double scale = std::sqrt(l2_inner(psi, psi, basis) * l2_inner(phi, phi, basis));
      const auto dpsi = dirac_apply(psi, basis);
      const double lhs = l2_inner(dpsi, phi, basis), rhs = l2_inner(psi, dirac_apply(phi, basis), basis);
      sa = std::max(sa, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs) + scale));
      const double dn = max_abs(dpsi) + 1e-300;
      om = std::max(om, max_abs(dirac_apply(omega_mult(psi, basis), basis) + omega_mult(dpsi, basis)) / dn);
      jj = std::max(jj, max_abs(dirac_apply(quaternion_j(psi, basis), basis) - quaternion_j(dpsi, basis)) / dn);
      const auto d = basis.density(psi);
      double grid = 0;
      for (double x : d.values) grid += x;
      grid *= basis.geometry().weight();
      par = std::max(par, rel_err(grid, l2_inner(psi, psi, basis)));
    }
  }
  o.require(sa <= 1e-11, "self-adjointness");
  o.require(om <= 1e-11, "omega anti-commutation");
  o.require(jj <= 1e-11, "j commutation");
  o.require(par <= 1e-11, "Parseval");
  o.detail << "clifford " << cliff << ", self-adjoint " << sa << ", omega " << om << ", j " << jj
           << ", parseval " << par << " over 100 fields";
}

// 3. Variational consistency.
void variational(Outcome& o) {
  const auto basis = build_basis(geometry(32));
  const ActionParams params{0.8};
  std::mt19937_64 rng(77);
  double fd_worst = 0, sym_worst = 0, even_worst = 0;
  for (int t = 0; t < 20; ++t) {
    const FieldPair x{random_scalar(basis, rng), random_spinor(basis, rng, 2.0)};
    const FieldPair d{random_scalar(basis, rng), random_spinor(basis, rng, 2.0)};
    const double exact = pair(gradient_J(x.u, x.psi, params, basis), d, basis);
    const double h = 1e-4;
    const double fd = (evaluate_J(x + h * d, params, basis) - evaluate_J(x - (h * d), params, basis)) / (2 * h);
    fd_worst = std::max(fd_worst, rel_err(fd, exact));

    const FieldPair a{random_scalar(basis, rng), random_spinor(basis, rng)};
    const double hab = pair(hess_vec(x.u, x.psi, a, params, basis), d, basis);
    const double hba = pair(hess_vec(x.u, x.psi, d, params, basis), a, basis);
    sym_worst = std::max(sym_worst, std::abs(hab - hba) / std::max(1.0, std::abs(hab)));

    const double j = evaluate_J(x, params, basis);
    even_worst = std::max(even_worst, std::abs(evaluate_J(-1.0 * x.u, x.psi, params, basis) - j) / std::abs(j));
    even_worst = std::max(even_worst,
                          std::abs(evaluate_J(x.u, quaternion_j(x.psi, basis), params, basis) - j) / std::abs(j));
  }
  o.require(fd_worst <= 1e-6, "gradient vs finite differences");
  o.require(sym_worst <= 1e-9, "Hessian symmetry");
  o.require(even_worst <= 1e-12, "J symmetries");
  o.detail << "fd rel " << fd_worst << ", hessian asym " << sym_worst << ", symmetry " << even_worst;
}

// 4. Nehari certification.
void nehari(Outcome& o) {
  const auto basis = build_basis(geometry(32));
  const ActionParams params{0.5};
  std::mt19937_64 rng(5);
  auto free_part = [&](const SpinorField& s) { return s - project(s, Subspace::minus, basis); };
  auto hhalf = [&](const SpinorField& s) { return sobolev_norm(s, SobolevSpace::Hhalf_spinor, basis); };

  double res = 0;
  for (int t = 0; t < 50; ++t) {
    const auto pt = fiber_solve(random_scalar(basis, rng, 1.0), free_part(random_spinor(basis, rng, 3.0)), params, basis);
    res = std::max(res, hhalf(constraint_G(pt.u, pt.psi, params, basis)));
  }
  const auto f0 = free_part(random_spinor(basis, rng));
  const double zero_u = hhalf(project(fiber_solve(basis.zero_scalar(), f0, params, basis).psi, Subspace::minus, basis));

  const auto u = random_scalar(basis, rng, 1.0);
  const auto f1 = free_part(random_spinor(basis, rng)), f2 = free_part(random_spinor(basis, rng));
  auto neg = [&](const ScalarField& uu, const SpinorField& f) {
    return project(fiber_solve(uu, f, params, basis).psi, Subspace::minus, basis);
  };
  SpinorField lin = neg(u, 1.7 * f1 + (-0.4) * f2);
  lin.axpy(-1.7, neg(u, f1));
  lin.axpy(0.4, neg(u, f2));
  const double linearity = hhalf(lin);
  const double evenness = max_abs(fiber_solve(u, f1, params, basis).psi - fiber_solve(-1.0 * u, f1, params, basis).psi);

  ScalarField ch(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) ch.values[p] = params.rho * std::cosh(u.values[p]);
  double top = -1e300;
  for (int t = 0; t < 50; ++t) {
    const auto phi = project(random_spinor(basis, rng), Subspace::minus, basis);
    SpinorField a = dirac_apply(phi, basis);
    a -= basis.multiply(ch, phi);
    top = std::max(top, l2_inner(project(a, Subspace::minus, basis), phi, basis) / l2_inner(phi, phi, basis));
  }
  o.require(res <= 1e-10, "constraint residual");
  o.require(zero_u <= 1e-12, "u = 0 gives psi- = 0");
  o.require(linearity <= 1e-10, "fiber linearity");
  o.require(evenness == 0.0, "fiber evenness exact");
  o.require(top < 0.0, "negative-definite fiber operator");
  o.detail << "residual " << res << ", psi- at u=0 " << zero_u << ", linearity " << linearity << ", evenness "
           << evenness << ", margin " << -top;
}

// 5. Semi-trivial solution at rho = lambda_1.
void semi_trivial(Outcome& o) {
  const auto basis = build_basis(geometry(32));
  const double lam1 = std::sqrt(0.5);
  const ActionParams params{lam1};
  const auto psi = basis.eigenspinor(1);
  const auto el = el_residual(basis.zero_scalar(), psi, params, basis);
  const double r = std::max(el.res_u_norm, el.res_psi_norm);
  o.require(std::abs(basis.eigenvalue(1) - lam1) <= 1e-12, "lambda_1");
  o.require(r <= 1e-10, "el residual");
  o.require(max_abs(psi) > 0.0, "nonzero");
  o.detail << "el residual " << r;
}

// 6. Mountain-pass existence run.
void mountain_pass(Outcome& o) {
  const double rho = 0.5, lam1 = std::sqrt(0.5);
  RunConfig cfg;
  cfg.geometry = geometry(32);
  cfg.rho = rho;
  cfg.mode = RunMode::mountain_pass;
  cfg.minmax.r0 = 0.05;
  cfg.probe_samples = 100;
  const auto out = run(cfg);
  keep_records(out);

  const auto basis = build_basis(cfg.geometry);
  const ActionParams params{rho};
  const auto ep = mountain_pass_endpoint(params, basis);
  // Closed form J(u_bar, s Psi_1) = 8 s^2 (lambda_1 - rho cosh u_bar) + 4 rho^2 sinh^2(u_bar) Vol.
  const double vol = cfg.geometry.volume();
  const double closed = 8 * ep.s * ep.s * (lam1 - rho * std::cosh(ep.u_bar)) +
                        4 * rho * rho * std::pow(std::sinh(ep.u_bar), 2) * vol;
  o.require(rho * std::cosh(ep.u_bar) > lam1 + 1.0, "rho cosh(u_bar) > lambda_1 + 1");
  o.require(closed < 0.0 && ep.energy < 0.0, "endpoint energy negative");
  o.require(std::abs(closed - ep.energy) <= 1e-9 * std::abs(closed), "endpoint energy matches closed form");

  o.require(out.records.size() == 1, "one record");
  if (!out.records.empty()) {
    const auto& r = out.records[0].record;
    o.require(out.records[0].converged, "converged");
    o.require(r.res_u <= 1e-6 && r.res_psi <= 1e-6, "residuals");
    o.require(r.level > 0.0, "level positive");
    o.require(r.psi_norm > 1e-3, "psi nonzero");
    o.detail << "c1 " << r.level << " (" << to_string(r.classification) << "), res " << std::max(r.res_u, r.res_psi)
             << ", endpoint J " << ep.energy;
  }
  o.require(out.probe_margin && *out.probe_margin > 0.0, "probe margin");
  if (out.probe_margin) o.detail << ", probe margin " << *out.probe_margin;
}

// 7. Linking constants and geometry.
void linking(Outcome& o) {
  const double rho = 1.0;
  const auto g = geometry(32);
  const auto basis = build_basis(g);
  const ActionParams params{rho};
  const auto c = linking_constants(params, basis);
  const auto lattice = lattice_moduli(g, 200);
  double lk = 0, lk1 = 0;
  for (double l : lattice)
    if (l > 0 && l < rho) lk = std::max(lk, l);
  for (double l : lattice)
    if (l > rho) {
      lk1 = l;
      break;
    }
  const double vol = g.volume(), sh = std::sinh(c.T);
  o.require(rho * std::cosh(c.T) - lk1 > 1.0, "T condition");
  o.require(4 * rho * rho * vol * sh * sh - 8 * c.A * c.A * c.T * c.T * (rho * std::cosh(c.T) - lk1) < 0.0, "A condition");
  double side = 0;
  for (int i = 0; i <= 4000; ++i) {
    const double t = c.T * i / 4000.0, s = std::sinh(t);
    side = std::max(side, 4 * rho * rho * vol * s * s + 8 * (lk1 - rho * std::cosh(t)) * c.A * c.A * t * t);
  }
  o.require((rho - lk) / (lk + 1) * c.R * c.R > side, "R condition");

  const auto mesh = build_cylinder(c, {}, params, basis);
  double bmax = -1e300;
  for (const auto& n : mesh.nodes)
    if (n.fixed) bmax = std::max(bmax, evaluate_J(n.point.fields(), params, basis));
  o.require(bmax <= 1e-9, "cylinder boundary J <= 0");

  RunConfig cfg;
  cfg.geometry = g;
  cfg.rho = rho;
  cfg.mode = RunMode::linking;
  const auto out = run(cfg);
  keep_records(out);
  o.require(out.records.size() == 1, "one record");
  if (!out.records.empty()) {
    const auto& n = out.records[0];
    const auto& d = n.diagnostics;
    o.require(d.size() > 0 && d.alpha.size() == d.size() && d.beta.size() == d.size() &&
                  d.multiplier_norm.size() == d.size() && d.norms_trace.size() == d.size(),
              "full PS diagnostics");
    const double margin = out.probe_margin.value_or(0.0);
    if (n.converged) {
      o.require(n.record.res_u <= 1e-5 && n.record.res_psi <= 1e-5, "residuals");
      o.require(n.record.level >= margin * cfg.minmax.r0 * cfg.minmax.r0, "level above probe bound");
    }
    o.detail << "T " << c.T << ", A " << c.A << ", R " << c.R << ", boundary max " << bmax << ", "
             << (n.converged ? "converged" : "flagged") << " level " << n.record.level << ", probe margin " << margin;
  }
}

// 8. Sweepout properties.
void sweepout(Outcome& o) {
  const auto g = geometry(192);
  const double eps = 0.05 * g.volume();
  const auto chi = build_sweepout_chi(g, eps);
  const auto basis = build_basis(g);
  const double pi = std::numbers::pi;
  double i_err = max_abs(chi.sample(0.0, basis) - ScalarField(basis.points(), 1.0));
  double ii_err = 0, vol_max = 0;
  const double h = g.spacing();
  for (int k = 0; k < 64; ++k) {
    const double th = 2 * pi * k / 64;
    ii_err = std::max(ii_err, max_abs(chi.sample(th + pi, basis) + chi.sample(th, basis)));
    std::size_t inside = 0;
    for (int b = 0; b < g.grid_n; ++b) {
      const double v = chi(th, b * h);
      if (v > -1.0 && v < 1.0) inside += static_cast<std::size_t>(g.grid_n);
    }
    vol_max = std::max(vol_max, static_cast<double>(inside) * h * h);
  }
  o.require(i_err <= 1e-12, "chi(0) = 1");
  o.require(ii_err <= 1e-12, "antisymmetry");
  o.require(vol_max < eps, "interface volume");

  const ActionParams params{0.5};
  const auto ep = mountain_pass_endpoint(params, basis);
  const auto fam = equivariant_family(ep.u_bar, ep.s, chi, params, basis, 32);
  double jmax = -1e300;
  for (const auto& p : fam.points) jmax = std::max(jmax, evaluate_J(p.fields(), params, basis));
  o.require(jmax < 0.0, "family certified");
  o.detail << "chi(0) " << i_err << ", antisymmetry " << ii_err << ", interface " << vol_max << " < " << eps
           << ", family max J " << jmax;
}

// 9. Multiplicity pipeline.
void multiplicity(Outcome& o) {
  RunConfig cfg;
  cfg.geometry = geometry(48);
  cfg.rho = 0.5;
  cfg.mode = RunMode::multiplicity;
  cfg.epsilon_fraction = 0.2;
  const auto out = run(cfg);
  keep_records(out);
  o.require(out.c1.has_value() && out.c2.has_value(), "levels");
  if (!out.c1 || !out.c2) return;
  const double c1 = *out.c1, c2 = *out.c2;
  o.require(c2 >= c1 - 1e-9, "c2 >= c1");
  o.detail << "c1 " << c1 << ", c2 " << c2;

  const auto basis = build_basis(cfg.geometry);
  std::vector<const NamedRecord*> sols;
  for (const auto& r : out.records)
    if (r.converged && r.record.classification != Classification::trivial) sols.push_back(&r);
  if (std::abs(c2 - c1) <= 1e-6) {
    const NamedRecord* rs = nullptr;
    for (const auto& r : out.records)
      if (r.name == "restart") rs = &r;
    o.require(rs != nullptr, "orthogonal restart ran");
    if (rs) {
      const double ip = sobolev_inner(rs->record.point.u, out.records.front().record.point.u,
                                      SobolevSpace::H1_scalar, basis);
      o.require(std::abs(ip) <= 1e-8, "restart orthogonal to u1");
      o.detail << ", restart level " << rs->record.level << " (" << to_string(rs->record.classification)
               << "), <u, u1> " << ip;
    }
  }
  bool distinct = false;
  for (std::size_t a = 0; a < sols.size(); ++a)
    for (std::size_t b = a + 1; b < sols.size(); ++b) {
      const auto& x = sols[a]->record;
      const auto& y = sols[b]->record;
      const double ip = sobolev_inner(x.point.u, y.point.u, SobolevSpace::H1_scalar, basis);
      if (std::abs(x.level - y.level) > 1e-6 || std::abs(ip) <= 1e-8) distinct = true;
    }
  o.require(distinct, "two geometrically distinct solutions");
}

// 10. Diagnostics fidelity over every converged run above.
void diagnostics(Outcome& o) {
  std::size_t n = 0;
  double phi = 0, ab = 0;
  bool bounded = true;
  for (const auto& r : g_records) {
    if (!r.converged) continue;
    ++n;
    phi = std::max(phi, r.record.multiplier_norm);
    ab = std::max({ab, r.diagnostics.alpha_norm(), r.diagnostics.beta_norm()});
    bounded = bounded && r.diagnostics.bounded;
    for (const auto& [un, pn] : r.diagnostics.norms_trace) bounded = bounded && std::isfinite(un) && std::isfinite(pn);
  }
  o.require(n > 0, "at least one converged run");
  o.require(phi <= 10 * g_newton_tol, "multiplier norm");
  o.require(ab <= 1e-6, "alpha, beta");
  o.require(bounded, "norm traces bounded");
  o.detail << n << " converged runs, max |phi| " << phi << ", max alpha/beta " << ab;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"spectrum conformance", spectrum},
      {"operator algebra", algebra},
      {"variational consistency", variational},
      {"Nehari certification", nehari},
      {"semi-trivial solutions", semi_trivial},
      {"mountain-pass existence", mountain_pass},
      {"linking constants and geometry", linking},
      {"sweepout properties", sweepout},
      {"multiplicity pipeline", multiplicity},
      {"diagnostics fidelity", diagnostics},
  };
  const double limits[] = {5, 10, 0, 0, 0, 600, 0, 0, 0, 0};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const Error& e) {
      o.pass = false;
      o.detail << " [error (" << to_string(e.kind()) << "): " << e.what() << "]";
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limits[i] > 0 && secs >= limits[i]) o.require(false, "runtime limit");
    if (!o.pass) ++failed;
    std::printf("criterion %zu %s: %s (%.2f s) %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
