#include "sshg/sweepout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sshg/errors.hpp"
#include "sshg/parallel.hpp"

namespace sshg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Integral of the bump (315/256)(1 - s^2)^4 from -1 to y / w.
double smooth_step(double y, double w) {
  if (y <= -w) return 0.0;
  if (y >= w) return 1.0;
  const double s = y / w, s2 = s * s;
  const double p = s * (1.0 - s2 * (4.0 / 3.0 - s2 * (6.0 / 5.0 - s2 * (4.0 / 7.0 - s2 / 9.0))));
  return 0.5 + (315.0 / 256.0) * p;
}

double wrap_theta(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

double h1_inner(const ScalarField& a, const ScalarField& b, const SpectralBasis& basis) {
  return sobolev_inner(a, b, SobolevSpace::H1_scalar, basis);
}

}  // namespace

double SweepoutChi::operator()(double theta, double x2) const {
  const double t = wrap_theta(theta);
  if (t >= std::numbers::pi) return -(*this)(t - std::numbers::pi, x2);
  const double L = side_length;
  const double a = L * (1.0 - t / std::numbers::pi);
  double x = std::fmod(x2, L);
  if (x < 0.0) x += L;
  double sum = 0.0;
  for (int m = -1; m <= 1; ++m)
    sum += smooth_step(x - m * L, width_delta) - smooth_step(x - a - m * L, width_delta);
  return std::clamp(-1.0 + 2.0 * sum, -1.0, 1.0);
}

ScalarField SweepoutChi::sample(double theta, const SpectralBasis& basis) const {
  const int n = basis.grid_n();
  const double h = basis.geometry().spacing();
  std::vector<double> column(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) column[static_cast<std::size_t>(b)] = (*this)(theta, b * h);
  ScalarField u(basis.points());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int k = height_axis == 1 ? b : a;
      u.values[static_cast<std::size_t>(a) * n + b] = column[static_cast<std::size_t>(k)];
    }
  return u;
}

double SweepoutChi::interface_volume(double theta, const SpectralBasis& basis) const {
  const ScalarField u = sample(theta, basis);
  std::size_t count = 0;
  for (double v : u.values)
    if (v > -1.0 && v < 1.0) ++count;
  return static_cast<double>(count) * basis.geometry().weight();
}

SweepoutChi build_sweepout_chi(const TorusGeometry& geom, double epsilon) {
  geom.validate();
  const double vol = geom.volume();
  if (!(epsilon > 0.0 && epsilon < vol / 4.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "sweepout epsilon must lie in (0, Vol/4) = (0, " << vol / 4.0 << "), got " << epsilon;
    fail(ErrorKind::parameter, os.str());
  }
  SweepoutChi chi;
  chi.epsilon = epsilon;
  chi.side_length = geom.side_length;
  // Two open bands of width 2w hold at most 2 L h ceil(2w / h) grid measure.
  const double L = geom.side_length, h = geom.spacing();
  const double cells = std::ceil(epsilon / (2.0 * L * h)) - 1.0;
  chi.width_delta = std::min(0.9 * epsilon / (4.0 * L), 0.5 * cells * h);
  if (2.0 * chi.width_delta < 4.0 * h * (1.0 - 1e-12)) {
    std::ostringstream os;
    os.precision(6);
    os << "sweepout band of width " << 2.0 * chi.width_delta << " is thinner than 4 grid cells ("
       << 4.0 * geom.spacing() << "); use a finer grid or a larger epsilon";
    fail(ErrorKind::resolution, os.str());
  }

  const SpectralBasis basis = build_basis(geom);
  for (int i = 0; i < 64; ++i) {
    const double theta = kTwoPi * i / 64.0;
    const ScalarField a = chi.sample(theta, basis);
    const ScalarField b = chi.sample(theta + std::numbers::pi, basis);
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (std::abs(a.values[p] + b.values[p]) > 1e-12 || std::abs(a.values[p]) > 1.0 + 1e-12)
        fail(ErrorKind::internal, "sweepout antisymmetry check failed");
      if (i == 0 && std::abs(a.values[p] - 1.0) > 1e-12)
        fail(ErrorKind::internal, "sweepout chi(0) differs from 1");
    }
    if (!(chi.interface_volume(theta, basis) < epsilon))
      fail(ErrorKind::internal, "sweepout interface volume exceeds epsilon");
  }
  return chi;
}

double EquivariantFamily::max_energy() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double e : energies) m = std::max(m, e);
  return m;
}

namespace {

EquivariantFamily family_attempt(double u_bar, double s, const SweepoutChi& chi,
                                 const ActionParams& params, const SpectralBasis& basis,
                                 int n_theta) {
  EquivariantFamily fam;
  fam.u_bar = u_bar;
  fam.s = s;
  fam.chi = chi;
  const std::size_t n = static_cast<std::size_t>(n_theta), half = n / 2;
  fam.theta.resize(n);
  fam.points.resize(n);
  fam.energies.resize(n);
  fam.continuation_residuals.resize(n);
  const SpinorField f = s * basis.eigenspinor(1);
  SpinorField warm = basis.zero_spinor();
  for (std::size_t i = 0; i < half; ++i) {
    fam.theta[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    const ScalarField u = u_bar * chi.sample(fam.theta[i], basis);
    fam.points[i] = fiber_solve(u, f, params, basis, &warm);
    warm = project(fam.points[i].psi, Subspace::minus, basis);
    fam.energies[i] = evaluate_J(fam.points[i].fields(), params, basis);
    fam.continuation_residuals[i] = fam.points[i].constraint_norm;
  }
  for (std::size_t i = half; i < n; ++i) {
    fam.theta[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    fam.points[i] = sigma(fam.points[i - half]);
    fam.energies[i] = fam.energies[i - half];
    fam.continuation_residuals[i] = fam.continuation_residuals[i - half];
  }
  return fam;
}

}  // namespace

EquivariantFamily equivariant_family(double u_bar, double s, const SweepoutChi& chi,
                                     const ActionParams& params, const SpectralBasis& basis,
                                     int n_theta) {
  if (n_theta < 32 || n_theta % 2 != 0) fail(ErrorKind::parameter, "n_theta must be even and at least 32");
  if (!(u_bar > 0.0 && s > 0.0)) fail(ErrorKind::parameter, "family needs u_bar > 0 and s > 0");
  SweepoutChi c = chi;
  double ub = u_bar, ss = s;
  std::size_t worst = 0;
  double worst_energy = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    EquivariantFamily fam = family_attempt(ub, ss, c, params, basis, n_theta);
    fam.retries = attempt;
    worst = static_cast<std::size_t>(
        std::max_element(fam.energies.begin(), fam.energies.end()) - fam.energies.begin());
    worst_energy = fam.energies[worst];
    if (worst_energy < 0.0) return fam;
    ub += 0.25;
    ss *= 2.0;
    try {
      c = build_sweepout_chi(basis.geometry(), 0.75 * c.epsilon);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::resolution) throw;
    }
  }
  std::ostringstream os;
  os.precision(17);
  os << "equivariant family not certified after 3 retries: J = " << worst_energy << " at theta = "
     << kTwoPi * static_cast<double>(worst) / n_theta;
  fail(ErrorKind::parameter, os.str());
}

Mesh build_disk(const EquivariantFamily& family, int n_radial, const ActionParams& params,
                const SpectralBasis& basis) {
  const std::size_t nt = family.size();
  if (nt < 4 || nt % 2 != 0) fail(ErrorKind::parameter, "disk needs an even number of rays");
  if (n_radial < 2) fail(ErrorKind::parameter, "disk needs n_radial >= 2");
  const std::size_t nr = static_cast<std::size_t>(n_radial), half = nt / 2;
  // Node 0 is the centre; node 1 + i * nr + (j - 1) sits on ray i at radius j / nr.
  auto id = [nr](std::size_t i, std::size_t j) { return 1 + i * nr + (j - 1); };

  Mesh mesh;
  mesh.kind = MeshKind::disk;
  mesh.nodes.resize(1 + nt * nr);
  mesh.nodes[0].point = NehariPoint{basis.zero_scalar(), basis.zero_spinor(), 0.0,
                                    split_norms(basis.zero_spinor(), params.rho, basis)};
  mesh.nodes[0].fixed = true;

  const SpinorField f = family.s * basis.eigenspinor(1);
  parallel_for(half * nr, [&](std::size_t q) {
    const std::size_t i = q / nr, j = q % nr + 1;
    MeshNode& node = mesh.nodes[id(i, j)];
    if (j == nr) {
      node.point = family.points[i];
    } else {
      const double r = static_cast<double>(j) / static_cast<double>(nr);
      node.point = fiber_solve(r * family.points[i].u, r * f, params, basis);
    }
    node.energy = evaluate_J(node.point.fields(), params, basis);
  });
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 1; j <= nr; ++j) {
      MeshNode& node = mesh.nodes[id(i, j)];
      const std::size_t pi = (i + half) % nt;
      if (i >= half) {
        node.point = sigma(mesh.nodes[id(i - half, j)].point);
        node.energy = mesh.nodes[id(i - half, j)].energy;
      }
      node.partner = static_cast<long>(id(pi, j));
      node.fixed = j == nr;
      if (node.fixed) continue;
      const long prev = j == 1 ? 0L : static_cast<long>(id(i, j - 1));
      node.tangents.push_back({prev, static_cast<long>(id(i, j + 1))});
      node.tangents.push_back({static_cast<long>(id((i + nt - 1) % nt, j)), static_cast<long>(id((i + 1) % nt, j))});
    }
    std::vector<std::size_t> line{0};
    for (std::size_t j = 1; j <= nr; ++j) line.push_back(id(i, j));
    mesh.lines.push_back(line);
    mesh.line_active.push_back(i < half ? 1 : 0);
    mesh.line_partner.push_back(static_cast<long>((i + half) % nt));
  }
  return mesh;
}

DiskResult equivariant_disk_minmax(const EquivariantFamily& family, const MinmaxConfig& config,
                                   const ActionParams& params, const SpectralBasis& basis,
                                   int n_radial) {
  if (!(family.max_energy() < 0.0)) fail(ErrorKind::precondition, "equivariant family is not certified");
  DiskResult out;
  out.minmax = minmax_deform(build_disk(family, n_radial, params, basis), config, params, basis);
  out.record = out.minmax.candidate;
  if (out.minmax.candidate.grad_norm <= 1e-3)
    out.record = newton_refine(out.minmax.candidate.point, params, basis, config.newton_tol);
  out.level = out.record.level;
  return out;
}

double find_theta0(const ScalarField& u1, const EquivariantFamily& family, const SpectralBasis& basis) {
  const auto f = [&](double theta) {
    return h1_inner(u1, family.u_bar * family.chi.sample(theta, basis), basis);
  };
  double lo = 0.0, hi = std::numbers::pi;
  double flo = f(lo), fhi = f(hi);
  const double scale = std::max(std::abs(flo), std::abs(fhi));
  if (scale == 0.0) return 0.0;
  if (flo * fhi > 0.0) fail(ErrorKind::internal, "no sign change of <u1, u_theta> on [0, pi]");
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

RestartResult orthogonal_restart(const ScalarField& u1, const EquivariantFamily& family,
                                 const MinmaxConfig& config, const ActionParams& params,
                                 const SpectralBasis& basis) {
  basis.check(u1);
  RestartResult out;
  out.theta0 = find_theta0(u1, family, basis);
  const OrthogonalityConstraint ortho{u1};
  ScalarField u = family.u_bar * family.chi.sample(out.theta0, basis);
  const double uu = h1_inner(u1, u1, basis);
  if (uu > 0.0) u.axpy(-h1_inner(u, u1, basis) / uu, u1);

  NehariPoint end = fiber_solve(u, family.s * basis.eigenspinor(1), params, basis);
  if (!(evaluate_J(end.fields(), params, basis) < 0.0))
    fail(ErrorKind::internal, "orthogonal restart endpoint is not below zero");
  out.minmax = minmax_deform(build_path(end, config.path_nodes, params, basis), config, params, basis, &ortho);
  out.record = out.minmax.candidate;
  try {
    out.record = newton_refine(out.minmax.candidate.point, params, basis, config.newton_tol, &ortho);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::precondition) throw;
  }
  out.inner_product = h1_inner(out.record.point.u, u1, basis);
  return out;
}

bool geometrically_distinct(const SolutionRecord& a, const SolutionRecord& b, const SpectralBasis& basis) {
  if (a.classification == Classification::trivial || b.classification == Classification::trivial) return false;
  if (std::abs(a.level - b.level) > 1e-6) return true;
  return std::abs(h1_inner(a.point.u, b.point.u, basis)) <= 1e-8;
}

namespace {

Mesh product_mesh(const LinkingConstants& c, const SweepoutChi& chi, int n_theta, int n_radial,
                  int n_shells, const ActionParams& params, const SpectralBasis& basis,
                  double& boundary_max) {
  const auto lower = lower_space(params, basis);
  const std::size_t K = lower.size();
  if (K > 4) {
    std::ostringstream os;
    os << "product disk needs K = " << K << " directions; at most 4 are supported";
    fail(ErrorKind::capacity, os.str());
  }
  if (n_theta < 4 || n_theta % 2 != 0 || n_radial < 2 || n_shells < 1)
    fail(ErrorKind::parameter, "product disk needs even n_theta >= 4, n_radial >= 2, n_shells >= 1");

  std::vector<SpinorField> phis{basis.zero_spinor()};
  std::vector<int> shell{0};
  for (int sh = 1; sh <= n_shells; ++sh)
    for (const auto& e : lower) {
      const SpinorField d = (1.0 / sobolev_norm(e, SobolevSpace::Hhalf_spinor, basis)) * e;
      const double r = c.R * sh / n_shells;
      phis.push_back(r * d);
      phis.push_back((-r) * d);
      shell.push_back(sh);
      shell.push_back(sh);
    }
  const std::size_t ns = phis.size(), nt = static_cast<std::size_t>(n_theta);
  const std::size_t nr = static_cast<std::size_t>(n_radial), half = nt / 2;
  const std::size_t per = 1 + nt * nr;
  auto id = [&](std::size_t sec, std::size_t i, std::size_t j) {
    return sec * per + (j == 0 ? 0 : 1 + i * nr + (j - 1));
  };
  const SpinorField top = basis.eigenspinor(c.psi_k1_index);

  Mesh mesh;
  mesh.kind = MeshKind::product;
  mesh.nodes.resize(ns * per);
  std::vector<ScalarField> chis(half);
  for (std::size_t i = 0; i < half; ++i) chis[i] = chi.sample(kTwoPi * i / nt, basis);

  parallel_for(ns * (1 + half * nr), [&](std::size_t q) {
    const std::size_t sec = q / (1 + half * nr), rest = q % (1 + half * nr);
    const std::size_t i = rest == 0 ? 0 : (rest - 1) / nr, j = rest == 0 ? 0 : (rest - 1) % nr + 1;
    const double r = static_cast<double>(j) / static_cast<double>(nr);
    SpinorField f = phis[sec];
    f.axpy(r * c.A * c.T, top);
    MeshNode& node = mesh.nodes[id(sec, i, j)];
    node.point = fiber_solve((r * c.T) * chis[i], f, params, basis);
    node.energy = evaluate_J(node.point.fields(), params, basis);
  });
  for (std::size_t sec = 0; sec < ns; ++sec) {
    MeshNode& centre = mesh.nodes[id(sec, 0, 0)];
    centre.fixed = true;
    centre.partner = static_cast<long>(id(sec, 0, 0));
    for (std::size_t i = 0; i < nt; ++i) {
      for (std::size_t j = 1; j <= nr; ++j) {
        MeshNode& node = mesh.nodes[id(sec, i, j)];
        if (i >= half) {
          node.point = sigma(mesh.nodes[id(sec, i - half, j)].point);
          node.energy = mesh.nodes[id(sec, i - half, j)].energy;
        }
        node.partner = static_cast<long>(id(sec, (i + half) % nt, j));
        node.fixed = j == nr || shell[sec] == n_shells;
        if (node.fixed) continue;
        node.tangents.push_back({static_cast<long>(id(sec, i, j - 1)), static_cast<long>(id(sec, i, j + 1))});
        node.tangents.push_back({static_cast<long>(id(sec, (i + nt - 1) % nt, j)),
                                 static_cast<long>(id(sec, (i + 1) % nt, j))});
      }
      std::vector<std::size_t> line;
      for (std::size_t j = 0; j <= nr; ++j) line.push_back(id(sec, i, j));
      mesh.lines.push_back(line);
      mesh.line_active.push_back(i < half && shell[sec] < n_shells ? 1 : 0);
      mesh.line_partner.push_back(static_cast<long>(sec * nt + (i + half) % nt));
    }
  }
  boundary_max = -std::numeric_limits<double>::infinity();
  for (const auto& n : mesh.nodes)
    if (n.fixed) boundary_max = std::max(boundary_max, n.energy);
  return mesh;
}

}  // namespace

Mesh build_product_disk(const LinkingConstants& consts, const SweepoutChi& chi, int n_theta,
                        int n_radial, int n_shells, const ActionParams& params,
                        const SpectralBasis& basis) {
  double bmax = 0.0;
  Mesh mesh = product_mesh(consts, chi, n_theta, n_radial, n_shells, params, basis, bmax);
  if (bmax <= 1e-9) return mesh;
  const LinkingConstants wider = linking_constants(params, basis, 3.0, 1.0);
  mesh = product_mesh(wider, chi, n_theta, n_radial, n_shells, params, basis, bmax);
  if (bmax > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "product disk boundary energy " << bmax << " is positive after the margin retry";
    fail(ErrorKind::parameter, os.str());
  }
  return mesh;
}

}  // namespace sshg
