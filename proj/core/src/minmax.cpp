#include "sshg/minmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sshg/errors.hpp"
#include "sshg/parallel.hpp"

namespace sshg {

namespace {

constexpr double kBoundaryTol = 1e-9;

SpinorField free_part(const SpinorField& psi, const SpectralBasis& basis) {
  return psi - project(psi, Subspace::minus, basis);
}

double hhalf(const SpinorField& psi, const SpectralBasis& basis) {
  return sobolev_norm(psi, SobolevSpace::Hhalf_spinor, basis);
}

double h1(const ScalarField& u, const SpectralBasis& basis) {
  return sobolev_norm(u, SobolevSpace::H1_scalar, basis);
}

NehariPoint origin_point(const ActionParams& params, const SpectralBasis& basis) {
  NehariPoint p{basis.zero_scalar(), basis.zero_spinor(), 0.0, std::nullopt};
  p.split = split_norms(p.psi, params.rho, basis);
  return p;
}

/// Removes the H^1 component of v along u1.
void remove_component(ScalarField& v, const OrthogonalityConstraint& ortho, const SpectralBasis& basis) {
  const double uu = sobolev_inner(ortho.u1, ortho.u1, SobolevSpace::H1_scalar, basis);
  if (uu == 0.0) return;
  v.axpy(-sobolev_inner(v, ortho.u1, SobolevSpace::H1_scalar, basis) / uu, ortho.u1);
}

/// Descent data at one node: Riesz direction and its norm.
struct NodeGradient {
  ConstrainedGradient cg;
  FieldPair direction;
  double norm = 0.0;
};

NodeGradient node_gradient(const NehariPoint& pt, const ActionParams& params,
                           const SpectralBasis& basis, const OrthogonalityConstraint* ortho) {
  NodeGradient ng;
  ng.cg = constrained_gradient(pt, params, basis);
  ng.direction = ng.cg.tangent.fields();
  if (ortho) {
    remove_component(ng.direction.u, *ortho, basis);
    ng.norm = product_norm(ng.direction, basis);
  } else {
    ng.norm = ng.cg.norm;
  }
  return ng;
}

struct Trial {
  bool ok = false;
  NehariPoint point;
  double energy = 0.0;
};

Trial try_point(const FieldPair& x, const ActionParams& params, const SpectralBasis& basis) {
  Trial t;
  try {
    t.point = project_to_manifold(x, params, basis);
    t.energy = evaluate_J(t.point.fields(), params, basis);
    t.ok = std::isfinite(t.energy);
  } catch (const Error&) {
    t.ok = false;
  }
  return t;
}

void set_node(Mesh& mesh, std::size_t i, NehariPoint pt, double energy) {
  MeshNode& node = mesh.nodes[i];
  if (node.fixed) fail(ErrorKind::internal, "attempt to move a fixed mesh node");
  if (node.partner >= 0 && static_cast<std::size_t>(node.partner) != i) {
    MeshNode& other = mesh.nodes[static_cast<std::size_t>(node.partner)];
    if (other.fixed) fail(ErrorKind::internal, "partner of a free node is fixed");
    other.point = sigma(pt);
    other.energy = energy;
  }
  node.point = std::move(pt);
  node.energy = energy;
}

double line_max(const Mesh& mesh, std::size_t line) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i : mesh.lines[line]) m = std::max(m, mesh.nodes[i].energy);
  return m;
}

/// Arclength re-spreading of the free nodes of one line; returns the new
/// points when the line maximum does not increase.
bool respread_line(const Mesh& mesh, std::size_t line, const ActionParams& params,
                   const SpectralBasis& basis, std::vector<std::pair<std::size_t, Trial>>& out) {
  const auto& idx = mesh.lines[line];
  const std::size_t m = idx.size();
  if (m < 3) return false;
  // Only contiguous free interiors between fixed ends are re-spread.
  if (!mesh.nodes[idx.front()].fixed || !mesh.nodes[idx.back()].fixed) return false;
  for (std::size_t j = 1; j + 1 < m; ++j)
    if (mesh.nodes[idx[j]].fixed) return false;

  std::vector<double> s(m, 0.0);
  for (std::size_t j = 1; j < m; ++j) {
    const FieldPair d = mesh.nodes[idx[j]].point.fields() - mesh.nodes[idx[j - 1]].point.fields();
    s[j] = s[j - 1] + product_norm(d, basis);
  }
  const double total = s.back();
  if (!(total > 0.0)) return false;

  std::vector<Trial> trials(m - 2);
  std::vector<char> failed(m - 2, 0);
  parallel_for(m - 2, [&](std::size_t q) {
    const std::size_t j = q + 1;
    const double target = total * static_cast<double>(j) / static_cast<double>(m - 1);
    std::size_t seg = 0;
    while (seg + 2 < m && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double w = len > 0.0 ? std::clamp((target - s[seg]) / len, 0.0, 1.0) : 0.0;
    FieldPair x = (1.0 - w) * mesh.nodes[idx[seg]].point.fields();
    x.axpy(w, mesh.nodes[idx[seg + 1]].point.fields());
    trials[q] = try_point(x, params, basis);
    if (!trials[q].ok) failed[q] = 1;
  });
  if (std::any_of(failed.begin(), failed.end(), [](char c) { return c != 0; })) return false;

  double new_max = std::max(mesh.nodes[idx.front()].energy, mesh.nodes[idx.back()].energy);
  for (const auto& t : trials) new_max = std::max(new_max, t.energy);
  if (new_max > line_max(mesh, line)) return false;
  for (std::size_t q = 0; q < trials.size(); ++q) out.emplace_back(idx[q + 1], std::move(trials[q]));
  return true;
}

std::vector<FieldPair> tangent_frame(const Mesh& mesh, std::size_t i, const SpectralBasis& basis) {
  std::vector<FieldPair> frame;
  for (const auto& [a, b] : mesh.nodes[i].tangents) {
    FieldPair t = mesh.nodes[static_cast<std::size_t>(b)].point.fields() -
                  mesh.nodes[static_cast<std::size_t>(a)].point.fields();
    for (const auto& f : frame) t.axpy(-product_inner(t, f, basis), f);
    const double n = product_norm(t, basis);
    if (n > 1e-12) frame.push_back((1.0 / n) * t);
  }
  return frame;
}

double equivariance_defect(const Mesh& mesh) {
  double worst = 0.0;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const long j = mesh.nodes[i].partner;
    if (j < 0) continue;
    const auto& a = mesh.nodes[i].point;
    const auto& b = mesh.nodes[static_cast<std::size_t>(j)].point;
    for (std::size_t p = 0; p < a.u.size(); ++p)
      worst = std::max(worst, std::abs(a.u.values[p] + b.u.values[p]));
    for (std::size_t p = 0; p < a.psi.size(); ++p)
      worst = std::max(worst, std::abs(a.psi.coeffs[p] - b.psi.coeffs[p]));
  }
  return worst;
}

double dual_merit(const Variation& v, const SpectralBasis& basis) { return norm(v, basis); }

}  // namespace

void MinmaxConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorKind::config, m); };
  if (path_nodes < 5 || path_nodes % 2 == 0) bad("path_nodes must be odd and at least 5");
  if (!(descent_step > 0.0)) bad("descent_step must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) bad("backtrack must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 1.0)) bad("armijo must lie in (0, 1)");
  if (!(grad_tol > 0.0)) bad("grad_tol must be positive");
  if (!(newton_tol > 0.0)) bad("newton_tol must be positive");
  if (max_outer < 1) bad("max_outer must be at least 1");
  if (reparam_every < 1) bad("reparam_every must be at least 1");
  if (!(climb_switch > 0.0)) bad("climb_switch must be positive");
  if (stall_window < 1) bad("stall_window must be at least 1");
  if (!(active_band > 0.0)) bad("active_band must be positive");
  if (!(trust_fraction > 0.0)) bad("trust_fraction must be positive");
  if (!(r0 > 0.0 && r0 < 1.0)) bad("r0 must lie in (0, 1)");
  if (!(tau > 1.0)) bad("tau must exceed 1");
}

const char* to_string(Classification c) {
  switch (c) {
    case Classification::trivial: return "trivial";
    case Classification::semi_trivial_constant_u: return "semi_trivial_constant_u";
    case Classification::nontrivial: return "nontrivial";
  }
  return "unknown";
}

double product_inner(const FieldPair& a, const FieldPair& b, const SpectralBasis& basis) {
  return sobolev_inner(a.u, b.u, SobolevSpace::H1_scalar, basis) +
         sobolev_inner(a.psi, b.psi, SobolevSpace::Hhalf_spinor, basis);
}

double product_norm(const FieldPair& x, const SpectralBasis& basis) {
  return std::sqrt(std::max(0.0, product_inner(x, x, basis)));
}

NehariPoint sigma(const NehariPoint& p) {
  NehariPoint q = p;
  for (double& v : q.u.values) v = -v;
  return q;
}

std::size_t Mesh::argmax() const {
  std::size_t best = nodes.size();
  double e = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].fixed) continue;
    if (nodes[i].energy > e) {
      e = nodes[i].energy;
      best = i;
    }
  }
  return best;
}

double Mesh::max_energy() const {
  double e = -std::numeric_limits<double>::infinity();
  for (const auto& n : nodes) e = std::max(e, n.energy);
  return e;
}

void PSDiagnostics::append(const NehariPoint& point, double energy, const ConstrainedGradient& cg,
                           const SpectralBasis& basis) {
  alpha.push_back(cg.alpha);
  beta.push_back(cg.beta);
  multiplier_norm.push_back(hhalf(cg.multiplier.varphi, basis));
  energies.push_back(energy);
  grad_norms.push_back(cg.norm);
  const double nu = h1(point.u, basis), np = hhalf(point.psi, basis);
  norms_trace.emplace_back(nu, np);
  const bool finite = std::isfinite(energy) && std::isfinite(nu) && std::isfinite(np) &&
                      std::isfinite(cg.alpha) && std::isfinite(cg.beta);
  bounded = bounded && finite && nu <= 1e6 && np <= 1e6;
}

PSDiagnostics ps_diagnostics(const std::vector<NehariPoint>& trace, const ActionParams& params,
                             const SpectralBasis& basis) {
  PSDiagnostics d;
  for (const auto& pt : trace)
    d.append(pt, evaluate_J(pt.fields(), params, basis), constrained_gradient(pt, params, basis), basis);
  return d;
}

double u_variance(const ScalarField& u) {
  if (u.size() == 0) return 0.0;
  double mean = 0.0;
  for (double v : u.values) mean += v;
  mean /= static_cast<double>(u.size());
  double var = 0.0;
  for (double v : u.values) var += (v - mean) * (v - mean);
  return var / static_cast<double>(u.size());
}

Classification classify(double u_norm, double psi_norm, double u_var) {
  if (u_norm + psi_norm <= 1e-8) return Classification::trivial;
  if (u_var <= 1e-8 && psi_norm > 1e-8) return Classification::semi_trivial_constant_u;
  return Classification::nontrivial;
}

SolutionRecord make_record(const NehariPoint& point, const ActionParams& params,
                           const SpectralBasis& basis, double newton_tol) {
  (void)newton_tol;
  SolutionRecord r;
  r.point = point;
  r.level = evaluate_J(point.fields(), params, basis);
  const ElResidual el = el_residual(point.u, point.psi, params, basis);
  r.res_u = el.res_u_norm;
  r.res_psi = el.res_psi_norm;
  r.u_norm = h1(point.u, basis);
  r.psi_norm = hhalf(point.psi, basis);
  r.u_variance = u_variance(point.u);
  r.classification = classify(r.u_norm, r.psi_norm, r.u_variance);
  const ConstrainedGradient cg = constrained_gradient(point, params, basis);
  r.multiplier_norm = hhalf(cg.multiplier.varphi, basis);
  r.grad_norm = cg.norm;
  return r;
}

Endpoint mountain_pass_endpoint(const ActionParams& params, const SpectralBasis& basis) {
  if (basis.harmonic_dim() != 0)
    fail(ErrorKind::precondition, "mountain pass requires a trivial kernel (h = 0)");
  const double lam1 = basis.eigenvalue(1);
  if (!(params.rho > 0.0 && params.rho < lam1)) {
    std::ostringstream os;
    os.precision(17);
    os << "mountain pass requires 0 < rho < lambda_1 = " << lam1 << ", got rho = " << params.rho;
    fail(ErrorKind::precondition, os.str());
  }
  basis.require_gap(params.rho);
  const double rho = params.rho, vol = basis.geometry().volume();
  Endpoint e;
  e.u_bar = std::acosh((lam1 + 1.0) / rho) + 0.5;
  const double sh = std::sinh(e.u_bar);
  e.s_threshold = std::sqrt(4.0 * rho * rho * sh * sh * vol / (8.0 * (rho * std::cosh(e.u_bar) - lam1)));
  e.s = 1.5 * e.s_threshold;
  e.point = fiber_solve(ScalarField(basis.points(), e.u_bar), e.s * basis.eigenspinor(1), params, basis);
  e.energy = evaluate_J(e.point.fields(), params, basis);
  if (!(e.energy < 0.0)) fail(ErrorKind::internal, "mountain-pass endpoint is not below zero");
  return e;
}

LinkingConstants linking_constants(const ActionParams& params, const SpectralBasis& basis,
                                   double margin_factor, double t_margin) {
  const double rho = params.rho;
  if (!(rho > 0.0)) fail(ErrorKind::precondition, "linking requires rho > 0");
  basis.require_gap(rho);
  LinkingConstants c;
  c.k_index = basis.count_below(rho);
  const int h = basis.harmonic_dim();
  if (c.k_index == 0 && h == 0)
    fail(ErrorKind::precondition, "linking requires lambda_k < rho for some k >= 1, or h > 0");
  c.lambda_k = c.k_index > 0 ? basis.eigenvalue(static_cast<long>(c.k_index)) : 0.0;
  c.psi_k1_index = static_cast<long>(c.k_index) + 1;
  c.lambda_k1 = basis.eigenvalue(c.psi_k1_index);
  c.K = c.k_index + static_cast<std::size_t>(h);

  const double vol = basis.geometry().volume();
  c.T = std::acosh((c.lambda_k1 + 1.0) / rho) + t_margin;
  const double shT = std::sinh(c.T);
  c.A = margin_factor *
        std::sqrt(4.0 * rho * rho * vol * shT * shT /
                  (8.0 * c.T * c.T * (rho * std::cosh(c.T) - c.lambda_k1)));
  auto side = [&](double t) {
    const double st = std::sinh(t);
    return 4.0 * rho * rho * vol * st * st + 8.0 * (c.lambda_k1 - rho * std::cosh(t)) * c.A * c.A * t * t;
  };
  c.side_max = 0.0;
  for (int i = 0; i <= 1000; ++i) c.side_max = std::max(c.side_max, side(c.T * i / 1000.0));
  const double coef = (rho - c.lambda_k) / (c.lambda_k + 1.0);
  c.R = c.side_max > 0.0 ? margin_factor * std::sqrt(c.side_max / coef) : 1.0;

  const bool i_ok = rho * std::cosh(c.T) - c.lambda_k1 > 1.0;
  const bool ii_ok =
      4.0 * rho * rho * vol * shT * shT - 8.0 * c.A * c.A * c.T * c.T * (rho * std::cosh(c.T) - c.lambda_k1) < 0.0;
  const bool iii_ok = coef * c.R * c.R > c.side_max;
  if (!(i_ok && ii_ok && iii_ok)) fail(ErrorKind::internal, "linking constants failed certification");
  return c;
}

std::vector<SpinorField> lower_space(const ActionParams& params, const SpectralBasis& basis) {
  std::vector<SpinorField> out;
  for (int l = 0; l < basis.harmonic_dim(); ++l) out.push_back(basis.harmonic(l));
  const std::size_t k = basis.count_below(params.rho);
  for (std::size_t j = 1; j <= k; ++j) out.push_back(basis.eigenspinor(static_cast<long>(j)));
  return out;
}

Mesh build_path(const NehariPoint& end, int nodes, const ActionParams& params,
                const SpectralBasis& basis) {
  if (nodes < 3) fail(ErrorKind::config, "a path needs at least 3 nodes");
  Mesh mesh;
  mesh.kind = MeshKind::path;
  mesh.nodes.resize(static_cast<std::size_t>(nodes));
  const SpinorField f = free_part(end.psi, basis);
  parallel_for(mesh.nodes.size(), [&](std::size_t i) {
    MeshNode& node = mesh.nodes[i];
    const double t = static_cast<double>(i) / (nodes - 1);
    if (i == 0) {
      node.point = origin_point(params, basis);
    } else if (static_cast<int>(i) == nodes - 1) {
      node.point = end;
    } else {
      node.point = fiber_solve(t * end.u, t * f, params, basis);
    }
    node.energy = evaluate_J(node.point.fields(), params, basis);
    node.fixed = i == 0 || static_cast<int>(i) == nodes - 1;
    if (!node.fixed) node.tangents = {{static_cast<long>(i) - 1, static_cast<long>(i) + 1}};
  });
  std::vector<std::size_t> line(mesh.nodes.size());
  for (std::size_t i = 0; i < line.size(); ++i) line[i] = i;
  mesh.lines.push_back(line);
  mesh.line_active.push_back(1);
  mesh.line_partner.push_back(-1);
  return mesh;
}

namespace {

Mesh cylinder_mesh(const LinkingConstants& c, const CylinderMeshSpec& spec,
                   const ActionParams& params, const SpectralBasis& basis, bool& boundary_ok) {
  const auto lower = lower_space(params, basis);
  const std::size_t K = lower.size();
  if (K > 12) {
    std::ostringstream os;
    os << "linking cylinder needs K = " << K << " directions; at most 12 are supported";
    fail(ErrorKind::capacity, os.str());
  }
  if (spec.n_t < 3 || spec.n_radial < 1) fail(ErrorKind::config, "cylinder mesh needs n_t >= 3 and n_radial >= 1");

  std::vector<SpinorField> dirs;
  for (const auto& e : lower) dirs.push_back((1.0 / hhalf(e, basis)) * e);
  const SpinorField top = basis.eigenspinor(c.psi_k1_index);

  // Cross-section nodes: centre, then for each shell the +/- basis directions.
  struct Section {
    SpinorField phi;
    int shell = 0;
  };
  std::vector<Section> sections;
  sections.push_back({basis.zero_spinor(), 0});
  for (int sh = 1; sh <= spec.n_radial; ++sh) {
    const double r = c.R * sh / spec.n_radial;
    for (std::size_t d = 0; d < K; ++d) {
      sections.push_back({r * dirs[d], sh});
      sections.push_back({(-r) * dirs[d], sh});
    }
  }
  const std::size_t ns = sections.size(), nt = static_cast<std::size_t>(spec.n_t);
  auto index = [nt](std::size_t sec, std::size_t m) { return sec * nt + m; };

  Mesh mesh;
  mesh.kind = MeshKind::cylinder;
  mesh.nodes.resize(ns * nt);
  parallel_for(mesh.nodes.size(), [&](std::size_t id) {
    const std::size_t sec = id / nt, m = id % nt;
    const double t = c.T * static_cast<double>(m) / static_cast<double>(nt - 1);
    MeshNode& node = mesh.nodes[id];
    SpinorField f = sections[sec].phi;
    f.axpy(c.A * t, top);
    node.point = fiber_solve(ScalarField(basis.points(), t), f, params, basis);
    node.energy = evaluate_J(node.point.fields(), params, basis);
    node.fixed = m == 0 || m == nt - 1 || sections[sec].shell == spec.n_radial;
    if (node.fixed) return;
    node.tangents.push_back({static_cast<long>(index(sec, m - 1)), static_cast<long>(index(sec, m + 1))});
    if (sec == 0)
      for (std::size_t d = 0; d < K; ++d)
        node.tangents.push_back({static_cast<long>(index(2 + 2 * d, m)), static_cast<long>(index(1 + 2 * d, m))});
  });
  for (std::size_t sec = 0; sec < ns; ++sec) {
    std::vector<std::size_t> line(nt);
    for (std::size_t m = 0; m < nt; ++m) line[m] = index(sec, m);
    mesh.lines.push_back(line);
    mesh.line_active.push_back(sections[sec].shell == spec.n_radial ? 0 : 1);
    mesh.line_partner.push_back(-1);
  }
  boundary_ok = true;
  for (const auto& n : mesh.nodes)
    if (n.fixed && !(n.energy <= kBoundaryTol)) boundary_ok = false;
  return mesh;
}

}  // namespace

Mesh build_cylinder(const LinkingConstants& consts, const CylinderMeshSpec& spec,
                    const ActionParams& params, const SpectralBasis& basis) {
  bool ok = false;
  Mesh mesh = cylinder_mesh(consts, spec, params, basis, ok);
  if (ok) return mesh;
  const LinkingConstants wider = linking_constants(params, basis, 3.0, 1.0);
  mesh = cylinder_mesh(wider, spec, params, basis, ok);
  if (!ok) fail(ErrorKind::internal, "cylinder boundary energy is positive after the margin retry");
  return mesh;
}

MinmaxResult minmax_deform(Mesh mesh, const MinmaxConfig& config, const ActionParams& params,
                           const SpectralBasis& basis, const OrthogonalityConstraint* ortho) {
  config.validate();
  if (mesh.nodes.empty() || mesh.argmax() >= mesh.nodes.size())
    fail(ErrorKind::precondition, "mesh has no free nodes");
  for (const auto& n : mesh.nodes)
    if (n.fixed && !(n.energy <= kBoundaryTol))
      fail(ErrorKind::precondition, "fixed mesh node with positive energy");

  MinmaxResult res;
  std::vector<std::pair<ScalarField, SpinorField>> frozen;
  for (const auto& n : mesh.nodes)
    if (n.fixed) frozen.emplace_back(n.point.u, n.point.psi);

  std::vector<double> step(mesh.nodes.size(), config.descent_step);
  int stall = 0;

  for (int it = 0; it < config.max_outer; ++it) {
    const double gmax = mesh.max_energy();
    res.max_trace.push_back(gmax);
    const std::size_t top = mesh.argmax();

    // Free nodes near the top of the mesh, one representative per Z2 pair.
    const double band = config.active_band * std::abs(gmax) + 1e-12;
    auto rep = [&](std::size_t i) {
      const long p = mesh.nodes[i].partner;
      return p >= 0 ? std::min(i, static_cast<std::size_t>(p)) : i;
    };
    std::vector<std::size_t> targets{rep(top)};
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
      if (mesh.nodes[i].fixed || mesh.nodes[i].energy < gmax - band || rep(i) != i || i == targets[0]) continue;
      targets.push_back(i);
    }

    std::vector<NodeGradient> grads(targets.size());
    std::vector<double> normal_norm(targets.size(), 0.0);
    std::vector<Trial> moves(targets.size());
    parallel_for(targets.size(), [&](std::size_t q) {
      const std::size_t i = targets[q];
      const MeshNode& node = mesh.nodes[i];
      grads[q] = node_gradient(node.point, params, basis, ortho);
      FieldPair d = grads[q].direction;
      for (const auto& f : tangent_frame(mesh, i, basis)) d.axpy(-product_inner(d, f, basis), f);
      if (ortho) remove_component(d.u, *ortho, basis);
      const double dn = product_norm(d, basis);
      normal_norm[q] = dn;
      const double g2 = product_inner(grads[q].direction, d, basis);
      if (!(g2 > 0.0)) return;
      double t = step[i];
      // Trust region: a node moves at most a fraction of its distance to the mesh neighbours.
      double spacing = std::numeric_limits<double>::infinity();
      for (const auto& [a, b] : node.tangents)
        for (long nb : {a, b})
          spacing = std::min(spacing, product_norm(mesh.nodes[static_cast<std::size_t>(nb)].point.fields() -
                                                       node.point.fields(), basis));
      if (std::isfinite(spacing) && dn > 0.0) t = std::min(t, config.trust_fraction * spacing / dn);
      for (int k = 0; k < 40; ++k) {
        FieldPair x = node.point.fields();
        x.axpy(-t, d);
        Trial trial = try_point(x, params, basis);
        if (trial.ok && trial.energy <= node.energy - config.armijo * t * g2) {
          moves[q] = std::move(trial);
          step[i] = std::min(2.0 * t, 10.0 * config.descent_step);
          return;
        }
        t *= config.backtrack;
      }
      step[i] = t;
    });

    const std::size_t shown = targets[0];
    res.diagnostics.append(mesh.nodes[shown].point, mesh.nodes[shown].energy, grads[0].cg, basis);
    ++res.descent_iterations;
    if (grads[0].norm <= config.grad_tol) {
      res.converged = true;
      break;
    }
    if (normal_norm[0] <= config.climb_switch) break;

    for (std::size_t q = 0; q < targets.size(); ++q)
      if (moves[q].ok) set_node(mesh, targets[q], std::move(moves[q].point), moves[q].energy);

    if ((it + 1) % config.reparam_every == 0) {
      std::vector<std::pair<std::size_t, Trial>> updates;
      for (std::size_t l = 0; l < mesh.lines.size(); ++l) {
        if (!mesh.line_active[l]) continue;
        std::vector<std::pair<std::size_t, Trial>> mine;
        if (respread_line(mesh, l, params, basis, mine))
          for (auto& u : mine) updates.push_back(std::move(u));
      }
      for (auto& [i, t] : updates) set_node(mesh, i, std::move(t.point), t.energy);
    }

    const double after = mesh.max_energy();
    if (after > gmax) res.monotone = false;
    stall = (gmax - after) <= 1e-10 * std::max(1.0, std::abs(gmax)) ? stall + 1 : 0;
    if (stall >= config.stall_window) break;
  }
  res.max_trace.push_back(mesh.max_energy());

  // Climbing: reflect the gradient along the mesh tangents at the max node.
  const std::size_t top = mesh.argmax();
  const int remaining = config.max_outer - res.descent_iterations;
  if (!res.converged && remaining > 0) {
    double t = config.descent_step;
    NodeGradient g = node_gradient(mesh.nodes[top].point, params, basis, ortho);
    for (int c = 0; c < remaining; ++c) {
      if (g.norm <= config.grad_tol) {
        res.converged = true;
        break;
      }
      const auto frame = tangent_frame(mesh, top, basis);
      FieldPair d = -1.0 * g.direction;
      for (const auto& f : frame) d.axpy(2.0 * product_inner(g.direction, f, basis), f);
      if (ortho) remove_component(d.u, *ortho, basis);
      bool moved = false;
      for (int k = 0; k < 30; ++k) {
        FieldPair x = mesh.nodes[top].point.fields();
        x.axpy(t, d);
        Trial trial = try_point(x, params, basis);
        if (trial.ok) {
          NodeGradient gn;
          bool good = false;
          try {
            gn = node_gradient(trial.point, params, basis, ortho);
            good = gn.norm < g.norm;
          } catch (const Error&) {
            good = false;
          }
          if (good) {
            set_node(mesh, top, std::move(trial.point), trial.energy);
            g = std::move(gn);
            t = std::min(1.5 * t, 1e3 * config.descent_step);
            moved = true;
            break;
          }
        }
        t *= config.backtrack;
      }
      ++res.climb_iterations;
      res.diagnostics.append(mesh.nodes[top].point, mesh.nodes[top].energy, g.cg, basis);
      if (!moved) break;
    }
    if (g.norm <= config.grad_tol) res.converged = true;
  }

  std::size_t f = 0;
  for (const auto& n : mesh.nodes) {
    if (!n.fixed) continue;
    if (n.point.u.values != frozen[f].first.values || n.point.psi.coeffs != frozen[f].second.coeffs)
      res.boundary_intact = false;
    ++f;
  }
  if (!res.boundary_intact) fail(ErrorKind::internal, "a fixed mesh node moved during deformation");
  res.equivariance_defect = equivariance_defect(mesh);
  if (res.equivariance_defect > 1e-9) fail(ErrorKind::internal, "equivariance drift in the deformed mesh");

  res.candidate = make_record(mesh.nodes[top].point, params, basis, config.newton_tol);
  res.mesh = std::move(mesh);
  return res;
}

SolutionRecord newton_refine(const NehariPoint& candidate, const ActionParams& params,
                             const SpectralBasis& basis, double newton_tol,
                             const OrthogonalityConstraint* ortho) {
  auto grad_norm = [&](const NehariPoint& p) {
    return ortho ? node_gradient(p, params, basis, ortho).norm
                 : constrained_gradient(p, params, basis).norm;
  };
  if (grad_norm(candidate) > 1e-3)
    fail(ErrorKind::precondition, "newton_refine needs a constrained-gradient norm at most 1e-3");

  // Primal projector P removes the H^1 component along u1; P* acts on dual data.
  ScalarField mu1;
  double uu = 0.0;
  if (ortho) {
    mu1 = scalar_weight(ortho->u1, 1.0, basis);
    uu = l2_inner(mu1, ortho->u1, basis);
  }
  auto proj = [&](FieldPair x) {
    if (ortho && uu > 0.0) x.u.axpy(-l2_inner(mu1, x.u, basis) / uu, ortho->u1);
    return x;
  };
  auto proj_dual = [&](FieldPair g) {
    if (ortho && uu > 0.0) g.u.axpy(-l2_inner(g.u, ortho->u1, basis) / uu, mu1);
    return g;
  };
  auto residual = [&](const NehariPoint& p) {
    FieldPair g = gradient_J(p.u, p.psi, params, basis).fields();
    return proj_dual(std::move(g));
  };
  auto merit = [&](const FieldPair& g) {
    return dual_merit(Variation{g.u, g.psi, Representation::dual}, basis);
  };
  auto converged = [&](const NehariPoint& p) {
    if (!ortho) {
      const auto el = el_residual(p.u, p.psi, params, basis);
      return el.res_u_norm <= newton_tol && el.res_psi_norm <= newton_tol;
    }
    const FieldPair g = residual(p);
    const Variation v{g.u, g.psi, Representation::dual};
    return scalar_norm(v, basis) / 2.0 <= newton_tol && spinor_norm(v, basis) / 16.0 <= newton_tol;
  };

  NehariPoint x = candidate;
  int steps = 0, failures = 0;
  bool done = converged(x);
  while (!done && steps < 40) {
    const FieldPair g = residual(x);
    const double m0 = merit(g);
    auto apply_a = [&](const FieldPair& d) {
      return proj_dual(hess_vec(x.u, x.psi, proj(d), params, basis).fields());
    };
    auto apply_m = [&](const FieldPair& r) {
      return proj(FieldPair{scalar_weight(r.u, -1.0, basis), spinor_weight(r.psi, -1.0, basis)});
    };
    auto dot = [&](const FieldPair& a, const FieldPair& b) {
      return l2_inner(a.u, b.u, basis) + l2_inner(a.psi, b.psi, basis);
    };
    FieldPair b = -1.0 * g;
    FieldPair delta{basis.zero_scalar(), basis.zero_spinor()};
    const SolveControl ctl{1e-10, 0.0, 2000, 1e-3 * newton_tol};
    minres(apply_a, apply_m, dot, b, delta, ctl);
    delta = proj(std::move(delta));

    double a = 1.0;
    bool accepted = false;
    for (int k = 0; k < 10; ++k) {
      Trial trial = try_point(x.fields() + a * delta, params, basis);
      if (trial.ok && merit(residual(trial.point)) < m0) {
        x = std::move(trial.point);
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    ++steps;
    if (!accepted) {
      ++failures;
      break;
    }
    done = converged(x);
  }

  SolutionRecord rec = make_record(done ? x : candidate, params, basis, newton_tol);
  rec.refined = done && failures == 0;
  rec.newton_steps = steps;
  return rec;
}

bool inside_cone(const NehariPoint& point, double rho, double tau, const SpectralBasis& basis) {
  const auto split = point.split ? point.split : split_norms(point.psi, rho, basis);
  if (!split) fail(ErrorKind::spectral_gap, "cone test needs rho off the spectrum");
  const double u2 = std::pow(h1(point.u, basis), 2);
  const double lhs = u2 + split->minus * split->minus + split->plus_a * split->plus_a;
  const double rhs = tau * (split->plus_b * split->plus_b + split->zero * split->zero);
  return lhs < rhs;
}

double coercivity_probe(const ActionParams& params, const SpectralBasis& basis, double r0,
                        double tau, int n_samples, std::uint64_t seed) {
  basis.require_gap(params.rho);
  if (!(r0 > 0.0) || n_samples < 1) fail(ErrorKind::parameter, "probe needs r0 > 0 and n_samples >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const TorusGeometry& g = basis.geometry();
  const int n = g.grid_n;
  const double unit = g.frequency_unit(), hx = g.spacing();
  const std::size_t np = basis.points();

  auto random_u = [&] {
    ScalarField u(np, 0.3 * nd(rng));
    for (int k1 = 0; k1 <= 3; ++k1)
      for (int k2 = -3; k2 <= 3; ++k2) {
        if (k1 == 0 && k2 <= 0) continue;
        const double a = nd(rng) / (1 + k1 * k1 + k2 * k2), b = nd(rng) / (1 + k1 * k1 + k2 * k2);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double arg = unit * hx * (k1 * i + k2 * j);
            u.values[static_cast<std::size_t>(i) * n + j] += a * std::cos(arg) + b * std::sin(arg);
          }
      }
    return u;
  };
  auto random_psi = [&] {
    SpinorField psi = basis.zero_spinor();
    for (std::size_t p : basis.active_modes()) {
      const double s = 1.0 / std::pow(1.0 + basis.abs_xi(p), 2.0);
      psi.coeffs[p] = s * cd(nd(rng), nd(rng));
      psi.coeffs[np + p] = s * cd(nd(rng), nd(rng));
    }
    psi = free_part(psi, basis);
    // Shrink the lower block by a random factor so the sampler reaches outside the cone.
    const SpinorField low = project(psi, Subspace::plus_b, basis, params.rho) +
                            project(psi, Subspace::zero, basis, params.rho);
    psi.axpy(std::pow(ud(rng), 3.0) - 1.0, low);
    return psi;
  };
  auto norm2 = [&](const NehariPoint& p) {
    return std::pow(h1(p.u, basis), 2) + std::pow(hhalf(p.psi, basis), 2);
  };

  double margin = std::numeric_limits<double>::infinity();
  int accepted = 0, attempts = 0;
  const int max_attempts = 100 * n_samples;
  while (accepted < n_samples) {
    if (++attempts > max_attempts) {
      std::ostringstream os;
      os << "probe sampling starved: " << accepted << " of " << n_samples
         << " samples outside the cone after " << max_attempts << " attempts; increase tau";
      fail(ErrorKind::parameter, os.str());
    }
    const double angle = ud(rng) * std::numbers::pi / 2.0;
    ScalarField u = random_u();
    SpinorField f = random_psi();
    const double nu = h1(u, basis), nf = hhalf(f, basis);
    if (nu == 0.0 || nf == 0.0) continue;
    u *= std::cos(angle) / nu;
    f *= std::sin(angle) / nf;
    // Scale onto the sphere of radius r0 in H^1 x H^{1/2}.
    double c = r0;
    NehariPoint pt;
    for (int k = 0; k < 30; ++k) {
      pt = fiber_solve(c * u, c * f, params, basis);
      const double r = std::sqrt(norm2(pt));
      if (std::abs(r - r0) <= 1e-13 * r0) break;
      c *= r0 / r;
    }
    if (inside_cone(pt, params.rho, tau, basis)) continue;
    ++accepted;
    margin = std::min(margin, evaluate_J(pt.fields(), params, basis) / norm2(pt));
  }
  return margin;
}

}  // namespace sshg
