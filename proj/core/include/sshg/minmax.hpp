#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sshg/nehari.hpp"

namespace sshg {

enum class MinmaxMode { mountain_pass, linking };

struct MinmaxConfig {
  MinmaxMode mode = MinmaxMode::mountain_pass;
  int path_nodes = 33;
  double descent_step = 0.1;
  double backtrack = 0.5;
  double armijo = 1e-4;
  double grad_tol = 1e-6;
  double newton_tol = 1e-10;
  int max_outer = 2000;
  /// Re-spread lines every this many descent iterations.
  int reparam_every = 5;
  /// Hand over to the climbing phase once the max node's gradient normal to the mesh drops below this.
  double climb_switch = 5e-2;
  /// Consecutive descent iterations with relative max decrease below 1e-10 that end the descent phase.
  int stall_window = 50;
  /// Free nodes with energy within this fraction of |max| below the max move in each sweep.
  double active_band = 0.25;
  /// Largest node displacement per sweep as a fraction of the distance to its mesh neighbours.
  double trust_fraction = 0.25;
  double r0 = 0.05;
  double tau = 50.0;
  std::uint64_t seed = 0;

  /// Throws config error on inconsistent settings.
  void validate() const;
};

struct LinkingConstants {
  double T = 0.0;
  double A = 0.0;
  double R = 0.0;
  /// Number of eigen-directions with 0 < lambda < rho (positive, counted with multiplicity).
  std::size_t k_index = 0;
  double lambda_k = 0.0;
  double lambda_k1 = 0.0;
  /// Index j with Psi_j spanning the lambda_{k+1} direction used by the cylinder.
  long psi_k1_index = 1;
  /// dim span{Psi0, Psi+_b}.
  std::size_t K = 0;

  /// Maximum over the 1001-point t-grid of 4 rho^2 Vol sinh(t)^2 + 8 (lambda_{k+1} - rho cosh t) A^2 t^2.
  double side_max = 0.0;
};

struct PSDiagnostics {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> multiplier_norm;
  std::vector<double> energies;
  std::vector<double> grad_norms;
  /// (||u||_{H^1}, ||psi||_{H^{1/2}}) per iterate.
  std::vector<std::pair<double, double>> norms_trace;
  bool bounded = true;

  double alpha_norm() const { return alpha.empty() ? 0.0 : alpha.back(); }
  double beta_norm() const { return beta.empty() ? 0.0 : beta.back(); }
  double final_multiplier_norm() const { return multiplier_norm.empty() ? 0.0 : multiplier_norm.back(); }
  std::size_t size() const { return energies.size(); }
  void append(const NehariPoint& point, double energy, const ConstrainedGradient& cg,
              const SpectralBasis& basis);
};

enum class Classification { trivial, semi_trivial_constant_u, nontrivial };
const char* to_string(Classification c);

struct SolutionRecord {
  NehariPoint point;
  double level = 0.0;
  double res_u = 0.0;
  double res_psi = 0.0;
  Classification classification = Classification::trivial;
  double u_variance = 0.0;
  double u_norm = 0.0;
  double psi_norm = 0.0;
  double multiplier_norm = 0.0;
  double grad_norm = 0.0;
  bool refined = false;
  int newton_steps = 0;
};

/// Mesh of certified points organised as deformation lines. Each line is an
/// ordered node list whose first and last nodes are normally fixed.
struct MeshNode {
  NehariPoint point;
  double energy = 0.0;
  bool fixed = false;
  /// Index of the Z2 partner node (u -> -u); -1 when the mesh has no symmetry.
  long partner = -1;
  /// Pairs (a, b) whose difference approximates a tangent direction of the mesh at this node.
  std::vector<std::pair<long, long>> tangents;
};

enum class MeshKind { path, cylinder, disk, product };

struct Mesh {
  MeshKind kind = MeshKind::path;
  std::vector<MeshNode> nodes;
  std::vector<std::vector<std::size_t>> lines;
  /// Lines that are moved; for symmetric meshes only one of each partner pair.
  std::vector<char> line_active;
  /// Partner line (reversed roles under the Z2 action), -1 if none.
  std::vector<long> line_partner;

  std::size_t argmax() const;
  double max_energy() const;
};

struct MinmaxResult {
  /// Max node after deformation (unrefined).
  SolutionRecord candidate;
  PSDiagnostics diagnostics;
  Mesh mesh;
  /// Running max over the mesh per descent iteration.
  std::vector<double> max_trace;
  bool converged = false;
  bool monotone = true;
  bool boundary_intact = true;
  int descent_iterations = 0;
  int climb_iterations = 0;
  double equivariance_defect = 0.0;
};

/// (u_bar, s) endpoint with certified negative energy.
struct Endpoint {
  double u_bar = 0.0;
  double s = 0.0;
  double s_threshold = 0.0;
  NehariPoint point;
  double energy = 0.0;
};

/// Optional constraint <u, u1>_{H^1} = 0 applied to every descent direction.
struct OrthogonalityConstraint {
  ScalarField u1;
};

Endpoint mountain_pass_endpoint(const ActionParams& params, const SpectralBasis& basis);

LinkingConstants linking_constants(const ActionParams& params, const SpectralBasis& basis,
                                   double margin_factor = 1.5, double t_margin = 0.5);

/// Straight path from the origin to `end`, retracted node by node.
Mesh build_path(const NehariPoint& end, int nodes, const ActionParams& params,
                const SpectralBasis& basis);

/// Basis spinors spanning the harmonic block and 0 < lambda < rho.
std::vector<SpinorField> lower_space(const ActionParams& params, const SpectralBasis& basis);

struct CylinderMeshSpec {
  int n_t = 9;
  int n_radial = 2;
};

Mesh build_cylinder(const LinkingConstants& consts, const CylinderMeshSpec& spec,
                    const ActionParams& params, const SpectralBasis& basis);

MinmaxResult minmax_deform(Mesh mesh, const MinmaxConfig& config, const ActionParams& params,
                           const SpectralBasis& basis,
                           const OrthogonalityConstraint* ortho = nullptr);

/// Damped Newton on the Euler-Lagrange system with preconditioned MINRES solves.
SolutionRecord newton_refine(const NehariPoint& candidate, const ActionParams& params,
                             const SpectralBasis& basis, double newton_tol,
                             const OrthogonalityConstraint* ortho = nullptr);

/// Fills level, residuals, norms and classification for a point.
SolutionRecord make_record(const NehariPoint& point, const ActionParams& params,
                           const SpectralBasis& basis, double newton_tol);

Classification classify(double u_norm, double psi_norm, double u_variance);
double u_variance(const ScalarField& u);

double coercivity_probe(const ActionParams& params, const SpectralBasis& basis, double r0,
                        double tau, int n_samples, std::uint64_t seed = 1);

/// Product-metric cone test ||u||^2 + ||psi-||^2 + ||psi+_a||^2 < tau (||psi+_b||^2 + ||psi0||^2).
bool inside_cone(const NehariPoint& point, double rho, double tau, const SpectralBasis& basis);

PSDiagnostics ps_diagnostics(const std::vector<NehariPoint>& trace, const ActionParams& params,
                             const SpectralBasis& basis);

/// Z2 action (u, psi) -> (-u, psi).
NehariPoint sigma(const NehariPoint& p);

/// Product norm of a tangent vector in H^1 x H^{1/2}.
double product_norm(const FieldPair& x, const SpectralBasis& basis);
double product_inner(const FieldPair& a, const FieldPair& b, const SpectralBasis& basis);

}  // namespace sshg
