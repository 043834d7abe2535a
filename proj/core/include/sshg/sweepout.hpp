#pragma once

#include <vector>

#include "sshg/minmax.hpp"

namespace sshg {

/// Mollified periodic square wave chi(theta, x) in the height coordinate x_2.
/// For theta in [0, pi) it is +1 on [0, a) and -1 on [a, L) with a = L (1 - theta / pi),
/// smoothed by a compact bump of half-width `width_delta`; chi(theta + pi) = -chi(theta).
struct SweepoutChi {
  double epsilon = 0.0;
  double width_delta = 0.0;
  double side_length = 0.0;
  int height_axis = 1;

  double operator()(double theta, double x2) const;
  ScalarField sample(double theta, const SpectralBasis& basis) const;
  /// Grid measure of {-1 < chi(theta, .) < 1}.
  double interface_volume(double theta, const SpectralBasis& basis) const;
};

/// Throws parameter error unless 0 < epsilon < Vol / 4 and resolution error
/// when the transition band is thinner than 4 grid cells.
SweepoutChi build_sweepout_chi(const TorusGeometry& geom, double epsilon);

struct EquivariantFamily {
  std::vector<double> theta;
  std::vector<NehariPoint> points;
  std::vector<double> energies;
  /// Constraint residual of each fiber solve.
  std::vector<double> continuation_residuals;
  double u_bar = 0.0;
  double s = 0.0;
  SweepoutChi chi;
  int retries = 0;

  std::size_t size() const { return theta.size(); }
  double max_energy() const;
};

/// u_theta = chi(theta) u_bar, psi_theta = fiber_solve(u_theta, s Psi_1). The second
/// half of the circle is the exact Z2 image of the first.
EquivariantFamily equivariant_family(double u_bar, double s, const SweepoutChi& chi,
                                     const ActionParams& params, const SpectralBasis& basis,
                                     int n_theta = 64);

/// Polar mesh w(r e^{i theta}) = retract(r u_theta, r s Psi_1) with rays paired under u -> -u.
Mesh build_disk(const EquivariantFamily& family, int n_radial, const ActionParams& params,
                const SpectralBasis& basis);

struct DiskResult {
  SolutionRecord record;
  double level = 0.0;
  MinmaxResult minmax;
};

DiskResult equivariant_disk_minmax(const EquivariantFamily& family, const MinmaxConfig& config,
                                   const ActionParams& params, const SpectralBasis& basis,
                                   int n_radial = 8);

struct RestartResult {
  SolutionRecord record;
  double theta0 = 0.0;
  double inner_product = 0.0;
  MinmaxResult minmax;
};

/// theta in [0, pi] with <u1, u_theta>_{H^1} = 0 found by bisection.
double find_theta0(const ScalarField& u1, const EquivariantFamily& family, const SpectralBasis& basis);

RestartResult orthogonal_restart(const ScalarField& u1, const EquivariantFamily& family,
                                 const MinmaxConfig& config, const ActionParams& params,
                                 const SpectralBasis& basis);

/// |level_a - level_b| > 1e-6, or |<u_a, u_b>_{H^1}| <= 1e-8 with both records nonzero.
bool geometrically_distinct(const SolutionRecord& a, const SolutionRecord& b, const SpectralBasis& basis);

/// Product set {(r T chi(theta), phi + r A T Psi_{k+1})} over the disk and the ball ||phi|| <= R,
/// for rho above lambda_1 or a nontrivial kernel.
Mesh build_product_disk(const LinkingConstants& consts, const SweepoutChi& chi, int n_theta,
                        int n_radial, int n_shells, const ActionParams& params,
                        const SpectralBasis& basis);

}  // namespace sshg
