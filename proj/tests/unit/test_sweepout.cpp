#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sshg/errors.hpp"
#include "sshg/sweepout.hpp"
#include "support.hpp"

using namespace sshg;
using sshg::testing::geometry;
using sshg::testing::max_abs;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

struct Family48 {
  TorusGeometry geom = geometry(48);
  SpectralBasis basis = build_basis(geom);
  ActionParams params{0.5};
  Endpoint endpoint = mountain_pass_endpoint(params, basis);
  SweepoutChi chi = build_sweepout_chi(geom, 0.2 * geom.volume());
  EquivariantFamily family = equivariant_family(endpoint.u_bar, endpoint.s, chi, params, basis, 32);
};

const Family48& family48() {
  static const Family48 f;
  return f;
}

}  // namespace

TEST(Sweepout, ChiEndpointsAndAntisymmetry) {
  const auto g = geometry(192);
  const auto chi = build_sweepout_chi(g, 0.05 * g.volume());
  const auto basis = build_basis(g);
  EXPECT_LE(max_abs(chi.sample(0.0, basis) - ScalarField(basis.points(), 1.0)), 1e-12);
  EXPECT_LE(max_abs(chi.sample(kPi, basis) + ScalarField(basis.points(), 1.0)), 1e-12);
  for (int i = 0; i < 64; ++i) {
    const double theta = 2 * kPi * i / 64;
    EXPECT_LE(max_abs(chi.sample(theta + kPi, basis) + chi.sample(theta, basis)), 1e-12);
  }
}

TEST(Sweepout, InterfaceVolumeByDirectCount) {
  const auto g = geometry(192);
  const double eps = 0.05 * g.volume();
  const auto chi = build_sweepout_chi(g, eps);
  EXPECT_GE(2 * chi.width_delta, 4 * g.spacing() * (1 - 1e-12));
  const double h = g.spacing();
  for (int i = 0; i < 64; ++i) {
    const double theta = 2 * kPi * i / 64;
    std::size_t inside = 0;
    for (int b = 0; b < g.grid_n; ++b) {
      const double v = chi(theta, b * h);
      EXPECT_LE(std::abs(v), 1.0);
      if (v > -1.0 && v < 1.0) inside += static_cast<std::size_t>(g.grid_n);
    }
    EXPECT_LT(static_cast<double>(inside) * h * h, eps);
  }
}

TEST(Sweepout, ChiIsContinuousAndMonotoneAcrossTheBand) {
  const auto g = geometry(64);
  const auto chi = build_sweepout_chi(g, 0.2 * g.volume());
  const double w = chi.width_delta;
  double prev = chi(0.5, -w);
  for (int i = 1; i <= 400; ++i) {
    const double x = -w + 2 * w * i / 400.0;
    const double v = chi(0.5, x);
    EXPECT_GE(v, prev - 1e-14);
    EXPECT_LE(v - prev, 0.05);
    prev = v;
  }
  EXPECT_DOUBLE_EQ(chi(0.5, -w), -1.0);
  EXPECT_DOUBLE_EQ(chi(0.5, w), 1.0);
  EXPECT_NEAR(chi(0.5, 0.0), 0.0, 1e-15);
}

TEST(Sweepout, EpsilonRangeAndResolution) {
  const auto g = geometry(32);
  EXPECT_EQ(kind_of([&] { build_sweepout_chi(g, 0.0); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([&] { build_sweepout_chi(g, 0.25 * g.volume()); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([&] { build_sweepout_chi(geometry(16), 0.05 * g.volume()); }), ErrorKind::resolution);
}

TEST(Sweepout, FamilyIsCertifiedAndEquivariant) {
  const auto& f = family48();
  const auto& fam = f.family;
  ASSERT_EQ(fam.size(), 32u);
  EXPECT_LT(fam.max_energy(), 0.0);
  for (std::size_t i = 0; i < fam.size(); ++i) {
    EXPECT_LT(fam.energies[i], 0.0);
    EXPECT_LE(fam.continuation_residuals[i], 1e-10);
    EXPECT_NEAR(fam.energies[i], evaluate_J(fam.points[i].fields(), f.params, f.basis), 1e-9);
  }
  const std::size_t half = fam.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    EXPECT_NEAR(fam.theta[i + half] - fam.theta[i], kPi, 1e-14);
    EXPECT_EQ(max_abs(fam.points[i + half].u + fam.points[i].u), 0.0);
    EXPECT_LE(max_abs(fam.points[i + half].psi - fam.points[i].psi), 1e-10);
  }
  // theta = 0 reproduces the mountain-pass endpoint spinor.
  EXPECT_LE(max_abs(fam.points[0].psi - f.endpoint.point.psi), 1e-10 * max_abs(f.endpoint.point.psi));
  // The pi-image is an independent fiber solve of the same problem.
  const auto direct = fiber_solve(fam.points[half].u, fam.s * f.basis.eigenspinor(1), f.params, f.basis);
  EXPECT_LE(max_abs(direct.psi - fam.points[half].psi), 1e-10 * max_abs(direct.psi));
}

TEST(Sweepout, FamilyNeedsEnoughSamples) {
  const auto& f = family48();
  EXPECT_EQ(kind_of([&] { equivariant_family(f.endpoint.u_bar, f.endpoint.s, f.chi, f.params, f.basis, 16); }),
            ErrorKind::parameter);
}

TEST(Sweepout, DiskMeshStructure) {
  const auto& f = family48();
  const auto mesh = build_disk(f.family, 4, f.params, f.basis);
  EXPECT_EQ(mesh.kind, MeshKind::disk);
  ASSERT_EQ(mesh.nodes.size(), 1u + 32u * 4u);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const auto& n = mesh.nodes[i];
    if (n.partner >= 0) {
      const auto& m = mesh.nodes[static_cast<std::size_t>(n.partner)];
      EXPECT_EQ(static_cast<std::size_t>(m.partner), i);
      EXPECT_EQ(max_abs(m.point.u + n.point.u), 0.0);
      EXPECT_LE(max_abs(m.point.psi - n.point.psi), 1e-10);
    }
    if (n.fixed) EXPECT_LE(n.energy, 1e-9);
    EXPECT_LE(n.point.constraint_norm, 1e-10);
  }
  // Centre node is the origin.
  EXPECT_EQ(max_abs(mesh.nodes[0].point.u), 0.0);
  EXPECT_EQ(max_abs(mesh.nodes[0].point.psi), 0.0);
}

TEST(Sweepout, ThetaZeroForConstantU1) {
  const auto& f = family48();
  // <1, chi(theta)> is proportional to 1 - 2 theta / pi, so the root sits at pi / 2.
  const ScalarField u1(f.basis.points(), 1.3);
  const double theta0 = find_theta0(u1, f.family, f.basis);
  EXPECT_NEAR(theta0, kPi / 2, 1e-9);
  for (int i = 0; i < 16; ++i) {
    const double th = kPi * i / 16;
    const double a = sobolev_inner(u1, f.family.u_bar * f.chi.sample(th, f.basis), SobolevSpace::H1_scalar, f.basis);
    const double b = sobolev_inner(u1, f.family.u_bar * f.chi.sample(th + kPi, f.basis), SobolevSpace::H1_scalar, f.basis);
    EXPECT_NEAR(a + b, 0.0, 1e-10 * (1 + std::abs(a)));
  }
}

TEST(Sweepout, Distinctness) {
  const auto basis = build_basis(geometry(16));
  SolutionRecord a, b;
  a.point.u = ScalarField(basis.points(), 1.0);
  b.point.u = ScalarField(basis.points(), 1.0);
  a.classification = b.classification = Classification::semi_trivial_constant_u;
  a.level = 10.0;
  b.level = 10.0 + 1e-3;
  EXPECT_TRUE(geometrically_distinct(a, b, basis));
  b.level = 10.0;
  EXPECT_FALSE(geometrically_distinct(a, b, basis));
  // Same level, H^1-orthogonal u.
  for (std::size_t p = 0; p < b.point.u.size(); ++p) b.point.u.values[p] = (p / basis.grid_n()) % 2 ? 1.0 : -1.0;
  b.classification = Classification::nontrivial;
  EXPECT_TRUE(geometrically_distinct(a, b, basis));
  b.classification = Classification::trivial;
  EXPECT_FALSE(geometrically_distinct(a, b, basis));
}

TEST(Sweepout, ProductDiskCapacity) {
  const auto g = geometry(48, 0.0, 0.0);
  const auto basis = build_basis(g);
  const ActionParams params{1.2};
  const auto c = linking_constants(params, basis);
  EXPECT_GT(c.K, 4u);
  const auto chi = build_sweepout_chi(g, 0.2 * g.volume());
  EXPECT_EQ(kind_of([&] { build_product_disk(c, chi, 8, 2, 1, params, basis); }), ErrorKind::capacity);
}

TEST(Sweepout, ProductDiskBoundary) {
  const auto g = geometry(48, 0.0, 0.0);
  const auto basis = build_basis(g);
  const ActionParams params{0.5};
  const auto c = linking_constants(params, basis);
  EXPECT_EQ(c.K, 4u);
  const auto chi = build_sweepout_chi(g, 0.2 * g.volume());
  const auto mesh = build_product_disk(c, chi, 8, 2, 1, params, basis);
  EXPECT_EQ(mesh.kind, MeshKind::product);
  std::size_t fixed = 0;
  for (const auto& n : mesh.nodes)
    if (n.fixed) {
      ++fixed;
      EXPECT_LE(evaluate_J(n.point.fields(), params, basis), 1e-9);
    }
  EXPECT_GT(fixed, 0u);
  EXPECT_GT(mesh.max_energy(), 0.0);
}
