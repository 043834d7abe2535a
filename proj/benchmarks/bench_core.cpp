#include <benchmark/benchmark.h>

#include <cmath>

#include "sshg/action.hpp"
#include "sshg/nehari.hpp"
#include "sshg/spin_spectral.hpp"

using namespace sshg;

namespace {

SpectralBasis basis_for(int n) {
  TorusGeometry g;
  g.grid_n = n;
  g.spin_delta = {0.5, 0.5};
  return build_basis(g);
}

ScalarField wave(const SpectralBasis& basis) {
  const auto& g = basis.geometry();
  ScalarField u(basis.points());
  for (int i = 0; i < g.grid_n; ++i)
    for (int j = 0; j < g.grid_n; ++j)
      u.values[static_cast<std::size_t>(i) * g.grid_n + j] = 0.4 * std::sin(i * g.spacing()) + 0.2 * std::cos(j * g.spacing());
  return u;
}

void BM_DiracApply(benchmark::State& state) {
  const auto basis = basis_for(static_cast<int>(state.range(0)));
  const auto psi = basis.eigenspinor(3) + basis.eigenspinor(-5);
  for (auto _ : state) benchmark::DoNotOptimize(dirac_apply(psi, basis));
}
BENCHMARK(BM_DiracApply)->Arg(32)->Arg(64)->Arg(128);

void BM_EvaluateJ(benchmark::State& state) {
  const auto basis = basis_for(static_cast<int>(state.range(0)));
  const ActionParams params{0.5};
  const auto u = wave(basis);
  const auto psi = basis.eigenspinor(1) + basis.eigenspinor(-2);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_J(u, psi, params, basis));
}
BENCHMARK(BM_EvaluateJ)->Arg(32)->Arg(64)->Arg(128);

void BM_FiberSolve(benchmark::State& state) {
  const auto basis = basis_for(static_cast<int>(state.range(0)));
  const ActionParams params{0.5};
  const auto u = wave(basis);
  const auto f = basis.eigenspinor(1) + basis.eigenspinor(4);
  for (auto _ : state) benchmark::DoNotOptimize(fiber_solve(u, f, params, basis));
}
BENCHMARK(BM_FiberSolve)->Arg(32)->Arg(64);

}  // namespace
BENCHMARK_MAIN();
