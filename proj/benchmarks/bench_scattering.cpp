#include <benchmark/benchmark.h>

#include "synthlat/constants.hpp"
#include "synthlat/scattering.hpp"

using namespace synthlat;

namespace {

lattice::LatticeModel chain(int n) {
  auto model = lattice::LatticeModel::uniform_chain(n, Complex(kTwoPi * 1.25e6, 0.0),
                                                    kTwoPi * 60e3, kTwoPi * 40e3);
  model.origin_index = n / 2;
  return model;
}

void BM_SteadyStateS(benchmark::State& state) {
  const auto model = chain(static_cast<int>(state.range(0)));
  const auto grid = scattering::make_omega_grid(0.0, kTwoPi * 4e6, 801);
  for (auto _ : state) {
    auto s = scattering::steady_state_s(model, grid);
    benchmark::DoNotOptimize(s.s.data());
  }
  state.SetItemsProcessed(state.iterations() * 801);
}
BENCHMARK(BM_SteadyStateS)->Arg(8)->Arg(16)->Arg(27);

void BM_TransientFromTrace(benchmark::State& state) {
  const auto model = chain(8);
  const auto grid = scattering::make_omega_grid(0.0, kTwoPi * 4e6, 161);
  for (auto _ : state) {
    auto cols = scattering::transient_spectrum_from_trace(model, 0, grid, 20e-6, 2e-9);
    benchmark::DoNotOptimize(cols.data());
  }
}
BENCHMARK(BM_TransientFromTrace);

void BM_KappaEIntegral(benchmark::State& state) {
  lattice::LatticeModel single = lattice::LatticeModel::uniform_chain(
      1, {0.0, 0.0}, kTwoPi * 100e3, 0.0);
  const auto grid = scattering::make_omega_grid(0.0, 50.0 * kTwoPi * 100e3, 4001);
  const auto transient = scattering::transient_s(single, grid);
  std::vector<Complex> diag(grid.size());
  for (size_t f = 0; f < grid.size(); ++f) diag[f] = transient.s[f](0, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(scattering::kappa_e_from_integral(diag, grid));
  }
}
BENCHMARK(BM_KappaEIntegral);

}  // namespace

BENCHMARK_MAIN();
