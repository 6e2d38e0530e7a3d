#include <benchmark/benchmark.h>

#include "synthlat/constants.hpp"
#include "synthlat/dynamics.hpp"
#include "synthlat/lattice.hpp"

using namespace synthlat;

namespace {

lattice::LatticeModel chain(int n) {
  auto model = lattice::LatticeModel::uniform_chain(n, Complex(kTwoPi * 1.25e6, 0.0),
                                                    kTwoPi * 60e3, kTwoPi * 40e3);
  model.origin_index = n / 2;
  return model;
}

void BM_BuildHamiltonian(benchmark::State& state) {
  const auto model = chain(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto h = lattice::build_hamiltonian(model);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BM_BuildHamiltonian)->Arg(16)->Arg(32)->Arg(64);

void BM_Evolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto model = chain(n);
  ComplexVector beta0 = ComplexVector::Zero(n);
  beta0[n / 2] = 1.0;
  std::vector<double> grid(1001);
  for (int i = 0; i <= 1000; ++i) grid[static_cast<size_t>(i)] = i * 2e-9;
  for (auto _ : state) {
    auto trace = dynamics::evolve(model, beta0, grid);
    benchmark::DoNotOptimize(trace.amps.data());
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Evolve)->Arg(16)->Arg(32)->Arg(61);

void BM_TimeReversal(benchmark::State& state) {
  const int n = 21;
  const auto model = chain(n);
  ComplexVector beta0 = ComplexVector::Zero(n);
  beta0[n / 2] = 1.0;
  for (auto _ : state) {
    auto result = dynamics::time_reverse_protocol(model, 0.15e-6, 0.5e-6, beta0, 2e-9);
    benchmark::DoNotOptimize(result.fidelity);
  }
}
BENCHMARK(BM_TimeReversal);

}  // namespace
