#include <benchmark/benchmark.h>

#include "mlcg/energy.hpp"
#include "mlcg/lattice.hpp"
#include "mlcg/potentials.hpp"
#include "mlcg/samplers.hpp"

namespace {

mlcg::Hamiltonian benchmark_model(const mlcg::LatticeGeometry& lat, double h) {
  const mlcg::SplitPotential sp{mlcg::PairPotential::nearest_neighbor(1.0), mlcg::PairPotential::curie_weiss(5.0, lat),
                                1.0};
  return mlcg::Hamiltonian(lat, sp, mlcg::Hamiltonian::uniform_field(lat, -h), 1.0);
}

void BM_DeltaFlipMorse(benchmark::State& state) {
  const auto g = mlcg::build_geometry(2, 64, 8);
  const auto pot = mlcg::PairPotential::morse_gaussian(1.0, 4.47, 10.0, 0.1, static_cast<double>(state.range(0)));
  const mlcg::Hamiltonian H(g.lattice, pot, mlcg::Hamiltonian::uniform_field(g.lattice, 0.0), 0.6);
  mlcg::Rng rng(1);
  const auto sigma = mlcg::random_config_with_coverage(g.lattice, 0.9, rng);
  mlcg::Site x = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mlcg::delta_flip(H, sigma, x));
    x = (x + 97) % g.lattice.sites;
  }
}
BENCHMARK(BM_DeltaFlipMorse)->Arg(4)->Arg(12)->Arg(24);

void BM_DeltaCoarse(benchmark::State& state) {
  const auto g = mlcg::build_geometry(2, 128, static_cast<int>(state.range(0)));
  const auto pot = mlcg::PairPotential::morse_gaussian(1.0, 4.47, 10.0, 0.1, 24.0);
  const mlcg::Hamiltonian H(g.lattice, pot, mlcg::Hamiltonian::uniform_field(g.lattice, 0.0), 0.6);
  const auto Hbar = mlcg::CoarseHamiltonian::compress(H, g.coarse, mlcg::Compression::full);
  mlcg::Rng rng(2);
  const auto eta = mlcg::project(g.coarse, mlcg::random_config_with_coverage(g.lattice, 0.9, rng));
  mlcg::Cell k = 0;
  for (auto _ : state) {
    const int dir = eta[k] > 0 ? -1 : 1;
    benchmark::DoNotOptimize(Hbar.delta(eta, k, dir));
    k = (k + 13) % g.coarse.cells;
  }
}
BENCHMARK(BM_DeltaCoarse)->Arg(4)->Arg(8);

// One chain step of each method on the 16x16 benchmark model.
void BM_Step(benchmark::State& state) {
  const auto method = static_cast<mlcg::Method>(state.range(0));
  const auto g = mlcg::build_geometry(2, 16, static_cast<int>(state.range(1)));
  mlcg::SamplerConfig cfg;
  cfg.method = method;
  cfg.strategy = mlcg::Strategy::splitting;
  const auto sampler = mlcg::Sampler::make(cfg, benchmark_model(g.lattice, 4.5), g.coarse);
  mlcg::Rng init(3);
  mlcg::ChainState chain(g.coarse, mlcg::random_config(g.lattice, init), mlcg::Rng(4));
  for (auto _ : state) sampler.step(chain);
  state.SetLabel(mlcg::to_string(method));
}
BENCHMARK(BM_Step)->Args({0, 4})->Args({1, 4})->Args({2, 4})->Args({2, 8});

}  // namespace

BENCHMARK_MAIN();
