#include <benchmark/benchmark.h>

#include "aeromine/engine.hpp"
#include "aeromine/optimizer.hpp"
#include "aeromine/oracle.hpp"
#include "aeromine/surrogate.hpp"

using namespace aeromine;

namespace {

Dataset synthetic_dataset(std::size_t positions, std::size_t rows) {
  const auto space = DesignSpace::turbine_default();
  RandomStream s(RandomKey{1, 0, 0, "bench-data"});
  Dataset data;
  for (std::size_t i = 0; i < rows; ++i) {
    ArrayConfiguration c;
    UnitVector input;
    for (std::size_t p = 0; p < positions; ++p) {
      c.genomes.push_back(random_genome(space, s));
      for (double v : normalize(c.genomes.back(), space).coords) input.coords.push_back(v);
    }
    data.push_back({input, synthetic_evaluate(c, space, OracleConstants{}).fitness});
  }
  return data;
}

void BM_SyntheticEvaluate(benchmark::State& state) {
  const auto space = DesignSpace::turbine_default();
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream s(RandomKey{2, 0, 0, "bench-eval"});
  ArrayConfiguration c;
  for (std::size_t p = 0; p < n; ++p) c.genomes.push_back(random_genome(space, s));
  c.wind_speeds = {1.0, 2.0, 3.0};
  const OracleConstants k;
  for (auto _ : state) benchmark::DoNotOptimize(synthetic_evaluate(c, space, k).fitness);
}
BENCHMARK(BM_SyntheticEvaluate)->Arg(1)->Arg(2)->Arg(6);

void BM_Fit(benchmark::State& state) {
  const auto data = synthetic_dataset(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    RandomStream s(RandomKey{3, 0, 0, "bench-fit"});
    benchmark::DoNotOptimize(fit(data, FitHyper{}, s).meta.final_loss);
  }
}
BENCHMARK(BM_Fit)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto data = synthetic_dataset(2, 50);
  RandomStream s(RandomKey{4, 0, 0, "bench-predict"});
  const auto model = fit(data, FitHyper{}, s);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(data[0].input));
}
BENCHMARK(BM_Predict);

void BM_EvolveOnModel(benchmark::State& state) {
  const auto space = DesignSpace::turbine_default();
  const auto data = synthetic_dataset(1, 50);
  RandomStream fs(RandomKey{5, 0, 0, "bench-inv-fit"});
  const auto model = fit(data, FitHyper{}, fs);
  const Composer identity = [](const UnitVector& v) { return v; };
  for (auto _ : state) {
    RandomStream s(RandomKey{5, 0, 0, "bench-inv"});
    benchmark::DoNotOptimize(evolve_on_model(model, identity, {}, EAParams{}, space, s).size());
  }
}
BENCHMARK(BM_EvolveOnModel)->Unit(benchmark::kMillisecond);

void BM_MiningRound(benchmark::State& state) {
  RunConfig c;
  c.positions = static_cast<std::size_t>(state.range(0));
  c.budget = c.positions * (c.seeds_per_position + 1);
  for (auto _ : state) {
    SyntheticOracle oracle(c.space, c.constants);
    Engine engine(c, RunMode::surrogate, oracle, nullptr, {false});
    engine.step();
    engine.step();
    benchmark::DoNotOptimize(engine.result().best_fitness);
  }
}
BENCHMARK(BM_MiningRound)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
