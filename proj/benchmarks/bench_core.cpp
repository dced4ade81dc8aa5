#include <benchmark/benchmark.h>

#include <map>
#include <sstream>

#include "cohort/calibration.hpp"
#include "cohort/eval.hpp"
#include "cohort/groupdef.hpp"
#include "cohort/mining.hpp"
#include "cohort/scoring.hpp"
#include "cohort/synth.hpp"

namespace {

using namespace cohort;

const GeneratedLog& fixture(std::size_t population) {
  static std::map<std::size_t, GeneratedLog> cache;
  auto it = cache.find(population);
  if (it == cache.end()) {
    GeneratorSpec spec;
    spec.population = population;
    spec.groups[0].size = population / 20;
    it = cache.emplace(population, generate(spec)).first;
  }
  return it->second;
}

GroupDefinition definition_for(const GeneratedLog& g) {
  const auto plan = draw_sample(g.manifests[0].members, 30, 1, 0.5);
  return build_definition(g.log, project_some(g.log, plan.train), 0.8, 0.8);
}

void BM_FpGrowth(benchmark::State& state) {
  const auto& g = fixture(10'000);
  const auto sample = project_some(g.log, draw_sample(g.manifests[0].members, 30, 1, 0.5).train);
  const double phi = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(fp_growth(sample, phi));
}
BENCHMARK(BM_FpGrowth)->Arg(100)->Arg(80)->Arg(60)->Unit(benchmark::kMicrosecond);

void BM_LongestPattern(benchmark::State& state) {
  const auto& g = fixture(10'000);
  const auto sample = project_some(g.log, draw_sample(g.manifests[0].members, 30, 1, 0.5).train);
  const double phi = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(longest_frequent_pattern(sample, phi));
}
BENCHMARK(BM_LongestPattern)->Arg(80)->Arg(30)->Arg(5)->Unit(benchmark::kMicrosecond);

void BM_LoadLog(benchmark::State& state) {
  const auto& g = fixture(static_cast<std::size_t>(state.range(0)));
  std::ostringstream out;
  write_log(out, g.log);
  const std::string csv = out.str();
  for (auto _ : state) {
    std::istringstream in(csv);
    benchmark::DoNotOptimize(load_log(in));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * csv.size()));
}
BENCHMARK(BM_LoadLog)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_ScorePopulation(benchmark::State& state) {
  const auto& g = fixture(static_cast<std::size_t>(state.range(0)));
  const auto def = definition_for(g);
  for (auto _ : state) benchmark::DoNotOptimize(score_population(g.log, def));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * g.log.patient_count()));
}
BENCHMARK(BM_ScorePopulation)->Arg(10'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  const auto& g = fixture(static_cast<std::size_t>(state.range(0)));
  const auto plan = draw_sample(g.manifests[0].members, 30, 1, 0.5);
  const auto def = build_definition(g.log, project_some(g.log, plan.train), 0.8, 0.8);
  const auto scores = score_population(g.log, def);
  for (auto _ : state) {
    benchmark::DoNotOptimize(calibrate(scores, def, plan.holdout, CutoffMethod::elbow));
  }
}
BENCHMARK(BM_Calibrate)->Arg(10'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
