#include <benchmark/benchmark.h>

#include "hfg/partition.h"
#include "hfg/synth.h"

namespace {

void BM_Multiconstraint(benchmark::State& state) {
  const auto d = hfg::generate_planted(hfg::hetero_spec(static_cast<std::uint64_t>(state.range(0)),
                                                        static_cast<std::uint64_t>(state.range(0)) / 2, 20, 8, 4, 3));
  const auto c = hfg::build_constraints(d.graph);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hfg::partition_multiconstraint(d.graph, 4, c, 0.05, 1));
  }
  state.counters["vertices"] = static_cast<double>(d.graph.num_vertices());
}
BENCHMARK(BM_Multiconstraint)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_Random(benchmark::State& state) {
  const auto d = hfg::generate_planted(hfg::hetero_spec(4000, 2000, 20, 8, 4, 3));
  const auto c = hfg::build_constraints(d.graph);
  for (auto _ : state) benchmark::DoNotOptimize(hfg::partition_random(d.graph, 4, c, 1));
}
BENCHMARK(BM_Random)->Unit(benchmark::kMillisecond);

}  // namespace
