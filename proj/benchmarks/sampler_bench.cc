#include <benchmark/benchmark.h>

#include "hfg/sampler.h"
#include "hfg/synth.h"

namespace {

const hfg::Dataset& dataset() {
  static const hfg::Dataset d = hfg::generate_planted(hfg::hetero_spec(4000, 2000, 40, 8, 16, 1));
  return d;
}

hfg::TargetBatch targets(std::size_t n, std::uint64_t seq) {
  hfg::TargetBatch t;
  t.seq_no = seq;
  t.epoch_seed = 11;
  for (std::size_t i = 0; i < n; ++i) t.seeds.push_back((seq * 7919 + i * 104729) % 4000);
  return t;
}

void BM_SampleMinibatch(benchmark::State& state) {
  const auto& d = dataset();
  const hfg::FanoutPlan plan{{15, 10, 5}};
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seq = 0;
  for (auto _ : state) benchmark::DoNotOptimize(hfg::sample_minibatch(d.graph, targets(n, seq++), plan));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleMinibatch)->Arg(64)->Arg(256)->Arg(1000);

void BM_Compact(benchmark::State& state) {
  const auto& d = dataset();
  const hfg::FanoutPlan plan{{15, 10, 5}};
  const auto raw = hfg::sample_minibatch(d.graph, targets(static_cast<std::size_t>(state.range(0)), 0), plan);
  for (auto _ : state) benchmark::DoNotOptimize(hfg::compact(raw, d.graph.edge_offsets()));
}
BENCHMARK(BM_Compact)->Arg(64)->Arg(1000);

}  // namespace
