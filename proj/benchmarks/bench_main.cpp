// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "ghostpeak/campaign.hpp"
#include "ghostpeak/phy.hpp"
#include "ghostpeak/receiver.hpp"

using namespace ghostpeak;

static void BM_GenerateSts(benchmark::State& state) {
  StsConfig cfg;
  cfg.length_bits = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_sts_bits(cfg));
    ++cfg.counter;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateSts)->Arg(256)->Arg(4096);

static HrpPacketSpec sts_only(int bits) {
  HrpPacketSpec spec;
  spec.preamble_code = make_preamble_code(7);
  spec.preamble_repetitions = 1;
  spec.sfd.clear();
  StsConfig sts;
  sts.length_bits = bits;
  spec.sts = sts;
  return spec;
}

static void BM_CirDense(benchmark::State& state) {
  auto spec = sts_only(256);
  PulseShape shape;
  auto tmpl = local_template(spec, Field::sts, shape, kDefaultSampleRateHz);
  BasebandSignal rx = tmpl;
  rx.samples.resize(tmpl.samples.size() + 128);
  for (auto _ : state) benchmark::DoNotOptimize(compute_cir(rx, tmpl));
}
BENCHMARK(BM_CirDense)->Unit(benchmark::kMillisecond);

static void BM_CirPulseMatched(benchmark::State& state) {
  auto spec = sts_only(256);
  PulseShape shape;
  auto train = field_train(spec, Field::sts, shape, kDefaultSampleRateHz);
  BasebandSignal rx = train.render();
  rx.samples.resize(rx.samples.size() + 128);
  for (auto _ : state) benchmark::DoNotOptimize(compute_cir(rx, train, 0, 128));
}
BENCHMARK(BM_CirPulseMatched)->Unit(benchmark::kMicrosecond);

static void BM_RunExchange(benchmark::State& state) {
  ScenarioConfig cfg;
  const bool attack = state.range(0) != 0;
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto ex = build_exchange(cfg, trial_seed(1, static_cast<int>(i++)), attack);
    benchmark::DoNotOptimize(run_exchange(ex, i));
  }
}
BENCHMARK(BM_RunExchange)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
