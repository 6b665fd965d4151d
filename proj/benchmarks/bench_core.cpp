// Copyright 2026 The parmesh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Micro-benchmarks for the hot paths: frame codec, link realization,
// victim traces and whole realizations.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "parmesh/frame.hpp"
#include "parmesh/metrics.hpp"
#include "parmesh/simulator.hpp"

using namespace parmesh;

namespace {

BeaconFrame full_beacon(int neighbors) {
  BeaconFrame b;
  b.sender = NodeId{1};
  b.sender_slot = 3;
  b.sender_hop = 2;
  for (int i = 0; i < neighbors; ++i) {
    b.neighbors.push_back({NodeId{static_cast<std::uint8_t>(i + 2)},
                           static_cast<std::uint8_t>(1 + i % 20)});
  }
  return b;
}

void BM_EncodeBeacon(benchmark::State& state) {
  const Frame f = full_beacon(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(codec::encode(f));
}
BENCHMARK(BM_EncodeBeacon)->Arg(0)->Arg(16)->Arg(64);

void BM_DecodeBeacon(benchmark::State& state) {
  const auto bytes = codec::encode(full_beacon(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(codec::decode(bytes));
}
BENCHMARK(BM_DecodeBeacon)->Arg(0)->Arg(16)->Arg(64);

void BM_RealizeLinks(benchmark::State& state) {
  Scenario s = make_preset(PresetId::kFig3bRandom);
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(realize_links(s, seed++));
}
BENCHMARK(BM_RealizeLinks);

void BM_VictimTrace(benchmark::State& state) {
  Scenario s = make_preset(PresetId::kFig3bRandom);
  s.horizon = from_s(20);
  const RunOutput out = run(s, 3, LogDetail::kMetrics);
  for (auto _ : state) {
    benchmark::DoNotOptimize(victim_trace(out.log, out.links, Time{s.horizon}));
  }
  state.counters["records"] = static_cast<double>(out.log.size());
}
BENCHMARK(BM_VictimTrace)->Unit(benchmark::kMillisecond);

void BM_Realization(benchmark::State& state) {
  Scenario s = make_preset(PresetId::kFig3bRandom);
  s.horizon = from_s(static_cast<double>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    Simulator sim(s, seed++, LogDetail::kMetrics);
    sim.run();
    benchmark::DoNotOptimize(sim.transmissions());
  }
}
BENCHMARK(BM_Realization)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
