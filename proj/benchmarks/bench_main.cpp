#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "samdh/cache.hpp"
#include "samdh/crc32.hpp"
#include "samdh/rng.hpp"
#include "samdh/route_table.hpp"
#include "samdh/simkernel.hpp"

namespace {

using namespace samdh;

void BM_Crc32(benchmark::State& state) {
  std::string data(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) benchmark::DoNotOptimize(crc32(data));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Crc32)->Arg(4 << 10)->Arg(1 << 20);

// Steady-state admission into a full cache: every admit evicts.
void BM_CacheAdmit(benchmark::State& state) {
  CacheConfig config;
  config.quota = static_cast<Bytes>(state.range(0)) * 1000;
  config.group_shares = {{"a", 0.6}, {"b", 0.4}};
  StationCache cache(config);
  std::uint64_t id = 1;
  double now = 0;
  for (auto _ : state) {
    now += 1.0;
    benchmark::DoNotOptimize(cache.admit(FileId{id}, 1000, (id & 1) ? "a" : "b", now));
    ++id;
  }
}
BENCHMARK(BM_CacheAdmit)->Arg(100)->Arg(1000);

void BM_KernelScheduleRun(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    Kernel kernel;
    SplitMix64 rng(7);
    std::size_t fired = 0;
    for (std::size_t i = 0; i < n; ++i) kernel.schedule(static_cast<double>(rng.below(1000)), [&] { ++fired; });
    kernel.run();
    benchmark::DoNotOptimize(fired);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_KernelScheduleRun)->Arg(10'000);

// Path along a 20-node chain built from domain routes.
void BM_ComputePath(benchmark::State& state) {
  RouteTable table;
  const int n = 20;
  for (int i = 0; i < n; ++i) table.add_node("n" + std::to_string(i), "d" + std::to_string(i), NodeKind::station);
  for (int i = 0; i + 1 < n; ++i) table.add_route("n" + std::to_string(i), "*", "n" + std::to_string(i + 1));
  for (auto _ : state) benchmark::DoNotOptimize(table.compute_path("n0", "n19"));
}
BENCHMARK(BM_ComputePath);

}  // namespace

BENCHMARK_MAIN();
