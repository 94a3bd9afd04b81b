#include <random>

#include <benchmark/benchmark.h>

#include "rhsim/harness.hpp"
#include "rhsim/trace.hpp"

using namespace rhsim;

namespace {

const Geometry kRef = Geometry::ddr4_reference();
constexpr std::uint64_t MiB = 1ULL << 20;

Mapper preset(const char* name) { return Mapper(*builtin_mapping(name, kRef)); }

void BM_PaToCoord(benchmark::State& state) {
  const auto m = preset("bank-xor-noncontig-row");
  std::mt19937_64 rng(1);
  std::vector<PhysAddr> pas(4096);
  for (auto& pa : pas) pa = rng() % kRef.total_bytes();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.to_coord(pas[i++ & 4095]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PaToCoord);

void BM_CoordToPa(benchmark::State& state) {
  const auto m = preset("bank-xor-noncontig-row");
  std::mt19937_64 rng(2);
  std::vector<DramCoordinate> cs(4096);
  for (auto& c : cs) c = m.to_coord(rng() % kRef.total_bytes());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.to_pa(cs[i++ & 4095]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CoordToPa);

void BM_Validate(benchmark::State& state) {
  const auto m = *builtin_mapping("bank-xor", kRef);
  for (auto _ : state) benchmark::DoNotOptimize(validate(m));
}
BENCHMARK(BM_Validate);

void BM_PlanSiloz(benchmark::State& state) {
  const auto m = preset("bank-xor");
  const auto size = static_cast<std::uint64_t>(state.range(0)) * MiB;
  for (auto _ : state) benchmark::DoNotOptimize(plan_siloz(m, {size, size}));
}
BENCHMARK(BM_PlanSiloz)->Arg(16)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_PlanCitadel(benchmark::State& state) {
  const auto m = preset("bank-xor-noncontig-row");
  for (auto _ : state) benchmark::DoNotOptimize(plan_citadel(m, {256 * MiB, 256 * MiB}, 1));
}
BENCHMARK(BM_PlanCitadel)->Unit(benchmark::kMillisecond);

void BM_HammerLoop(benchmark::State& state) {
  HammerParams p;
  p.hc_first = 1000;
  p.flip_probability = 1e-2;
  DramSim sim(preset("simple"), p);
  const DramCoordinate agg{0, 0, 0, 0, 256, 0};
  std::uint64_t n = 0;
  for (auto _ : state) {
    sim.activate_row(agg);
    if (++n % 2000 == 0) sim.refresh();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_HammerLoop);

void BM_ReplayMatvec(benchmark::State& state) {
  const auto m = preset("bank-xor");
  const auto trace = synth::matvec(kRef, 64, 64, 0x0);
  for (auto _ : state) benchmark::DoNotOptimize(replay_trace(trace, m, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace.size()));
}
BENCHMARK(BM_ReplayMatvec)->Unit(benchmark::kMicrosecond);

void BM_AttackCell(benchmark::State& state) {
  Scenario s;
  s.mapping_ref = "bank-xor";
  s.mapping = *builtin_mapping("bank-xor", kRef);
  s.mitigation = Mitigation::siloz;
  s.vm_sizes = {8 * MiB, 8 * MiB};
  s.hammer.hc_first = 1000;
  s.hammer.flip_probability = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(run_attack(s));
}
BENCHMARK(BM_AttackCell)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
