#include <benchmark/benchmark.h>

#include <random>

#include "choroid/enhance.hpp"
#include "choroid/fovea.hpp"
#include "choroid/metrics.hpp"
#include "choroid/mmcq.hpp"
#include "choroid/niblack.hpp"
#include "choroid/phantom.hpp"

using namespace choroid;

namespace {

const PhantomRender& phantom() {
  static const auto p = [] {
    for (const auto& m : standard_suite(3))
      if (m.spec.name == "sinusoid_mid") return render(m.spec);
    return PhantomRender{};
  }();
  return p;
}

void BM_MmcqEnsemble(benchmark::State& state) {
  const auto& p = phantom();
  for (auto _ : state) benchmark::DoNotOptimize(segment_ensemble(p.image, p.region));
}
BENCHMARK(BM_MmcqEnsemble)->Unit(benchmark::kMillisecond);

void BM_MmcqSingle(benchmark::State& state) {
  const auto& p = phantom();
  for (auto _ : state) benchmark::DoNotOptimize(segment_once(p.image, p.region, {}));
}
BENCHMARK(BM_MmcqSingle)->Unit(benchmark::kMillisecond);

void BM_Niblack(benchmark::State& state) {
  const auto& p = phantom();
  const NiblackParams params{static_cast<std::size_t>(state.range(0)), -0.05};
  for (auto _ : state) benchmark::DoNotOptimize(niblack_segment(p.image, p.region, params));
}
BENCHMARK(BM_Niblack)->Arg(15)->Arg(51)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  const auto& p = phantom();
  MetricInputs in{p.region, p.vessel, std::nullopt, {}, p.fovea};
  in.meta.pixel_scale = {9000.0 / 768.0, 3.87};
  for (auto _ : state) benchmark::DoNotOptimize(compute_all(in));
}
BENCHMARK(BM_Metrics)->Unit(benchmark::kMicrosecond);

void BM_MedianCut(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> values(static_cast<std::size_t>(state.range(0)));
  for (auto& v : values) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(median_cut(values, 8));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MedianCut)->Arg(32 * 32)->Arg(128 * 128)->Unit(benchmark::kMicrosecond);

void BM_FoveaDecode(benchmark::State& state) {
  const auto map = encode_fovea_target({384, 300}, 768, 768);
  for (auto _ : state) benchmark::DoNotOptimize(decode_fovea_column(map));
}
BENCHMARK(BM_FoveaDecode)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
