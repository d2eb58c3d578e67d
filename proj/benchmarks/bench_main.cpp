#include <benchmark/benchmark.h>

#include <random>

#include "rt/galerkin.hpp"
#include "rt/jointspec.hpp"
#include "rt/koszul.hpp"
#include "rt/measures.hpp"
#include "rt/models.hpp"
#include "rt/tuples.hpp"

using namespace rt;

namespace {

CommutingTuple polyTuple(int n, int kappa) {
  std::mt19937_64 rng(7);
  return makeTuple(tuples::polynomialTuple(n, kappa, rng));
}

void BM_BuildD(benchmark::State& st) {
  const auto t = polyTuple(static_cast<int>(st.range(0)), 3);
  const CoForm l = CoForm::Zero(3);
  for (auto _ : st) benchmark::DoNotOptimize(buildD(t, l));
}
BENCHMARK(BM_BuildD)->Arg(4)->Arg(8)->Arg(12);

void BM_Cohomology(benchmark::State& st) {
  const auto t = polyTuple(static_cast<int>(st.range(0)), 3);
  const auto d = buildD(t, CoForm::Zero(3));
  for (auto _ : st) benchmark::DoNotOptimize(cohomologyDims(d));
}
BENCHMARK(BM_Cohomology)->Arg(4)->Arg(8)->Arg(12);

void BM_JointEigenvalues(benchmark::State& st) {
  std::mt19937_64 rng(3);
  const int n = static_cast<int>(st.range(0));
  const auto t = makeTuple(tuples::jordanTuple({n / 2, n - n / 2}, 2, rng));
  for (auto _ : st) benchmark::DoNotOptimize(jointEigenvalues(t));
}
BENCHMARK(BM_JointEigenvalues)->Arg(4)->Arg(8)->Arg(16);

void BM_BuildTruncation(benchmark::State& st) {
  const auto m = modelByName("arnold");
  const auto escape = buildEscape(m);
  const CoForm l = CoForm::Zero(1);
  for (auto _ : st) benchmark::DoNotOptimize(buildTruncation(m, escape, static_cast<int>(st.range(0)), 8, l));
}
BENCHMARK(BM_BuildTruncation)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ResonancesArnoldProduct(benchmark::State& st) {
  const auto m = modelByName("arnold-product");
  const auto escape = buildEscape(m);
  for (auto _ : st) benchmark::DoNotOptimize(resonancesInWindow(m, escape, 32, calibrateN(escape)));
}
BENCHMARK(BM_ResonancesArnoldProduct)->Unit(benchmark::kMillisecond);

void BM_BirkhoffConeAverage(benchmark::State& st) {
  const auto m = modelByName("arnold-product");
  const auto cone = coneAround(m, 0.3);
  std::mt19937_64 rng(5);
  const auto [u, v] = randomTestPair(m, rng);
  SamplingOptions o;
  o.nSamples = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(birkhoffConeAverage(m, u, v, cone, 30.0, o));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_BirkhoffConeAverage)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
