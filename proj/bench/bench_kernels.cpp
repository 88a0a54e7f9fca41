// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "morphconn/features.hpp"
#include "morphconn/forest.hpp"
#include "morphconn/kernels.hpp"
#include "morphconn/random.hpp"
#include "morphconn/select.hpp"

using namespace morphconn;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Execution mode(const benchmark::State& state) {
  return state.range(0) ? Execution::kParallel : Execution::kSerial;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_McfRows(benchmark::State& state) {
  const std::size_t subjects = 64, regions = 148;
  const auto profiles = gaussian(subjects * regions * kMeasureCount, 1);
  std::vector<double> out(subjects * mcf_column_count(regions));
  for (auto _ : state) {
    kernels::mcf_rows(mode(state), profiles, subjects, regions, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(out.size()));
  label(state);
}
BENCHMARK(BM_McfRows)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Zscore(benchmark::State& state) {
  const std::size_t rows = 400, cols = 10878;
  const auto base = gaussian(rows * cols, 2);
  const std::vector<double> mean(cols, 0.1), sd(cols, 1.3);
  std::vector<double> values;
  for (auto _ : state) {
    state.PauseTiming();
    values = base;
    state.ResumeTiming();
    if (mode(state) == Execution::kParallel) {
      kernels::zscore_parallel(values, rows, cols, mean, sd);
    } else {
      kernels::zscore_serial(values, rows, cols, mean, sd);
    }
    benchmark::DoNotOptimize(values.data());
  }
  label(state);
}
BENCHMARK(BM_Zscore)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Select(benchmark::State& state) {
  const std::size_t rows = 240;
  FeatureMatrix m;
  m.kind = FeatureKind::kMCF;
  m.descriptors = mcf_descriptors(148);
  for (std::size_t r = 0; r < rows; ++r) m.subject_ids.push_back("s" + std::to_string(r));
  m.values = gaussian(rows * m.cols(), 3);
  std::vector<Group> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) labels[r] = r % 2 ? Group::kASD : Group::kTD;
  for (auto _ : state) {
    auto sel = select_features(m, labels, 0.05, TTestVariant::kWelch, mode(state));
    benchmark::DoNotOptimize(sel.selected_count);
  }
  label(state);
}
BENCHMARK(BM_Select)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Forest(benchmark::State& state) {
  const std::size_t rows = 240, cols = 500;
  auto values = gaussian(rows * cols, 4);
  std::vector<Group> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    labels[r] = r % 2 ? Group::kASD : Group::kTD;
    if (labels[r] == Group::kASD) values[r * cols] += 1.5;
  }
  ForestParams params;
  params.seed = 5;
  for (auto _ : state) {
    auto model = train_forest(FeatureView{values, rows, cols}, labels, params, mode(state));
    benchmark::DoNotOptimize(model.trees.data());
  }
  label(state);
}
BENCHMARK(BM_Forest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
