#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "logitcalib/logitcalib.hpp"

using namespace logitcalib;

namespace {

std::vector<std::string> class_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
  return names;
}

std::vector<double> random_logits(std::mt19937_64& rng, std::size_t k) {
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<double> z(k);
  for (auto& v : z) v = n(rng);
  return z;
}

void BM_Softmax(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto z = random_logits(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(softmax(z));
}
BENCHMARK(BM_Softmax)->Arg(3)->Arg(10)->Arg(100);

void BM_MlPosterior(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto data = generate(separated_spec(class_names(k), 3.0, {200 * k, 0, 0, 0}, 2));
  const auto model = fit_class_conditional(data, kDefaultBinCount);
  std::mt19937_64 rng(3);
  const auto z = random_logits(rng, k);
  for (auto _ : state) benchmark::DoNotOptimize(ml_posterior(model, z));
}
BENCHMARK(BM_MlPosterior)->Arg(3)->Arg(10);

void BM_MapPosterior(benchmark::State& state) {
  const auto data = generate(separated_spec(class_names(3), 3.0, {600, 0, 0, 0}, 2));
  const auto model = fit_class_conditional(data, kDefaultBinCount);
  std::mt19937_64 rng(3);
  const auto z = random_logits(rng, 3);
  for (auto _ : state) benchmark::DoNotOptimize(map_posterior(model, z));
}
BENCHMARK(BM_MapPosterior);

void BM_FitHistogram(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> samples(static_cast<std::size_t>(state.range(0)));
  for (auto& s : samples) s = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(fit_histogram(samples, kDefaultBinCount));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitHistogram)->Arg(1000)->Arg(100000);

void BM_FitTemperature(benchmark::State& state) {
  const auto val = generate(calibrated_spec(class_names(3), 2.0,
                                            {0, static_cast<std::size_t>(state.range(0)), 0, 0}, 5))
                       .select(Split::kValidation);
  for (auto _ : state) benchmark::DoNotOptimize(fit_temperature(val));
}
BENCHMARK(BM_FitTemperature)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
