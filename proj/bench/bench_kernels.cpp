#include <benchmark/benchmark.h>

#include "uavaoi/nn.hpp"
#include "uavaoi/oracle.hpp"

using namespace uavaoi;

namespace {

struct GradFixture {
  nn::Mlp net;
  std::vector<std::vector<double>> inputs;
  nn::OutputGradFn loss = [](std::size_t, std::span<const double> out, std::span<double> g) {
    for (std::size_t j = 0; j < out.size(); ++j) g[j] = out[j];
  };

  explicit GradFixture(std::size_t batch) {
    Rng rng(1);
    net = nn::Mlp({200, 64, 64, 13}, {nn::Activation::tanh, nn::Activation::tanh, nn::Activation::identity}, rng);
    inputs.assign(batch, std::vector<double>(200, 0.0));
    for (std::size_t i = 0; i < batch; ++i) inputs[i][i % 200] = 1.0;
  }
};

void BM_GradientsParallel(benchmark::State& st) {
  GradFixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(nn::accumulate_gradients(f.net, f.inputs, f.loss));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_GradientsSerial(benchmark::State& st) {
  GradFixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(nn::accumulate_gradients_reference(f.net, f.inputs, f.loss));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_FadingParallel(benchmark::State& st) {
  const auto cfg = desk_scale_config(0);
  for (auto _ : st) benchmark::DoNotOptimize(mean_fading_power(cfg, 120.0, st.range(0), 3));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_FadingSerial(benchmark::State& st) {
  const auto cfg = desk_scale_config(0);
  for (auto _ : st) benchmark::DoNotOptimize(mean_fading_power_reference(cfg, 120.0, st.range(0), 3));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

OracleInstance oracle_instance() {
  auto cfg = tiny_oracle_config();
  cfg.horizon = 4;
  return OracleInstance(cfg);
}

void BM_OracleParallel(benchmark::State& st) {
  const auto inst = oracle_instance();
  for (auto _ : st) benchmark::DoNotOptimize(solve_exact(inst, OracleTarget::obj2_max).objective2);
}

void BM_OracleSerial(benchmark::State& st) {
  const auto inst = oracle_instance();
  for (auto _ : st) benchmark::DoNotOptimize(solve_exact_reference(inst, OracleTarget::obj2_max).objective2);
}

}  // namespace

BENCHMARK(BM_GradientsParallel)->Arg(64)->Arg(1024)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_GradientsSerial)->Arg(64)->Arg(1024)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_FadingParallel)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_FadingSerial)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_OracleParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_OracleSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
