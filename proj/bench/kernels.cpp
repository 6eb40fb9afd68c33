// Kernel timings: batched vs serial reference objective, partition
// extraction and Monte-Carlo evaluation.

#include <omp.h>

#include <benchmark/benchmark.h>

#include "ncf/exact_eval.hpp"
#include "ncf/system.hpp"
#include "ncf/trainer.hpp"

using namespace ncf;

namespace {

TrainConfig config(int K) {
  TrainConfig cfg;
  cfg.modulation = Modulation::pam4;
  cfg.K1 = cfg.K2 = {K};
  cfg.hidden = {64, 64};
  cfg.seed = 7;
  return cfg;
}

Batch batch_of(const TrainConfig& cfg, int n) {
  Rng src = make_rng(1, Stream::source);
  NoiseStreams noise = NoiseStreams::from_run_seed(1);
  return draw_batch(cfg.constellation(), cfg.channel(), n, src, noise);
}

// range(0) = K, range(1) = OpenMP threads.
void BM_LossBatched(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)));
  const auto models = init_distributed(cfg);
  const auto batch = batch_of(cfg, 256);
  auto grad = SystemGradient::zeros_like(models);
  LossOptions opt;
  opt.lambda = 8.0;
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    grad.set_zero();
    benchmark::DoNotOptimize(evaluate_loss(models, batch, opt, &grad).total);
  }
  omp_set_num_threads(omp_get_num_procs());
}
BENCHMARK(BM_LossBatched)->ArgsProduct({{16, 64}, {1, 2, 4}})->Unit(benchmark::kMillisecond);

void BM_LossReference(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)));
  const auto models = init_distributed(cfg);
  const auto batch = batch_of(cfg, 256);
  auto grad = SystemGradient::zeros_like(models);
  LossOptions opt;
  opt.lambda = 8.0;
  for (auto _ : state) {
    grad.set_zero();
    benchmark::DoNotOptimize(reference::evaluate_loss(models, batch, opt, &grad).total);
  }
}
BENCHMARK(BM_LossReference)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Extraction(benchmark::State& state) {
  const auto cfg = config(16);
  const auto models = init_distributed(cfg);
  ExtractionOptions ext;
  ext.resolution_1d = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(extract_relay(models.relays[0], 1.0, 0.1, ext).components.size());
}
BENCHMARK(BM_Extraction)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  const auto cfg = config(16);
  const auto models = init_distributed(cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(mc_metrics(models, cfg.constellation(), cfg.channel(), 100000, 3).ser);
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
