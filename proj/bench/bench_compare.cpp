#include <benchmark/benchmark.h>

#include <dppcond/checks.hpp>
#include <dppcond/sampler.hpp>

using namespace dppcond;

namespace {

void bm_enumerate(benchmark::State& state, Exec exec) {
  KernelMatrix k = sine_kernel(12, 6.0).kernel;
  for (auto _ : state) {
    DppDistribution d = enumerate_distribution(k, 14, exec);
    benchmark::DoNotOptimize(d.probs.data());
  }
}

void bm_sample_batch(benchmark::State& state, Exec exec) {
  KernelMatrix k = sine_kernel(64, 8.0).kernel;
  for (auto _ : state) {
    SampleBatch b = sample_batch(k, 200, 4242, "bench", exec);
    benchmark::DoNotOptimize(b.configs.data());
  }
}

void bm_variance_mc(benchmark::State& state, Exec exec) {
  KernelMatrix k = sine_kernel(16, 8.0).kernel;
  SiteSubset b = SiteSubset::prefix(16, 3);
  Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(16);
  phi[9] = 1.0;
  CheckOptions o;
  o.mode = CheckMode::MonteCarlo;
  o.trials = 500;
  o.seed = 11;
  o.exec = exec;
  for (auto _ : state) {
    CheckResult r = check_variance_bound(k, b, phi, o, check_tol::variance);
    benchmark::DoNotOptimize(r.statistic);
  }
}

}  // namespace

BENCHMARK_CAPTURE(bm_enumerate, serial, Exec::Serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_enumerate, parallel, Exec::Parallel)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_sample_batch, serial, Exec::Serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_sample_batch, parallel, Exec::Parallel)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_variance_mc, serial, Exec::Serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_variance_mc, parallel, Exec::Parallel)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
