#include <benchmark/benchmark.h>

#include <vector>

#include "fastswitch/modulating.hpp"
#include "fastswitch/random.hpp"
#include "fastswitch/stats.hpp"
#include "fastswitch/switching_jump.hpp"
#include "fastswitch/switching_sde.hpp"

namespace fs = fastswitch;

namespace {

fs::ModulatorSpec two_state() {
  Eigen::MatrixXd g(2, 2);
  g << -1.0, 1.0, 3.0, -3.0;
  return fs::ModulatorSpec::ctmc(fs::StateSpace({"A", "B"}), g);
}

void BM_PhiloxBlock(benchmark::State& state) {
  fs::RandomStream rng(1, 0, fs::StreamRole::wiener);
  for (auto _ : state) benchmark::DoNotOptimize(rng());
}
BENCHMARK(BM_PhiloxBlock);

void BM_Normal(benchmark::State& state) {
  fs::RandomStream rng(1, 0, fs::StreamRole::wiener);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_Normal);

void BM_EulerPath(benchmark::State& state) {
  const auto spec = two_state();
  const auto coeffs = fs::affine_coefficients({{1.0, -1.0}, {-2.0, -2.0}},
                                              {{0.4, 0.0}, {0.4, 0.0}});
  const double eps = 1.0 / static_cast<double>(state.range(0));
  std::size_t p = 0;
  for (auto _ : state) {
    fs::RandomStream mod(7, p, fs::StreamRole::modulator);
    fs::RandomStream w(7, p, fs::StreamRole::wiener);
    const auto y = fs::time_compress(fs::build_modulating_path(spec, 1.0 / eps, mod), eps);
    benchmark::DoNotOptimize(fs::simulate_switching_path(coeffs, y, 0.0, 1.0, 1e-4, w));
    ++p;
  }
}
BENCHMARK(BM_EulerPath)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SwitchingChain(benchmark::State& state) {
  const auto spec = two_state();
  const fs::IntensityFamily family(0, 5, {-1, 1}, 2, [](int, int off, fs::Regime y) {
    if (y == 0) return off > 0 ? 1.0 : 2.0;
    return off > 0 ? 3.0 : 1.0;
  });
  std::size_t p = 0;
  for (auto _ : state) {
    fs::RandomStream mod(7, p, fs::StreamRole::modulator);
    fs::RandomStream clock(7, p, fs::StreamRole::chain);
    fs::RandomStream thin(7, p, fs::StreamRole::thinning);
    const auto y = fs::time_compress(fs::build_modulating_path(spec, 100.0, mod), 0.01);
    benchmark::DoNotOptimize(fs::simulate_switching_chain(family, y, 0, 1.0, clock, thin));
    ++p;
  }
}
BENCHMARK(BM_SwitchingChain);

void BM_KsTwoSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  fs::RandomStream rng(3, 0, fs::StreamRole::sampling);
  std::vector<double> a(n), b(n);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(fs::ks_two_sample(a, b));
}
BENCHMARK(BM_KsTwoSample)->Arg(5000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
