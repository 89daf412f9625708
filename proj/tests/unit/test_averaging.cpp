#include <gtest/gtest.h>

#include <cmath>

#include "fastswitch/averaging.hpp"
#include "fastswitch/modulating.hpp"
#include "fastswitch/random.hpp"
#include "fastswitch/stats.hpp"
#include "fastswitch/switching_sde.hpp"

namespace fs = fastswitch;
using fs::Regime;

namespace {

const fs::StateSpace kAB({"A", "B"});

fs::ModulatorSpec ctmc13() {
  Eigen::MatrixXd g(2, 2);
  g << -1.0, 1.0, 3.0, -3.0;
  return fs::ModulatorSpec::ctmc(kAB, g);
}

fs::ModulatingPath square_wave(double d, double horizon) {
  fs::RandomStream rng(0, 0, fs::StreamRole::modulator);
  return fs::build_modulating_path(fs::ModulatorSpec::cyclic(kAB, {0, 1}, {d, d}), horizon, rng);
}

fs::SamplePath flat_x(double T, double value = 0.0) {
  const auto grid = fs::uniform_grid(T, T / 1000.0);
  return fs::SamplePath(grid, std::vector<double>(grid.size(), value));
}

const fs::RegimeField kOne = [](double, Regime) { return 1.0; };

fs::TestFunctionPair zero(fs::Weight h) {
  fs::CesaroCertificate cert;
  cert.cesaro_mean = [](double) { return 0.0; };
  return fs::TestFunctionPair::smooth([](double) { return 0.0; }, std::move(h), cert);
}

// integral_0^x of the square wave 1{Y = A} - 1/2 with half-period d
double square_wave_primitive(double x, double d) {
  const double r = std::fmod(x, 2 * d);
  return r < d ? r / 2 : (2 * d - r) / 2;
}

}  // namespace

TEST(FluctuationFunctional, ZeroIntegrand) {
  const auto y = square_wave(0.1, 2.0);
  const auto r = fs::fluctuation_functional(flat_x(1.0), y, [](double, Regime) { return 0.0; },
                                            0, fs::OccupationDistribution({0.5, 0.5}), 1.0);
  EXPECT_EQ(r.sup_value, 0.0);
}

TEST(FluctuationFunctional, SquareWavePeak) {
  const double d = 0.5, eps = 0.1;
  const auto y = fs::time_compress(square_wave(d, 1.0 / eps), eps);
  const auto r =
      fs::fluctuation_functional(flat_x(1.0), y, kOne, 0, fs::OccupationDistribution({0.5, 0.5}), 1.0);
  EXPECT_NEAR(r.sup_value, eps * d / 2, 1e-15);
  // Every A-phase end attains the peak; rounding decides which one is reported.
  const double phase = std::fmod(r.arg_r, 2 * eps * d);
  EXPECT_NEAR(phase, eps * d, 1e-12);
  EXPECT_EQ(r.eps, eps);
  EXPECT_EQ(r.T, 1.0);
  EXPECT_EQ(r.y, 0);
}

TEST(FluctuationFunctional, HomogeneousInConstantB) {
  fs::RandomStream m(4, 0, fs::StreamRole::modulator);
  const auto y = fs::time_compress(fs::build_modulating_path(ctmc13(), 10.0, m), 0.1);
  const fs::OccupationDistribution pi({0.75, 0.25});
  const auto x = flat_x(1.0);
  const double base = fs::fluctuation_functional(x, y, kOne, 1, pi, 1.0).sup_value;
  for (double c : {-3.0, 0.5, 2.0}) {
    const auto r = fs::fluctuation_functional(x, y, [c](double, Regime) { return c; }, 1, pi, 1.0);
    EXPECT_NEAR(r.sup_value, std::abs(c) * base, 1e-14);
  }
}

TEST(FluctuationFunctional, DependsOnPiOnlyThroughY) {
  Eigen::MatrixXd g(3, 3);
  g << -2, 1, 1, 1, -2, 1, 1, 1, -2;
  fs::RandomStream m(6, 0, fs::StreamRole::modulator);
  const auto y = fs::build_modulating_path(
      fs::ModulatorSpec::ctmc(fs::StateSpace({"a", "b", "c"}), g), 5.0, m);
  fs::RandomStream w(6, 0, fs::StreamRole::wiener);
  const auto x = fs::simulate_switching_path(
      fs::affine_coefficients({{0, -1}, {1, -1}, {-1, -1}}, {{1, 0}, {1, 0}, {1, 0}}), y, 0.0, 5.0,
      0.01, w);
  const fs::RegimeField B = [](double v, Regime) { return v; };
  const auto a = fs::fluctuation_functional(x, y, B, 1, fs::OccupationDistribution({0.2, 0.3, 0.5}), 5.0);
  const auto b = fs::fluctuation_functional(x, y, B, 1, fs::OccupationDistribution({0.6, 0.3, 0.1}), 5.0);
  EXPECT_EQ(a.sup_value, b.sup_value);
  EXPECT_EQ(a.arg_r, b.arg_r);
}

TEST(FluctuationFunctional, OuMedianDecreasesWithEps) {
  const auto coeffs =
      fs::affine_coefficients({{1.0, -1.0}, {-2.0, -2.0}}, {{0.4, 0.0}, {0.4, 0.0}});
  const fs::OccupationDistribution pi({0.75, 0.25});
  const fs::RegimeField B = [](double v, Regime) { return v; };
  std::vector<double> medians;
  for (double eps : {1.0, 0.1, 0.01}) {
    std::vector<double> sups;
    for (std::uint64_t p = 0; p < 200; ++p) {
      fs::RandomStream m(8, p, fs::StreamRole::modulator);
      fs::RandomStream w(8, p, fs::StreamRole::wiener);
      const auto y = fs::time_compress(fs::build_modulating_path(ctmc13(), 100.0, m), eps);
      const auto x = fs::simulate_switching_path(coeffs, y, 0.0, 1.0, 1e-3, w);
      const auto r = fs::fluctuation_functional(x, y, B, 0, pi, 1.0);
      EXPECT_GE(r.sup_value, 0.0);
      EXPECT_GE(r.arg_r, 0.0);
      EXPECT_LE(r.arg_r, 1.0);
      sups.push_back(r.sup_value);
    }
    medians.push_back(fs::quantile(sups, 0.5));
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
}

TEST(FluctuationFunctional, HorizonMismatch) {
  const auto y = square_wave(0.1, 0.5);
  EXPECT_THROW(fs::fluctuation_functional(flat_x(1.0), y, kOne, 0,
                                          fs::OccupationDistribution({0.5, 0.5}), 1.0),
               std::invalid_argument);
}

TEST(CesaroIntegral, CosineUnitWeight) {
  const double T = 100.0;
  const double v = fs::cesaro_integral(fs::TestFunctionPair::cosine(fs::weights::one()), T, 1e-2);
  EXPECT_NEAR(v, std::sin(T) / T, 1e-6);
  EXPECT_NEAR(v, -0.00506, 1e-5);
}

TEST(CesaroIntegral, CosineLinearWeight) {
  const double T = 100.0;
  const double v = fs::cesaro_integral(fs::TestFunctionPair::cosine(fs::weights::linear()), T, 1e-2);
  EXPECT_NEAR(v, (std::cos(T) + T * std::sin(T) - 1) / (T * T), 1e-6);
  EXPECT_NEAR(v, -0.00508, 1e-5);
}

TEST(CesaroIntegral, ZeroFunction) {
  for (auto h : {fs::weights::one(), fs::weights::linear(), fs::weights::sine()})
    for (double T : {1.0, 37.0, 1e3}) EXPECT_EQ(fs::cesaro_integral(zero(h), T, T / 100), 0.0);
}

TEST(CesaroIntegral, PiecewiseIsExact) {
  fs::RandomStream m(9, 0, fs::StreamRole::modulator);
  const auto y = fs::build_modulating_path(ctmc13(), 500.0, m);
  const fs::OccupationDistribution pi({0.75, 0.25});
  const double T = 437.0;
  const auto pair = fs::TestFunctionPair::occupation(y, 0, pi, fs::weights::linear());
  // (1/T) int_a^b (x/T) dx = (b^2 - a^2) / (2 T^2) on each constancy interval
  double oracle = 0.0, start = 0.0;
  for (std::size_t i = 0; i <= y.jump_count() && start < T; ++i) {
    const double end = i < y.jump_count() ? std::min(y.jump_time(i), T) : T;
    const double f = (y.state_in_interval(i) == 0 ? 1.0 : 0.0) - 0.75;
    oracle += f * (end * end - start * start) / (2 * T * T);
    start = end;
  }
  EXPECT_NEAR(fs::cesaro_integral(pair, T, 1.0), oracle, 1e-12);
}

TEST(CesaroIntegral, PiecewiseWithoutAntiderivative) {
  const auto y = square_wave(1.0, 100.0);
  fs::Weight h{[](double u) { return std::exp(u); }, nullptr};
  const auto pair = fs::TestFunctionPair::occupation(y, 0, fs::OccupationDistribution({0.5, 0.5}), h);
  const double T = 10.0;
  // Closed form: sum over unit intervals of +-1/2 * (e^{b/T} - e^{a/T}).
  double oracle = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double s = k % 2 == 0 ? 0.5 : -0.5;
    oracle += s * (std::exp((k + 1) / T) - std::exp(k / T));
  }
  EXPECT_NEAR(fs::cesaro_integral(pair, T, 0.1), oracle, 1e-13);
}

TEST(CesaroIntegral, Preconditions) {
  const auto pair = fs::TestFunctionPair::cosine(fs::weights::one());
  EXPECT_THROW(fs::cesaro_integral(pair, 100.0, 2.0), std::invalid_argument);
  EXPECT_THROW(fs::cesaro_integral(pair, 0.0, 1e-3), std::invalid_argument);
  const auto y = square_wave(1.0, 10.0);
  const auto occ = fs::TestFunctionPair::occupation(y, 0, fs::OccupationDistribution({0.5, 0.5}),
                                                     fs::weights::one());
  EXPECT_THROW(fs::cesaro_integral(occ, 20.0, 0.1), std::invalid_argument);
  EXPECT_THROW(fs::TestFunctionPair::smooth([](double) { return 1.0; }, fs::weights::one(), {}),
               std::invalid_argument);
}

TEST(DecaySweep, CosineSquareWeightBound) {
  const std::vector<double> Ts{1e2, 1e3, 1e4, 1e5};
  const auto sweep =
      fs::averaging_decay_sweep(fs::TestFunctionPair::cosine(fs::weights::square()), Ts);
  ASSERT_EQ(sweep.points.size(), Ts.size());
  for (const auto& p : sweep.points) {
    const double T = p.T;
    // int_0^T (x/T)^2 cos x dx / T
    const double oracle =
        ((T * T - 2) * std::sin(T) + 2 * T * std::cos(T)) / (T * T * T);
    EXPECT_NEAR(p.value, oracle, 1e-6) << "T = " << T;
    EXPECT_LE(std::abs(p.value), 3.0 / T);
  }
  EXPECT_EQ(sweep.tail_max, std::max(std::abs(sweep.points[2].value), std::abs(sweep.points[3].value)));
}

TEST(DecaySweep, CtmcOccupationSineWeight) {
  fs::RandomStream m(10, 0, fs::StreamRole::modulator);
  const auto y = fs::build_modulating_path(ctmc13(), 1e5, m);
  const auto pair = fs::TestFunctionPair::occupation(y, 0, fs::OccupationDistribution({0.75, 0.25}),
                                                     fs::weights::sine());
  const auto sweep = fs::averaging_decay_sweep(pair, {1e2, 1e3, 1e4, 1e5});
  EXPECT_LT(sweep.tail_max, 0.01);
}

TEST(DecaySweep, ZeroFunctionAllZero) {
  const auto sweep = fs::averaging_decay_sweep(zero(fs::weights::square()), {10.0, 100.0, 1000.0});
  for (const auto& p : sweep.points) EXPECT_EQ(p.value, 0.0);
  EXPECT_EQ(sweep.tail_max, 0.0);
  EXPECT_THROW(fs::averaging_decay_sweep(zero(fs::weights::one()), {100.0, 10.0}),
               std::invalid_argument);
}

TEST(DecaySweep, DampedCosineDecays) {
  const auto sweep =
      fs::averaging_decay_sweep(fs::TestFunctionPair::damped_cosine(fs::weights::one()),
                                {1e2, 1e3, 1e4});
  EXPECT_LT(std::abs(sweep.points[2].value), std::abs(sweep.points[0].value));
}

// Splitting [0, 1] at the oscillation times s_i of h (level rho) gives
//   |(1/T) int h(x/T) f(x) dx| <= delta + 2 sup|h| (n + 1) max_i |F(T s_i)| / T
// with F the primitive of f and delta = (rho + L dt) * sup_T (1/T) int |f|.
TEST(RestartInequality, SquareWaveObeysRestartBound) {
  const double d = 0.7;
  const auto y = square_wave(d, 2e4);
  const fs::OccupationDistribution pi({0.5, 0.5});
  struct Case {
    fs::Weight h;
    double lipschitz;
    double sup;
  };
  const std::vector<Case> cases{{fs::weights::square(), 2.0, 1.0},
                                {fs::weights::sine(), 1.0, std::sin(1.0)},
                                {fs::weights::linear(), 1.0, 1.0}};
  const auto grid = fs::uniform_grid(1.0, 1e-4);
  for (const auto& c : cases) {
    std::vector<double> hv;
    for (double u : grid) hv.push_back(c.h.value(u));
    const auto pair = fs::TestFunctionPair::occupation(y, 0, pi, c.h);
    for (double rho : {0.05, 0.2}) {
      const auto osc = fs::oscillation_times(fs::SamplePath(grid, hv), rho, 1.0);
      const double delta = (rho + c.lipschitz * 1e-4) * 0.5;
      for (double T : {1e2, 1e3, 1e4}) {
        double restart = square_wave_primitive(0.0, d);
        for (double s : osc.tau) restart = std::max(restart, square_wave_primitive(T * s, d) / T);
        const double bound =
            delta + 2.0 * c.sup * static_cast<double>(osc.n_T + 1) * restart;
        EXPECT_LE(std::abs(fs::cesaro_integral(pair, T, T / 1000)), bound)
            << "rho = " << rho << ", T = " << T;
      }
    }
  }
}
