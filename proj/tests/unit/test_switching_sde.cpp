#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fastswitch/errors.hpp"
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

fs::ModulatorSpec gamma13() {
  Eigen::MatrixXd k(2, 2);
  k << 0.0, 1.0, 1.0, 0.0;
  return fs::ModulatorSpec::semi_markov(
      kAB, k, {fs::SojournLaw::gamma(2.0, 0.5), fs::SojournLaw::gamma(2.0, 1.0 / 6.0)});
}

fs::CoefficientSet constant(double b, double s, std::size_t regimes = 1) {
  return fs::affine_coefficients(std::vector<fs::Affine>(regimes, {b, 0.0}),
                                 std::vector<fs::Affine>(regimes, {s, 0.0}));
}

fs::ModulatingPath flat(double horizon) { return fs::ModulatingPath(0, {}, {}, horizon); }

fs::RandomStream wiener(std::uint64_t path, std::uint64_t seed = 1) {
  return fs::RandomStream(seed, path, fs::StreamRole::wiener);
}

fs::SamplePath ou_path(const fs::ModulatorSpec& spec, double eps, std::uint64_t p) {
  static const auto coeffs =
      fs::affine_coefficients({{1.0, -1.0}, {-2.0, -2.0}}, {{0.4, 0.0}, {0.4, 0.0}});
  fs::RandomStream m(3, p, fs::StreamRole::modulator);
  const auto y = fs::time_compress(fs::build_modulating_path(spec, 1.0 / eps, m), eps);
  auto w = wiener(p, 3);
  return fs::simulate_switching_path(coeffs, y, 0.0, 1.0, 1e-3, w);
}

}  // namespace

TEST(AveragedCoefficients, OppositeDriftsCancel) {
  fs::CoefficientSet c;
  c.regime_count = 2;
  c.drift = [](double x, Regime y) { return y == 0 ? -x : x; };
  c.diffusion = [](double, Regime) { return 1.0; };
  const auto avg = fs::averaged_coefficients(c, fs::OccupationDistribution({0.5, 0.5}));
  for (double x : {-3.0, 0.0, 0.7, 12.0}) EXPECT_EQ(avg.drift(x), 0.0);
}

TEST(AveragedCoefficients, WeightedMean) {
  // regimes labelled 1 and 3
  const double label[] = {1.0, 3.0};
  fs::CoefficientSet c;
  c.regime_count = 2;
  c.drift = [&](double, Regime y) { return label[y]; };
  c.diffusion = [](double, Regime) { return 0.0; };
  const auto avg = fs::averaged_coefficients(c, fs::OccupationDistribution({0.25, 0.75}));
  EXPECT_DOUBLE_EQ(avg.drift(5.0), 2.5);
}

TEST(AveragedCoefficients, PointMassIsIdentity) {
  const auto c = fs::affine_coefficients({{1.0, -2.0}, {3.0, 0.5}}, {{0.1, 0.2}, {0.3, 0.4}});
  const auto avg = fs::averaged_coefficients(c, fs::OccupationDistribution::point_mass(2, 1));
  for (double x : {-1.0, 0.0, 2.5}) {
    EXPECT_EQ(avg.drift(x), c.drift(x, 1));
    EXPECT_EQ(avg.diffusion(x), c.diffusion(x, 1));
  }
}

TEST(AveragedCoefficients, MatchesDirectSumAndIsLinearInPi) {
  const auto c = fs::affine_coefficients({{1.0, -1.0}, {-2.0, -2.0}, {0.5, 3.0}},
                                         {{0.4, 0.1}, {0.2, 0.0}, {1.0, -0.5}});
  const std::vector<double> p1{0.2, 0.3, 0.5}, p2{0.6, 0.1, 0.3};
  const double lambda = 0.35;
  std::vector<double> mix(3);
  for (int i = 0; i < 3; ++i) mix[i] = lambda * p1[i] + (1 - lambda) * p2[i];
  const auto a1 = fs::averaged_coefficients(c, fs::OccupationDistribution(p1));
  const auto a2 = fs::averaged_coefficients(c, fs::OccupationDistribution(p2));
  const auto am = fs::averaged_coefficients(c, fs::OccupationDistribution(mix));
  for (double x : {-4.0, -0.3, 0.0, 1.7, 9.0}) {
    double direct = 0.0;
    for (Regime y = 0; y < 3; ++y) direct += c.drift(x, y) * p1[y];
    EXPECT_NEAR(a1.drift(x), direct, 1e-12);
    EXPECT_NEAR(am.drift(x), lambda * a1.drift(x) + (1 - lambda) * a2.drift(x), 1e-12);
    EXPECT_NEAR(am.diffusion(x),
                lambda * a1.diffusion(x) + (1 - lambda) * a2.diffusion(x), 1e-12);
  }
}

TEST(AveragedCoefficients, RegimeMismatch) {
  const auto c = constant(1.0, 0.0, 2);
  EXPECT_THROW(fs::averaged_coefficients(c, fs::OccupationDistribution({0.2, 0.3, 0.5})),
               std::invalid_argument);
}

TEST(AveragedCoefficients, QuadraticCandidate) {
  const auto c = fs::affine_coefficients({{0.0, 0.0}, {0.0, 0.0}}, {{1.0, 0.0}, {3.0, 0.0}});
  const auto q = fs::quadratic_averaged_coefficients(c, fs::OccupationDistribution({0.5, 0.5}));
  EXPECT_NEAR(q.diffusion(0.0), std::sqrt(5.0), 1e-14);
}

TEST(SimulateSwitchingPath, ZeroCoefficientsConstant) {
  auto w = wiener(0);
  fs::RandomStream m(1, 0, fs::StreamRole::modulator);
  const auto y = fs::build_modulating_path(ctmc13(), 2.0, m);
  const auto p = fs::simulate_switching_path(constant(0.0, 0.0, 2), y, 1.5, 2.0, 0.01, w);
  for (double v : p.values()) EXPECT_EQ(v, 1.5);
}

TEST(SimulateSwitchingPath, UnitDriftReachesOne) {
  auto w = wiener(0);
  const auto p = fs::simulate_switching_path(constant(1.0, 0.0), flat(1.0), 0.0, 1.0, 1e-3, w);
  EXPECT_NEAR(p.values().back(), 1.0, 1e-12);
}

TEST(SimulateSwitchingPath, GridContainsJumpTimes) {
  fs::RandomStream m(1, 0, fs::StreamRole::modulator);
  const auto y = fs::time_compress(fs::build_modulating_path(ctmc13(), 100.0, m), 0.01);
  auto w = wiener(0);
  const auto p = fs::simulate_switching_path(constant(0.0, 1.0, 2), y, 0.0, 1.0, 1e-2, w);
  EXPECT_EQ(p.grid().front(), 0.0);
  EXPECT_EQ(p.grid().back(), 1.0);
  EXPECT_EQ(p.x0(), 0.0);
  for (std::size_t i = 0; i < y.jumps_up_to(1.0); ++i) {
    EXPECT_TRUE(std::binary_search(p.grid().begin(), p.grid().end(), y.jump_time(i)));
  }
  for (std::size_t k = 1; k < p.size(); ++k) {
    EXPECT_GT(p.grid()[k], p.grid()[k - 1]);
    EXPECT_LE(p.grid()[k] - p.grid()[k - 1], 1e-2 + 1e-15);
  }
}

TEST(SimulateSwitchingPath, RegimeExactPiecewiseLinear) {
  const double slope[] = {2.0, -1.0};
  fs::RandomStream m(2, 0, fs::StreamRole::modulator);
  const auto y = fs::time_compress(fs::build_modulating_path(ctmc13(), 50.0, m), 0.1);
  const auto c = constant(0.0, 0.0, 2);
  fs::CoefficientSet cs = c;
  cs.drift = [&](double, Regime r) { return slope[r]; };
  auto w = wiener(0);
  const auto p = fs::simulate_switching_path(cs, y, 0.0, 5.0, 0.37, w);
  // Exact integral of c_{Y_s} up to each grid time.
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double t = p.grid()[k];
    double exact = 0.0, start = 0.0;
    for (std::size_t i = 0; i <= y.jump_count() && start < t; ++i) {
      const double end = i < y.jump_count() ? std::min(y.jump_time(i), t) : t;
      exact += slope[y.state_in_interval(i)] * (end - start);
      start = end;
    }
    EXPECT_NEAR(p.values()[k], exact, 1e-12) << "t = " << t;
  }
}

TEST(SimulateSwitchingPath, GeometricBrownianMean) {
  const auto c = fs::affine_coefficients({{0.0, 0.1}}, {{0.0, 0.2}});
  const std::size_t n = 100000;
  std::vector<double> terminal(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = wiener(i, 17);
    terminal[i] = fs::simulate_switching_path(c, flat(1.0), 1.0, 1.0, 1e-2, w).values().back();
  }
  const auto mean = fs::sample_mean(terminal);
  EXPECT_NEAR(mean.value, std::exp(0.1), 3.0 * mean.std_error);
}

TEST(SimulateSwitchingPath, NonFiniteCarriesContext) {
  fs::CoefficientSet c = constant(0.0, 0.0);
  c.drift = [](double x, Regime) { return x > 0.5 ? std::nan("") : 1.0; };
  auto w = wiener(0);
  try {
    fs::simulate_switching_path(c, flat(1.0), 0.0, 1.0, 0.1, w);
    FAIL() << "expected NumericalError";
  } catch (const fs::NumericalError& e) {
    EXPECT_GT(e.x(), 0.5);
    EXPECT_EQ(e.regime(), 0u);
    EXPECT_NEAR(e.time(), 0.6, 1e-12);
  }
}

TEST(SimulateSwitchingPath, HorizonBeyondModulator) {
  auto w = wiener(0);
  EXPECT_THROW(fs::simulate_switching_path(constant(0.0, 0.0), flat(1.0), 0.0, 2.0, 0.1, w),
               std::invalid_argument);
}

TEST(SimulateSwitchingPath, StrongRefinementRatio) {
  // Same Brownian path at every resolution: fine increments summed to coarse.
  const auto c = fs::affine_coefficients({{0.5, -1.0}}, {{0.3, 0.4}});
  const double T = 1.0, fine_dt = 1e-5;
  const auto fine_grid = fs::uniform_grid(T, fine_dt);
  const std::size_t nf = fine_grid.size() - 1;
  const std::vector<double> dts{1e-2, 1e-3, 1e-4};
  std::vector<double> err(dts.size(), 0.0);
  const int paths = 200;
  std::vector<double> inc(nf);
  for (int p = 0; p < paths; ++p) {
    auto w = wiener(static_cast<std::uint64_t>(p), 23);
    for (auto& d : inc) d = std::sqrt(fine_dt) * w.normal();
    const auto ref = fs::euler_maruyama(c, flat(T), 0.0, fine_grid, inc);
    for (std::size_t j = 0; j < dts.size(); ++j) {
      const auto stride = static_cast<std::size_t>(std::llround(dts[j] / fine_dt));
      std::vector<double> grid, coarse;
      for (std::size_t k = 0; k <= nf; k += stride) grid.push_back(fine_grid[k]);
      for (std::size_t k = 0; k < nf; k += stride) {
        double s = 0.0;
        for (std::size_t i = k; i < k + stride; ++i) s += inc[i];
        coarse.push_back(s);
      }
      const auto x = fs::euler_maruyama(c, flat(T), 0.0, grid, coarse);
      double sup = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        sup = std::max(sup, std::abs(x.values()[k] - ref.values()[k * stride]));
      }
      err[j] += sup / paths;
    }
  }
  // Strong order 1/2: a tenfold smaller step shrinks the error by about sqrt(10).
  EXPECT_LT(err[1] / err[0], 0.5);
  EXPECT_LT(err[2] / err[1], 0.5);
}

TEST(SimulateAveragedPath, Constants) {
  auto w = wiener(0);
  const fs::AveragedCoefficients zero{[](double) { return 0.0; }, [](double) { return 0.0; }};
  const auto still = fs::simulate_averaged_path(zero, 2.0, 1.0, 0.1, w);
  for (double v : still.values()) EXPECT_EQ(v, 2.0);
  const fs::AveragedCoefficients drift{[](double) { return -0.7; }, [](double) { return 0.0; }};
  EXPECT_NEAR(fs::simulate_averaged_path(drift, 1.0, 3.0, 1e-3, w).values().back(),
              1.0 - 0.7 * 3.0, 1e-12);
}

TEST(SimulateAveragedPath, ExponentialDecay) {
  auto w = wiener(0);
  const fs::AveragedCoefficients c{[](double x) { return -x; }, [](double) { return 0.0; }};
  EXPECT_NEAR(fs::simulate_averaged_path(c, 1.0, 1.0, 1e-4, w).values().back(), std::exp(-1.0),
              1e-3);
}

TEST(LinearGrowth, ZeroCoefficients) {
  const std::vector<double> probes{-1.0, 0.0, 5.0};
  fs::CoefficientSet c = constant(0.0, 0.0);
  c.c1 = c.c2 = 0.0;
  EXPECT_TRUE(fs::linear_growth_constants(c, probes).ok);
}

TEST(LinearGrowth, ReportsViolation) {
  fs::CoefficientSet c;
  c.drift = [](double x, Regime) { return 2.0 * x; };
  c.diffusion = [](double, Regime) { return 0.0; };
  c.c1 = 0.0;
  c.c2 = 1.0;
  const std::vector<double> probes{0.0, 10.0};
  const auto g = fs::linear_growth_constants(c, probes);
  EXPECT_FALSE(g.ok);
  ASSERT_EQ(g.violations.size(), 1u);
  EXPECT_EQ(g.violations[0].x, 10.0);
  EXPECT_EQ(g.violations[0].magnitude, 20.0);
}

TEST(LinearGrowth, OrnsteinUhlenbeckRegimes) {
  // theta_y (mu_y - x) with (theta, mu) = (1, 0) and (2, 1), unit noise.
  const auto c = fs::affine_coefficients({{0.0, -1.0}, {2.0, -2.0}}, {{1.0, 0.0}, {1.0, 0.0}});
  EXPECT_EQ(c.c1, 2.0);
  EXPECT_EQ(c.c2, 2.0);
  std::vector<double> probes;
  for (int k = 0; k <= 100; ++k) {
    probes.push_back(k);
    probes.push_back(-k);
  }
  double worst = -1.0;  // max over probes of |coefficient| - c2 |x|
  for (double x : probes)
    for (Regime y = 0; y < 2; ++y)
      worst = std::max(worst, std::max(std::abs(c.drift(x, y)), std::abs(c.diffusion(x, y))) -
                                  2.0 * std::abs(x));
  EXPECT_LE(worst, 2.0);
  EXPECT_TRUE(fs::linear_growth_constants(c, probes).ok);
}

TEST(OscillationTimes, ConstantPath) {
  const fs::SamplePath p(fs::uniform_grid(1.0, 0.1), std::vector<double>(11, 3.0));
  const auto r = fs::oscillation_times(p, 0.5, 1.0);
  EXPECT_EQ(r.n_T, 0u);
  ASSERT_EQ(r.tau.size(), 1u);
  EXPECT_EQ(r.tau[0], 1.0);
}

TEST(OscillationTimes, LinearPath) {
  const auto grid = fs::uniform_grid(1.0, 1e-3);
  const fs::SamplePath p(grid, grid);
  const auto r = fs::oscillation_times(p, 0.3, 1.0);
  EXPECT_EQ(r.n_T, 3u);
  ASSERT_EQ(r.tau.size(), 4u);
  EXPECT_NEAR(r.tau[0], 0.3, 1e-3);
  EXPECT_NEAR(r.tau[1], 0.6, 2e-3);
  EXPECT_NEAR(r.tau[2], 0.9, 3e-3);
  EXPECT_EQ(r.tau[3], 1.0);
}

TEST(OscillationTimes, BrownianCountMatchesFineGrid) {
  const auto c = constant(0.0, 1.0);
  const double T = 1.0, fine_dt = 1e-5, coarse_dt = 1e-4;
  const auto fine_grid = fs::uniform_grid(T, fine_dt);
  const std::size_t nf = fine_grid.size() - 1, stride = 10;
  std::vector<double> coarse_grid;
  for (std::size_t k = 0; k <= nf; k += stride) coarse_grid.push_back(fine_grid[k]);
  std::vector<double> inc(nf), coarse(nf / stride);
  double n_fine = 0.0, n_coarse = 0.0;
  const int paths = 2000;  // shared increments keep the ratio tight
  for (int p = 0; p < paths; ++p) {
    auto w = wiener(static_cast<std::uint64_t>(p), 41);
    for (auto& d : inc) d = std::sqrt(fine_dt) * w.normal();
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < stride; ++i) s += inc[k * stride + i];
      coarse[k] = s;
    }
    n_fine += fs::oscillation_times(fs::euler_maruyama(c, flat(T), 0.0, fine_grid, inc), 1.0, T).n_T;
    n_coarse +=
        fs::oscillation_times(fs::euler_maruyama(c, flat(T), 0.0, coarse_grid, coarse), 1.0, T).n_T;
  }
  EXPECT_GT(n_fine, 0.0);
  EXPECT_NEAR(n_coarse / n_fine, 1.0, 0.05) << n_coarse << " vs " << n_fine;
}

TEST(SupAbs, Examples) {
  const fs::SamplePath c(fs::uniform_grid(1.0, 0.25), std::vector<double>(5, -2.0));
  EXPECT_EQ(fs::sup_abs(c, 1.0), 2.0);
  const auto grid = fs::uniform_grid(1.0, 0.01);
  const fs::SamplePath lin(grid, grid);
  EXPECT_DOUBLE_EQ(fs::sup_abs(lin, 0.5), 0.5);
  EXPECT_THROW(fs::sup_abs(lin, 2.0), std::invalid_argument);
}

TEST(SupAbs, UniformExceedanceAcrossModulators) {
  const std::size_t n = 2000;
  std::vector<double> ctmc(n), gam(n);
  for (std::size_t p = 0; p < n; ++p) {
    ctmc[p] = fs::sup_abs(ou_path(ctmc13(), 0.1, p), 1.0);
    gam[p] = fs::sup_abs(ou_path(gamma13(), 0.1, p), 1.0);
  }
  auto exceed = [](const std::vector<double>& s, double k) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v > k; })) /
           static_cast<double>(s.size());
  };
  std::vector<double> pooled = ctmc;
  pooled.insert(pooled.end(), gam.begin(), gam.end());
  for (double k : {0.2, 0.4, 0.6}) {
    EXPECT_GE(exceed(ctmc, k), exceed(ctmc, k + 0.2));
    EXPECT_GE(exceed(gam, k), exceed(gam, k + 0.2));
  }
  const double delta = 0.05;
  const double K = fs::quantile(pooled, 1.0 - delta / 2.0);
  EXPECT_LE(exceed(ctmc, K), delta);
  EXPECT_LE(exceed(gam, K), delta);
}

TEST(SamplePath, InterpolatesAndValidates) {
  const fs::SamplePath p({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0});
  EXPECT_DOUBLE_EQ(p.value_at(0.5), 1.0);
  EXPECT_DOUBLE_EQ(p.value_at(2.0), 1.0);
  EXPECT_DOUBLE_EQ(p.value_at(3.0), 0.0);
  EXPECT_THROW(p.value_at(3.5), std::out_of_range);
  EXPECT_THROW(fs::SamplePath({0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(fs::SamplePath({0.5, 1.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST(SamplePath, WriteCsv) {
  const fs::SamplePath p({0.0, 0.5}, {1.0, -1.25});
  std::ostringstream out;
  fs::write_csv(out, p);
  EXPECT_EQ(out.str(), "t,x\n0,1\n0.5,-1.25\n");
}
