#include "fastswitch/averaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace fastswitch {
namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 4> kGlNodes = {
    0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
    0.9602898564975363};
constexpr std::array<double, 4> kGlWeights = {
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
    0.1012285362903763};

double gauss_legendre(const ScalarField& g, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    acc += kGlWeights[i] *
           (g(mid - half * kGlNodes[i]) + g(mid + half * kGlNodes[i]));
  }
  return acc * half;
}

// int_{u0}^{u1} h(u) du
double weight_integral(const Weight& h, double u0, double u1) {
  if (h.antiderivative) return h.antiderivative(u1) - h.antiderivative(u0);
  constexpr double kPanel = 1.0 / 64.0;
  const auto panels = static_cast<std::size_t>(
      std::max(1.0, std::ceil((u1 - u0) / kPanel)));
  const double width = (u1 - u0) / static_cast<double>(panels);
  double acc = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    acc += gauss_legendre(h.value, u0 + width * static_cast<double>(k),
                          u0 + width * static_cast<double>(k + 1));
  }
  return acc;
}

}  // namespace

FluctuationResult fluctuation_functional(const SamplePath& x_path,
                                         const ModulatingPath& y_path,
                                         const RegimeField& B, Regime y,
                                         const OccupationDistribution& pi,
                                         double T) {
  if (!(T > 0.0) || T > x_path.horizon() || T > y_path.horizon()) {
    throw std::invalid_argument(
        "fluctuation_functional: paths do not cover [0, T]");
  }
  if (y >= pi.size()) {
    throw std::invalid_argument("fluctuation_functional: regime outside pi");
  }
  FluctuationResult out;
  out.eps = y_path.time_scale();
  out.T = T;
  out.y = y;

  const auto& grid = x_path.grid();
  const auto& values = x_path.values();
  const double weight = pi[y];
  const std::size_t jumps = y_path.jump_count();
  std::size_t xi = 0;  // latest x grid index <= current time
  std::size_t yi = 0;  // jumps <= current time
  double t = 0.0;
  double running = 0.0;
  while (t < T) {
    while (xi + 1 < grid.size() && grid[xi + 1] <= t) ++xi;
    while (yi < jumps && y_path.jump_time(yi) <= t) ++yi;
    double next = T;
    if (xi + 1 < grid.size()) next = std::min(next, grid[xi + 1]);
    if (yi < jumps) next = std::min(next, y_path.jump_time(yi));
    const double indicator = y_path.state_in_interval(yi) == y ? 1.0 : 0.0;
    running += B(values[xi], y) * (indicator - weight) * (next - t);
    t = next;
    if (std::abs(running) > out.sup_value) {
      out.sup_value = std::abs(running);
      out.arg_r = t;
    }
  }
  return out;
}

namespace weights {
Weight one() {
  return {[](double) { return 1.0; }, [](double u) { return u; }};
}
Weight linear() {
  return {[](double u) { return u; }, [](double u) { return 0.5 * u * u; }};
}
Weight square() {
  return {[](double u) { return u * u; },
          [](double u) { return u * u * u / 3.0; }};
}
Weight sine() {
  return {[](double u) { return std::sin(u); },
          [](double u) { return -std::cos(u); }};
}
}  // namespace weights

TestFunctionPair::TestFunctionPair(ScalarField f,
                                   std::optional<PiecewiseConstant> pc,
                                   Weight h, CesaroCertificate certificate)
    : f_(std::move(f)), piecewise_(std::move(pc)), h_(std::move(h)),
      certificate_(std::move(certificate)) {
  if (!h_.value) throw std::invalid_argument("test function pair needs h");
  if (!certificate_.cesaro_mean && !certificate_.abs_mean_bound) {
    throw std::invalid_argument(
        "test function needs a Cesaro certificate (closed-form mean or bound)");
  }
}

TestFunctionPair TestFunctionPair::smooth(ScalarField f, Weight h,
                                          CesaroCertificate certificate) {
  if (!f) throw std::invalid_argument("test function pair needs f");
  return TestFunctionPair(std::move(f), std::nullopt, std::move(h),
                          std::move(certificate));
}

TestFunctionPair TestFunctionPair::piecewise(PiecewiseConstant f, Weight h,
                                             CesaroCertificate certificate) {
  if (f.breaks.empty() || f.breaks.size() != f.values.size() ||
      f.breaks.front() != 0.0) {
    throw std::invalid_argument(
        "piecewise-constant f needs matching breaks and values starting at 0");
  }
  for (std::size_t k = 1; k < f.breaks.size(); ++k) {
    if (!(f.breaks[k] > f.breaks[k - 1])) {
      throw std::invalid_argument("piecewise-constant breaks must increase");
    }
  }
  auto eval = [pc = f](double x) {
    const auto it = std::upper_bound(pc.breaks.begin(), pc.breaks.end(), x);
    return pc.values[static_cast<std::size_t>(it - pc.breaks.begin()) - 1];
  };
  return TestFunctionPair(std::move(eval), std::move(f), std::move(h),
                          std::move(certificate));
}

TestFunctionPair TestFunctionPair::occupation(const ModulatingPath& path,
                                              Regime y,
                                              const OccupationDistribution& pi,
                                              Weight h) {
  PiecewiseConstant pc;
  pc.domain_end = path.horizon();
  pc.breaks.push_back(0.0);
  pc.values.push_back((path.initial_state() == y ? 1.0 : 0.0) - pi[y]);
  for (std::size_t i = 0; i < path.jump_count(); ++i) {
    pc.breaks.push_back(path.jump_time(i));
    pc.values.push_back((path.state_after_jump(i) == y ? 1.0 : 0.0) - pi[y]);
  }
  CesaroCertificate cert;
  cert.abs_mean_bound = std::max(pi[y], 1.0 - pi[y]);
  return piecewise(std::move(pc), std::move(h), std::move(cert));
}

TestFunctionPair TestFunctionPair::cosine(Weight h) {
  CesaroCertificate cert;
  cert.cesaro_mean = [](double T) { return std::sin(T) / T; };
  cert.abs_mean_bound = 1.0;
  return smooth([](double x) { return std::cos(x); }, std::move(h),
                std::move(cert));
}

TestFunctionPair TestFunctionPair::damped_cosine(Weight h) {
  CesaroCertificate cert;
  cert.abs_mean_bound = 1.0;
  return smooth([](double x) { return std::cos(x) / (1.0 + x); }, std::move(h),
                std::move(cert));
}

double TestFunctionPair::f(double x) const { return f_(x); }

double cesaro_integral(const TestFunctionPair& pair, double T,
                       double quad_step) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("cesaro_integral: T must be positive");
  }
  if (!(quad_step > 0.0) || quad_step > T / 100.0) {
    throw std::invalid_argument("cesaro_integral: quad_step must be <= T/100");
  }
  const Weight& h = pair.h();
  CompensatedSum acc;

  if (const auto& pc = pair.piecewise_form()) {
    if (T > pc->domain_end) {
      throw std::invalid_argument("cesaro_integral: T beyond the domain of f");
    }
    // (1/T) int_a^b h(x/T) dx = int_{a/T}^{b/T} h(u) du
    for (std::size_t k = 0; k < pc->breaks.size() && pc->breaks[k] < T; ++k) {
      const double a = pc->breaks[k];
      const double b = k + 1 < pc->breaks.size() ? std::min(pc->breaks[k + 1], T) : T;
      if (pc->values[k] == 0.0) continue;
      acc.add(pc->values[k] * weight_integral(h, a / T, b / T));
    }
    return acc.value();
  }

  const auto steps = static_cast<std::size_t>(std::ceil(T / quad_step));
  const double width = T / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double x = (static_cast<double>(k) + 0.5) * width;
    acc.add(h.value(x / T) * pair.f(x));
  }
  return acc.value() * width / T;
}

DecaySweep averaging_decay_sweep(const TestFunctionPair& pair,
                                 const std::vector<double>& T_list,
                                 double quad_step) {
  if (T_list.empty()) throw std::invalid_argument("T list must not be empty");
  for (std::size_t k = 1; k < T_list.size(); ++k) {
    if (!(T_list[k] > T_list[k - 1])) {
      throw std::invalid_argument("T list must be increasing");
    }
  }
  DecaySweep sweep;
  for (double T : T_list) {
    const double step = std::min(quad_step, T / 100.0);
    sweep.points.push_back({T, cesaro_integral(pair, T, step)});
  }
  for (std::size_t k = sweep.points.size() / 2; k < sweep.points.size(); ++k) {
    sweep.tail_max = std::max(sweep.tail_max, std::abs(sweep.points[k].value));
  }
  return sweep;
}

}  // namespace fastswitch
