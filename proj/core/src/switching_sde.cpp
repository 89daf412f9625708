#include "fastswitch/switching_sde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fastswitch/errors.hpp"

namespace fastswitch {
namespace {

void require_matching(const CoefficientSet& coeffs,
                      const OccupationDistribution& pi) {
  if (coeffs.regime_count != pi.size()) {
    throw std::invalid_argument(
        "coefficient set and occupation distribution cover different regimes");
  }
  if (!coeffs.drift || !coeffs.diffusion) {
    throw std::invalid_argument("coefficient set has an empty evaluator");
  }
}

[[noreturn]] void non_finite(const char* what, double x, Regime y, double t) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at x=" << x << ", regime=" << y
      << ", t=" << t;
  throw NumericalError(msg.str(), x, y, t);
}

template <class StepFn>
SamplePath integrate(std::vector<double> grid, double x0, StepFn&& step) {
  std::vector<double> values(grid.size());
  values[0] = x0;
  double x = x0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    x = step(k, grid[k], grid[k + 1] - grid[k], x);
    values[k + 1] = x;
  }
  return SamplePath(std::move(grid), std::move(values));
}

}  // namespace

CoefficientSet affine_coefficients(std::vector<Affine> drift,
                                   std::vector<Affine> diffusion) {
  if (drift.empty() || drift.size() != diffusion.size()) {
    throw std::invalid_argument(
        "affine coefficients need one drift and one diffusion per regime");
  }
  CoefficientSet out;
  out.regime_count = drift.size();
  for (std::size_t i = 0; i < drift.size(); ++i) {
    out.c1 = std::max({out.c1, std::abs(drift[i].intercept),
                       std::abs(diffusion[i].intercept)});
    out.c2 = std::max({out.c2, std::abs(drift[i].slope),
                       std::abs(diffusion[i].slope)});
  }
  out.drift = [d = std::move(drift)](double x, Regime y) { return d[y](x); };
  out.diffusion = [s = std::move(diffusion)](double x, Regime y) {
    return s[y](x);
  };
  return out;
}

AveragedCoefficients averaged_coefficients(const CoefficientSet& coeffs,
                                           const OccupationDistribution& pi) {
  require_matching(coeffs, pi);
  std::vector<double> w(pi.weights().begin(), pi.weights().end());
  auto average = [w](RegimeField f) {
    return [w, f = std::move(f)](double x) {
      double acc = 0.0;
      for (std::size_t y = 0; y < w.size(); ++y) {
        if (w[y] != 0.0) acc += f(x, static_cast<Regime>(y)) * w[y];
      }
      return acc;
    };
  };
  return {average(coeffs.drift), average(coeffs.diffusion)};
}

AveragedCoefficients quadratic_averaged_coefficients(
    const CoefficientSet& coeffs, const OccupationDistribution& pi) {
  AveragedCoefficients out = averaged_coefficients(coeffs, pi);
  std::vector<double> w(pi.weights().begin(), pi.weights().end());
  out.diffusion = [w, f = coeffs.diffusion](double x) {
    double acc = 0.0;
    for (std::size_t y = 0; y < w.size(); ++y) {
      if (w[y] == 0.0) continue;
      const double s = f(x, static_cast<Regime>(y));
      acc += s * s * w[y];
    }
    return std::sqrt(acc);
  };
  return out;
}

SamplePath::SamplePath(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.empty() || grid_.size() != values_.size()) {
    throw std::invalid_argument("sample path needs one value per grid time");
  }
  if (grid_.front() != 0.0) {
    throw std::invalid_argument("sample path grid must start at 0");
  }
  for (std::size_t k = 1; k < grid_.size(); ++k) {
    if (!(grid_[k] > grid_[k - 1])) {
      throw std::invalid_argument("sample path grid must be strictly increasing");
    }
  }
}

double SamplePath::value_at(double t) const {
  if (t < 0.0 || t > horizon()) {
    throw std::out_of_range("SamplePath::value_at: t outside [0, horizon]");
  }
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  if (it == grid_.end()) return values_.back();
  const auto hi = static_cast<std::size_t>(it - grid_.begin());
  const std::size_t lo = hi - 1;
  if (grid_[lo] == t) return values_[lo];
  const double w = (t - grid_[lo]) / (grid_[hi] - grid_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

std::vector<double> uniform_grid(double horizon, double dt_max) {
  if (!(horizon > 0.0) || !(dt_max > 0.0)) {
    throw std::invalid_argument("grid needs positive horizon and dt_max");
  }
  const double ratio = horizon / dt_max;
  const auto steps =
      static_cast<std::size_t>(std::max(1.0, std::ceil(ratio * (1.0 - 1e-12))));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) {
    grid[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
  }
  grid[steps] = horizon;
  return grid;
}

std::vector<double> switching_grid(const ModulatingPath& y_path, double horizon,
                                   double dt_max) {
  if (horizon > y_path.horizon()) {
    throw std::invalid_argument("simulation horizon exceeds the modulating path");
  }
  const std::vector<double> base = uniform_grid(horizon, dt_max);
  const std::size_t jumps = y_path.jumps_up_to(horizon);
  std::vector<double> grid;
  grid.reserve(base.size() + jumps);
  std::size_t j = 0;
  for (double t : base) {
    while (j < jumps && y_path.jump_time(j) < t) {
      if (grid.empty() || grid.back() < y_path.jump_time(j)) {
        grid.push_back(y_path.jump_time(j));
      }
      ++j;
    }
    if (grid.empty() || grid.back() < t) grid.push_back(t);
  }
  return grid;
}

SamplePath euler_maruyama(const CoefficientSet& coeffs,
                          const ModulatingPath& y_path, double x0,
                          std::span<const double> grid,
                          std::span<const double> increments) {
  if (increments.size() + 1 != grid.size()) {
    throw std::invalid_argument("need one Wiener increment per grid step");
  }
  std::size_t cursor = 0;
  const std::size_t jumps = y_path.jump_count();
  return integrate(
      std::vector<double>(grid.begin(), grid.end()), x0,
      [&](std::size_t k, double t, double h, double x) {
        while (cursor < jumps && y_path.jump_time(cursor) <= t) ++cursor;
        const Regime y = y_path.state_in_interval(cursor);
        const double b = coeffs.drift(x, y);
        const double s = coeffs.diffusion(x, y);
        const double next = x + b * h + s * increments[k];
        if (!std::isfinite(next)) non_finite("state", x, y, t);
        return next;
      });
}

SamplePath simulate_switching_path(const CoefficientSet& coeffs,
                                   const ModulatingPath& y_path, double x0,
                                   double horizon, double dt_max,
                                   RandomStream& wiener) {
  std::size_t cursor = 0;
  const std::size_t jumps = y_path.jump_count();
  return integrate(
      switching_grid(y_path, horizon, dt_max), x0,
      [&](std::size_t, double t, double h, double x) {
        while (cursor < jumps && y_path.jump_time(cursor) <= t) ++cursor;
        const Regime y = y_path.state_in_interval(cursor);
        const double b = coeffs.drift(x, y);
        const double s = coeffs.diffusion(x, y);
        const double next = x + b * h + s * std::sqrt(h) * wiener.normal();
        if (!std::isfinite(next)) non_finite("state", x, y, t);
        return next;
      });
}

SamplePath simulate_averaged_path(const AveragedCoefficients& avg, double x0,
                                  double horizon, double dt_max,
                                  RandomStream& wiener) {
  return integrate(
      uniform_grid(horizon, dt_max), x0,
      [&](std::size_t, double t, double h, double x) {
        const double b = avg.drift(x);
        const double s = avg.diffusion(x);
        const double next = x + b * h + s * std::sqrt(h) * wiener.normal();
        if (!std::isfinite(next)) non_finite("averaged state", x, 0, t);
        return next;
      });
}

GrowthCheck linear_growth_constants(const CoefficientSet& coeffs,
                                    std::span<const double> probe_xs) {
  if (probe_xs.empty()) {
    throw std::invalid_argument("linear_growth_constants needs probe points");
  }
  GrowthCheck out{coeffs.c1, coeffs.c2, true, {}};
  for (double x : probe_xs) {
    const double bound = coeffs.c1 + coeffs.c2 * std::abs(x);
    for (std::size_t y = 0; y < coeffs.regime_count; ++y) {
      const auto r = static_cast<Regime>(y);
      const double m = std::max(std::abs(coeffs.drift(x, r)),
                                std::abs(coeffs.diffusion(x, r)));
      if (!(m <= bound * (1.0 + 1e-12) + 1e-300)) {
        out.ok = false;
        out.violations.push_back({x, r, m});
      }
    }
  }
  return out;
}

OscillationRecord oscillation_times(const SamplePath& path, double rho,
                                    double T) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (T > path.horizon() || !(T > 0.0)) {
    throw std::invalid_argument("T must lie in (0, horizon]");
  }
  OscillationRecord rec;
  rec.rho = rho;
  rec.T = T;
  const auto& grid = path.grid();
  const auto& values = path.values();
  double anchor = values[0];
  for (std::size_t k = 1; k < grid.size() && grid[k] < T; ++k) {
    if (std::abs(values[k] - anchor) >= rho) {
      rec.tau.push_back(grid[k]);
      anchor = values[k];
    }
  }
  rec.n_T = rec.tau.size();
  rec.tau.push_back(T);
  return rec;
}

double sup_abs(const SamplePath& path, double T) {
  if (T > path.horizon()) throw std::invalid_argument("T exceeds the horizon");
  double best = 0.0;
  const auto& grid = path.grid();
  const auto& values = path.values();
  for (std::size_t k = 0; k < grid.size() && grid[k] <= T; ++k) {
    best = std::max(best, std::abs(values[k]));
  }
  return best;
}

void write_csv(std::ostream& out, const SamplePath& path) {
  std::ostringstream buf;
  buf << std::setprecision(17) << "t,x\n";
  for (std::size_t k = 0; k < path.size(); ++k) {
    buf << path.grid()[k] << ',' << path.values()[k] << '\n';
  }
  out << buf.str();
}

}  // namespace fastswitch
