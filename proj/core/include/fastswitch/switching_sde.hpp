#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "fastswitch/modulating.hpp"
#include "fastswitch/random.hpp"

namespace fastswitch {

using RegimeField = std::function<double(double x, Regime y)>;
using ScalarField = std::function<double(double x)>;

/// Drift b(x, y) and diffusion sigma(x, y) of a switching diffusion, with the
/// declared linear-growth constants |b|, |sigma| <= c1 + c2 |x|.
struct CoefficientSet {
  std::size_t regime_count = 1;
  RegimeField drift;
  RegimeField diffusion;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// a + b x
struct Affine {
  double intercept = 0.0;
  double slope = 0.0;

  double operator()(double x) const { return intercept + slope * x; }
  bool operator==(const Affine&) const = default;
};

/// Regime-wise affine coefficients; growth constants are the max |intercept|
/// and max |slope| over both fields.
CoefficientSet affine_coefficients(std::vector<Affine> drift,
                                   std::vector<Affine> diffusion);

struct AveragedCoefficients {
  ScalarField drift;
  ScalarField diffusion;
};

/// b^(x) = sum_y b(x, y) pi(y), sigma^(x) = sum_y sigma(x, y) pi(y).
AveragedCoefficients averaged_coefficients(const CoefficientSet& coeffs,
                                           const OccupationDistribution& pi);

/// Same drift average, but sigma^(x) = sqrt(sum_y sigma(x, y)^2 pi(y)), the
/// quadratic-variation-matching candidate. Used only for diagnostics.
AveragedCoefficients quadratic_averaged_coefficients(
    const CoefficientSet& coeffs, const OccupationDistribution& pi);

/// Simulated trajectory on a time grid.
class SamplePath {
 public:
  SamplePath(std::vector<double> grid, std::vector<double> values);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double x0() const { return values_.front(); }
  double horizon() const { return grid_.back(); }
  std::size_t size() const { return grid_.size(); }

  /// Linear interpolation between grid points.
  double value_at(double t) const;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

/// Uniform grid of step <= dt_max on [0, horizon], merged with every
/// modulating jump time in (0, horizon).
std::vector<double> switching_grid(const ModulatingPath& y_path, double horizon,
                                   double dt_max);

std::vector<double> uniform_grid(double horizon, double dt_max);

/// Euler-Maruyama on a given grid with given Wiener increments
/// (increments[k] is W(grid[k+1]) - W(grid[k])). The regime used on step k is
/// the one in force at grid[k].
SamplePath euler_maruyama(const CoefficientSet& coeffs,
                          const ModulatingPath& y_path, double x0,
                          std::span<const double> grid,
                          std::span<const double> increments);

SamplePath simulate_switching_path(const CoefficientSet& coeffs,
                                   const ModulatingPath& y_path, double x0,
                                   double horizon, double dt_max,
                                   RandomStream& wiener);

inline SamplePath simulate_switching_path(const CoefficientSet& coeffs,
                                          const ModulatingPath& y_path,
                                          double x0, double dt_max,
                                          RandomStream& wiener) {
  return simulate_switching_path(coeffs, y_path, x0, y_path.horizon(), dt_max,
                                 wiener);
}

SamplePath simulate_averaged_path(const AveragedCoefficients& avg, double x0,
                                  double horizon, double dt_max,
                                  RandomStream& wiener);

struct GrowthViolation {
  double x;
  Regime regime;
  double magnitude;
};

struct GrowthCheck {
  double c1;
  double c2;
  bool ok;
  std::vector<GrowthViolation> violations;
};

/// Spot-checks the declared growth constants on probe_xs x regimes.
GrowthCheck linear_growth_constants(const CoefficientSet& coeffs,
                                    std::span<const double> probe_xs);

/// Oscillation stopping times: tau_i is the first grid time after tau_{i-1}
/// where |X - X(tau_{i-1})| >= rho, capped at T. n_T counts tau_i < T.
struct OscillationRecord {
  std::vector<double> tau;
  std::size_t n_T = 0;
  double rho = 0.0;
  double T = 0.0;
};

OscillationRecord oscillation_times(const SamplePath& path, double rho,
                                    double T);

/// max |X| over grid times <= T.
double sup_abs(const SamplePath& path, double T);

void write_csv(std::ostream& out, const SamplePath& path);

}  // namespace fastswitch
