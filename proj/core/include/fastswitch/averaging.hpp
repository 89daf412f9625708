#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "fastswitch/modulating.hpp"
#include "fastswitch/switching_sde.hpp"

namespace fastswitch {

/// sup_{0 <= r <= T} |int_0^r B(X_t, y) (1{Y_t = y} - pi(y)) dt| for one
/// (X, Y) realization, with the sup taken over the refined grid.
struct FluctuationResult {
  double sup_value = 0.0;
  double arg_r = 0.0;
  double eps = 1.0;
  double T = 0.0;
  Regime y = 0;
};

/// The integral is accumulated exactly on the union of the X grid and the Y
/// jump times, with B evaluated at the X value of the latest grid point. The
/// y_path is expected to be already time-compressed; its time scale is
/// reported as eps.
FluctuationResult fluctuation_functional(const SamplePath& x_path,
                                         const ModulatingPath& y_path,
                                         const RegimeField& B, Regime y,
                                         const OccupationDistribution& pi,
                                         double T);

/// Continuous weight h on [0, 1], optionally with an antiderivative H
/// (H' = h) that makes interval integrals exact.
struct Weight {
  ScalarField value;
  ScalarField antiderivative;
};

namespace weights {
Weight one();
Weight linear();   // u
Weight square();   // u^2
Weight sine();     // sin(u)
}  // namespace weights

/// f(x) = values[k] on [breaks[k], breaks[k + 1]); the last value holds up
/// to domain_end.
struct PiecewiseConstant {
  std::vector<double> breaks;
  std::vector<double> values;
  double domain_end = std::numeric_limits<double>::infinity();
};

/// Evidence that f has the hypotheses of the averaging lemma: vanishing
/// Cesaro mean and bounded Cesaro mean of |f|. At least one of the closed-form
/// mean or the absolute-mean bound must be present.
struct CesaroCertificate {
  ScalarField cesaro_mean;
  std::optional<double> abs_mean_bound;
};

class TestFunctionPair {
 public:
  static TestFunctionPair smooth(ScalarField f, Weight h,
                                 CesaroCertificate certificate);
  static TestFunctionPair piecewise(PiecewiseConstant f, Weight h,
                                    CesaroCertificate certificate);

  /// f(s) = 1{Y_s = y} - pi(y) on [0, path horizon].
  static TestFunctionPair occupation(const ModulatingPath& path, Regime y,
                                     const OccupationDistribution& pi, Weight h);

  static TestFunctionPair cosine(Weight h);
  /// f(x) = cos(x) / (1 + x)
  static TestFunctionPair damped_cosine(Weight h);

  double f(double x) const;
  const Weight& h() const { return h_; }
  const CesaroCertificate& certificate() const { return certificate_; }
  const std::optional<PiecewiseConstant>& piecewise_form() const {
    return piecewise_;
  }

 private:
  TestFunctionPair(ScalarField f, std::optional<PiecewiseConstant> pc, Weight h,
                   CesaroCertificate certificate);

  ScalarField f_;
  std::optional<PiecewiseConstant> piecewise_;
  Weight h_;
  CesaroCertificate certificate_;
};

/// (1/T) int_0^T h(x/T) f(x) dx. Composite midpoint rule for smooth f; exact
/// interval sums for piecewise-constant f.
double cesaro_integral(const TestFunctionPair& pair, double T, double quad_step);

struct DecayPoint {
  double T;
  double value;
};

struct DecaySweep {
  std::vector<DecayPoint> points;
  /// max |value| over the second half of the T list.
  double tail_max = 0.0;
};

inline constexpr double kDefaultQuadStep = 1e-2;

DecaySweep averaging_decay_sweep(const TestFunctionPair& pair,
                                 const std::vector<double>& T_list,
                                 double quad_step = kDefaultQuadStep);

}  // namespace fastswitch
