#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "fastswitch/random.hpp"

namespace fastswitch {

/// Regimes are dense indices into a StateSpace.
using Regime = std::uint16_t;

/// Finite, ordered set of regime labels.
class StateSpace {
 public:
  explicit StateSpace(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(Regime r) const { return labels_.at(r); }
  std::optional<Regime> find(const std::string& label) const;
  Regime index_of(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

/// Long-run fraction of time spent in each regime.
class OccupationDistribution {
 public:
  explicit OccupationDistribution(std::vector<double> weights);

  static OccupationDistribution point_mass(std::size_t n, Regime at);

  std::size_t size() const { return weights_.size(); }
  double operator[](Regime r) const { return weights_[r]; }
  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// Holding-time law of a semi-Markov modulator in one state.
struct SojournLaw {
  enum class Kind { exponential, gamma, uniform, deterministic };

  Kind kind = Kind::deterministic;
  // exponential: a = rate. gamma: a = shape, b = scale.
  // uniform: [a, b]. deterministic: a = value.
  double a = 1.0;
  double b = 0.0;

  static SojournLaw exponential(double rate) { return {Kind::exponential, rate, 0.0}; }
  static SojournLaw gamma(double shape, double scale) { return {Kind::gamma, shape, scale}; }
  static SojournLaw uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static SojournLaw deterministic(double value) { return {Kind::deterministic, value, 0.0}; }

  double mean() const;
  double sample(RandomStream& rng) const;
  void validate() const;
};

struct CtmcModulator {
  Eigen::MatrixXd generator;
};

struct SemiMarkovModulator {
  Eigen::MatrixXd embedded;  // zero diagonal, rows sum to one
  std::vector<SojournLaw> sojourn;
};

struct CyclicModulator {
  std::vector<Regime> sequence;
  std::vector<double> durations;
};

/// A finite-state modulating process description. Validated on construction.
///
/// The initial law is a distribution over regimes; when omitted the
/// stationary occupation is used. Cyclic modulators always start at the head
/// of their sequence and ignore the initial law.
class ModulatorSpec {
 public:
  using Kind = std::variant<CtmcModulator, SemiMarkovModulator, CyclicModulator>;

  static ModulatorSpec ctmc(StateSpace states, Eigen::MatrixXd generator,
                            std::vector<double> initial = {});
  static ModulatorSpec semi_markov(StateSpace states, Eigen::MatrixXd embedded,
                                   std::vector<SojournLaw> sojourn,
                                   std::vector<double> initial = {});
  static ModulatorSpec cyclic(StateSpace states, std::vector<Regime> sequence,
                              std::vector<double> durations);

  const StateSpace& states() const { return states_; }
  const Kind& kind() const { return kind_; }
  const std::vector<double>& initial_law() const { return initial_; }

  /// Smallest mean holding time over the regimes the process can occupy.
  double min_mean_sojourn() const;

 private:
  ModulatorSpec(StateSpace states, Kind kind, std::vector<double> initial);

  StateSpace states_;
  Kind kind_;
  std::vector<double> initial_;
};

/// Right-continuous step path of the modulating process on [0, horizon].
///
/// Jump times are stored unscaled together with a time scale, so
/// compressing a path is O(1) and shares the underlying realization.
class ModulatingPath {
 public:
  ModulatingPath(Regime initial, std::vector<double> jump_times,
                 std::vector<Regime> states_after_jump, double horizon);

  Regime initial_state() const { return data_->initial; }
  std::size_t jump_count() const { return data_->times.size(); }
  double jump_time(std::size_t i) const { return scale_ * data_->times[i]; }
  Regime state_after_jump(std::size_t i) const { return data_->states[i]; }
  double horizon() const { return scale_ * data_->horizon; }
  double time_scale() const { return scale_; }

  /// Regime in force on [jump_time(i-1), jump_time(i)), with i = 0 the
  /// initial state.
  Regime state_in_interval(std::size_t i) const {
    return i == 0 ? data_->initial : data_->states[i - 1];
  }

  /// Number of jump times <= t.
  std::size_t jumps_up_to(double t) const;

  std::vector<double> jump_times() const;

 private:
  struct Data {
    Regime initial;
    std::vector<double> times;
    std::vector<Regime> states;
    double horizon;
  };

  ModulatingPath(std::shared_ptr<const Data> data, double scale)
      : data_(std::move(data)), scale_(scale) {}

  std::shared_ptr<const Data> data_;
  double scale_ = 1.0;

  friend ModulatingPath time_compress(const ModulatingPath&, double);
};

ModulatingPath build_modulating_path(const ModulatorSpec& spec, double horizon,
                                     RandomStream& rng);

/// Y^eps_t = Y_{t/eps}: jump times and horizon are multiplied by eps.
ModulatingPath time_compress(const ModulatingPath& path, double eps);

OccupationDistribution stationary_occupation(const ModulatorSpec& spec);

/// (1/t) * integral_0^t (1{Y_s = y} - pi(y)) ds, summed exactly over the
/// constancy intervals.
double occupation_error(const ModulatingPath& path, Regime y, double t,
                        const OccupationDistribution& pi);

Regime state_at(const ModulatingPath& path, double t);

/// Two-column CSV (time,state): the initial state at time 0 followed by one row
/// per jump.
void write_csv(std::ostream& out, const ModulatingPath& path,
               const StateSpace& states);

}  // namespace fastswitch
