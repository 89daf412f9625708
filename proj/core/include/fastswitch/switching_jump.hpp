#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "fastswitch/modulating.hpp"
#include "fastswitch/random.hpp"

namespace fastswitch {

/// Per-regime jump intensities q(i, i + j | y) on the contiguous state range
/// [first_state, last_state] with a common finite offset set J.
class IntensityFamily {
 public:
  using RateFn = std::function<double(int state, int offset, Regime y)>;

  /// rate is only queried for targets i + j inside the state range; rates
  /// leaving the range are zero by construction.
  IntensityFamily(int first_state, int last_state, std::vector<int> offsets,
                  std::size_t regime_count, const RateFn& rate);

  int first_state() const { return first_; }
  int last_state() const { return last_; }
  std::size_t state_count() const { return static_cast<std::size_t>(last_ - first_ + 1); }
  const std::vector<int>& offsets() const { return offsets_; }
  std::size_t regime_count() const { return regimes_; }
  bool contains(int state) const { return state >= first_ && state <= last_; }

  double rate(int state, std::size_t offset_index, Regime y) const {
    return rates_[index(state, y) * offsets_.size() + offset_index];
  }
  double total_rate(int state, Regime y) const { return totals_[index(state, y)]; }

  /// sup_{i, y} q(i | y)
  double q_sup() const { return q_sup_; }

 private:
  std::size_t index(int state, Regime y) const {
    return static_cast<std::size_t>(y) * state_count() +
           static_cast<std::size_t>(state - first_);
  }

  int first_;
  int last_;
  std::vector<int> offsets_;
  std::size_t regimes_;
  std::vector<double> rates_;
  std::vector<double> totals_;
  double q_sup_ = 0.0;
};

/// q^(i, i + j) = sum_y q(i, i + j | y) pi(y).
class AveragedGenerator {
 public:
  AveragedGenerator(int first_state, int last_state, std::vector<int> offsets,
                    std::vector<double> rates);

  int first_state() const { return first_; }
  int last_state() const { return last_; }
  std::size_t state_count() const { return static_cast<std::size_t>(last_ - first_ + 1); }
  const std::vector<int>& offsets() const { return offsets_; }
  bool contains(int state) const { return state >= first_ && state <= last_; }

  double rate(int state, std::size_t offset_index) const {
    return rates_[static_cast<std::size_t>(state - first_) * offsets_.size() +
                  offset_index];
  }
  double total_rate(int state) const;

  /// Dense generator matrix indexed by state - first_state.
  Eigen::MatrixXd matrix() const;

 private:
  int first_;
  int last_;
  std::vector<int> offsets_;
  std::vector<double> rates_;
};

/// Right-continuous jump-chain trajectory.
struct JumpPath {
  int initial_state = 0;
  std::vector<double> times;
  std::vector<int> states;
  double horizon = 0.0;

  int state_at(double t) const;
};

/// Restart construction of the switching chain, realized by uniformization at
/// rate q_sup: candidate events arrive from `clock`, and a candidate at time t
/// moves i -> i + j with probability q(i, i + j | Y_t) / q_sup, drawn from
/// `thinning`.
JumpPath simulate_switching_chain(const IntensityFamily& family,
                                  const ModulatingPath& y_path, int i0,
                                  double horizon, RandomStream& clock,
                                  RandomStream& thinning);

AveragedGenerator averaged_intensity(const IntensityFamily& family,
                                     const OccupationDistribution& pi);

/// Classical exponential-clock simulation of the averaged chain.
JumpPath simulate_averaged_chain(const AveragedGenerator& gen, int i0,
                                 double horizon, RandomStream& rng);

/// Row i0 of exp(t Q^), indexed by state - first_state.
std::vector<double> marginal_via_matrix_exponential(const AveragedGenerator& gen,
                                                    int i0, double t);

/// Number of jump times strictly before T.
std::size_t jump_count(const JumpPath& path, double T);

inline constexpr std::size_t kMaxChainEvents = 10'000'000;
inline constexpr std::size_t kMaxExponentialStates = 200;

void write_csv(std::ostream& out, const JumpPath& path);

}  // namespace fastswitch
