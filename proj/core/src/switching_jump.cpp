#include "fastswitch/switching_jump.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "fastswitch/errors.hpp"

namespace fastswitch {
namespace {

void validate_range(int first, int last, const std::vector<int>& offsets) {
  if (last < first) throw std::invalid_argument("empty state range");
  if (offsets.empty()) throw std::invalid_argument("jump set must not be empty");
  for (std::size_t a = 0; a < offsets.size(); ++a) {
    if (offsets[a] == 0) throw std::invalid_argument("jump offsets must be non-zero");
    for (std::size_t b = a + 1; b < offsets.size(); ++b)
      if (offsets[a] == offsets[b]) {
        throw std::invalid_argument("jump offsets must be distinct");
      }
  }
}

std::vector<double> uniformized_row(const Eigen::MatrixXd& q, std::size_t from,
                                    double t) {
  const auto n = q.rows();
  double lambda = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) lambda = std::max(lambda, -q(i, i));
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(n);
  v(static_cast<Eigen::Index>(from)) = 1.0;
  if (lambda == 0.0 || t == 0.0) {
    return {v.data(), v.data() + n};
  }
  const Eigen::MatrixXd p =
      Eigen::MatrixXd::Identity(n, n) + q / lambda;
  const double mean = lambda * t;
  const auto last = static_cast<std::size_t>(
      mean + 12.0 * std::sqrt(mean) + 60.0);
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
  for (std::size_t k = 0; k <= last; ++k) {
    const double kd = static_cast<double>(k);
    const double w = std::exp(-mean + kd * std::log(mean) - std::lgamma(kd + 1.0));
    acc += w * v;
    v = v * p;
  }
  return {acc.data(), acc.data() + n};
}

bool is_distribution(const std::vector<double>& p) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= -1e-12)) return false;
    total += x;
  }
  return std::abs(total - 1.0) <= 1e-10;
}

}  // namespace

IntensityFamily::IntensityFamily(int first_state, int last_state,
                                 std::vector<int> offsets,
                                 std::size_t regime_count, const RateFn& rate)
    : first_(first_state), last_(last_state), offsets_(std::move(offsets)),
      regimes_(regime_count) {
  validate_range(first_, last_, offsets_);
  if (regimes_ == 0) throw std::invalid_argument("need at least one regime");
  const std::size_t n = state_count();
  rates_.assign(regimes_ * n * offsets_.size(), 0.0);
  totals_.assign(regimes_ * n, 0.0);
  for (std::size_t y = 0; y < regimes_; ++y) {
    for (int i = first_; i <= last_; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < offsets_.size(); ++j) {
        if (!contains(i + offsets_[j])) continue;
        const double r = rate(i, offsets_[j], static_cast<Regime>(y));
        if (!(r >= 0.0) || !std::isfinite(r)) {
          throw std::invalid_argument("jump rates must be finite and non-negative");
        }
        rates_[index(i, static_cast<Regime>(y)) * offsets_.size() + j] = r;
        total += r;
      }
      totals_[index(i, static_cast<Regime>(y))] = total;
      q_sup_ = std::max(q_sup_, total);
    }
  }
}

AveragedGenerator::AveragedGenerator(int first_state, int last_state,
                                     std::vector<int> offsets,
                                     std::vector<double> rates)
    : first_(first_state), last_(last_state), offsets_(std::move(offsets)),
      rates_(std::move(rates)) {
  validate_range(first_, last_, offsets_);
  if (rates_.size() != state_count() * offsets_.size()) {
    throw std::invalid_argument("averaged generator rate table has wrong size");
  }
  for (int i = first_; i <= last_; ++i) {
    for (std::size_t j = 0; j < offsets_.size(); ++j) {
      const double r = rate(i, j);
      if (!(r >= 0.0) || !std::isfinite(r)) {
        throw std::invalid_argument("averaged rates must be non-negative");
      }
      if (r > 0.0 && !contains(i + offsets_[j])) {
        throw std::invalid_argument("averaged rate leaves the state range");
      }
    }
  }
}

double AveragedGenerator::total_rate(int state) const {
  double total = 0.0;
  for (std::size_t j = 0; j < offsets_.size(); ++j) total += rate(state, j);
  return total;
}

Eigen::MatrixXd AveragedGenerator::matrix() const {
  const auto n = static_cast<Eigen::Index>(state_count());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = first_; i <= last_; ++i) {
    const Eigen::Index row = i - first_;
    for (std::size_t j = 0; j < offsets_.size(); ++j) {
      const double r = rate(i, j);
      if (r == 0.0) continue;
      q(row, row + offsets_[j]) += r;
      q(row, row) -= r;
    }
  }
  return q;
}

int JumpPath::state_at(double t) const {
  if (t < 0.0 || t > horizon) {
    throw std::out_of_range("JumpPath::state_at: t outside [0, horizon]");
  }
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return it == times.begin() ? initial_state : states[static_cast<std::size_t>(it - times.begin()) - 1];
}

JumpPath simulate_switching_chain(const IntensityFamily& family,
                                  const ModulatingPath& y_path, int i0,
                                  double horizon, RandomStream& clock,
                                  RandomStream& thinning) {
  if (!family.contains(i0)) {
    throw std::invalid_argument("initial state outside the state range");
  }
  if (!(horizon > 0.0) || horizon > y_path.horizon()) {
    throw std::invalid_argument(
        "chain horizon must be positive and covered by the modulating path");
  }
  JumpPath path{i0, {}, {}, horizon};
  const double q_sup = family.q_sup();
  if (q_sup == 0.0) return path;

  const auto& offsets = family.offsets();
  const std::size_t jumps = y_path.jump_count();
  std::size_t cursor = 0;
  std::size_t candidates = 0;
  int state = i0;
  double t = 0.0;
  for (;;) {
    t += clock.exponential(q_sup);
    if (!(t < horizon)) break;
    if (++candidates > kMaxChainEvents) {
      throw NumericalError("switching chain exceeded the event cap",
                           static_cast<double>(state), 0, t);
    }
    while (cursor < jumps && y_path.jump_time(cursor) <= t) ++cursor;
    const Regime y = y_path.state_in_interval(cursor);
    if (y >= family.regime_count()) {
      throw std::invalid_argument("modulating path visits an unknown regime");
    }
    const double u = thinning.uniform() * q_sup;
    double acc = 0.0;
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      acc += family.rate(state, j, y);
      if (u < acc) {
        state += offsets[j];
        path.times.push_back(t);
        path.states.push_back(state);
        break;
      }
    }
  }
  return path;
}

AveragedGenerator averaged_intensity(const IntensityFamily& family,
                                     const OccupationDistribution& pi) {
  if (pi.size() != family.regime_count()) {
    throw std::invalid_argument(
        "intensity family and occupation distribution cover different regimes");
  }
  const auto& offsets = family.offsets();
  std::vector<double> rates(family.state_count() * offsets.size(), 0.0);
  for (int i = family.first_state(); i <= family.last_state(); ++i) {
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      double acc = 0.0;
      for (std::size_t y = 0; y < family.regime_count(); ++y) {
        acc += family.rate(i, j, static_cast<Regime>(y)) * pi[static_cast<Regime>(y)];
      }
      rates[static_cast<std::size_t>(i - family.first_state()) * offsets.size() + j] = acc;
    }
  }
  return AveragedGenerator(family.first_state(), family.last_state(), offsets,
                           std::move(rates));
}

JumpPath simulate_averaged_chain(const AveragedGenerator& gen, int i0,
                                 double horizon, RandomStream& rng) {
  if (!gen.contains(i0)) {
    throw std::invalid_argument("initial state outside the state range");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  JumpPath path{i0, {}, {}, horizon};
  const auto& offsets = gen.offsets();
  int state = i0;
  double t = 0.0;
  for (;;) {
    const double total = gen.total_rate(state);
    if (total == 0.0) break;
    t += rng.exponential(total);
    if (!(t < horizon)) break;
    if (path.times.size() >= kMaxChainEvents) {
      throw NumericalError("averaged chain exceeded the event cap",
                           static_cast<double>(state), 0, t);
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = offsets.size() - 1;
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      acc += gen.rate(state, j);
      if (u < acc) {
        pick = j;
        break;
      }
    }
    while (gen.rate(state, pick) == 0.0) --pick;
    state += offsets[pick];
    path.times.push_back(t);
    path.states.push_back(state);
  }
  return path;
}

std::vector<double> marginal_via_matrix_exponential(const AveragedGenerator& gen,
                                                    int i0, double t) {
  if (gen.state_count() > kMaxExponentialStates) {
    throw std::length_error("matrix exponential refused: state space too large");
  }
  if (!gen.contains(i0)) {
    throw std::invalid_argument("initial state outside the state range");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("time must be non-negative");
  }
  const Eigen::MatrixXd q = gen.matrix();
  const auto n = q.rows();
  const auto from = static_cast<std::size_t>(i0 - gen.first_state());

  // Scaling and squaring with a Taylor core on ||A / 2^s|| <= 1/2.
  const Eigen::MatrixXd a = q * t;
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = term * b / static_cast<double>(k);
    e += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) e = e * e;

  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    row[static_cast<std::size_t>(j)] = e(static_cast<Eigen::Index>(from), j);
  }
  if (!is_distribution(row)) row = uniformized_row(q, from, t);

  double total = 0.0;
  for (double& p : row) {
    p = std::max(p, 0.0);
    total += p;
  }
  for (double& p : row) p /= total;
  return row;
}

std::size_t jump_count(const JumpPath& path, double T) {
  if (T > path.horizon) throw std::invalid_argument("T exceeds the horizon");
  return static_cast<std::size_t>(
      std::lower_bound(path.times.begin(), path.times.end(), T) -
      path.times.begin());
}

void write_csv(std::ostream& out, const JumpPath& path) {
  std::ostringstream buf;
  buf << std::setprecision(17) << "time,state\n";
  buf << 0.0 << ',' << path.initial_state << '\n';
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    buf << path.times[k] << ',' << path.states[k] << '\n';
  }
  out << buf.str();
}

}  // namespace fastswitch
