#include "fastswitch/modulating.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace fastswitch {
namespace {

std::size_t sample_categorical(std::span<const double> weights, double total,
                               RandomStream& rng) {
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

using Adjacency = std::vector<std::vector<bool>>;

// Throws naming the unreachable states if the directed graph is not strongly
// connected.
void require_irreducible(const Adjacency& adj, const StateSpace& states) {
  const std::size_t n = adj.size();
  for (std::size_t from = 0; from < n; ++from) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
      const std::size_t s = stack.back();
      stack.pop_back();
      for (std::size_t t = 0; t < n; ++t) {
        if (adj[s][t] && !seen[t]) {
          seen[t] = true;
          stack.push_back(t);
        }
      }
    }
    std::string missing;
    for (std::size_t t = 0; t < n; ++t) {
      if (!seen[t]) {
        if (!missing.empty()) missing += ", ";
        missing += states.label(static_cast<Regime>(t));
      }
    }
    if (!missing.empty()) {
      throw std::invalid_argument("modulator is reducible: states {" + missing +
                                  "} are unreachable from " +
                                  states.label(static_cast<Regime>(from)));
    }
  }
}

Adjacency positive_offdiagonal(const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  Adjacency adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      adj[i][j] = i != j && m(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j)) > 0.0;
  return adj;
}

// Solves nu * M = 0 with sum(nu) = 1, M singular with rank n - 1.
std::vector<double> left_null_probability(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd a = m.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd nu = a.fullPivLu().solve(rhs);
  std::vector<double> out(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = std::max(0.0, nu(i));
    total += out[static_cast<std::size_t>(i)];
  }
  for (double& w : out) w /= total;
  return out;
}

void validate_square(const Eigen::MatrixXd& m, const StateSpace& states,
                     const char* what) {
  if (m.rows() != m.cols() ||
      static_cast<std::size_t>(m.rows()) != states.size()) {
    throw std::invalid_argument(std::string(what) +
                                " must be square with one row per regime");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + " has non-finite entries");
  }
}

std::vector<double> validate_initial(std::vector<double> initial,
                                     std::size_t n) {
  if (initial.size() != n) {
    throw std::invalid_argument("initial law must have one weight per regime");
  }
  double total = 0.0;
  for (double w : initial) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("initial law weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("initial law must sum to one");
  }
  return initial;
}

}  // namespace

StateSpace::StateSpace(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.empty()) {
    throw std::invalid_argument("state space must not be empty");
  }
  if (labels_.size() > std::numeric_limits<Regime>::max()) {
    throw std::invalid_argument("too many regimes");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i)
    for (std::size_t j = i + 1; j < labels_.size(); ++j)
      if (labels_[i] == labels_[j]) {
        throw std::invalid_argument("duplicate regime label '" + labels_[i] +
                                    "'");
      }
}

std::optional<Regime> StateSpace::find(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<Regime>(it - labels_.begin());
}

Regime StateSpace::index_of(const std::string& label) const {
  if (auto r = find(label)) return *r;
  throw std::invalid_argument("unknown regime label '" + label + "'");
}

OccupationDistribution::OccupationDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) {
    throw std::invalid_argument("occupation distribution must not be empty");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("occupation weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("occupation weights must sum to one");
  }
}

OccupationDistribution OccupationDistribution::point_mass(std::size_t n,
                                                          Regime at) {
  std::vector<double> w(n, 0.0);
  w.at(at) = 1.0;
  return OccupationDistribution(std::move(w));
}

double SojournLaw::mean() const {
  switch (kind) {
    case Kind::exponential: return 1.0 / a;
    case Kind::gamma: return a * b;
    case Kind::uniform: return 0.5 * (a + b);
    case Kind::deterministic: return a;
  }
  return 0.0;
}

double SojournLaw::sample(RandomStream& rng) const {
  switch (kind) {
    case Kind::exponential: return rng.exponential(a);
    case Kind::gamma: return rng.gamma(a, b);
    case Kind::uniform: return a + (b - a) * rng.uniform();
    case Kind::deterministic: return a;
  }
  return 0.0;
}

void SojournLaw::validate() const {
  const bool ok = [&] {
    switch (kind) {
      case Kind::exponential: return a > 0.0 && std::isfinite(a);
      case Kind::gamma:
        return a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b);
      case Kind::uniform: return a >= 0.0 && b > a && std::isfinite(b);
      case Kind::deterministic: return a > 0.0 && std::isfinite(a);
    }
    return false;
  }();
  if (!ok) throw std::invalid_argument("invalid sojourn law parameters");
}

ModulatorSpec::ModulatorSpec(StateSpace states, Kind kind,
                             std::vector<double> initial)
    : states_(std::move(states)), kind_(std::move(kind)),
      initial_(std::move(initial)) {}

ModulatorSpec ModulatorSpec::ctmc(StateSpace states, Eigen::MatrixXd generator,
                                  std::vector<double> initial) {
  validate_square(generator, states, "generator");
  const Eigen::Index n = generator.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    double scale = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && generator(i, j) < 0.0) {
        throw std::invalid_argument("generator has a negative off-diagonal entry");
      }
      row += generator(i, j);
      scale += std::abs(generator(i, j));
    }
    if (std::abs(row) > 1e-12 * std::max(1.0, scale)) {
      throw std::invalid_argument("generator rows must sum to zero");
    }
  }
  ModulatorSpec spec(std::move(states), CtmcModulator{std::move(generator)}, {});
  if (initial.empty()) {
    const auto pi = stationary_occupation(spec);
    spec.initial_.assign(pi.weights().begin(), pi.weights().end());
  } else {
    spec.initial_ = validate_initial(std::move(initial), spec.states_.size());
  }
  return spec;
}

ModulatorSpec ModulatorSpec::semi_markov(StateSpace states,
                                         Eigen::MatrixXd embedded,
                                         std::vector<SojournLaw> sojourn,
                                         std::vector<double> initial) {
  validate_square(embedded, states, "embedded kernel");
  if (sojourn.size() != states.size()) {
    throw std::invalid_argument("need one sojourn law per regime");
  }
  for (const auto& law : sojourn) law.validate();
  const Eigen::Index n = embedded.rows();
  if (n > 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (embedded(i, i) != 0.0) {
        throw std::invalid_argument("embedded kernel must have a zero diagonal");
      }
      double row = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (embedded(i, j) < 0.0) {
          throw std::invalid_argument("embedded kernel has a negative entry");
        }
        row += embedded(i, j);
      }
      if (std::abs(row - 1.0) > 1e-12) {
        throw std::invalid_argument("embedded kernel rows must sum to one");
      }
    }
  }
  ModulatorSpec spec(std::move(states),
                     SemiMarkovModulator{std::move(embedded), std::move(sojourn)},
                     {});
  if (initial.empty()) {
    const auto pi = stationary_occupation(spec);
    spec.initial_.assign(pi.weights().begin(), pi.weights().end());
  } else {
    spec.initial_ = validate_initial(std::move(initial), spec.states_.size());
  }
  return spec;
}

ModulatorSpec ModulatorSpec::cyclic(StateSpace states,
                                    std::vector<Regime> sequence,
                                    std::vector<double> durations) {
  if (sequence.empty() || sequence.size() != durations.size()) {
    throw std::invalid_argument(
        "cyclic modulator needs a non-empty sequence with one duration each");
  }
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (sequence[i] >= states.size()) {
      throw std::invalid_argument("cyclic sequence references an unknown regime");
    }
    if (!(durations[i] > 0.0) || !std::isfinite(durations[i])) {
      throw std::invalid_argument("cyclic durations must be positive");
    }
    if (sequence.size() > 1 &&
        sequence[i] == sequence[(i + 1) % sequence.size()]) {
      throw std::invalid_argument(
          "cyclic sequence repeats a regime in consecutive positions");
    }
  }
  std::vector<double> initial(states.size(), 0.0);
  initial[sequence.front()] = 1.0;
  return ModulatorSpec(std::move(states),
                       CyclicModulator{std::move(sequence), std::move(durations)},
                       std::move(initial));
}

double ModulatorSpec::min_mean_sojourn() const {
  double best = std::numeric_limits<double>::infinity();
  if (const auto* c = std::get_if<CtmcModulator>(&kind_)) {
    for (Eigen::Index i = 0; i < c->generator.rows(); ++i) {
      const double rate = -c->generator(i, i);
      if (rate > 0.0) best = std::min(best, 1.0 / rate);
    }
  } else if (const auto* s = std::get_if<SemiMarkovModulator>(&kind_)) {
    if (states_.size() > 1)
      for (const auto& law : s->sojourn) best = std::min(best, law.mean());
  } else if (const auto* cy = std::get_if<CyclicModulator>(&kind_)) {
    if (cy->sequence.size() > 1)
      for (double d : cy->durations) best = std::min(best, d);
  }
  return best;
}

ModulatingPath::ModulatingPath(Regime initial, std::vector<double> jump_times,
                               std::vector<Regime> states_after_jump,
                               double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("modulating path horizon must be positive");
  }
  if (jump_times.size() != states_after_jump.size()) {
    throw std::invalid_argument("jump times and states differ in length");
  }
  Regime prev = initial;
  double last = 0.0;
  for (std::size_t i = 0; i < jump_times.size(); ++i) {
    if (!(jump_times[i] > last) || !(jump_times[i] < horizon)) {
      throw std::invalid_argument(
          "jump times must be strictly increasing, positive and below the "
          "horizon");
    }
    if (states_after_jump[i] == prev) {
      throw std::invalid_argument("a jump must change the regime");
    }
    last = jump_times[i];
    prev = states_after_jump[i];
  }
  data_ = std::make_shared<const Data>(Data{initial, std::move(jump_times),
                                            std::move(states_after_jump),
                                            horizon});
}

std::size_t ModulatingPath::jumps_up_to(double t) const {
  const auto& times = data_->times;
  const double scale = scale_;
  const auto it = std::upper_bound(
      times.begin(), times.end(), t,
      [scale](double value, double base) { return value < scale * base; });
  return static_cast<std::size_t>(it - times.begin());
}

std::vector<double> ModulatingPath::jump_times() const {
  std::vector<double> out(jump_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = jump_time(i);
  return out;
}

ModulatingPath build_modulating_path(const ModulatorSpec& spec, double horizon,
                                     RandomStream& rng) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be positive");
  }
  const std::size_t n = spec.states().size();
  std::vector<double> times;
  std::vector<Regime> states;

  if (const auto* cy = std::get_if<CyclicModulator>(&spec.kind())) {
    const Regime start = cy->sequence.front();
    if (cy->sequence.size() > 1) {
      double t = 0.0;
      std::size_t pos = 0;
      for (;;) {
        t += cy->durations[pos];
        pos = (pos + 1) % cy->sequence.size();
        if (!(t < horizon)) break;
        times.push_back(t);
        states.push_back(cy->sequence[pos]);
      }
    }
    return ModulatingPath(start, std::move(times), std::move(states), horizon);
  }

  const auto& init = spec.initial_law();
  const Regime start =
      n == 1 ? Regime{0}
             : static_cast<Regime>(sample_categorical(init, 1.0, rng));
  if (n == 1) {
    return ModulatingPath(start, {}, {}, horizon);
  }

  std::vector<double> row(n);
  Regime current = start;
  double t = 0.0;
  if (const auto* c = std::get_if<CtmcModulator>(&spec.kind())) {
    const auto& g = c->generator;
    for (;;) {
      const double rate = -g(current, current);
      if (!(rate > 0.0)) break;
      t += rng.exponential(rate);
      if (!(t < horizon)) break;
      for (std::size_t j = 0; j < n; ++j)
        row[j] = j == current ? 0.0 : g(current, static_cast<Eigen::Index>(j));
      current = static_cast<Regime>(sample_categorical(row, rate, rng));
      times.push_back(t);
      states.push_back(current);
    }
  } else {
    const auto& s = std::get<SemiMarkovModulator>(spec.kind());
    for (;;) {
      t += s.sojourn[current].sample(rng);
      if (!(t < horizon)) break;
      for (std::size_t j = 0; j < n; ++j)
        row[j] = s.embedded(current, static_cast<Eigen::Index>(j));
      current = static_cast<Regime>(sample_categorical(row, 1.0, rng));
      times.push_back(t);
      states.push_back(current);
    }
  }
  return ModulatingPath(start, std::move(times), std::move(states), horizon);
}

ModulatingPath time_compress(const ModulatingPath& path, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("time compression factor must be positive");
  }
  return ModulatingPath(path.data_, path.scale_ * eps);
}

OccupationDistribution stationary_occupation(const ModulatorSpec& spec) {
  const StateSpace& states = spec.states();
  const std::size_t n = states.size();
  if (n == 1) return OccupationDistribution({1.0});

  if (const auto* c = std::get_if<CtmcModulator>(&spec.kind())) {
    require_irreducible(positive_offdiagonal(c->generator), states);
    return OccupationDistribution(left_null_probability(c->generator));
  }
  if (const auto* s = std::get_if<SemiMarkovModulator>(&spec.kind())) {
    require_irreducible(positive_offdiagonal(s->embedded), states);
    const Eigen::MatrixXd shifted =
        s->embedded - Eigen::MatrixXd::Identity(s->embedded.rows(),
                                                s->embedded.cols());
    std::vector<double> w = left_null_probability(shifted);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= s->sojourn[i].mean();
      total += w[i];
    }
    for (double& x : w) x /= total;
    return OccupationDistribution(std::move(w));
  }
  const auto& cy = std::get<CyclicModulator>(spec.kind());
  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < cy.sequence.size(); ++i) {
    w[cy.sequence[i]] += cy.durations[i];
    total += cy.durations[i];
  }
  std::string missing;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) {
      if (!missing.empty()) missing += ", ";
      missing += states.label(static_cast<Regime>(i));
    }
    w[i] /= total;
  }
  if (!missing.empty()) {
    throw std::invalid_argument("modulator is reducible: states {" + missing +
                                "} never appear in the cycle");
  }
  return OccupationDistribution(std::move(w));
}

double occupation_error(const ModulatingPath& path, Regime y, double t,
                        const OccupationDistribution& pi) {
  if (!(t > 0.0) || t > path.horizon()) {
    throw std::out_of_range("occupation_error: t outside (0, horizon]");
  }
  if (y >= pi.size()) {
    throw std::out_of_range("occupation_error: regime outside distribution");
  }
  double inside = 0.0;
  double start = 0.0;
  const std::size_t jumps = path.jump_count();
  for (std::size_t i = 0; i <= jumps && start < t; ++i) {
    const double end = i < jumps ? std::min(path.jump_time(i), t) : t;
    if (path.state_in_interval(i) == y) inside += end - start;
    start = end;
  }
  return inside / t - pi[y];
}

Regime state_at(const ModulatingPath& path, double t) {
  if (!(t >= 0.0) || t > path.horizon()) {
    throw std::out_of_range("state_at: t outside [0, horizon]");
  }
  return path.state_in_interval(path.jumps_up_to(t));
}

void write_csv(std::ostream& out, const ModulatingPath& path,
               const StateSpace& states) {
  std::ostringstream buf;
  buf << std::setprecision(17);
  buf << "time,state\n";
  buf << 0.0 << ',' << states.label(path.initial_state()) << '\n';
  for (std::size_t i = 0; i < path.jump_count(); ++i) {
    buf << path.jump_time(i) << ',' << states.label(path.state_after_jump(i))
        << '\n';
  }
  out << buf.str();
}

}  // namespace fastswitch
