#include "fastswitch/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

namespace fastswitch::experiment {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

std::string child_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_map(const YAML::Node& node, const std::string& path) {
  if (!node || !node.IsMap()) fail(path.empty() ? "<document>" : path, "expected a table");
}

void check_keys(const YAML::Node& node, const std::string& path,
                std::initializer_list<const char*> allowed) {
  require_map(node, path);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; })) {
      fail(child_path(path, key), "unknown key");
    }
  }
}

YAML::Node required(const YAML::Node& node, const std::string& path,
                    const char* key) {
  YAML::Node child = node[key];
  if (!child) fail(child_path(path, key), "missing required field");
  return child;
}

template <class T>
T scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) fail(path, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, "cannot convert '" + node.Scalar() + "'");
  }
}

double number(const YAML::Node& node, const std::string& path) {
  const double v = scalar<double>(node, path);
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

std::vector<double> number_list(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) fail(path, "expected a list");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(number(node[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Eigen::MatrixXd matrix(const YAML::Node& node, const std::string& path,
                       std::size_t n) {
  if (!node.IsSequence() || node.size() != n) {
    fail(path, "expected " + std::to_string(n) + " rows");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    const auto row = number_list(node[i], row_path);
    if (row.size() != n) {
      fail(row_path, "expected " + std::to_string(n) + " entries");
    }
    for (std::size_t j = 0; j < n; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return m;
}

// Reads a table keyed by regime label; the keys must match the modulator's
// regimes exactly.
template <class Fn>
void per_regime(const YAML::Node& node, const std::string& path,
                const StateSpace& states, Fn&& fn) {
  require_map(node, path);
  std::vector<std::string> unknown;
  std::set<std::string> seen;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!states.find(key)) unknown.push_back(key);
    seen.insert(key);
  }
  if (!unknown.empty()) {
    fail(path, "regime(s) " + join(unknown) + " not in modulator.regimes");
  }
  std::vector<std::string> missing;
  for (const auto& label : states.labels()) {
    if (!seen.count(label)) missing.push_back(label);
  }
  if (!missing.empty()) fail(path, "missing regime(s) " + join(missing));
  for (const auto& label : states.labels()) {
    fn(states.index_of(label), node[label], child_path(path, label));
  }
}

Affine affine(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) return {number(node, path), 0.0};
  check_keys(node, path, {"intercept", "slope", "theta", "mu"});
  const bool ou = node["theta"] || node["mu"];
  const bool linear = node["intercept"] || node["slope"];
  if (ou && linear) fail(path, "mix of affine and OU parameters");
  if (ou) {
    // theta (mu - x)
    const double theta = number(required(node, path, "theta"), path + ".theta");
    const double mu = number(required(node, path, "mu"), path + ".mu");
    return {theta * mu, -theta};
  }
  Affine a;
  if (node["intercept"]) a.intercept = number(node["intercept"], path + ".intercept");
  if (node["slope"]) a.slope = number(node["slope"], path + ".slope");
  return a;
}

SojournLaw sojourn(const YAML::Node& node, const std::string& path) {
  require_map(node, path);
  const auto law = scalar<std::string>(required(node, path, "law"), path + ".law");
  SojournLaw out;
  if (law == "exponential") {
    check_keys(node, path, {"law", "rate"});
    out = SojournLaw::exponential(number(required(node, path, "rate"), path + ".rate"));
  } else if (law == "gamma") {
    check_keys(node, path, {"law", "shape", "scale"});
    out = SojournLaw::gamma(number(required(node, path, "shape"), path + ".shape"),
                            number(required(node, path, "scale"), path + ".scale"));
  } else if (law == "uniform") {
    check_keys(node, path, {"law", "low", "high"});
    out = SojournLaw::uniform(number(required(node, path, "low"), path + ".low"),
                              number(required(node, path, "high"), path + ".high"));
  } else if (law == "deterministic") {
    check_keys(node, path, {"law", "value"});
    out = SojournLaw::deterministic(
        number(required(node, path, "value"), path + ".value"));
  } else {
    fail(path + ".law", "unknown sojourn law '" + law + "'");
  }
  try {
    out.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return out;
}

ModulatorSpec modulator(const YAML::Node& node) {
  const std::string path = "modulator";
  check_keys(node, path,
             {"regimes", "kind", "generator", "embedded", "sojourn", "cycle",
              "initial"});
  const YAML::Node regimes = required(node, path, "regimes");
  if (!regimes.IsSequence()) fail(path + ".regimes", "expected a list");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < regimes.size(); ++i) {
    labels.push_back(scalar<std::string>(
        regimes[i], path + ".regimes[" + std::to_string(i) + "]"));
  }
  std::optional<StateSpace> states;
  try {
    states.emplace(labels);
  } catch (const std::invalid_argument& e) {
    fail(path + ".regimes", e.what());
  }
  const std::size_t n = states->size();

  std::vector<double> initial;
  if (const YAML::Node init = node["initial"]) {
    if (init.IsScalar()) {
      if (init.Scalar() != "stationary") {
        fail(path + ".initial", "expected 'stationary' or a table of weights");
      }
    } else {
      initial.assign(n, 0.0);
      per_regime(init, path + ".initial", *states,
                 [&](Regime r, const YAML::Node& v, const std::string& p) {
                   initial[r] = number(v, p);
                 });
    }
  }

  const auto kind = scalar<std::string>(required(node, path, "kind"), path + ".kind");
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (node[k]) fail(child_path(path, k), "not valid for kind '" + kind + "'");
  };
  try {
    if (kind == "ctmc") {
      forbid({"embedded", "sojourn", "cycle"});
      return ModulatorSpec::ctmc(
          *states, matrix(required(node, path, "generator"), path + ".generator", n),
          initial);
    }
    if (kind == "semi_markov") {
      forbid({"generator", "cycle"});
      std::vector<SojournLaw> laws(n);
      per_regime(required(node, path, "sojourn"), path + ".sojourn", *states,
                 [&](Regime r, const YAML::Node& v, const std::string& p) {
                   laws[r] = sojourn(v, p);
                 });
      return ModulatorSpec::semi_markov(
          *states, matrix(required(node, path, "embedded"), path + ".embedded", n),
          std::move(laws), initial);
    }
    if (kind == "cyclic") {
      forbid({"generator", "embedded", "sojourn", "initial"});
      const YAML::Node cycle = required(node, path, "cycle");
      if (!cycle.IsSequence()) fail(path + ".cycle", "expected a list");
      std::vector<Regime> seq;
      std::vector<double> durations;
      for (std::size_t i = 0; i < cycle.size(); ++i) {
        const std::string p = path + ".cycle[" + std::to_string(i) + "]";
        check_keys(cycle[i], p, {"regime", "duration"});
        const auto label =
            scalar<std::string>(required(cycle[i], p, "regime"), p + ".regime");
        const auto r = states->find(label);
        if (!r) fail(p + ".regime", "regime(s) " + label + " not in modulator.regimes");
        seq.push_back(*r);
        durations.push_back(
            number(required(cycle[i], p, "duration"), p + ".duration"));
      }
      return ModulatorSpec::cyclic(*states, std::move(seq), std::move(durations));
    }
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  fail(path + ".kind", "unknown modulator kind '" + kind + "'");
}

DiffusionSpec diffusion(const YAML::Node& node, const StateSpace& states) {
  const std::string path = "diffusion";
  check_keys(node, path, {"x0", "drift", "diffusion", "growth"});
  DiffusionSpec spec;
  if (node["x0"]) spec.x0 = number(node["x0"], path + ".x0");
  spec.drift.resize(states.size());
  spec.diffusion.resize(states.size());
  per_regime(required(node, path, "drift"), path + ".drift", states,
             [&](Regime r, const YAML::Node& v, const std::string& p) {
               spec.drift[r] = affine(v, p);
             });
  per_regime(required(node, path, "diffusion"), path + ".diffusion", states,
             [&](Regime r, const YAML::Node& v, const std::string& p) {
               spec.diffusion[r] = affine(v, p);
             });
  if (const YAML::Node g = node["growth"]) {
    check_keys(g, path + ".growth", {"c1", "c2"});
    if (g["c1"]) spec.c1 = number(g["c1"], path + ".growth.c1");
    if (g["c2"]) spec.c2 = number(g["c2"], path + ".growth.c2");
  }
  return spec;
}

JumpSpec jump(const YAML::Node& node, const StateSpace& states) {
  const std::string path = "jump";
  check_keys(node, path, {"states", "x0", "rates"});
  JumpSpec spec;
  const YAML::Node range = required(node, path, "states");
  check_keys(range, path + ".states", {"first", "last"});
  spec.first_state =
      scalar<int>(required(range, path + ".states", "first"), path + ".states.first");
  spec.last_state =
      scalar<int>(required(range, path + ".states", "last"), path + ".states.last");
  if (spec.last_state < spec.first_state) fail(path + ".states", "empty range");
  if (spec.last_state - spec.first_state + 1 >
      static_cast<int>(kMaxExponentialStates)) {
    fail(path + ".states",
         "more than " + std::to_string(kMaxExponentialStates) + " states");
  }
  spec.x0 = node["x0"] ? scalar<int>(node["x0"], path + ".x0") : spec.first_state;
  if (spec.x0 < spec.first_state || spec.x0 > spec.last_state) {
    fail(path + ".x0", "outside the state range");
  }

  // The jump set is the union of offsets named in any regime.
  const YAML::Node rates = required(node, path, "rates");
  std::set<int> offsets;
  per_regime(rates, path + ".rates", states,
             [&](Regime, const YAML::Node& v, const std::string& p) {
               require_map(v, p);
               for (const auto& kv : v) {
                 const auto key = kv.first.as<std::string>();
                 const int j = scalar<int>(kv.first, p + "." + key);
                 if (j == 0) fail(p + "." + key, "jump offset must be non-zero");
                 offsets.insert(j);
               }
             });
  spec.offsets.assign(offsets.begin(), offsets.end());
  spec.rates.assign(states.size(), std::vector<double>(spec.offsets.size(), 0.0));
  per_regime(rates, path + ".rates", states,
             [&](Regime r, const YAML::Node& v, const std::string& p) {
               for (const auto& kv : v) {
                 const auto key = kv.first.as<std::string>();
                 const int j = kv.first.as<int>();
                 const auto idx = static_cast<std::size_t>(
                     std::find(spec.offsets.begin(), spec.offsets.end(), j) -
                     spec.offsets.begin());
                 const double q = number(kv.second, p + "." + key);
                 if (q < 0.0) fail(p + "." + key, "rate must be non-negative");
                 spec.rates[r][idx] = q;
               }
             });
  return spec;
}

std::string kind_name(const ModulatorSpec& spec) {
  if (std::holds_alternative<CtmcModulator>(spec.kind())) return "ctmc";
  if (std::holds_alternative<SemiMarkovModulator>(spec.kind())) return "semi_markov";
  return "cyclic";
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json sojourn_json(const SojournLaw& law) {
  switch (law.kind) {
    case SojournLaw::Kind::exponential:
      return {{"law", "exponential"}, {"rate", law.a}};
    case SojournLaw::Kind::gamma:
      return {{"law", "gamma"}, {"shape", law.a}, {"scale", law.b}};
    case SojournLaw::Kind::uniform:
      return {{"law", "uniform"}, {"low", law.a}, {"high", law.b}};
    case SojournLaw::Kind::deterministic:
      return {{"law", "deterministic"}, {"value", law.a}};
  }
  return {};
}

}  // namespace

CoefficientSet DiffusionSpec::coefficients() const {
  CoefficientSet out = affine_coefficients(drift, diffusion);
  if (c1) out.c1 = *c1;
  if (c2) out.c2 = *c2;
  return out;
}

bool DiffusionSpec::regime_dependent_diffusion() const {
  return std::any_of(diffusion.begin(), diffusion.end(),
                     [&](const Affine& a) { return !(a == diffusion.front()); });
}

IntensityFamily JumpSpec::family() const {
  return IntensityFamily(
      first_state, last_state, offsets, rates.size(),
      [this](int, int offset, Regime y) {
        const auto idx = static_cast<std::size_t>(
            std::find(offsets.begin(), offsets.end(), offset) - offsets.begin());
        return rates[y][idx];
      });
}

void validate(const ScenarioConfig& c) {
  if (c.name.empty()) fail("name", "must not be empty");
  if (c.eps.empty()) fail("epsilons", "must not be empty");
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    if (!(c.eps[i] > 0.0)) {
      fail("epsilons[" + std::to_string(i) + "]", "must be positive");
    }
    if (i > 0 && !(c.eps[i] < c.eps[i - 1])) {
      fail("epsilons", "must be strictly decreasing");
    }
  }
  if (!(c.horizon > 0.0)) fail("horizon", "must be positive");
  if (c.paths < 100) fail("paths", "must be at least 100");

  const auto& allowed = c.process == ProcessKind::diffusion ? diffusion_statistics()
                                                            : jump_statistics();
  for (std::size_t i = 0; i < c.statistics.size(); ++i) {
    if (std::find(allowed.begin(), allowed.end(), c.statistics[i]) == allowed.end()) {
      fail("statistics[" + std::to_string(i) + "]",
           "unknown statistic '" + c.statistics[i] + "' for this process");
    }
  }

  const std::size_t regimes = c.modulator.states().size();
  if (c.process == ProcessKind::diffusion) {
    if (!c.diffusion) fail("diffusion", "missing required field");
    if (c.jump) fail("jump", "not valid for a diffusion process");
    if (c.diffusion->drift.size() != regimes ||
        c.diffusion->diffusion.size() != regimes) {
      fail("diffusion", "coefficients do not match modulator.regimes");
    }
    if (!(c.dt_max > 0.0)) fail("dt_max", "must be positive");
    const double limit = c.eps.back() * c.modulator.min_mean_sojourn() / 10.0;
    if (c.dt_max > limit) {
      std::ostringstream msg;
      msg << "dt_max " << c.dt_max
          << " does not resolve switching: need dt_max <= min(eps) * "
             "(mean sojourn) / 10 = "
          << limit << "; reduce dt_max or drop the smallest eps";
      fail("dt_max", msg.str());
    }
    if (c.fluctuation.regime >= regimes) fail("fluctuation.regime", "unknown regime");
  } else {
    if (!c.jump) fail("jump", "missing required field");
    if (c.diffusion) fail("diffusion", "not valid for a jump process");
    if (c.jump->rates.size() != regimes) {
      fail("jump.rates", "rates do not match modulator.regimes");
    }
  }
}

ScenarioConfig parse_config_text(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("<document>: ") + e.what());
  }
  check_keys(root, "",
             {"name", "process", "modulator", "diffusion", "jump", "epsilons",
              "horizon", "dt_max", "paths", "seed", "statistics", "fluctuation",
              "output"});

  const auto process_name =
      scalar<std::string>(required(root, "", "process"), "process");
  ProcessKind process = ProcessKind::diffusion;
  if (process_name == "jump") {
    process = ProcessKind::jump;
  } else if (process_name != "diffusion") {
    fail("process", "expected 'diffusion' or 'jump'");
  }

  ScenarioConfig c{
      .name = scalar<std::string>(required(root, "", "name"), "name"),
      .process = process,
      .modulator = modulator(required(root, "", "modulator")),
  };
  const StateSpace& states = c.modulator.states();
  if (process == ProcessKind::diffusion) {
    if (root["jump"]) fail("jump", "not valid for a diffusion process");
    c.diffusion = diffusion(required(root, "", "diffusion"), states);
  } else {
    if (root["diffusion"]) fail("diffusion", "not valid for a jump process");
    c.jump = jump(required(root, "", "jump"), states);
  }
  c.eps = number_list(required(root, "", "epsilons"), "epsilons");
  c.horizon = number(required(root, "", "horizon"), "horizon");
  if (root["dt_max"]) {
    c.dt_max = number(root["dt_max"], "dt_max");
  } else if (process == ProcessKind::diffusion) {
    fail("dt_max", "missing required field");
  }
  c.paths = scalar<std::size_t>(required(root, "", "paths"), "paths");
  c.seed = scalar<std::uint64_t>(required(root, "", "seed"), "seed");
  if (const YAML::Node s = root["statistics"]) {
    if (!s.IsSequence()) fail("statistics", "expected a list");
    for (std::size_t i = 0; i < s.size(); ++i) {
      c.statistics.push_back(
          scalar<std::string>(s[i], "statistics[" + std::to_string(i) + "]"));
    }
  }
  if (const YAML::Node f = root["fluctuation"]) {
    if (process != ProcessKind::diffusion) {
      fail("fluctuation", "only valid for a diffusion process");
    }
    check_keys(f, "fluctuation", {"regime", "integrand", "paths"});
    if (f["regime"]) {
      const auto label = scalar<std::string>(f["regime"], "fluctuation.regime");
      const auto r = states.find(label);
      if (!r) {
        fail("fluctuation.regime", "regime(s) " + label + " not in modulator.regimes");
      }
      c.fluctuation.regime = *r;
    }
    if (f["integrand"]) {
      const auto name = scalar<std::string>(f["integrand"], "fluctuation.integrand");
      if (name == "x") {
        c.fluctuation.integrand = FluctuationIntegrand::x;
      } else if (name == "one") {
        c.fluctuation.integrand = FluctuationIntegrand::one;
      } else {
        fail("fluctuation.integrand", "expected 'x' or 'one'");
      }
    }
    if (f["paths"]) {
      c.fluctuation.paths = scalar<std::size_t>(f["paths"], "fluctuation.paths");
    }
  }
  if (root["output"]) c.output = scalar<std::string>(root["output"], "output");
  validate(c);
  return c;
}

ScenarioConfig parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string canonical_json(const ScenarioConfig& c) {
  const StateSpace& states = c.modulator.states();
  Json mod;
  mod["regimes"] = states.labels();
  mod["kind"] = kind_name(c.modulator);
  if (const auto* k = std::get_if<CtmcModulator>(&c.modulator.kind())) {
    mod["generator"] = matrix_json(k->generator);
  } else if (const auto* s = std::get_if<SemiMarkovModulator>(&c.modulator.kind())) {
    mod["embedded"] = matrix_json(s->embedded);
    Json laws;
    for (std::size_t i = 0; i < states.size(); ++i) {
      laws[states.label(static_cast<Regime>(i))] = sojourn_json(s->sojourn[i]);
    }
    mod["sojourn"] = laws;
  } else {
    const auto& cy = std::get<CyclicModulator>(c.modulator.kind());
    Json cycle = Json::array();
    for (std::size_t i = 0; i < cy.sequence.size(); ++i) {
      cycle.push_back({{"regime", states.label(cy.sequence[i])},
                       {"duration", cy.durations[i]}});
    }
    mod["cycle"] = cycle;
  }
  Json init;
  for (std::size_t i = 0; i < states.size(); ++i) {
    init[states.label(static_cast<Regime>(i))] = c.modulator.initial_law()[i];
  }
  mod["initial"] = init;

  Json j;
  j["name"] = c.name;
  j["process"] = c.process == ProcessKind::diffusion ? "diffusion" : "jump";
  j["modulator"] = mod;
  if (c.diffusion) {
    Json d;
    d["x0"] = c.diffusion->x0;
    Json drift, diff;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& label = states.label(static_cast<Regime>(i));
      drift[label] = {{"intercept", c.diffusion->drift[i].intercept},
                      {"slope", c.diffusion->drift[i].slope}};
      diff[label] = {{"intercept", c.diffusion->diffusion[i].intercept},
                     {"slope", c.diffusion->diffusion[i].slope}};
    }
    d["drift"] = drift;
    d["diffusion"] = diff;
    const CoefficientSet coeffs = c.diffusion->coefficients();
    d["growth"] = {{"c1", coeffs.c1}, {"c2", coeffs.c2}};
    j["diffusion"] = d;
  }
  if (c.jump) {
    Json jj;
    jj["states"] = {{"first", c.jump->first_state}, {"last", c.jump->last_state}};
    jj["x0"] = c.jump->x0;
    Json rates;
    for (std::size_t i = 0; i < states.size(); ++i) {
      Json row;
      for (std::size_t k = 0; k < c.jump->offsets.size(); ++k) {
        const int off = c.jump->offsets[k];
        row[(off > 0 ? "+" : "") + std::to_string(off)] = c.jump->rates[i][k];
      }
      rates[states.label(static_cast<Regime>(i))] = row;
    }
    jj["rates"] = rates;
    j["jump"] = jj;
  }
  j["epsilons"] = c.eps;
  j["horizon"] = c.horizon;
  if (c.process == ProcessKind::diffusion) j["dt_max"] = c.dt_max;
  j["paths"] = c.paths;
  j["seed"] = c.seed;
  j["statistics"] = c.statistics;
  if (c.process == ProcessKind::diffusion) {
    j["fluctuation"] = {
        {"regime", states.label(c.fluctuation.regime)},
        {"integrand", c.fluctuation.integrand == FluctuationIntegrand::x ? "x" : "one"},
        {"paths", c.fluctuation.paths}};
  }
  j["output"] = c.output;
  return j.dump(2);
}

std::string config_hash(const ScenarioConfig& config) {
  // The output directory does not affect results.
  ScenarioConfig hashed = config;
  hashed.output.clear();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_json(hashed)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace fastswitch::experiment
