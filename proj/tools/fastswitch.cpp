// fastswitch: scenario runner for switching diffusions and jump chains.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastswitch/averaging.hpp"
#include "fastswitch/errors.hpp"
#include "fastswitch/experiment/config.hpp"
#include "fastswitch/experiment/report.hpp"
#include "fastswitch/experiment/runner.hpp"
#include "fastswitch/random.hpp"

namespace fx = fastswitch::experiment;
using fastswitch::NumericalError;

namespace {

enum Exit { ok = 0, config_error = 2, numerical = 3, io = 4 };

struct Args {
  std::string config;
  std::string out;
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  bool emit_paths = false;
  // sweep-appendix
  std::string f = "cos";
  std::string h = "one";
  std::vector<double> T{1e2, 1e3, 1e4, 1e5};
  double quad_step = fastswitch::kDefaultQuadStep;
  std::string regime;
  // report
  std::string input;
};

fx::ScenarioConfig load(const Args& a) {
  fx::ScenarioConfig c = fx::parse_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (!a.out.empty()) c.output = a.out;
  return c;
}

int cmd_validate(const Args& a) {
  std::cout << fx::canonical_json(load(a)) << '\n';
  return ok;
}

int cmd_run(const Args& a) {
  const fx::ScenarioConfig c = load(a);
  if (a.dry_run) {
    std::cout << fx::canonical_json(c) << '\n';
    return ok;
  }
  fx::RunOptions opt;
  opt.workers = a.workers;
  opt.keep_path_samples = a.emit_paths;
  const fx::RunResult r = fx::run_scenario(c, opt);
  fx::emit_report(r.report, c.output, a.emit_paths ? &r.samples : nullptr,
                  &c.modulator.states().labels());
  std::cerr << "wrote " << c.output << "/report.json\n";
  return ok;
}

fastswitch::Weight pick_weight(const std::string& h) {
  if (h == "one") return fastswitch::weights::one();
  if (h == "u") return fastswitch::weights::linear();
  if (h == "u2") return fastswitch::weights::square();
  if (h == "sin") return fastswitch::weights::sine();
  throw fx::ConfigError("--h: unknown weight '" + h + "' (one, u, u2, sin)");
}

int cmd_sweep(const Args& a) {
  using fastswitch::TestFunctionPair;
  const fastswitch::Weight w = pick_weight(a.h);
  std::optional<TestFunctionPair> pair;
  double t_max = 0.0;
  for (double t : a.T) t_max = std::max(t_max, t);
  if (a.f == "cos") {
    pair = TestFunctionPair::cosine(w);
  } else if (a.f == "damped") {
    pair = TestFunctionPair::damped_cosine(w);
  } else if (a.f == "occupation") {
    if (a.config.empty()) throw fx::ConfigError("--f occupation needs --config");
    const fx::ScenarioConfig c = load(a);
    const auto& states = c.modulator.states();
    const fastswitch::Regime y =
        a.regime.empty() ? fastswitch::Regime{0} : states.index_of(a.regime);
    fastswitch::RandomStream rng(c.seed, 0, fastswitch::StreamRole::modulator);
    const auto path = fastswitch::build_modulating_path(c.modulator, t_max, rng);
    pair = TestFunctionPair::occupation(path, y,
                                        fastswitch::stationary_occupation(c.modulator), w);
  } else {
    throw fx::ConfigError("--f: unknown test function '" + a.f +
                          "' (cos, damped, occupation)");
  }
  const auto sweep = fastswitch::averaging_decay_sweep(*pair, a.T, a.quad_step);
  std::ostringstream csv;
  csv.precision(17);
  csv << "T,value\n";
  for (const auto& p : sweep.points) csv << p.T << ',' << p.value << '\n';
  std::cout << csv.str() << "# tail_max " << sweep.tail_max << '\n';
  return ok;
}

int cmd_report(const Args& a) {
  const fx::ConvergenceReport r = fx::load_report(a.input);
  if (a.out.empty()) {
    std::cout << fx::sweep_csv(r);
  } else {
    fx::emit_report(r, a.out);
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast-switching averaging experiments"};
  app.require_subcommand(1);
  Args a;

  auto* run = app.add_subcommand("run", "Run an eps-sweep scenario");
  run->add_option("--config", a.config, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", a.out, "Output directory (overrides the config)");
  run->add_option("--workers", a.workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", a.seed, "Master seed (overrides the config)");
  run->add_flag("--dry-run", a.dry_run, "Print the parsed config and exit");
  run->add_flag("--emit-paths", a.emit_paths, "Write the first 5 paths per eps");

  auto* val = app.add_subcommand("validate", "Parse a scenario and print it");
  val->add_option("--config", a.config, "Scenario file")->required()->check(CLI::ExistingFile);
  val->add_option("--seed", a.seed, "Master seed");
  val->add_flag("--dry-run", a.dry_run, "Accepted for symmetry with run");

  auto* sweep = app.add_subcommand("sweep-appendix", "Weighted Cesaro decay sweep");
  sweep->set_help_flag("--help", "Print this help message and exit");
  sweep->add_option("--f", a.f, "cos | damped | occupation");
  sweep->add_option("--h", a.h, "one | u | u2 | sin");
  sweep->add_option("--T", a.T, "Horizons")->expected(1, -1);
  sweep->add_option("--quad-step", a.quad_step, "Midpoint step for smooth f");
  sweep->add_option("--config", a.config, "Scenario whose modulator drives --f occupation");
  sweep->add_option("--regime", a.regime, "Regime label for --f occupation");
  sweep->add_option("--seed", a.seed, "Master seed");

  auto* rep = app.add_subcommand("report", "Re-emit files from a stored report.json");
  rep->add_option("--input", a.input, "report.json")->required();
  rep->add_option("--out", a.out, "Output directory; sweep CSV to stdout if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*run) return cmd_run(a);
    if (*val) return cmd_validate(a);
    if (*sweep) return cmd_sweep(a);
    if (*rep) return cmd_report(a);
  } catch (const fx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return numerical;
  } catch (const fx::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return ok;
}
