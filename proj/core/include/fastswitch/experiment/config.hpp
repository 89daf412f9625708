#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fastswitch/modulating.hpp"
#include "fastswitch/switching_jump.hpp"
#include "fastswitch/switching_sde.hpp"

namespace fastswitch::experiment {

/// Schema or consistency violation in a scenario file. The message starts
/// with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProcessKind { diffusion, jump };

struct DiffusionSpec {
  double x0 = 0.0;
  std::vector<Affine> drift;      // indexed by regime
  std::vector<Affine> diffusion;  // indexed by regime
  std::optional<double> c1;
  std::optional<double> c2;

  CoefficientSet coefficients() const;
  bool regime_dependent_diffusion() const;
};

struct JumpSpec {
  int first_state = 0;
  int last_state = 0;
  int x0 = 0;
  std::vector<int> offsets;
  std::vector<std::vector<double>> rates;  // [regime][offset index]

  IntensityFamily family() const;
};

enum class FluctuationIntegrand { x, one };

struct FluctuationOptions {
  Regime regime = 0;
  FluctuationIntegrand integrand = FluctuationIntegrand::x;
  std::size_t paths = 0;  // 0 = every path
};

inline const std::vector<std::string>& diffusion_statistics() {
  static const std::vector<std::string> names{"ks", "moment2", "mean",
                                              "fluctuation", "sup"};
  return names;
}

inline const std::vector<std::string>& jump_statistics() {
  static const std::vector<std::string> names{"tv", "poisson", "jumps"};
  return names;
}

struct ScenarioConfig {
  std::string name;
  ProcessKind process = ProcessKind::diffusion;
  ModulatorSpec modulator;
  std::optional<DiffusionSpec> diffusion;
  std::optional<JumpSpec> jump;
  std::vector<double> eps;
  double horizon = 1.0;
  double dt_max = 1e-3;
  std::size_t paths = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> statistics;
  FluctuationOptions fluctuation;
  std::string output = "out";
};

ScenarioConfig parse_config(const std::filesystem::path& file);
ScenarioConfig parse_config_text(std::string_view text);

/// Re-checks every cross-field invariant (eps ordering, path count, step
/// guard, statistics names). parse_config calls it; programmatic configs
/// should too.
void validate(const ScenarioConfig& config);

/// Normalized JSON rendering, used for --dry-run and for the config hash.
std::string canonical_json(const ScenarioConfig& config);

/// FNV-1a 64 of canonical_json with the output directory cleared, as 16 hex
/// digits.
std::string config_hash(const ScenarioConfig& config);

}  // namespace fastswitch::experiment
