#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fastswitch/modulating.hpp"
#include "fastswitch/stats.hpp"

namespace fastswitch::experiment {

/// Per-eps ensemble summaries of one scenario, plus the averaged-process
/// baseline. Every configured eps appears exactly once, in config order.
struct ConvergenceReport {
  std::string scenario;
  std::string process;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string code_version;
  double horizon = 0.0;
  std::size_t paths = 0;
  std::vector<double> eps;
  std::vector<EnsembleSummary> sweep;
  EnsembleSummary baseline;

  const EnsembleSummary& at(double eps) const;
  bool operator==(const ConvergenceReport&) const = default;
};

/// First few simulated trajectories of a run, for inspection. For jump
/// processes `values` holds the chain state.
struct PathSample {
  bool baseline = false;
  double eps = 0.0;
  std::size_t index = 0;
  std::vector<double> times;
  std::vector<double> values;
  Regime y_initial = 0;
  std::vector<double> y_jump_times;
  std::vector<Regime> y_states;
};

std::string to_json(const ConvergenceReport& report);
ConvergenceReport report_from_json(std::string_view text);

/// One JSON object per (scenario, eps, statistic).
std::string records_jsonl(const ConvergenceReport& report);

/// kind,epsilon,statistic,value,stderr. Baseline rows carry epsilon 0.
std::string sweep_csv(const ConvergenceReport& report);

/// Writes report.json, records.jsonl and sweep.csv into dir, plus
/// paths_sample.csv and modulator_sample.csv when samples are given.
void emit_report(const ConvergenceReport& report, const std::filesystem::path& dir,
                 const std::vector<PathSample>* samples = nullptr,
                 const std::vector<std::string>* regime_labels = nullptr);

ConvergenceReport load_report(const std::filesystem::path& file);

}  // namespace fastswitch::experiment
