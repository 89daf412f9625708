#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fastswitch/experiment/config.hpp"
#include "fastswitch/experiment/report.hpp"

namespace fastswitch::experiment {

struct RunOptions {
  std::size_t workers = 1;
  bool keep_path_samples = false;
  std::size_t sample_paths = 5;
};

struct RunResult {
  ConvergenceReport report;
  std::vector<PathSample> samples;
  /// Raw per-path statistics behind the report, indexed [eps][path]; the
  /// last entry is the baseline. Diffusion: X at the horizon. Jump: the
  /// chain state at the horizon.
  std::vector<std::vector<double>> terminal_values;
  /// Jump processes only: n_T per path, same indexing.
  std::vector<std::vector<std::size_t>> jump_counts;
};

/// Runs the eps-sweep. For path index p the modulating path is drawn once on
/// [0, T / min(eps)] and compressed for every eps, so all eps share the same
/// Y realization; the Wiener (or chain) streams are keyed on p alone. The
/// baseline uses its own streams. Output is independent of the worker count.
RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options);

/// Calls fn(i) for i in [0, n) across `workers` threads. Rethrows the
/// exception from the lowest failing index.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

/// Statistic panel times T/4, T/2, T.
std::vector<double> panel_times(double horizon);

}  // namespace fastswitch::experiment
