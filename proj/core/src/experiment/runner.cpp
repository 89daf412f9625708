#include "fastswitch/experiment/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "fastswitch/averaging.hpp"
#include "fastswitch/errors.hpp"
#include "fastswitch/modulating.hpp"
#include "fastswitch/random.hpp"
#include "fastswitch/stats.hpp"
#include "fastswitch/switching_jump.hpp"
#include "fastswitch/switching_sde.hpp"

#ifndef FASTSWITCH_VERSION
#define FASTSWITCH_VERSION "unknown"
#endif

namespace fastswitch::experiment {
namespace {

std::string at_time(const char* stem, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s@%g", stem, t);
  return buf;
}

bool wants(const ScenarioConfig& c, const char* name) {
  return std::find(c.statistics.begin(), c.statistics.end(), name) !=
         c.statistics.end();
}

std::vector<double> column(const std::vector<double>& flat, std::size_t stride,
                           std::size_t offset) {
  std::vector<double> out;
  out.reserve(flat.size() / stride);
  for (std::size_t i = offset; i < flat.size(); i += stride) out.push_back(flat[i]);
  return out;
}

PathSample make_sample(bool baseline, double eps, std::size_t index,
                       const std::vector<double>& times,
                       const std::vector<double>& values,
                       const ModulatingPath* y, double horizon) {
  PathSample s;
  s.baseline = baseline;
  s.eps = eps;
  s.index = index;
  s.times = times;
  s.values = values;
  if (y) {
    s.y_initial = y->initial_state();
    const std::size_t n = y->jumps_up_to(horizon);
    for (std::size_t i = 0; i < n; ++i) {
      s.y_jump_times.push_back(y->jump_time(i));
      s.y_states.push_back(y->state_after_jump(i));
    }
  }
  return s;
}

struct Ensembles {
  // [eps index (baseline last)][path * panel + m]
  std::vector<std::vector<double>> panel;
  std::vector<std::vector<double>> sups;
  std::vector<std::vector<double>> fluct;
  std::vector<double> alt_panel;
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::vector<PathSample>> samples;  // [path]
};

void summarize_diffusion(const ScenarioConfig& c, const Ensembles& ens,
                          const std::vector<double>& panel, std::size_t k,
                          bool baseline, EnsembleSummary& out) {
  const std::size_t P = panel.size();
  const auto& flat = ens.panel[k];
  const auto& base = ens.panel.back();
  for (const auto& stat : c.statistics) {
    if (stat == "ks" && !baseline) {
      double worst = 0.0;
      for (std::size_t m = 0; m < P; ++m) {
        const double d = ks_two_sample(column(flat, P, m), column(base, P, m));
        worst = std::max(worst, d);
        out.statistics.push_back({at_time("ks", panel[m]), d, std::nullopt});
      }
      out.statistics.push_back({"ks_max", worst, std::nullopt});
      if (!ens.alt_panel.empty()) {
        out.statistics.push_back(
            {at_time("diag_ks_qv", panel.back()),
             ks_two_sample(column(flat, P, P - 1), column(ens.alt_panel, P, P - 1)),
             std::nullopt});
      }
    } else if (stat == "moment2") {
      Estimate best{-1.0, 0.0};
      for (std::size_t m = 0; m < P; ++m) {
        const Estimate e = empirical_moment(column(flat, P, m), 2.0);
        out.statistics.push_back({at_time("m2", panel[m]), e.value, e.std_error});
        if (e.value > best.value) best = e;
      }
      out.statistics.push_back({"m2_sup", best.value, best.std_error});
    } else if (stat == "mean") {
      const Estimate e = sample_mean(column(flat, P, P - 1));
      out.statistics.push_back({at_time("mean", panel.back()), e.value, e.std_error});
    } else if (stat == "fluctuation" && !baseline) {
      const auto& f = ens.fluct[k];
      const Estimate e = sample_mean(f);
      out.statistics.push_back({"fluct_median", quantile(f, 0.5), std::nullopt});
      out.statistics.push_back({"fluct_mean", e.value, e.std_error});
      out.statistics.push_back({"fluct_q90", quantile(f, 0.9), std::nullopt});
    } else if (stat == "sup") {
      const auto& s = ens.sups[k];
      const Estimate e = sample_mean(s);
      out.statistics.push_back({"sup_abs_mean", e.value, e.std_error});
      out.statistics.push_back({"sup_abs_q95", quantile(s, 0.95), std::nullopt});
    }
  }
}

void summarize_jump(const ScenarioConfig& c, const Ensembles& ens,
                     const std::vector<double>& panel,
                     const std::vector<std::vector<double>>& exact, double q_sup,
                     std::size_t k, EnsembleSummary& out) {
  const std::size_t P = panel.size();
  const auto& flat = ens.panel[k];
  const JumpSpec& j = *c.jump;
  for (const auto& stat : c.statistics) {
    if (stat == "tv") {
      double worst = 0.0;
      for (std::size_t m = 0; m < P; ++m) {
        const auto col = column(flat, P, m);
        std::vector<int> states(col.begin(), col.end());
        const auto emp = empirical_distribution(states, j.first_state, j.last_state);
        const double d = total_variation_finite(emp, exact[m]);
        worst = std::max(worst, d);
        out.statistics.push_back({at_time("tv", panel[m]), d, std::nullopt});
      }
      out.statistics.push_back({"tv_max", worst, std::nullopt});
    } else if (stat == "poisson") {
      const double rate = q_sup * c.horizon;
      double worst = -std::numeric_limits<double>::infinity();
      if (rate > 0.0) {
        for (const auto& row : tail_vs_poisson(ens.counts[k], rate)) {
          worst = std::max(worst, row.slack);
        }
      } else {
        worst = 0.0;
      }
      out.statistics.push_back({"poisson_max_slack", worst, std::nullopt});
      out.statistics.push_back({"poisson_rate", rate, std::nullopt});
    } else if (stat == "jumps") {
      std::vector<double> counts(ens.counts[k].begin(), ens.counts[k].end());
      const Estimate e = sample_mean(counts);
      out.statistics.push_back({"jump_mean", e.value, e.std_error});
    }
  }
}

template <class Fn>
void for_each_path(const ScenarioConfig& c, std::size_t workers, Fn&& fn) {
  parallel_for(c.paths, workers, [&](std::size_t p) {
    try {
      fn(p);
    } catch (const NumericalError& e) {
      throw NumericalError("scenario '" + c.name + "', path " + std::to_string(p) +
                               ": " + e.what(),
                           e.x(), e.regime(), e.time());
    }
  });
}

}  // namespace

std::vector<double> panel_times(double horizon) {
  return {0.25 * horizon, 0.5 * horizon, horizon};
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::mutex guard;
  std::size_t failed_at = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  std::atomic<std::size_t> stop_after{std::numeric_limits<std::size_t>::max()};

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || i > stop_after.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(guard);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
          stop_after.store(i);
        }
      }
    }
  };

  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

RunResult run_scenario(const ScenarioConfig& c, const RunOptions& options) {
  validate(c);
  const std::size_t N = c.paths;
  const std::size_t E = c.eps.size();
  const double T = c.horizon;
  const std::vector<double> panel = panel_times(T);
  const std::size_t P = panel.size();
  const double base_horizon = T / c.eps.back();
  const OccupationDistribution pi = stationary_occupation(c.modulator);
  const std::size_t keep =
      options.keep_path_samples ? std::min(options.sample_paths, N) : 0;

  Ensembles ens;
  ens.panel.assign(E + 1, std::vector<double>(N * P, 0.0));
  ens.samples.resize(keep);

  RunResult result;
  ConvergenceReport& report = result.report;
  report.scenario = c.name;
  report.seed = c.seed;
  report.config_hash = config_hash(c);
  report.code_version = FASTSWITCH_VERSION;
  report.horizon = T;
  report.paths = N;
  report.eps = c.eps;

  std::vector<std::vector<double>> exact;
  double q_sup = 0.0;

  if (c.process == ProcessKind::diffusion) {
    report.process = "diffusion";
    const DiffusionSpec& d = *c.diffusion;
    const CoefficientSet coeffs = d.coefficients();
    const AveragedCoefficients avg = averaged_coefficients(coeffs, pi);
    const bool with_alt = wants(c, "ks") && d.regime_dependent_diffusion();
    const AveragedCoefficients alt = quadratic_averaged_coefficients(coeffs, pi);
    const bool with_fluct = wants(c, "fluctuation");
    const std::size_t K =
        c.fluctuation.paths == 0 ? N : std::min(c.fluctuation.paths, N);
    const Regime fy = c.fluctuation.regime;
    const RegimeField integrand =
        c.fluctuation.integrand == FluctuationIntegrand::x
            ? RegimeField([](double x, Regime) { return x; })
            : RegimeField([](double, Regime) { return 1.0; });

    ens.sups.assign(E + 1, std::vector<double>(N, 0.0));
    if (with_fluct) ens.fluct.assign(E, std::vector<double>(K, 0.0));
    if (with_alt) ens.alt_panel.assign(N * P, 0.0);

    for_each_path(c, options.workers, [&](std::size_t p) {
      RandomStream mod_rng(c.seed, p, StreamRole::modulator);
      const ModulatingPath base_y = build_modulating_path(c.modulator, base_horizon, mod_rng);
      for (std::size_t k = 0; k < E; ++k) {
        const ModulatingPath y = time_compress(base_y, c.eps[k]);
        RandomStream wiener(c.seed, p, StreamRole::wiener);
        const SamplePath x = simulate_switching_path(coeffs, y, d.x0, T, c.dt_max, wiener);
        for (std::size_t m = 0; m < P; ++m) ens.panel[k][p * P + m] = x.value_at(panel[m]);
        ens.sups[k][p] = sup_abs(x, T);
        if (with_fluct && p < K) {
          ens.fluct[k][p] = fluctuation_functional(x, y, integrand, fy, pi, T).sup_value;
        }
        if (p < keep) {
          ens.samples[p].push_back(
              make_sample(false, c.eps[k], p, x.grid(), x.values(), &y, T));
        }
      }
      RandomStream base_rng(c.seed, p, StreamRole::baseline);
      const SamplePath xb = simulate_averaged_path(avg, d.x0, T, c.dt_max, base_rng);
      for (std::size_t m = 0; m < P; ++m) ens.panel[E][p * P + m] = xb.value_at(panel[m]);
      ens.sups[E][p] = sup_abs(xb, T);
      if (p < keep) {
        ens.samples[p].push_back(
            make_sample(true, 0.0, p, xb.grid(), xb.values(), nullptr, T));
      }
      if (with_alt) {
        RandomStream alt_rng(c.seed, p, StreamRole::baseline_alt);
        const SamplePath xa = simulate_averaged_path(alt, d.x0, T, c.dt_max, alt_rng);
        for (std::size_t m = 0; m < P; ++m) ens.alt_panel[p * P + m] = xa.value_at(panel[m]);
      }
    });

    for (std::size_t k = 0; k <= E; ++k) {
      EnsembleSummary s;
      s.scenario = c.name;
      if (k < E) s.eps = c.eps[k];
      s.sample_size = N;
      summarize_diffusion(c, ens, panel, k, k == E, s);
      (k < E ? report.sweep.emplace_back(std::move(s)) : report.baseline = std::move(s));
    }
  } else {
    report.process = "jump";
    const JumpSpec& j = *c.jump;
    const IntensityFamily family = j.family();
    const AveragedGenerator qhat = averaged_intensity(family, pi);
    q_sup = family.q_sup();
    for (double t : panel) exact.push_back(marginal_via_matrix_exponential(qhat, j.x0, t));
    ens.counts.assign(E + 1, std::vector<std::size_t>(N, 0));

    for_each_path(c, options.workers, [&](std::size_t p) {
      RandomStream mod_rng(c.seed, p, StreamRole::modulator);
      const ModulatingPath base_y = build_modulating_path(c.modulator, base_horizon, mod_rng);
      auto record = [&](std::size_t k, const JumpPath& chain) {
        for (std::size_t m = 0; m < P; ++m) {
          ens.panel[k][p * P + m] = static_cast<double>(chain.state_at(panel[m]));
        }
        ens.counts[k][p] = jump_count(chain, T);
      };
      auto sample = [&](bool baseline, double eps, const JumpPath& chain,
                        const ModulatingPath* y) {
        std::vector<double> times{0.0};
        std::vector<double> values{static_cast<double>(chain.initial_state)};
        for (std::size_t i = 0; i < chain.times.size(); ++i) {
          times.push_back(chain.times[i]);
          values.push_back(static_cast<double>(chain.states[i]));
        }
        ens.samples[p].push_back(make_sample(baseline, eps, p, times, values, y, T));
      };
      for (std::size_t k = 0; k < E; ++k) {
        const ModulatingPath y = time_compress(base_y, c.eps[k]);
        RandomStream clock(c.seed, p, StreamRole::chain);
        RandomStream thinning(c.seed, p, StreamRole::thinning);
        const JumpPath chain = simulate_switching_chain(family, y, j.x0, T, clock, thinning);
        record(k, chain);
        if (p < keep) sample(false, c.eps[k], chain, &y);
      }
      RandomStream base_rng(c.seed, p, StreamRole::baseline);
      const JumpPath chain = simulate_averaged_chain(qhat, j.x0, T, base_rng);
      record(E, chain);
      if (p < keep) sample(true, 0.0, chain, nullptr);
    });

    for (std::size_t k = 0; k <= E; ++k) {
      EnsembleSummary s;
      s.scenario = c.name;
      if (k < E) s.eps = c.eps[k];
      s.sample_size = N;
      summarize_jump(c, ens, panel, exact, q_sup, k, s);
      (k < E ? report.sweep.emplace_back(std::move(s)) : report.baseline = std::move(s));
    }
    result.jump_counts = std::move(ens.counts);
  }

  for (std::size_t k = 0; k <= E; ++k) result.terminal_values.push_back(column(ens.panel[k], P, P - 1));
  for (auto& per_path : ens.samples)
    for (auto& s : per_path) result.samples.push_back(std::move(s));
  return result;
}

}  // namespace fastswitch::experiment
