#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fastswitch {

/// sup_x |F_a(x) - F_b(x)| over the pooled sample points.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// (1/2) sum |p_i - q_i|
double total_variation_finite(std::span<const double> p,
                              std::span<const double> q);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Mean of |x|^order with its jackknife standard error.
Estimate empirical_moment(std::span<const double> samples, double order);

Estimate sample_mean(std::span<const double> samples);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> samples, double p);

struct TailRow {
  std::size_t k;
  double empirical;  // P(n >= k)
  double poisson;    // P(N >= k), N ~ Poisson(rate)
  double slack;      // empirical - poisson - 3 SE
};

/// Compares empirical upper tails of counts against Poisson(rate), for k from
/// 0 through max(counts) + 1.
std::vector<TailRow> tail_vs_poisson(std::span<const std::size_t> counts,
                                     double rate);

/// Empirical distribution of integer states first..last.
std::vector<double> empirical_distribution(std::span<const int> states,
                                           int first, int last);

struct NamedStatistic {
  std::string name;
  double value = 0.0;
  std::optional<double> std_error;

  bool operator==(const NamedStatistic&) const = default;
};

/// Statistics of one ensemble: one switching run at a given eps, or the
/// averaged baseline (eps absent).
struct EnsembleSummary {
  std::string scenario;
  std::optional<double> eps;
  std::size_t sample_size = 0;
  std::vector<NamedStatistic> statistics;

  const NamedStatistic* find(const std::string& name) const;
  bool operator==(const EnsembleSummary&) const = default;
};

}  // namespace fastswitch
