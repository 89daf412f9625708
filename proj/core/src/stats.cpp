#include "fastswitch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/poisson.hpp>

namespace fastswitch {

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_two_sample: empty sample");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < sa.size() || j < sb.size()) {
    // Advance past every copy of the next pooled value so ties are handled
    // by evaluating both ECDFs after the full step.
    double x;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      x = sa[i];
    } else {
      x = sb[j];
    }
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    // i/na - j/nb over a common denominator; the numerator is exact.
    best = std::max(best, std::abs(static_cast<double>(i) * nb -
                                   static_cast<double>(j) * na));
  }
  return best / (na * nb);
}

double total_variation_finite(std::span<const double> p,
                              std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    throw std::invalid_argument("total_variation_finite: support mismatch");
  }
  double sp = 0.0, sq = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
    acc += std::abs(p[i] - q[i]);
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "total_variation_finite: distributions must sum to one");
  }
  return 0.5 * acc;
}

Estimate sample_mean(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("sample_mean: empty input");
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / n;
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

Estimate empirical_moment(std::span<const double> samples, double order) {
  if (samples.empty()) {
    throw std::invalid_argument("empirical_moment: empty input");
  }
  if (!(order >= 1.0)) {
    throw std::invalid_argument("empirical_moment: order must be >= 1");
  }
  const std::size_t n = samples.size();
  std::vector<double> powered(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    powered[i] = std::pow(std::abs(samples[i]), order);
    total += powered[i];
  }
  const double nd = static_cast<double>(n);
  const double mean = total / nd;
  if (n < 2) return {mean, 0.0};
  // Jackknife over leave-one-out means.
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double loo = (total - powered[i]) / (nd - 1.0);
    ss += (loo - mean) * (loo - mean);
  }
  return {mean, std::sqrt((nd - 1.0) / nd * ss)};
}

double quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0,1]");
  std::sort(samples.begin(), samples.end());
  const double pos = p * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return samples[lo] + w * (samples[hi] - samples[lo]);
}

std::vector<TailRow> tail_vs_poisson(std::span<const std::size_t> counts,
                                     double rate) {
  if (counts.empty()) throw std::invalid_argument("tail_vs_poisson: empty counts");
  if (!(rate > 0.0)) throw std::invalid_argument("tail_vs_poisson: rate must be positive");
  const std::size_t max_count = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> histogram(max_count + 2, 0);
  for (std::size_t c : counts) ++histogram[c];

  const boost::math::poisson_distribution<double> poisson(rate);
  const double n = static_cast<double>(counts.size());
  std::vector<TailRow> rows;
  std::size_t at_least = counts.size();
  for (std::size_t k = 0; k <= max_count + 1; ++k) {
    const double emp = static_cast<double>(at_least) / n;
    const double pois =
        k == 0 ? 1.0
               : boost::math::cdf(boost::math::complement(
                     poisson, static_cast<double>(k - 1)));
    const double se = std::sqrt(emp * (1.0 - emp) / n);
    rows.push_back({k, emp, pois, emp - pois - 3.0 * se});
    at_least -= histogram[k];
  }
  return rows;
}

std::vector<double> empirical_distribution(std::span<const int> states,
                                           int first, int last) {
  if (states.empty() || last < first) {
    throw std::invalid_argument("empirical_distribution: empty input");
  }
  std::vector<double> out(static_cast<std::size_t>(last - first + 1), 0.0);
  for (int s : states) {
    if (s < first || s > last) {
      throw std::out_of_range("empirical_distribution: state outside range");
    }
    out[static_cast<std::size_t>(s - first)] += 1.0;
  }
  for (double& p : out) p /= static_cast<double>(states.size());
  return out;
}

const NamedStatistic* EnsembleSummary::find(const std::string& name) const {
  for (const auto& s : statistics)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace fastswitch
