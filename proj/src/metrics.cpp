#include "dca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "dca/errors.hpp"
#include "dca/rng.hpp"

namespace dca {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Pearson correlation; returns NaN when either series has zero variance.
double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nan("");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

void check_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw LengthMismatch("series lengths differ: " + std::to_string(xs.size()) +
                         " vs " + std::to_string(ys.size()));
  }
  if (xs.size() < 3) {
    throw TooFewPoints("rank correlation needs at least 3 points, got " +
                       std::to_string(xs.size()));
  }
}

double t_test_p(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t_distribution<double> dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))),
                    0.0, 1.0);
}

}  // namespace

std::vector<double> calibration_errors(const std::vector<ConfidenceRecord>& records) {
  std::vector<double> eps;
  eps.reserve(records.size());
  for (const auto& r : records) {
    if (!r.ok()) continue;
    eps.push_back(*r.c_v - *r.c_i);
  }
  if (eps.empty()) throw EmptyInput("no ok records for calibration error");
  return eps;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean of (i+1)..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

RankCorrelation spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double rho = pearson(rx, ry);
  if (std::isnan(rho)) throw DegenerateSeries("a series is constant");
  return {rho, t_test_p(rho, xs.size())};
}

double spearman_permutation_p(std::span<const double> xs, std::span<const double> ys,
                              std::size_t shuffles, std::uint64_t seed) {
  check_pair(xs, ys);
  if (shuffles == 0) throw ConfigError("permutation test needs at least one shuffle");
  const auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  const double observed = pearson(rx, ry);
  if (std::isnan(observed)) throw DegenerateSeries("a series is constant");

  // Rank vectors are shuffled directly; ranks of a permutation are the
  // permuted ranks.
  Rng rng(seed);
  std::size_t extreme = 0;
  const double threshold = std::abs(observed) - 1e-12;
  for (std::size_t s = 0; s < shuffles; ++s) {
    for (std::size_t i = ry.size() - 1; i > 0; --i) {
      std::swap(ry[i], ry[rng.below(i + 1)]);
    }
    if (std::abs(pearson(rx, ry)) >= threshold) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(shuffles + 1);
}

EpsilonStats epsilon_stats(std::span<const double> eps) {
  if (eps.size() < 2) {
    throw TooFewPoints("epsilon statistics need at least 2 values, got " +
                       std::to_string(eps.size()));
  }
  EpsilonStats s;
  s.n = eps.size();
  const double n = static_cast<double>(s.n);
  s.mean_eps = mean_of(eps);
  double ss = 0.0;
  double abs_sum = 0.0;
  for (double e : eps) {
    const double d = e - s.mean_eps;
    ss += d * d;
    abs_sum += std::abs(e);
  }
  s.sigma_eps = std::sqrt(ss / (n - 1.0));
  s.mean_abs_eps = abs_sum / n;
  s.sem = s.sigma_eps / std::sqrt(n);
  return s;
}

double accuracy(const std::vector<ConfidenceRecord>& records) {
  std::size_t ok = 0;
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    ++ok;
    if (*r.correct) ++correct;
  }
  if (ok == 0) throw EmptyInput("no ok records for accuracy");
  return static_cast<double>(correct) / static_cast<double>(ok);
}

AlignmentRow alignment_row(const std::string& model, const std::string& dataset,
                           const std::vector<ConfidenceRecord>& records,
                           const AlignmentOptions& options) {
  AlignmentRow row;
  row.model = model;
  row.dataset = dataset;
  row.failure_rate = extraction_failure_rate(records);

  std::vector<double> cv, ci;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    cv.push_back(*r.c_v);
    ci.push_back(*r.c_i);
  }
  const auto eps = calibration_errors(records);
  row.stats = epsilon_stats(eps);
  const auto corr = spearman_rho(cv, ci);
  row.rho = corr.rho;
  row.p_value = options.permutation_p
                    ? spearman_permutation_p(cv, ci, options.permutation_shuffles,
                                             options.permutation_seed)
                    : corr.p_value;
  row.accuracy = accuracy(records);
  return row;
}

}  // namespace dca
