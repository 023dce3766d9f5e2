#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dca/confidence.hpp"

namespace dca {

// Calibration-error summary in percentage points.
struct EpsilonStats {
  std::size_t n = 0;
  double mean_eps = 0.0;
  double sigma_eps = 0.0;     // sample standard deviation (n - 1)
  double mean_abs_eps = 0.0;
  double sem = 0.0;           // sigma_eps / sqrt(n)
};

struct RankCorrelation {
  double rho = 0.0;
  double p_value = 1.0;
};

// One (model, dataset) cell of the alignment report.
struct AlignmentRow {
  std::string model;
  std::string dataset;
  double rho = 0.0;
  double p_value = 1.0;
  EpsilonStats stats;
  double accuracy = 0.0;
  double failure_rate = 0.0;
};

// eps_k = c_v - c_i for every ok record, in input order. Non-ok records are
// skipped. Throws EmptyInput when no ok record remains.
std::vector<double> calibration_errors(const std::vector<ConfidenceRecord>& records);

// Ranks starting at 1; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman's rank correlation: Pearson correlation of average ranks, with a
// two-sided p-value from the t distribution with n - 2 degrees of freedom.
// Throws LengthMismatch, TooFewPoints (n < 3), DegenerateSeries.
RankCorrelation spearman_rho(std::span<const double> xs, std::span<const double> ys);

// Two-sided permutation p-value for rho: the fraction of seeded shuffles of
// ys whose |rho| reaches the observed |rho|, with the +1 correction.
double spearman_permutation_p(std::span<const double> xs, std::span<const double> ys,
                              std::size_t shuffles, std::uint64_t seed);

// Throws TooFewPoints when fewer than two values are given.
EpsilonStats epsilon_stats(std::span<const double> eps);

// Fraction of ok records that are correct. Throws EmptyInput when there are
// no ok records.
double accuracy(const std::vector<ConfidenceRecord>& records);

struct AlignmentOptions {
  bool permutation_p = false;
  std::size_t permutation_shuffles = 10000;
  std::uint64_t permutation_seed = 0;
};

// Computes every field of one report row from a cell's records.
AlignmentRow alignment_row(const std::string& model, const std::string& dataset,
                           const std::vector<ConfidenceRecord>& records,
                           const AlignmentOptions& options = {});

}  // namespace dca
