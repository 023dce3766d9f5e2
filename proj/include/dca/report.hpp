#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dca/confidence.hpp"
#include "dca/metrics.hpp"

namespace dca {

// Fixed-width bins over [lo, hi); the last bin also holds hi.
struct Histogram {
  double lo = 0.0;
  double width = 5.0;
  std::vector<std::size_t> counts;

  Histogram(double lo, double hi, double width);

  void add(double value);
  double bin_lo(std::size_t i) const { return lo + width * static_cast<double>(i); }
  double bin_hi(std::size_t i) const { return bin_lo(i + 1); }
  std::size_t total() const;
};

// 40 five-point bins over [-100, 100].
Histogram epsilon_histogram(const std::vector<double>& eps);
// 20 five-point bins over [0, 100].
Histogram confidence_histogram(const std::vector<double>& percents);

struct CellResult {
  std::string model;
  std::string dataset;
  std::optional<AlignmentRow> row;
  std::string error;  // set when row is empty
  std::vector<ConfidenceRecord> records;
};

// Unweighted per-model means over the model's successful cells. p_value is
// not averaged and n is left at zero.
std::vector<AlignmentRow> model_means(const std::vector<CellResult>& cells);

// Formatting shared by the Markdown and CSV renderers.
std::string format_metric(double v);   // 2 decimals
std::string format_p_value(double p);  // 2 significant digits, scientific

// Wide alignment table (one row per model; a rho / sigma_eps / mean|eps| /
// sigma_M group per dataset followed by a Mean group), then a long detail
// table with p-values, accuracy, failure rate and per-model Mean rows.
std::string render_markdown(const std::vector<CellResult>& cells);

// Long-format rows: one per cell followed by one "Mean" row per model.
std::string render_csv(const std::vector<CellResult>& cells);

// Writes scatter.csv, epsilon_histogram.csv and confidence_histogram.csv for
// one cell under `dir`.
void write_plot_data(const CellResult& cell, const std::filesystem::path& dir);

// File-system-safe directory name for a cell.
std::string cell_slug(const std::string& model, const std::string& dataset);

}  // namespace dca
