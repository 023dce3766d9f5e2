#include "dca/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "dca/errors.hpp"
#include "dca/io.hpp"

namespace dca {

namespace {

constexpr double kBinWidth = 5.0;

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Full-precision decimal that reads back to the same double.
std::string exact(double v) { return fmt::format("{}", v); }

template <typename T>
std::vector<std::string> first_seen(const std::vector<CellResult>& cells, T key) {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    const std::string& k = key(c);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

}  // namespace

Histogram::Histogram(double lo_, double hi, double width_) : lo(lo_), width(width_) {
  counts.assign(static_cast<std::size_t>(std::llround((hi - lo_) / width_)), 0);
}

void Histogram::add(double value) {
  const double pos = std::floor((value - lo) / width);
  const auto last = static_cast<double>(counts.size() - 1);
  const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, last));
  ++counts[idx];
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram epsilon_histogram(const std::vector<double>& eps) {
  Histogram h(-100.0, 100.0, kBinWidth);
  for (double e : eps) h.add(e);
  return h;
}

Histogram confidence_histogram(const std::vector<double>& percents) {
  Histogram h(0.0, 100.0, kBinWidth);
  for (double p : percents) h.add(p);
  return h;
}

std::vector<AlignmentRow> model_means(const std::vector<CellResult>& cells) {
  std::vector<AlignmentRow> out;
  for (const auto& model : first_seen(cells, [](const CellResult& c) -> const std::string& {
         return c.model;
       })) {
    AlignmentRow mean;
    mean.model = model;
    mean.dataset = "Mean";
    mean.p_value = std::nan("");
    std::size_t k = 0;
    for (const auto& c : cells) {
      if (c.model != model || !c.row) continue;
      const AlignmentRow& r = *c.row;
      mean.rho += r.rho;
      mean.stats.mean_eps += r.stats.mean_eps;
      mean.stats.sigma_eps += r.stats.sigma_eps;
      mean.stats.mean_abs_eps += r.stats.mean_abs_eps;
      mean.stats.sem += r.stats.sem;
      mean.accuracy += r.accuracy;
      mean.failure_rate += r.failure_rate;
      ++k;
    }
    if (k == 0) continue;
    const double d = static_cast<double>(k);
    mean.rho /= d;
    mean.stats.mean_eps /= d;
    mean.stats.sigma_eps /= d;
    mean.stats.mean_abs_eps /= d;
    mean.stats.sem /= d;
    mean.accuracy /= d;
    mean.failure_rate /= d;
    out.push_back(mean);
  }
  return out;
}

std::string format_metric(double v) { return fmt::format("{:.2f}", v); }

std::string format_p_value(double p) { return fmt::format("{:.1e}", p); }

std::string render_markdown(const std::vector<CellResult>& cells) {
  const auto models = first_seen(cells, [](const CellResult& c) -> const std::string& {
    return c.model;
  });
  const auto datasets = first_seen(cells, [](const CellResult& c) -> const std::string& {
    return c.dataset;
  });
  const auto means = model_means(cells);

  std::string md = "# Confidence alignment report\n\n";
  md += "## Alignment\n\n";
  md += "ρ ↑, σ_ε ↓, mean|ε| ↓, σ_M ↓. Mean is the unweighted mean over datasets.\n\n";

  std::vector<std::string> groups = datasets;
  groups.push_back("Mean");
  md += "| Model |";
  for (const auto& g : groups) {
    const auto name = md_escape(g);
    md += fmt::format(" {0} ρ | {0} σ_ε | {0} mean\\|ε\\| | {0} σ_M |", name);
  }
  md += "\n|---|";
  for (std::size_t i = 0; i < groups.size(); ++i) md += "---:|---:|---:|---:|";
  md += '\n';

  auto group_cells = [](const AlignmentRow* r) {
    if (r == nullptr) return std::string(" – | – | – | – |");
    return fmt::format(" {} | {} | {} | {} |", format_metric(r->rho),
                       format_metric(r->stats.sigma_eps),
                       format_metric(r->stats.mean_abs_eps), format_metric(r->stats.sem));
  };
  for (const auto& model : models) {
    md += "| " + md_escape(model) + " |";
    for (const auto& ds : datasets) {
      const AlignmentRow* row = nullptr;
      for (const auto& c : cells) {
        if (c.model == model && c.dataset == ds && c.row) row = &*c.row;
      }
      md += group_cells(row);
    }
    const AlignmentRow* mean = nullptr;
    for (const auto& m : means) {
      if (m.model == model) mean = &m;
    }
    md += group_cells(mean);
    md += '\n';
  }

  md += "\n## Detail\n\n";
  md += "| Model | Dataset | n | ρ | p | mean ε | σ_ε | mean\\|ε\\| | σ_M | Accuracy | "
        "Failure rate |\n";
  md += "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  auto detail = [](const AlignmentRow& r, bool is_mean) {
    return fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                       md_escape(r.model), md_escape(r.dataset),
                       is_mean ? std::string() : std::to_string(r.stats.n),
                       format_metric(r.rho), is_mean ? std::string() : format_p_value(r.p_value),
                       format_metric(r.stats.mean_eps), format_metric(r.stats.sigma_eps),
                       format_metric(r.stats.mean_abs_eps), format_metric(r.stats.sem),
                       format_metric(r.accuracy), format_metric(r.failure_rate));
  };
  for (const auto& model : models) {
    for (const auto& c : cells) {
      if (c.model == model && c.row) md += detail(*c.row, false);
    }
    for (const auto& m : means) {
      if (m.model == model) md += detail(m, true);
    }
  }

  bool any_error = false;
  for (const auto& c : cells) {
    if (c.row) continue;
    if (!any_error) md += "\n## Cells without results\n\n";
    any_error = true;
    md += fmt::format("- {} / {}: {}\n", md_escape(c.model), md_escape(c.dataset), c.error);
  }
  return md;
}

std::string render_csv(const std::vector<CellResult>& cells) {
  std::string csv =
      "model,dataset,n,rho,p_value,mean_eps,sigma_eps,mean_abs_eps,sigma_m,accuracy,"
      "failure_rate,error\n";
  auto line = [](const AlignmentRow& r, bool is_mean) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{},\n", csv_field(r.model),
                       csv_field(r.dataset), is_mean ? std::string() : std::to_string(r.stats.n),
                       exact(r.rho), is_mean ? std::string() : exact(r.p_value),
                       exact(r.stats.mean_eps), exact(r.stats.sigma_eps),
                       exact(r.stats.mean_abs_eps), exact(r.stats.sem), exact(r.accuracy),
                       exact(r.failure_rate));
  };
  const auto means = model_means(cells);
  for (const auto& model : first_seen(cells, [](const CellResult& c) -> const std::string& {
         return c.model;
       })) {
    for (const auto& c : cells) {
      if (c.model != model) continue;
      if (c.row) {
        csv += line(*c.row, false);
      } else {
        csv += fmt::format("{},{},,,,,,,,,,{}\n", csv_field(c.model), csv_field(c.dataset),
                           csv_field(c.error));
      }
    }
    for (const auto& m : means) {
      if (m.model == model) csv += line(m, true);
    }
  }
  return csv;
}

std::string cell_slug(const std::string& model, const std::string& dataset) {
  auto clean = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
      out += keep ? c : '_';
    }
    return out.empty() ? std::string("_") : out;
  };
  return clean(model) + "__" + clean(dataset);
}

void write_plot_data(const CellResult& cell, const std::filesystem::path& dir) {
  std::vector<double> cv, ci, eps;
  std::string scatter = "question_id,c_v,c_i\n";
  for (const auto& r : cell.records) {
    if (!r.ok()) continue;
    cv.push_back(*r.c_v);
    ci.push_back(*r.c_i);
    eps.push_back(*r.c_v - *r.c_i);
    scatter += fmt::format("{},{},{}\n", csv_field(r.question_id), exact(*r.c_v), exact(*r.c_i));
  }
  write_file_atomic(dir / "scatter.csv", scatter);

  const auto eh = epsilon_histogram(eps);
  std::string eps_csv = "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < eh.counts.size(); ++i) {
    eps_csv += fmt::format("{},{},{}\n", eh.bin_lo(i), eh.bin_hi(i), eh.counts[i]);
  }
  write_file_atomic(dir / "epsilon_histogram.csv", eps_csv);

  const auto hv = confidence_histogram(cv);
  const auto hi = confidence_histogram(ci);
  std::string conf_csv = "bin_lo,bin_hi,c_v_count,c_i_count\n";
  for (std::size_t i = 0; i < hv.counts.size(); ++i) {
    conf_csv +=
        fmt::format("{},{},{},{}\n", hv.bin_lo(i), hv.bin_hi(i), hv.counts[i], hi.counts[i]);
  }
  write_file_atomic(dir / "confidence_histogram.csv", conf_csv);
}

}  // namespace dca
