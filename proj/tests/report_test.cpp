#include "dca/report.hpp"

#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "dca/io.hpp"
#include "dca/rng.hpp"
#include "test_util.hpp"

namespace dca {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<ConfidenceRecord> random_records(Rng& rng, std::size_t n) {
  std::vector<ConfidenceRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    ConfidenceRecord r;
    r.question_id = fmt::format("q{}", i);
    if (rng.below(20) == 0) {
      r.status = RecordStatus::kParseFailed;
    } else {
      r.predicted_label = 'A';
      r.c_i = 100.0 * rng.open01();
      r.c_v = std::clamp(*r.c_i + 30.0 * (rng.open01() - 0.3), 0.0, 100.0);
      r.correct = rng.below(3) != 0;
    }
    recs.push_back(r);
  }
  return recs;
}

CellResult cell(const std::string& model, const std::string& dataset,
                std::vector<ConfidenceRecord> recs) {
  CellResult c{model, dataset, alignment_row(model, dataset, recs), "", recs};
  return c;
}

TEST(Histogram, EdgesAndClamping) {
  const auto h = epsilon_histogram({-100.0, -95.0, -0.0001, 0.0, 4.999, 5.0, 99.9, 100.0});
  ASSERT_EQ(h.counts.size(), 40u);
  EXPECT_EQ(h.bin_lo(0), -100.0);
  EXPECT_EQ(h.bin_hi(39), 100.0);
  EXPECT_EQ(h.counts[0], 1u);
  EXPECT_EQ(h.counts[1], 1u);
  EXPECT_EQ(h.counts[19], 1u);
  EXPECT_EQ(h.counts[20], 2u);
  EXPECT_EQ(h.counts[21], 1u);
  EXPECT_EQ(h.counts[39], 2u);
  EXPECT_EQ(h.total(), 8u);

  const auto c = confidence_histogram({0.0, 2.5, 50.0, 100.0});
  ASSERT_EQ(c.counts.size(), 20u);
  EXPECT_EQ(c.counts[0], 2u);
  EXPECT_EQ(c.counts[10], 1u);
  EXPECT_EQ(c.counts[19], 1u);
}

TEST(Histogram, PropertyCountsSumToInputSize) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> eps(rng.below(300));
    for (auto& e : eps) e = -100.0 + 200.0 * rng.open01();
    EXPECT_EQ(epsilon_histogram(eps).total(), eps.size());
  }
}

TEST(Report, AllZeroEpsilonCell) {
  std::vector<ConfidenceRecord> recs;
  for (int i = 0; i < 30; ++i) {
    recs.push_back({fmt::format("q{}", i), 'A', 10.0 + i, 10.0 + i, true, RecordStatus::kOk});
  }
  const auto c = cell("m", "d", recs);
  EXPECT_EQ(c.row->stats.mean_abs_eps, 0.0);
  EXPECT_DOUBLE_EQ(c.row->rho, 1.0);

  testing::TempDir dir;
  write_plot_data(c, dir.path());
  const auto eps_lines = lines_of(read_file(dir / "epsilon_histogram.csv"));
  ASSERT_EQ(eps_lines.size(), 41u);
  EXPECT_EQ(eps_lines[0], "bin_lo,bin_hi,count");
  for (std::size_t i = 1; i < eps_lines.size(); ++i) {
    EXPECT_EQ(split(eps_lines[i], ',')[2], i == 21 ? "30" : "0") << eps_lines[i];
  }
  EXPECT_EQ(eps_lines[21], "0,5,30");
}

TEST(Report, TwoModelsTwoDatasetsGiveFourRowsAndTwoMeans) {
  Rng rng(3);
  std::vector<CellResult> cells = {cell("m1", "d1", random_records(rng, 50)),
                                   cell("m1", "d2", random_records(rng, 60)),
                                   cell("m2", "d1", random_records(rng, 70)),
                                   cell("m2", "d2", random_records(rng, 80))};
  const auto csv = lines_of(render_csv(cells));
  ASSERT_EQ(csv.size(), 7u);
  EXPECT_EQ(csv[0],
            "model,dataset,n,rho,p_value,mean_eps,sigma_eps,mean_abs_eps,sigma_m,accuracy,"
            "failure_rate,error");
  EXPECT_EQ(split(csv[3], ',')[1], "Mean");
  EXPECT_EQ(split(csv[6], ',')[1], "Mean");
  EXPECT_EQ(model_means(cells).size(), 2u);

  const auto means = model_means(cells);
  EXPECT_DOUBLE_EQ(means[0].stats.sigma_eps,
                   (cells[0].row->stats.sigma_eps + cells[1].row->stats.sigma_eps) / 2.0);
  EXPECT_DOUBLE_EQ(means[1].rho, (cells[2].row->rho + cells[3].row->rho) / 2.0);
}

TEST(Report, CsvAndMarkdownAgreeAtTwoDecimals) {
  Rng rng(17);
  std::vector<CellResult> cells;
  for (const char* m : {"alpha", "beta", "gamma"}) {
    for (const char* d : {"x", "y"}) cells.push_back(cell(m, d, random_records(rng, 40)));
  }
  const auto csv = lines_of(render_csv(cells));
  const auto md = lines_of(render_markdown(cells));
  std::vector<std::vector<std::string>> detail;
  bool in_detail = false;
  for (const auto& l : md) {
    if (l == "## Detail") in_detail = true;
    if (in_detail && l.rfind("| ", 0) == 0 && l.find("Model") == std::string::npos) {
      auto f = split(l, '|');
      std::vector<std::string> cols;
      for (std::size_t i = 1; i + 1 < f.size(); ++i) cols.push_back(trim(f[i]));
      detail.push_back(cols);
    }
  }
  ASSERT_EQ(detail.size(), csv.size() - 1);
  for (std::size_t r = 0; r < detail.size(); ++r) {
    const auto c = split(csv[r + 1], ',');
    EXPECT_EQ(detail[r][0], c[0]);
    EXPECT_EQ(detail[r][1], c[1]);
    EXPECT_EQ(detail[r][2], c[2]);
    // rho, mean eps, sigma, mean|eps|, sigma_M, accuracy, failure rate.
    const std::pair<int, int> pairs[] = {{3, 3}, {5, 5}, {6, 6}, {7, 7}, {8, 8}, {9, 9}, {10, 10}};
    for (auto [mdi, csvi] : pairs) {
      EXPECT_EQ(detail[r][mdi], format_metric(std::stod(c[csvi]))) << csv[r + 1];
    }
    if (!c[4].empty()) EXPECT_EQ(detail[r][4], format_p_value(std::stod(c[4])));
  }
}

TEST(Report, FormattingGolden) {
  AlignmentRow row;
  row.model = "Gemma-2-9B";
  row.dataset = "OpenBookQA";
  row.rho = 0.3241;
  row.p_value = 1.3e-12;
  row.stats = {500, -4.1, 19.4317, 9.8562, 0.8690};
  row.accuracy = 0.862;
  row.failure_rate = 0.004;
  const CellResult c{row.model, row.dataset, row, "", {}};
  const auto md = render_markdown({c});
  EXPECT_NE(md.find("| Gemma-2-9B | 0.32 | 19.43 | 9.86 | 0.87 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| Gemma-2-9B | OpenBookQA | 500 | 0.32 | 1.3e-12 | -4.10 | 19.43 | 9.86 | "
                    "0.87 | 0.86 | 0.00 |"),
            std::string::npos)
      << md;
}

TEST(Report, FailedCellListedAndOthersKept) {
  Rng rng(2);
  std::vector<CellResult> cells = {cell("m", "good", random_records(rng, 30))};
  cells.push_back({"m", "bad", std::nullopt, "no ok records", {}});
  const auto md = render_markdown(cells);
  EXPECT_NE(md.find("## Cells without results"), std::string::npos);
  EXPECT_NE(md.find("- m / bad: no ok records"), std::string::npos);
  EXPECT_NE(md.find(" – | – | – | – |"), std::string::npos);
  const auto csv = lines_of(render_csv(cells));
  ASSERT_EQ(csv.size(), 4u);
  EXPECT_EQ(csv[2], "m,bad,,,,,,,,,,no ok records");
}

TEST(Report, PlotDataSumsToOkRecords) {
  Rng rng(8);
  const auto c = cell("m", "d", random_records(rng, 500));
  std::size_t ok = 0;
  for (const auto& r : c.records) ok += r.ok();
  testing::TempDir dir;
  write_plot_data(c, dir.path());
  auto sum_column = [&](const std::string& file, std::size_t col) {
    std::size_t total = 0;
    const auto ls = lines_of(read_file(dir / file));
    for (std::size_t i = 1; i < ls.size(); ++i) total += std::stoul(split(ls[i], ',')[col]);
    return total;
  };
  EXPECT_EQ(sum_column("epsilon_histogram.csv", 2), ok);
  EXPECT_EQ(sum_column("confidence_histogram.csv", 2), ok);
  EXPECT_EQ(sum_column("confidence_histogram.csv", 3), ok);
  EXPECT_EQ(lines_of(read_file(dir / "scatter.csv")).size(), ok + 1);
}

TEST(CellSlug, SafeNames) {
  EXPECT_EQ(cell_slug("Gemma-2-9B", "MMLU"), "Gemma-2-9B__MMLU");
  EXPECT_EQ(cell_slug("org/model v1", ""), "org_model_v1___");
}

}  // namespace
}  // namespace dca
