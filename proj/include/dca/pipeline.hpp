#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dca/mcq_data.hpp"
#include "dca/metrics.hpp"
#include "dca/mock_backend.hpp"
#include "dca/preference.hpp"
#include "dca/remote_backend.hpp"

namespace dca {

struct BackendSettings {
  enum class Kind { kMock, kRemote };
  Kind kind = Kind::kMock;
  RemoteConfig remote;
  ConfidenceProfile profile;
  std::size_t parallelism = 8;
  std::size_t max_new_tokens = 24;
  double temperature = 0.0;
  std::size_t top_logprobs = 20;
};

struct RunConfig {
  BackendSettings backend;
  DatasetSpec dataset;
  std::filesystem::path output_dir;
  double failure_threshold = 0.05;
  bool renormalize = false;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

// Builds a RunConfig from a JSON config tree, then applies environment
// overrides: DCA_ENDPOINT_URL, DCA_MODEL, DCA_API_KEY, DCA_TIMEOUT_SECONDS,
// DCA_RETRY_CAP, DCA_PARALLELISM. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& tree, const EnvLookup& env);
RunConfig load_run_config(const std::filesystem::path& path, const EnvLookup& env);

ConfidenceProfile profile_from_json(const nlohmann::json& tree);

// Output file names inside the run directory.
inline constexpr const char* kRecordsFile = "records.jsonl";
inline constexpr const char* kResponsesFile = "responses.jsonl";

struct GenerateSummary {
  std::size_t questions = 0;
  std::size_t ok = 0;
  double failure_rate = 0.0;
  bool failure_warning = false;
  std::size_t multiple_probability_markers = 0;
  std::filesystem::path records_path;
  std::filesystem::path responses_path;
};

// Renders prompts, runs the batch, extracts both confidences and writes the
// records and raw-responses files. Throws BackendUnavailable, writing
// nothing, when every request failed at the backend.
GenerateSummary cmd_generate(const RunConfig& config, std::ostream& log);

// Same as cmd_generate over an explicit question list and backend.
GenerateSummary run_generation(const std::vector<Question>& questions,
                               const Backend& backend, const RunConfig& config,
                               std::ostream& log);

struct BuildPrefsOptions {
  bool correct_only = false;
};

// Joins records with raw responses by question id and writes the preference
// file. Prints pair and skip counts.
PairStats cmd_build_prefs(const std::filesystem::path& records_path,
                          const std::filesystem::path& responses_path,
                          const std::filesystem::path& out_path,
                          const BuildPrefsOptions& options, std::ostream& log);

struct CellSpec {
  std::string model;
  std::string dataset;
  std::filesystem::path records_path;
};

// Parses "MODEL:DATASET:PATH"; PATH may itself contain ':'.
CellSpec parse_cell_spec(const std::string& text);

struct EvaluateSummary {
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
  std::filesystem::path markdown_path;
  std::filesystem::path csv_path;
};

// Evaluates each cell independently, then writes report.md, report.csv and
// plots/<model>__<dataset>/*.csv under out_dir.
EvaluateSummary cmd_evaluate(const std::vector<CellSpec>& cells,
                             const std::filesystem::path& out_dir,
                             const AlignmentOptions& options, std::ostream& log);

struct SimulateOptions {
  std::size_t questions = 200;
  std::size_t subjects = 0;
  std::size_t choices = 4;
  std::uint64_t question_seed = 1;
};

// Mock-backend driver. Uses config.dataset when its path is set, otherwise
// synthesizes questions and writes them to <out_dir>/questions.jsonl.
GenerateSummary cmd_simulate(const RunConfig& config, const SimulateOptions& options,
                             std::ostream& log);

}  // namespace dca
