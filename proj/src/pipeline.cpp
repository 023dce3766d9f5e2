#include "dca/pipeline.hpp"

#include <cstdlib>
#include <future>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dca/confidence.hpp"
#include "dca/errors.hpp"
#include "dca/io.hpp"
#include "dca/prompting.hpp"
#include "dca/report.hpp"

namespace dca {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
T parse_env_number(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
      out = static_cast<T>(std::stod(value, &used));
    } else {
      out = static_cast<T>(std::stoull(value, &used));
    }
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(name + " is not a valid number: '" + value + "'");
  }
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

ConfidenceProfile profile_from_json(const json& tree) {
  ConfidenceProfile p;
  if (!tree.is_object()) throw ConfigError("mock profile must be an object");
  read_opt(tree, "accuracy", p.accuracy);
  read_opt(tree, "verbal_bias", p.verbal_bias);
  read_opt(tree, "verbal_noise_sd", p.verbal_noise_sd);
  read_opt(tree, "seed", p.seed);
  read_opt(tree, "format_failure_rate", p.format_failure_rate);
  std::string mode = "vanilla";
  read_opt(tree, "verbal_mode", mode);
  if (mode == "vanilla") {
    p.verbal_mode = VerbalMode::kVanilla;
  } else if (mode == "aligned") {
    p.verbal_mode = VerbalMode::kAligned;
  } else {
    throw ConfigError("verbal_mode must be 'vanilla' or 'aligned'");
  }
  if (auto it = tree.find("internal_dist"); it != tree.end()) {
    std::string family = "beta";
    read_opt(*it, "family", family);
    if (family == "beta") {
      p.internal_dist.family = InternalDist::Family::kBeta;
    } else if (family == "uniform") {
      p.internal_dist.family = InternalDist::Family::kUniform;
      p.internal_dist.a = 0.0;
      p.internal_dist.b = 1.0;
    } else {
      throw ConfigError("internal_dist.family must be 'beta' or 'uniform'");
    }
    read_opt(*it, "a", p.internal_dist.a);
    read_opt(*it, "b", p.internal_dist.b);
  }
  validate_profile(p);
  return p;
}

RunConfig run_config_from_json(const json& tree, const EnvLookup& env) {
  if (!tree.is_object()) throw ConfigError("config root must be an object");
  RunConfig c;

  if (auto it = tree.find("backend"); it != tree.end()) {
    const json& b = *it;
    std::string type = "mock";
    read_opt(b, "type", type);
    if (type == "mock") {
      c.backend.kind = BackendSettings::Kind::kMock;
    } else if (type == "remote") {
      c.backend.kind = BackendSettings::Kind::kRemote;
    } else {
      throw ConfigError("backend.type must be 'mock' or 'remote'");
    }
    RemoteConfig& r = c.backend.remote;
    read_opt(b, "endpoint_url", r.endpoint_url);
    read_opt(b, "chat_path", r.chat_path);
    read_opt(b, "model", r.model);
    read_opt(b, "api_key", r.api_key);
    read_opt(b, "timeout_seconds", r.timeout_seconds);
    read_opt(b, "retry_cap", r.retry_cap);
    std::int64_t backoff_ms = r.backoff_initial.count();
    read_opt(b, "backoff_initial_ms", backoff_ms);
    r.backoff_initial = std::chrono::milliseconds(backoff_ms);
    read_opt(b, "parallelism", c.backend.parallelism);
    read_opt(b, "max_new_tokens", c.backend.max_new_tokens);
    read_opt(b, "temperature", c.backend.temperature);
    read_opt(b, "top_logprobs", c.backend.top_logprobs);
  }
  if (auto it = tree.find("mock"); it != tree.end()) {
    c.backend.profile = profile_from_json(*it);
  }
  if (auto it = tree.find("dataset"); it != tree.end()) {
    const json& d = *it;
    read_opt(d, "name", c.dataset.name);
    read_opt(d, "split", c.dataset.split);
    std::string path;
    read_opt(d, "path", path);
    c.dataset.path = path;
    if (d.contains("per_subject")) {
      SamplingSpec s;
      read_opt(d, "per_subject", s.per_subject);
      read_opt(d, "seed", s.seed);
      c.dataset.sampling = s;
    }
  }
  std::string out_dir;
  read_opt(tree, "output_dir", out_dir);
  c.output_dir = out_dir;
  read_opt(tree, "failure_threshold", c.failure_threshold);
  read_opt(tree, "renormalize", c.renormalize);

  RemoteConfig& r = c.backend.remote;
  if (auto v = env("DCA_ENDPOINT_URL")) r.endpoint_url = *v;
  if (auto v = env("DCA_MODEL")) r.model = *v;
  if (auto v = env("DCA_API_KEY")) r.api_key = *v;
  if (auto v = env("DCA_TIMEOUT_SECONDS")) {
    r.timeout_seconds = parse_env_number<double>("DCA_TIMEOUT_SECONDS", *v);
  }
  if (auto v = env("DCA_RETRY_CAP")) {
    r.retry_cap = parse_env_number<std::size_t>("DCA_RETRY_CAP", *v);
  }
  if (auto v = env("DCA_PARALLELISM")) {
    c.backend.parallelism = parse_env_number<std::size_t>("DCA_PARALLELISM", *v);
  }
  return c;
}

RunConfig load_run_config(const fs::path& path, const EnvLookup& env) {
  json tree;
  try {
    tree = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(tree, env);
}

GenerateSummary run_generation(const std::vector<Question>& questions,
                               const Backend& backend, const RunConfig& config,
                               std::ostream& log) {
  if (config.output_dir.empty()) throw ConfigError("output directory is not set");
  if (!(config.failure_threshold >= 0.0 && config.failure_threshold <= 1.0)) {
    throw ConfigError("failure threshold must be in [0, 1]");
  }
  if (questions.empty()) throw EmptyInput("dataset has no questions");

  std::vector<GenerationRequest> requests;
  requests.reserve(questions.size());
  for (const auto& q : questions) {
    GenerationRequest req;
    req.prompt = render_prompt(q);
    req.max_new_tokens = config.backend.max_new_tokens;
    req.temperature = config.backend.temperature;
    req.top_logprobs = config.backend.top_logprobs;
    validate_request(req);
    requests.push_back(std::move(req));
  }

  const auto outcomes = generate_batch(backend, requests, config.backend.parallelism);
  std::size_t backend_failures = 0;
  std::string first_error;
  for (const auto& o : outcomes) {
    if (o.ok()) continue;
    if (backend_failures++ == 0) first_error = o.error;
  }
  if (backend_failures == outcomes.size()) {
    throw BackendUnavailable("every request failed; first error: " + first_error);
  }

  ExtractionDiagnostics diag;
  const auto records =
      build_records(questions, outcomes, ExtractionOptions{config.renormalize}, &diag);

  std::vector<json> responses;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok()) continue;
    responses.push_back(json{{"question_id", outcomes[i].question_id},
                             {"prompt", requests[i].prompt.text},
                             {"response", outcomes[i].result->text}});
  }

  GenerateSummary s;
  s.questions = questions.size();
  s.records_path = config.output_dir / kRecordsFile;
  s.responses_path = config.output_dir / kResponsesFile;
  write_records(records, s.records_path);
  write_file_atomic(s.responses_path, to_jsonl(responses));

  s.failure_rate = extraction_failure_rate(records);
  s.multiple_probability_markers = diag.multiple_probability_markers;
  for (const auto& r : records) s.ok += r.ok() ? 1 : 0;
  fmt::print(log, "generated {} records ({} ok), extraction failure rate {:.2f}%\n",
             records.size(), s.ok, 100.0 * s.failure_rate);
  if (backend_failures > 0) {
    fmt::print(log, "{} requests failed at the backend; first error: {}\n",
               backend_failures, first_error);
  }
  if (diag.multiple_probability_markers > 0) {
    fmt::print(log, "{} responses had more than one 'Probability:' marker\n",
               diag.multiple_probability_markers);
  }
  if (s.failure_rate > config.failure_threshold) {
    s.failure_warning = true;
    fmt::print(log, "warning: extraction failure rate {:.2f}% exceeds threshold {:.2f}%\n",
               100.0 * s.failure_rate, 100.0 * config.failure_threshold);
  }
  return s;
}

GenerateSummary cmd_generate(const RunConfig& config, std::ostream& log) {
  const auto questions = load_dataset(config.dataset);
  if (config.backend.kind == BackendSettings::Kind::kMock) {
    const MockBackend backend(config.backend.profile, questions);
    return run_generation(questions, backend, config, log);
  }
  const RemoteBackend backend(config.backend.remote);
  return run_generation(questions, backend, config, log);
}

PairStats cmd_build_prefs(const fs::path& records_path, const fs::path& responses_path,
                          const fs::path& out_path, const BuildPrefsOptions& options,
                          std::ostream& log) {
  const auto records = read_records(records_path);

  struct Raw {
    std::string prompt;
    std::string response;
  };
  std::unordered_map<std::string, Raw> raw;
  for_each_jsonl(responses_path, [&](std::size_t line_no, const json& obj) {
    auto get = [&](const char* field) {
      auto it = obj.find(field);
      if (it == obj.end() || !it->is_string()) {
        throw SchemaError(line_no, std::string("missing string field '") + field + "'");
      }
      return it->get<std::string>();
    };
    std::string id = get("question_id");
    if (!raw.emplace(id, Raw{get("prompt"), get("response")}).second) throw DuplicateId(id);
  });

  std::unordered_map<std::string, bool> record_ids;
  for (const auto& r : records) {
    if (!record_ids.emplace(r.question_id, true).second) throw DuplicateId(r.question_id);
  }
  for (const auto& [id, unused] : raw) {
    if (!record_ids.count(id)) throw UnmatchedQuestionId(id);
  }

  PairStats stats;
  std::vector<PreferencePair> pairs;
  for (const auto& r : records) {
    if (!r.ok()) {
      ++stats.skipped[SkipReason::kExtractionFailed];
      continue;
    }
    auto it = raw.find(r.question_id);
    if (it == raw.end()) throw UnmatchedQuestionId(r.question_id);
    if (options.correct_only && !*r.correct) {
      ++stats.skipped[SkipReason::kIncorrectAnswer];
      continue;
    }
    auto outcome = make_pair(it->second.prompt, r, it->second.response);
    if (auto* skipped = std::get_if<Skipped>(&outcome)) {
      ++stats.skipped[skipped->reason];
    } else {
      pairs.push_back(std::move(std::get<PreferencePair>(outcome)));
    }
  }
  stats.written = write_preferences(pairs, out_path);

  fmt::print(log, "pairs written: {}\n", stats.written);
  for (const auto& [reason, count] : stats.skipped) {
    fmt::print(log, "skipped {}: {}\n", to_string(reason), count);
  }
  return stats;
}

CellSpec parse_cell_spec(const std::string& text) {
  const auto first = text.find(':');
  const auto second = first == std::string::npos ? first : text.find(':', first + 1);
  if (second == std::string::npos || first == 0 || second == first + 1 ||
      second + 1 == text.size()) {
    throw ConfigError("cell must be MODEL:DATASET:PATH, got '" + text + "'");
  }
  return CellSpec{text.substr(0, first), text.substr(first + 1, second - first - 1),
                  text.substr(second + 1)};
}

EvaluateSummary cmd_evaluate(const std::vector<CellSpec>& cells, const fs::path& out_dir,
                             const AlignmentOptions& options, std::ostream& log) {
  if (cells.empty()) throw ConfigError("evaluate needs at least one records file");

  std::vector<std::future<CellResult>> pending;
  pending.reserve(cells.size());
  for (const auto& spec : cells) {
    pending.push_back(std::async(std::launch::async, [spec, options] {
      CellResult cell;
      cell.model = spec.model;
      cell.dataset = spec.dataset;
      try {
        cell.records = read_records(spec.records_path);
        cell.row = alignment_row(spec.model, spec.dataset, cell.records, options);
      } catch (const DataError& e) {
        cell.error = e.what();
      } catch (const IoError& e) {
        cell.error = e.what();
      }
      return cell;
    }));
  }
  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (auto& f : pending) results.push_back(f.get());

  EvaluateSummary s;
  s.cells = results.size();
  s.markdown_path = out_dir / "report.md";
  s.csv_path = out_dir / "report.csv";
  write_file_atomic(s.markdown_path, render_markdown(results));
  write_file_atomic(s.csv_path, render_csv(results));
  for (const auto& cell : results) {
    if (!cell.row) {
      ++s.failed_cells;
      fmt::print(log, "cell {} / {}: {}\n", cell.model, cell.dataset, cell.error);
      continue;
    }
    write_plot_data(cell, out_dir / "plots" / cell_slug(cell.model, cell.dataset));
  }
  fmt::print(log, "evaluated {} cells ({} without results); report at {}\n", s.cells,
             s.failed_cells, s.markdown_path.string());
  return s;
}

GenerateSummary cmd_simulate(const RunConfig& config, const SimulateOptions& options,
                             std::ostream& log) {
  std::vector<Question> questions;
  if (!config.dataset.path.empty()) {
    questions = load_dataset(config.dataset);
  } else {
    if (config.output_dir.empty()) throw ConfigError("output directory is not set");
    questions = make_synthetic_questions(options.questions, options.subjects,
                                         options.choices, options.question_seed);
    write_dataset(questions, config.output_dir / "questions.jsonl");
  }
  const MockBackend backend(config.backend.profile, questions);
  return run_generation(questions, backend, config, log);
}

}  // namespace dca
