// Command-line driver: generate, build-prefs, evaluate, simulate.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dca/errors.hpp"
#include "dca/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kBackend = 2, kData = 3 };

// Flags shared by generate and simulate. Each overrides the config file only
// when given on the command line.
struct RunFlags {
  std::string config_path;
  std::string dataset_path;
  std::string dataset_name;
  std::string split;
  std::size_t per_subject = 0;
  std::uint64_t sample_seed = 0;
  std::string out_dir;
  std::size_t parallelism = 8;
  std::size_t max_new_tokens = 24;
  double temperature = 0.0;
  std::size_t top_logprobs = 20;
  double failure_threshold = 0.05;
  bool renormalize = false;

  // Mock profile.
  double accuracy = 0.7;
  std::string dist_family = "beta";
  double dist_a = 5.0;
  double dist_b = 2.0;
  std::string verbal_mode = "vanilla";
  double verbal_bias = 0.0;
  double verbal_noise_sd = 0.0;
  std::uint64_t seed = 0;
  double format_failure_rate = 0.0;

  std::map<std::string, CLI::Option*> options;

  bool given(const std::string& name) const {
    auto it = options.find(name);
    return it != options.end() && it->second->count() > 0;
  }
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_profile) {
  auto add = [&](const std::string& flag, auto& target, const std::string& help) {
    CLI::Option* opt = cmd->add_option(flag, target, help);
    f.options[flag] = opt;
    return opt;
  };
  add("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  add("--dataset", f.dataset_path, "normalized dataset (JSONL)");
  add("--dataset-name", f.dataset_name, "dataset name");
  add("--split", f.split, "dataset split label");
  add("--per-subject", f.per_subject, "balanced sample size per subject")
      ->check(CLI::PositiveNumber);
  add("--sample-seed", f.sample_seed, "seed for balanced sampling");
  add("--out-dir", f.out_dir, "output directory");
  add("--parallelism", f.parallelism, "requests in flight")->check(CLI::PositiveNumber);
  add("--max-new-tokens", f.max_new_tokens, "generation token budget")
      ->check(CLI::PositiveNumber);
  add("--temperature", f.temperature, "sampling temperature")->check(CLI::NonNegativeNumber);
  add("--top-logprobs", f.top_logprobs, "alternatives per token")->check(CLI::Range(1, 20));
  add("--failure-threshold", f.failure_threshold, "warn above this extraction failure rate")
      ->check(CLI::Range(0.0, 1.0));
  f.options["--renormalize"] =
      cmd->add_flag("--renormalize", f.renormalize,
                    "normalize C_i over the choice letters at the answer position");
  if (!with_profile) return;
  add("--accuracy", f.accuracy, "mock answer accuracy")->check(CLI::Range(0.0, 1.0));
  add("--internal-dist", f.dist_family, "beta or uniform")
      ->check(CLI::IsMember({"beta", "uniform"}));
  add("--dist-a", f.dist_a, "beta alpha, or uniform lower bound");
  add("--dist-b", f.dist_b, "beta beta, or uniform upper bound");
  add("--verbal-mode", f.verbal_mode, "vanilla or aligned")
      ->check(CLI::IsMember({"vanilla", "aligned"}));
  add("--verbal-bias", f.verbal_bias, "vanilla C_v offset in percentage points");
  add("--verbal-noise-sd", f.verbal_noise_sd, "vanilla C_v noise in percentage points")
      ->check(CLI::NonNegativeNumber);
  add("--seed", f.seed, "mock seed");
  add("--format-failure-rate", f.format_failure_rate, "fraction of malformed responses")
      ->check(CLI::Range(0.0, 1.0));
}

dca::RunConfig resolve_config(const RunFlags& f) {
  dca::RunConfig c = f.config_path.empty()
                         ? dca::run_config_from_json(nlohmann::json::object(), dca::process_env)
                         : dca::load_run_config(f.config_path, dca::process_env);
  if (f.given("--dataset")) c.dataset.path = f.dataset_path;
  if (f.given("--dataset-name")) c.dataset.name = f.dataset_name;
  if (f.given("--split")) c.dataset.split = f.split;
  if (f.given("--per-subject")) {
    c.dataset.sampling = dca::SamplingSpec{f.per_subject, f.sample_seed};
  } else if (f.given("--sample-seed") && c.dataset.sampling) {
    c.dataset.sampling->seed = f.sample_seed;
  }
  if (f.given("--out-dir")) c.output_dir = f.out_dir;
  if (f.given("--parallelism")) c.backend.parallelism = f.parallelism;
  if (f.given("--max-new-tokens")) c.backend.max_new_tokens = f.max_new_tokens;
  if (f.given("--temperature")) c.backend.temperature = f.temperature;
  if (f.given("--top-logprobs")) c.backend.top_logprobs = f.top_logprobs;
  if (f.given("--failure-threshold")) c.failure_threshold = f.failure_threshold;
  if (f.given("--renormalize")) c.renormalize = f.renormalize;

  dca::ConfidenceProfile& p = c.backend.profile;
  if (f.given("--accuracy")) p.accuracy = f.accuracy;
  if (f.given("--internal-dist")) {
    p.internal_dist.family = f.dist_family == "beta" ? dca::InternalDist::Family::kBeta
                                                     : dca::InternalDist::Family::kUniform;
    if (p.internal_dist.family == dca::InternalDist::Family::kUniform) {
      p.internal_dist.a = 0.0;
      p.internal_dist.b = 1.0;
    }
  }
  if (f.given("--dist-a")) p.internal_dist.a = f.dist_a;
  if (f.given("--dist-b")) p.internal_dist.b = f.dist_b;
  if (f.given("--verbal-mode")) {
    p.verbal_mode =
        f.verbal_mode == "aligned" ? dca::VerbalMode::kAligned : dca::VerbalMode::kVanilla;
  }
  if (f.given("--verbal-bias")) p.verbal_bias = f.verbal_bias;
  if (f.given("--verbal-noise-sd")) p.verbal_noise_sd = f.verbal_noise_sd;
  if (f.given("--seed")) p.seed = f.seed;
  if (f.given("--format-failure-rate")) p.format_failure_rate = f.format_failure_rate;
  dca::validate_profile(p);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verbalized vs. internal confidence alignment toolkit"};
  app.require_subcommand(1);

  RunFlags gen_flags;
  auto* generate = app.add_subcommand("generate", "query a model and write confidence records");
  add_run_flags(generate, gen_flags, true);
  std::string backend_kind;
  std::string endpoint;
  std::string model;
  auto* backend_opt = generate->add_option("--backend", backend_kind, "mock or remote")
                          ->check(CLI::IsMember({"mock", "remote"}));
  auto* endpoint_opt = generate->add_option("--endpoint", endpoint, "scheme://host[:port][/path]");
  auto* model_opt = generate->add_option("--model", model, "model name sent to the endpoint");

  RunFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "run the pipeline against the mock model");
  add_run_flags(simulate, sim_flags, true);
  dca::SimulateOptions sim;
  simulate->add_option("--questions", sim.questions, "synthetic question count")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--subjects", sim.subjects, "synthetic subject count (0 = none)");
  simulate->add_option("--choices", sim.choices, "choices per synthetic question")
      ->check(CLI::Range(2, 26));
  simulate->add_option("--question-seed", sim.question_seed, "seed for synthetic questions");

  auto* prefs = app.add_subcommand("build-prefs", "build the preference dataset");
  std::string records_path, responses_path, prefs_out;
  dca::BuildPrefsOptions prefs_opts;
  prefs->add_option("--records", records_path, "records file")->required();
  prefs->add_option("--responses", responses_path, "raw responses file")->required();
  prefs->add_option("--out", prefs_out, "preference file to write")->required();
  prefs->add_flag("--correct-only", prefs_opts.correct_only, "keep only correct answers");

  auto* evaluate = app.add_subcommand("evaluate", "compute alignment metrics and reports");
  std::vector<std::string> cell_texts;
  std::string eval_out;
  dca::AlignmentOptions align;
  evaluate->add_option("--cell", cell_texts, "MODEL:DATASET:RECORDS_PATH (repeatable)")
      ->required();
  evaluate->add_option("--out-dir", eval_out, "report directory")->required();
  evaluate->add_flag("--permutation", align.permutation_p, "permutation p-value for rho");
  evaluate->add_option("--permutation-shuffles", align.permutation_shuffles, "shuffle count")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--permutation-seed", align.permutation_seed, "shuffle seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*generate) {
      auto config = resolve_config(gen_flags);
      if (backend_opt->count()) {
        config.backend.kind = backend_kind == "remote" ? dca::BackendSettings::Kind::kRemote
                                                       : dca::BackendSettings::Kind::kMock;
      }
      if (endpoint_opt->count()) config.backend.remote.endpoint_url = endpoint;
      if (model_opt->count()) config.backend.remote.model = model;
      if (config.dataset.path.empty()) throw dca::ConfigError("no dataset given");
      dca::cmd_generate(config, std::cout);
    } else if (*simulate) {
      dca::cmd_simulate(resolve_config(sim_flags), sim, std::cout);
    } else if (*prefs) {
      dca::cmd_build_prefs(records_path, responses_path, prefs_out, prefs_opts, std::cout);
    } else if (*evaluate) {
      std::vector<dca::CellSpec> cells;
      for (const auto& t : cell_texts) cells.push_back(dca::parse_cell_spec(t));
      const auto summary = dca::cmd_evaluate(cells, eval_out, align, std::cout);
      if (summary.failed_cells == summary.cells) {
        std::cerr << "data error: no cell produced results\n";
        return kData;
      }
    }
  } catch (const dca::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const dca::BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kBackend;
  } catch (const dca::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const dca::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kData;
  } catch (const dca::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
