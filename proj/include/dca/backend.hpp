#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dca/prompting.hpp"

namespace dca {

struct GenerationRequest {
  RenderedPrompt prompt;
  std::size_t max_new_tokens = 24;
  double temperature = 0.0;
  std::size_t top_logprobs = 20;  // 1..20
};

struct TokenAlternative {
  std::string token_text;
  double logprob = 0.0;

  bool operator==(const TokenAlternative&) const = default;
};

// One emitted token and its natural-log probability.
struct TokenLogprob {
  std::string token_text;
  double logprob = 0.0;
  std::vector<TokenAlternative> alternatives;

  bool operator==(const TokenLogprob&) const = default;
};

// Concatenating every token_text reproduces `text`.
struct GenerationResult {
  std::string question_id;
  std::string text;
  std::vector<TokenLogprob> tokens;

  bool operator==(const GenerationResult&) const = default;
};

// Rejects malformed requests (top_logprobs outside 1..20, zero token budget,
// negative temperature) with ConfigError.
void validate_request(const GenerationRequest& request);

// Implementations must be safe to call concurrently from many threads.
class Backend {
 public:
  virtual ~Backend() = default;

  // Throws BackendUnavailable after retry exhaustion, MissingLogprobs when
  // the response has no per-token logprobs.
  virtual GenerationResult generate(const GenerationRequest& request) const = 0;
};

enum class FailureKind { kNone, kUnavailable, kMissingLogprobs, kOther };

// One slot of a batch: either a result or the error that replaced it.
struct BatchEntry {
  std::string question_id;
  std::optional<GenerationResult> result;
  FailureKind failure = FailureKind::kNone;
  std::string error;

  bool ok() const { return result.has_value(); }
};

// Runs every request with at most `parallelism` in flight. Output order
// matches input order; per-request failures are captured in their slot.
std::vector<BatchEntry> generate_batch(const Backend& backend,
                                       const std::vector<GenerationRequest>& requests,
                                       std::size_t parallelism);

}  // namespace dca
