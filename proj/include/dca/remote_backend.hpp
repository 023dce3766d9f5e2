#pragma once

#include <chrono>
#include <cstddef>
#include <string>

#include "json.hpp"

#include "dca/backend.hpp"

namespace dca {

struct RemoteConfig {
  // scheme://host[:port]; a path on the URL replaces chat_path.
  std::string endpoint_url;
  std::string chat_path = "/v1/chat/completions";
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
  // Total attempts per request, including the first.
  std::size_t retry_cap = 5;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{30000};
};

// Chat-completions request body: one user message carrying the prompt, plus
// logprob flags.
nlohmann::json build_chat_request(const RemoteConfig& config,
                                  const GenerationRequest& request);

// Extracts completion text and per-token logprobs from a chat-completions
// response body. Throws MissingLogprobs when logprob data is absent and
// BackendError when the body has no completion at all.
GenerationResult parse_chat_response(const std::string& question_id,
                                     const nlohmann::json& body);

// Whether an HTTP status should be retried (429 and 5xx).
bool is_transient_status(int status);

class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  // Retries timeouts, connection errors, 429 and 5xx with exponential
  // backoff up to retry_cap attempts, then throws BackendUnavailable.
  GenerationResult generate(const GenerationRequest& request) const override;

  const RemoteConfig& config() const { return config_; }

 private:
  RemoteConfig config_;
  std::string base_url_;
  std::string path_;
};

}  // namespace dca
