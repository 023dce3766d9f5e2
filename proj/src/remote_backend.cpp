#include "dca/remote_backend.hpp"

#include <algorithm>
#include <thread>

#include "httplib.h"

#include "dca/errors.hpp"

namespace dca {

using nlohmann::json;

nlohmann::json build_chat_request(const RemoteConfig& config,
                                  const GenerationRequest& request) {
  return json{
      {"model", config.model},
      {"messages", json::array({json{{"role", "user"},
                                     {"content", request.prompt.text}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_new_tokens},
      {"logprobs", true},
      {"top_logprobs", request.top_logprobs},
  };
}

namespace {

const json* find_path(const json& root, std::initializer_list<const char*> keys) {
  const json* node = &root;
  for (const char* key : keys) {
    if (!node->is_object()) return nullptr;
    auto it = node->find(key);
    if (it == node->end() || it->is_null()) return nullptr;
    node = &*it;
  }
  return node;
}

double clamp_logprob(const json& v) {
  if (!v.is_number()) throw MissingLogprobs();
  return std::min(v.get<double>(), 0.0);
}

}  // namespace

GenerationResult parse_chat_response(const std::string& question_id,
                                     const json& body) {
  const json* choices = find_path(body, {"choices"});
  if (choices == nullptr || !choices->is_array() || choices->empty()) {
    throw BackendError("response has no choices");
  }
  const json& choice = choices->front();
  const json* content = find_path(choice, {"message", "content"});
  if (content == nullptr || !content->is_string()) {
    throw BackendError("response has no message content");
  }
  const json* lp_content = find_path(choice, {"logprobs", "content"});
  if (lp_content == nullptr || !lp_content->is_array() || lp_content->empty()) {
    throw MissingLogprobs();
  }

  GenerationResult result;
  result.question_id = question_id;
  std::string joined;
  for (const auto& entry : *lp_content) {
    const json* token = find_path(entry, {"token"});
    const json* logprob = find_path(entry, {"logprob"});
    if (token == nullptr || !token->is_string() || logprob == nullptr) {
      throw MissingLogprobs();
    }
    TokenLogprob tok;
    tok.token_text = token->get<std::string>();
    tok.logprob = clamp_logprob(*logprob);
    if (const json* top = find_path(entry, {"top_logprobs"}); top && top->is_array()) {
      for (const auto& alt : *top) {
        const json* alt_token = find_path(alt, {"token"});
        const json* alt_lp = find_path(alt, {"logprob"});
        if (alt_token == nullptr || !alt_token->is_string() || alt_lp == nullptr) {
          continue;
        }
        tok.alternatives.push_back({alt_token->get<std::string>(), clamp_logprob(*alt_lp)});
      }
    }
    joined += tok.token_text;
    result.tokens.push_back(std::move(tok));
  }
  // Character offsets are computed over the token stream, so the token
  // concatenation is authoritative when a server's content differs from it.
  result.text = std::move(joined);
  return result;
}

bool is_transient_status(int status) {
  return status == 429 || (status >= 500 && status <= 599);
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty()) throw ConfigError("endpoint URL is not set");
  if (config_.retry_cap == 0) throw ConfigError("retry cap must be at least 1");
  if (!(config_.timeout_seconds > 0.0)) {
    throw ConfigError("timeout_seconds must be positive");
  }
  const auto scheme_end = config_.endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL must start with http:// or https://");
  }
  const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos || path_start + 1 == config_.endpoint_url.size()) {
    base_url_ = config_.endpoint_url.substr(0, path_start);
    path_ = config_.chat_path;
  } else {
    base_url_ = config_.endpoint_url.substr(0, path_start);
    path_ = config_.endpoint_url.substr(path_start);
  }
}

GenerationResult RemoteBackend::generate(const GenerationRequest& request) const {
  validate_request(request);
  const std::string body = build_chat_request(config_, request).dump();

  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_seconds));
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  std::string last_error;
  auto delay = config_.backoff_initial;
  for (std::size_t attempt = 0; attempt < config_.retry_cap; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::min(delay * 2, config_.backoff_max);
    }
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (is_transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError("endpoint rejected request with HTTP " +
                         std::to_string(res->status) + ": " + res->body);
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw BackendError(std::string("endpoint returned invalid JSON: ") + e.what());
    }
    return parse_chat_response(request.prompt.question_id, parsed);
  }
  throw BackendUnavailable("giving up after " + std::to_string(config_.retry_cap) +
                           " attempts: " + last_error);
}

}  // namespace dca
