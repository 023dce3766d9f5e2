#include "dca/backend.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "dca/errors.hpp"

namespace dca {

void validate_request(const GenerationRequest& request) {
  if (request.max_new_tokens == 0) {
    throw ConfigError("max_new_tokens must be positive");
  }
  if (!(request.temperature >= 0.0)) {
    throw ConfigError("temperature must be non-negative");
  }
  if (request.top_logprobs < 1 || request.top_logprobs > 20) {
    throw ConfigError("top_logprobs must be in [1, 20]");
  }
}

namespace {

BatchEntry run_one(const Backend& backend, const GenerationRequest& request) {
  BatchEntry entry;
  entry.question_id = request.prompt.question_id;
  try {
    entry.result = backend.generate(request);
  } catch (const MissingLogprobs& e) {
    entry.failure = FailureKind::kMissingLogprobs;
    entry.error = e.what();
  } catch (const BackendError& e) {
    entry.failure = FailureKind::kUnavailable;
    entry.error = e.what();
  } catch (const std::exception& e) {
    entry.failure = FailureKind::kOther;
    entry.error = e.what();
  }
  return entry;
}

}  // namespace

std::vector<BatchEntry> generate_batch(
    const Backend& backend, const std::vector<GenerationRequest>& requests,
    std::size_t parallelism) {
  if (parallelism == 0) throw ConfigError("parallelism must be at least 1");
  std::vector<BatchEntry> out(requests.size());
  const std::size_t workers = std::min(parallelism, requests.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      out[i] = run_one(backend, requests[i]);
    }
    return out;
  }

  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < requests.size();
             i = next.fetch_add(1)) {
          out[i] = run_one(backend, requests[i]);
        }
      });
    }
  }
  return out;
}

}  // namespace dca
