#include "dca/remote_backend.hpp"

#include <atomic>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"

#include "dca/errors.hpp"

namespace dca {
namespace {

using nlohmann::json;

json token(const std::string& text, double lp, json top = json::array()) {
  return json{{"token", text}, {"logprob", lp}, {"top_logprobs", std::move(top)}};
}

json good_body() {
  json content = json::array({
      token("Guess", -0.01),
      token(":", -0.001),
      token(" B", -0.2231435513142097,
            json::array({json{{"token", " B"}, {"logprob", -0.2231435513142097}},
                         json{{"token", " A"}, {"logprob", -1.6094379124341003}}})),
      token("\n", -0.001),
      token("Probability", -0.001),
      token(":", -0.001),
      token(" 95", -0.3),
      token("%", -0.001),
  });
  return json{{"choices", json::array({json{
                              {"message", {{"role", "assistant"},
                                           {"content", "Guess: B\nProbability: 95%"}}},
                              {"logprobs", {{"content", content}}}}})}};
}

// Local chat-completions stand-in. `handler` decides each reply.
class FakeServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit FakeServer(Handler handler) {
    server_.Post("/v1/chat/completions",
                 [this, handler](const httplib::Request& req, httplib::Response& res) {
                   ++hits;
                   last_body = req.body;
                   last_auth = req.get_header_value("Authorization");
                   handler(req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteConfig fast_config(const std::string& url) {
  RemoteConfig c;
  c.endpoint_url = url;
  c.model = "test-model";
  c.timeout_seconds = 5;
  c.retry_cap = 3;
  c.backoff_initial = std::chrono::milliseconds(1);
  c.backoff_max = std::chrono::milliseconds(4);
  return c;
}

GenerationRequest sample_request() {
  GenerationRequest r;
  r.prompt = {"q1", "What?\nA. x\nB. y\n\nanswer"};
  r.top_logprobs = 5;
  return r;
}

TEST(ParseChatResponse, ExtractsTokensAndAlternatives) {
  const auto r = parse_chat_response("q1", good_body());
  EXPECT_EQ(r.question_id, "q1");
  EXPECT_EQ(r.text, "Guess: B\nProbability: 95%");
  ASSERT_EQ(r.tokens.size(), 8u);
  EXPECT_EQ(r.tokens[2].token_text, " B");
  EXPECT_DOUBLE_EQ(r.tokens[2].logprob, -0.2231435513142097);
  ASSERT_EQ(r.tokens[2].alternatives.size(), 2u);
  EXPECT_EQ(r.tokens[2].alternatives[1].token_text, " A");
}

TEST(ParseChatResponse, MissingLogprobsAndMissingContent) {
  json body = good_body();
  body["choices"][0].erase("logprobs");
  EXPECT_THROW(parse_chat_response("q", body), MissingLogprobs);
  body = good_body();
  body["choices"][0]["logprobs"]["content"] = json::array();
  EXPECT_THROW(parse_chat_response("q", body), MissingLogprobs);
  body = good_body();
  body["choices"][0]["logprobs"]["content"][2].erase("logprob");
  EXPECT_THROW(parse_chat_response("q", body), MissingLogprobs);
  EXPECT_THROW(parse_chat_response("q", json{{"choices", json::array()}}), BackendError);
}

TEST(ParseChatResponse, PositiveLogprobsClampedToZero) {
  json body = good_body();
  body["choices"][0]["logprobs"]["content"][0]["logprob"] = 1e-9;
  EXPECT_EQ(parse_chat_response("q", body).tokens[0].logprob, 0.0);
}

TEST(BuildChatRequest, CarriesPromptAndLogprobFlags) {
  const auto body = build_chat_request(fast_config("http://x"), sample_request());
  EXPECT_EQ(body["model"], "test-model");
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], sample_request().prompt.text);
  EXPECT_EQ(body["logprobs"], true);
  EXPECT_EQ(body["top_logprobs"], 5);
  EXPECT_EQ(body["max_tokens"], 24);
  EXPECT_EQ(body["temperature"], 0.0);
}

TEST(TransientStatus, Classification) {
  EXPECT_TRUE(is_transient_status(429));
  EXPECT_TRUE(is_transient_status(500));
  EXPECT_TRUE(is_transient_status(503));
  EXPECT_FALSE(is_transient_status(400));
  EXPECT_FALSE(is_transient_status(404));
  EXPECT_FALSE(is_transient_status(200));
}

TEST(RemoteBackend, SuccessfulRoundTrip) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(good_body().dump(), "application/json");
  });
  auto config = fast_config(server.url());
  config.api_key = "secret";
  const RemoteBackend backend(config);
  const auto r = backend.generate(sample_request());
  EXPECT_EQ(r.text, "Guess: B\nProbability: 95%");
  EXPECT_EQ(server.hits.load(), 1);
  EXPECT_EQ(server.last_auth, "Bearer secret");
  EXPECT_EQ(json::parse(server.last_body)["top_logprobs"], 5);
}

TEST(RemoteBackend, RetriesTransientThenSucceeds) {
  std::atomic<int> calls{0};
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = calls == 1 ? 500 : 429;
      return;
    }
    res.set_content(good_body().dump(), "application/json");
  });
  const RemoteBackend backend(fast_config(server.url()));
  EXPECT_NO_THROW(backend.generate(sample_request()));
  EXPECT_EQ(server.hits.load(), 3);
}

TEST(RemoteBackend, GivesUpAfterRetryCap) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const RemoteBackend backend(fast_config(server.url()));
  EXPECT_THROW(backend.generate(sample_request()), BackendUnavailable);
  EXPECT_EQ(server.hits.load(), 3);
}

TEST(RemoteBackend, ClientErrorNotRetried) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad model", "text/plain");
  });
  const RemoteBackend backend(fast_config(server.url()));
  try {
    backend.generate(sample_request());
    FAIL() << "expected BackendError";
  } catch (const BackendUnavailable&) {
    FAIL() << "4xx must not be reported as unavailable";
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("400"), std::string::npos);
  }
  EXPECT_EQ(server.hits.load(), 1);
}

TEST(RemoteBackend, MissingLogprobsFromServer) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    json body = good_body();
    body["choices"][0].erase("logprobs");
    res.set_content(body.dump(), "application/json");
  });
  const RemoteBackend backend(fast_config(server.url()));
  EXPECT_THROW(backend.generate(sample_request()), MissingLogprobs);
}

TEST(RemoteBackend, UnreachableEndpointIsUnavailable) {
  // Bind and release a port so nothing is listening on it.
  int port = 0;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  auto config = fast_config("http://127.0.0.1:" + std::to_string(port));
  config.timeout_seconds = 1;
  const RemoteBackend backend(config);
  EXPECT_THROW(backend.generate(sample_request()), BackendUnavailable);
}

TEST(RemoteBackend, ConfigValidation) {
  EXPECT_THROW(RemoteBackend(RemoteConfig{}), ConfigError);
  auto c = fast_config("localhost:8000");
  EXPECT_THROW(RemoteBackend{c}, ConfigError);
  c = fast_config("http://localhost:8000");
  c.retry_cap = 0;
  EXPECT_THROW(RemoteBackend{c}, ConfigError);
}

TEST(RemoteBackend, UrlPathOverridesChatPath) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(good_body().dump(), "application/json");
  });
  auto c = fast_config(server.url() + "/v1/chat/completions");
  c.chat_path = "/elsewhere";
  EXPECT_NO_THROW(RemoteBackend(c).generate(sample_request()));
}

}  // namespace
}  // namespace dca
