#include <doctest.h>

#include <chrono>
#include <thread>

#include "mock_server.hpp"
#include "selfplay/remote.hpp"

using namespace selfplay;
using nlohmann::json;
using testutil::MockServer;

namespace {

RemoteSettings fast_settings(const MockServer& server) {
  RemoteSettings s;
  s.endpoint = server.base_url();
  s.model = "tiny";
  s.api_key = "sk-test";
  s.initial_backoff_ms = 1;
  s.timeout_ms = 2000;
  return s;
}

GenerationRequest request_of(int g) {
  GenerationRequest r;
  r.group_size = g;
  r.temperature = 0.7;
  r.max_tokens = 64;
  return r;
}

const std::vector<std::string> kTranscript = {
    "<problem>What is 2+3?</problem><concepts>arithmetic</concepts>",
    "<problem>Find x if 2x=6.</problem><concepts>algebra</concepts>",
    "<problem>Q3</problem><concepts>a</concepts>",
    "<problem>Q4</problem><concepts>b</concepts>",
    "<problem>Q5</problem><concepts>c</concepts>",
    "<problem>Q6</problem><concepts>d</concepts>",
    "<problem>Q7</problem><concepts>e</concepts>",
    "<problem>Q8</problem><concepts>f</concepts>"};

}  // namespace

TEST_CASE("mocked completions pass through unchanged") {
  MockServer server;
  server.on("/v1/chat/completions", [](const json& body, int, httplib::Response& res) {
    MockServer::reply_json(res, MockServer::chat_body(kTranscript));
    CHECK(body["n"] == 8);
  });
  server.start();
  RemotePolicy policy(fast_settings(server));
  Problem ref;
  ref.text = "What is 1+1?";
  const auto out = policy.generate_problems(ref, "the prompt", request_of(8));
  CHECK(out == kTranscript);
  CHECK(policy.retry_count() == 0);

  const auto seen = server.requests();
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].authorization == "Bearer sk-test");
  const json req = json::parse(seen[0].body);
  CHECK(req["model"] == "tiny");
  CHECK(req["n"] == 8);
  CHECK(req["temperature"] == 0.7);
  CHECK(req["max_tokens"] == 64);
  CHECK(req["messages"] == json::array({{{"role", "user"}, {"content", "the prompt"}}}));

  CHECK(policy.solve(ref, "solve it", request_of(8)) == kTranscript);
}

TEST_CASE("a short response fails the whole request") {
  MockServer server;
  server.on("/v1/chat/completions", [](const json&, int, httplib::Response& res) {
    MockServer::reply_json(res, MockServer::chat_body({kTranscript[0], kTranscript[1], kTranscript[2]}));
  });
  server.start();
  auto settings = fast_settings(server);
  settings.max_retries = 2;
  RemotePolicy policy(settings);
  CHECK_THROWS_WITH_AS(policy.generate_problems({}, "p", request_of(8)),
                       doctest::Contains("expected 8 choices, got 3"), BackendError);
  CHECK(server.requests().size() == 3);
  CHECK(policy.retry_count() == 2);
}

TEST_CASE("two timeouts then success") {
  MockServer server;
  server.on("/v1/chat/completions", [](const json&, int call, httplib::Response& res) {
    if (call < 2) std::this_thread::sleep_for(std::chrono::milliseconds(600));
    MockServer::reply_json(res, MockServer::chat_body(kTranscript));
  });
  server.start();
  auto settings = fast_settings(server);
  settings.timeout_ms = 200;
  RemotePolicy policy(settings);
  CHECK(policy.solve({}, "p", request_of(8)) == kTranscript);
  CHECK(policy.retry_count() == 2);
}

TEST_CASE("error statuses and malformed bodies are retried") {
  MockServer server;
  server.on("/v1/chat/completions", [](const json&, int call, httplib::Response& res) {
    if (call == 0) {
      res.status = 503;
    } else if (call == 1) {
      res.set_content("{not json", "application/json");
    } else if (call == 2) {
      MockServer::reply_json(res, {{"choices", json::array({{{"message", {{"content", 5}}}}})}});
    } else {
      MockServer::reply_json(res, MockServer::chat_body({"ok"}));
    }
  });
  server.start();
  RemotePolicy policy(fast_settings(server));
  CHECK(policy.solve({}, "p", request_of(1)) == std::vector<std::string>{"ok"});
  CHECK(policy.retry_count() == 3);
}

TEST_CASE("unreachable endpoint surfaces a BackendError") {
  RemoteSettings s;
  s.endpoint = "http://127.0.0.1:1/v1";
  s.max_retries = 1;
  s.initial_backoff_ms = 1;
  s.timeout_ms = 200;
  RemotePolicy policy(s);
  CHECK_THROWS_WITH_AS(policy.solve({}, "p", request_of(2)), doctest::Contains("after 2 attempts"),
                       BackendError);
}

TEST_CASE("embeddings are reordered by index and normalized") {
  MockServer server;
  server.on("/v1/embeddings", [](const json& body, int, httplib::Response& res) {
    CHECK(body["input"] == json::array({"a", "b"}));
    MockServer::reply_json(res, {{"data", json::array({{{"index", 1}, {"embedding", {0, 2}}},
                                                        {{"index", 0}, {"embedding", {3, 4}}}})}});
  });
  server.start();
  auto settings = fast_settings(server);
  settings.embedding_model = "embed-small";
  RemoteEmbedder emb(settings);
  CHECK(emb.name() == "remote:embed-small");
  const std::vector<std::string> texts = {"a", "b"};
  const auto out = emb.embed(texts);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == Embedding{0.6, 0.8});
  CHECK(out[1] == Embedding{0.0, 1.0});
  CHECK(json::parse(server.requests()[0].body)["model"] == "embed-small");
}

TEST_CASE("wire helpers") {
  CHECK_THROWS_AS(parse_chat_response(json::object(), 1), BackendError);
  CHECK_THROWS_AS(parse_embedding_response({{"data", json::array({{{"embedding", {0, 0}}}})}}, 1),
                  BackendError);
  CHECK_THROWS_AS(parse_embedding_response({{"data", json::array()}}, 1), BackendError);
  CHECK_THROWS_AS(parse_embedding_response(
                      {{"data", json::array({{{"index", 3}, {"embedding", {1}}}})}}, 1),
                  BackendError);
}

TEST_CASE("remote settings") {
  const auto s = RemoteSettings::from_config(
      {{"remote_endpoint", "http://h:1/v1"}, {"remote_max_retries", "5"}, {"G", "8"}});
  CHECK(s.endpoint == "http://h:1/v1");
  CHECK(s.max_retries == 5);
  CHECK(s.model == "default");
  CHECK_THROWS_AS(RemoteSettings::from_config({{"remote_typo", "x"}}), ConfigError);
  CHECK_THROWS_AS(RemoteSettings::from_config({{"remote_embedder", "magic"}}), ConfigError);
  CHECK_THROWS_AS(RemoteSettings::from_config({{"remote_backoff_multiplier", "0.5"}}), ConfigError);
  RemoteSettings https;
  https.endpoint = "https://example.com/v1";
  CHECK_THROWS_AS(RemotePolicy{https}, std::invalid_argument);
}
