#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selfplay/config.hpp"
#include "selfplay/embedder.hpp"
#include "selfplay/policy.hpp"

namespace selfplay {

// Read from `remote_*` config keys.
struct RemoteSettings {
  std::string endpoint;            // base URL, e.g. http://127.0.0.1:8000/v1
  std::string model = "default";
  std::string embedding_endpoint;  // empty: same as endpoint
  std::string embedding_model = "default";
  std::string api_key;
  int max_retries = 3;
  int initial_backoff_ms = 500;
  double backoff_multiplier = 2.0;
  int timeout_ms = 600000;
  std::string embedder = "remote";  // or "hashed"

  static RemoteSettings from_config(const KeyValueMap& raw);
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

// POSTs JSON bodies with bounded retries and exponential backoff. Transport
// errors, non-2xx statuses, and bodies rejected by `validate` are retried;
// the last failure is rethrown as BackendError. Safe for concurrent use.
class HttpJsonClient {
 public:
  HttpJsonClient(std::string base_url, std::string api_key, std::chrono::milliseconds timeout,
                 RetryPolicy retry);

  nlohmann::json post(std::string_view path, const nlohmann::json& body,
                      const std::function<void(const nlohmann::json&)>& validate) const;

  long retries() const { return retries_->load(); }

 private:
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
  RetryPolicy retry_;
  std::shared_ptr<std::atomic<long>> retries_;
};

// Chat-completions wire format.
nlohmann::json build_chat_request(std::string_view model, std::string_view prompt, int n,
                                  double temperature, int max_tokens);
// Throws BackendError unless the body carries exactly `expected` string
// message contents.
std::vector<std::string> parse_chat_response(const nlohmann::json& body, int expected);

nlohmann::json build_embedding_request(std::string_view model, std::span<const std::string> texts);
std::vector<Embedding> parse_embedding_response(const nlohmann::json& body, std::size_t expected);

class RemotePolicy final : public PolicyBackend {
 public:
  explicit RemotePolicy(const RemoteSettings& settings);

  BackendInfo info() const override;
  std::vector<std::string> generate_problems(const Problem& reference, std::string_view prompt,
                                             const GenerationRequest& request) override;
  std::vector<std::string> solve(const Problem& problem, std::string_view prompt,
                                 const GenerationRequest& request) override;
  long retry_count() const override { return client_.retries(); }

 private:
  std::vector<std::string> complete(std::string_view prompt, const GenerationRequest& request);

  std::string model_;
  HttpJsonClient client_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(const RemoteSettings& settings);

  std::string name() const override { return "remote:" + model_; }
  // Vectors are L2-normalized on receipt.
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  long retry_count() const override { return client_.retries(); }

 private:
  std::string model_;
  HttpJsonClient client_;
};

}  // namespace selfplay
