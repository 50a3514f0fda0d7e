#include "selfplay/remote.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <httplib.h>

namespace selfplay {

using nlohmann::json;

RemoteSettings RemoteSettings::from_config(const KeyValueMap& raw) {
  static constexpr std::string_view known[] = {
      "remote_endpoint",     "remote_model",       "remote_embedding_endpoint",
      "remote_embedding_model", "remote_api_key",  "remote_max_retries",
      "remote_initial_backoff_ms", "remote_backoff_multiplier", "remote_timeout_ms",
      "remote_embedder",
  };
  for (const auto& [key, value] : raw) {
    if (key.starts_with("remote_") && std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  RemoteSettings s;
  s.endpoint = kv::get_string(raw, "remote_endpoint", s.endpoint);
  s.model = kv::get_string(raw, "remote_model", s.model);
  s.embedding_endpoint = kv::get_string(raw, "remote_embedding_endpoint", s.embedding_endpoint);
  s.embedding_model = kv::get_string(raw, "remote_embedding_model", s.embedding_model);
  s.api_key = kv::get_string(raw, "remote_api_key", s.api_key);
  s.max_retries = kv::get_int(raw, "remote_max_retries", s.max_retries);
  s.initial_backoff_ms = kv::get_int(raw, "remote_initial_backoff_ms", s.initial_backoff_ms);
  s.backoff_multiplier = kv::get_double(raw, "remote_backoff_multiplier", s.backoff_multiplier);
  s.timeout_ms = kv::get_int(raw, "remote_timeout_ms", s.timeout_ms);
  s.embedder = kv::get_string(raw, "remote_embedder", s.embedder);
  if (s.embedder != "remote" && s.embedder != "hashed") {
    throw ConfigError("remote_embedder must be 'remote' or 'hashed'");
  }
  if (s.max_retries < 0) throw ConfigError("remote_max_retries must be >= 0");
  if (s.initial_backoff_ms < 0) throw ConfigError("remote_initial_backoff_ms must be >= 0");
  if (s.backoff_multiplier < 1.0) throw ConfigError("remote_backoff_multiplier must be >= 1");
  if (s.timeout_ms <= 0) throw ConfigError("remote_timeout_ms must be > 0");
  return s;
}

namespace {

// "http://host:port/v1" -> {"http://host:port", "/v1"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint must be an absolute URL: " + url);
  }
  if (url.compare(0, scheme_end, "http") != 0) {
    throw std::invalid_argument("only http:// endpoints are supported: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  std::string head = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {std::move(head), std::move(prefix)};
}

RetryPolicy retry_from(const RemoteSettings& s) {
  return {s.max_retries, std::chrono::milliseconds(s.initial_backoff_ms), s.backoff_multiplier};
}

}  // namespace

HttpJsonClient::HttpJsonClient(std::string base_url, std::string api_key,
                               std::chrono::milliseconds timeout, RetryPolicy retry)
    : api_key_(std::move(api_key)),
      timeout_(timeout),
      retry_(retry),
      retries_(std::make_shared<std::atomic<long>>(0)) {
  auto [head, prefix] = split_url(base_url);
  scheme_host_port_ = std::move(head);
  path_prefix_ = std::move(prefix);
}

json HttpJsonClient::post(std::string_view path, const json& body,
                          const std::function<void(const json&)>& validate) const {
  const std::string full_path = path_prefix_ + std::string(path);
  const std::string payload = body.dump(-1, ' ', false, json::error_handler_t::replace);
  auto backoff = retry_.initial_backoff;
  std::string last_error;

  for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
    if (attempt > 0) {
      retries_->fetch_add(1);
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(std::llround(static_cast<double>(backoff.count()) * retry_.multiplier)));
    }

    httplib::Client cli(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = cli.Post(full_path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      json parsed = json::parse(res->body);
      validate(parsed);
      return parsed;
    } catch (const std::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw BackendError("POST " + scheme_host_port_ + full_path + " failed after " +
                     std::to_string(retry_.max_retries + 1) + " attempts: " + last_error);
}

json build_chat_request(std::string_view model, std::string_view prompt, int n,
                        double temperature, int max_tokens) {
  json req;
  req["model"] = model;
  req["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  req["temperature"] = temperature;
  req["n"] = n;
  req["max_tokens"] = max_tokens;
  return req;
}

std::vector<std::string> parse_chat_response(const json& body, int expected) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array()) {
    throw BackendError("response has no choices array");
  }
  const auto& choices = body["choices"];
  if (choices.size() != static_cast<std::size_t>(expected)) {
    throw BackendError("expected " + std::to_string(expected) + " choices, got " +
                       std::to_string(choices.size()));
  }
  std::vector<std::string> out;
  out.reserve(choices.size());
  for (const auto& c : choices) {
    if (!c.is_object() || !c.contains("message") || !c["message"].is_object() ||
        !c["message"].contains("content") || !c["message"]["content"].is_string()) {
      throw BackendError("choice without string message content");
    }
    out.push_back(c["message"]["content"].get<std::string>());
  }
  return out;
}

json build_embedding_request(std::string_view model, std::span<const std::string> texts) {
  json req;
  req["model"] = model;
  req["input"] = json::array();
  for (const auto& t : texts) req["input"].push_back(t);
  return req;
}

std::vector<Embedding> parse_embedding_response(const json& body, std::size_t expected) {
  if (!body.is_object() || !body.contains("data") || !body["data"].is_array()) {
    throw BackendError("response has no data array");
  }
  const auto& data = body["data"];
  if (data.size() != expected) {
    throw BackendError("expected " + std::to_string(expected) + " embeddings, got " +
                       std::to_string(data.size()));
  }
  std::vector<std::pair<std::size_t, Embedding>> indexed;
  indexed.reserve(expected);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data[i];
    if (!d.is_object() || !d.contains("embedding") || !d["embedding"].is_array()) {
      throw BackendError("data entry without embedding");
    }
    const std::size_t index = d.contains("index") ? d["index"].get<std::size_t>() : i;
    Embedding v = d["embedding"].get<Embedding>();
    try {
      normalize(v);
    } catch (const std::invalid_argument& e) {
      throw BackendError(std::string("bad embedding: ") + e.what());
    }
    indexed.emplace_back(index, std::move(v));
  }
  std::sort(indexed.begin(), indexed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Embedding> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < indexed.size(); ++i) {
    if (indexed[i].first != i) throw BackendError("embedding indices are not 0..n-1");
    out.push_back(std::move(indexed[i].second));
  }
  return out;
}

RemotePolicy::RemotePolicy(const RemoteSettings& s)
    : model_(s.model),
      client_(s.endpoint, s.api_key, std::chrono::milliseconds(s.timeout_ms), retry_from(s)) {}

BackendInfo RemotePolicy::info() const { return {"remote:" + model_, true, false}; }

std::vector<std::string> RemotePolicy::complete(std::string_view prompt,
                                                const GenerationRequest& request) {
  const json req = build_chat_request(model_, prompt, request.group_size, request.temperature,
                                      request.max_tokens);
  const int n = request.group_size;
  const json body =
      client_.post("/chat/completions", req, [n](const json& b) { parse_chat_response(b, n); });
  return parse_chat_response(body, n);
}

std::vector<std::string> RemotePolicy::generate_problems(const Problem&, std::string_view prompt,
                                                         const GenerationRequest& request) {
  return complete(prompt, request);
}

std::vector<std::string> RemotePolicy::solve(const Problem&, std::string_view prompt,
                                             const GenerationRequest& request) {
  return complete(prompt, request);
}

RemoteEmbedder::RemoteEmbedder(const RemoteSettings& s)
    : model_(s.embedding_model),
      client_(s.embedding_endpoint.empty() ? s.endpoint : s.embedding_endpoint, s.api_key,
              std::chrono::milliseconds(s.timeout_ms), retry_from(s)) {}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> texts) {
  const json req = build_embedding_request(model_, texts);
  const std::size_t n = texts.size();
  const json body =
      client_.post("/embeddings", req, [n](const json& b) { parse_embedding_response(b, n); });
  return parse_embedding_response(body, n);
}

}  // namespace selfplay
