#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selfplay/types.hpp"

namespace selfplay {

// Raised by backends when a request cannot be completed with exactly the
// requested number of completions.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BackendInfo {
  std::string name;
  bool supports_batching = false;
  bool deterministic = false;
};

struct GenerationRequest {
  int group_size = 8;
  double temperature = 1.0;
  int max_tokens = 2048;
  std::uint64_t stream_seed = 0;  // per-request stream for stochastic backends
};

// The single policy that plays both roles. Both calls return exactly
// group_size completions or throw BackendError. Implementations must tolerate
// concurrent calls.
class PolicyBackend {
 public:
  virtual ~PolicyBackend() = default;

  virtual BackendInfo info() const = 0;

  virtual std::vector<std::string> generate_problems(const Problem& reference,
                                                     std::string_view prompt,
                                                     const GenerationRequest& request) = 0;

  virtual std::vector<std::string> solve(const Problem& problem, std::string_view prompt,
                                         const GenerationRequest& request) = 0;

  // Called once per iteration with the finished batch. Remote policies are
  // trained out of process, so the default does nothing.
  virtual void update(std::span<const TrainingSample> samples) { (void)samples; }

  // Mutable state carried across resumes.
  virtual nlohmann::json save_state() const { return nlohmann::json::object(); }
  virtual void load_state(const nlohmann::json& state) { (void)state; }

  // Cumulative transport retries, for metrics.
  virtual long retry_count() const { return 0; }
};

}  // namespace selfplay
