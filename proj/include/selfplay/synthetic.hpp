#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selfplay/config.hpp"
#include "selfplay/policy.hpp"

namespace selfplay {

// Topic names; concepts of synthetic problems are drawn from these.
std::span<const std::string_view> synthetic_topics();

struct SyntheticAgentState {
  double capability = 0.0;         // c
  double target_difficulty = 0.9;  // g
  double invalid_rate = 0.05;      // chance a completion has malformed tags
  std::vector<double> topic_mixture;
  bool adapt = true;

  bool operator==(const SyntheticAgentState&) const = default;
};

// Read from `synthetic_*` config keys.
struct SyntheticSettings {
  double initial_capability = 0.0;
  double initial_target_offset = 0.9;  // g starts at c + offset
  double invalid_rate = 0.05;
  double ill_posed_rate = 0.1;  // well-formed but missing information
  double initial_topic_share = 0.93;  // of the first topic
  double difficulty_spread = 0.1;
  int answer_max = 100;
  int ill_posed_answer_space = 10;
  double length_intercept = 300.0;
  double length_slope = 20.0;
  double length_noise = 20.0;
  double difficulty_step = 0.15;
  double capability_rate = 0.028;
  double topic_rate = 2.0;
  double topic_floor = 1e-3;
  double student_format_error_rate = 0.02;

  static SyntheticSettings from_config(const KeyValueMap& raw);
};

// Latent fields carried in a synthetic problem's text.
struct SyntheticLatent {
  double difficulty = 0.0;
  std::int64_t answer = 0;
  std::size_t topic = 0;
  bool ill_posed = false;
};

std::string encode_latent(const SyntheticLatent& latent);
std::optional<SyntheticLatent> decode_latent(std::string_view text);

double sigmoid(double x);

// Parameterized stand-in for the policy. Problems have difficulty drawn
// around g; each attempt succeeds with probability sigmoid(c - difficulty).
// update() nudges g by hill climbing on teacher rewards (when adapting) and
// grows c with student reward.
class SyntheticAgent final : public PolicyBackend {
 public:
  SyntheticAgent(SyntheticSettings settings, bool adapt);
  SyntheticAgent(SyntheticSettings settings, SyntheticAgentState state);

  BackendInfo info() const override { return {"synthetic", true, true}; }

  std::vector<std::string> generate_problems(const Problem& reference, std::string_view prompt,
                                             const GenerationRequest& request) override;
  std::vector<std::string> solve(const Problem& problem, std::string_view prompt,
                                 const GenerationRequest& request) override;
  void update(std::span<const TrainingSample> samples) override;

  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

  const SyntheticAgentState& state() const { return state_; }
  const SyntheticSettings& settings() const { return settings_; }

 private:
  SyntheticSettings settings_;
  SyntheticAgentState state_;
};

}  // namespace selfplay
