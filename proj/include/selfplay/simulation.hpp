#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "selfplay/config.hpp"
#include "selfplay/synthetic.hpp"

namespace selfplay {

struct SimulationSpec {
  EngineConfig cfg;
  SyntheticSettings synthetic;
  bool adapt = true;
  std::uint64_t seed = 0;
  int iterations = 200;
  int warmup = 40;  // leading iterations left out of the summary statistics
  std::optional<std::filesystem::path> output_dir;
};

struct SimulationSummary {
  // Per iteration, the mean solve rate over the problems that reached the
  // batch: members of the selected teacher groups and the selected students
  // (absent when an iteration selected none).
  std::vector<std::optional<double>> selected_means;
  // Share of post-warmup iterations whose mean lies in [s_min, s_max];
  // iterations without a mean count as outside.
  double in_band_fraction = 0.0;
  // Population std of the post-warmup per-iteration means.
  double selected_mean_std = 0.0;
  // Share of post-warmup selected student problems that are well posed.
  double valid_fraction_selected = 0.0;
  std::size_t selected_total = 0;
  std::size_t final_pool_size = 0;
  double final_mean_pairwise_distance = 0.0;
  SyntheticAgentState final_state;
};

SimulationSummary simulate(const SimulationSpec& spec);

nlohmann::json summary_json(const SimulationSummary& summary);

}  // namespace selfplay
