#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfplay/config.hpp"
#include "selfplay/types.hpp"

namespace selfplay {

// One selected reference: the prompt sent to the policy and its G generated
// completions with their teacher scores.
struct TeacherGroup {
  std::string group_id;
  std::string prompt;
  std::vector<std::string> completions;
  std::vector<ScoreBreakdown> scores;
};

// One selected problem: the solver prompt and its G attempts.
struct StudentGroup {
  std::string group_id;
  std::string prompt;
  std::vector<SolutionAttempt> attempts;
  std::optional<CanonicalAnswer> reference;
};

// Teacher reward = novelty; student reward = correctness. Advantages are 0.
std::vector<TrainingSample> assign_rewards(std::span<const TeacherGroup> teacher_groups,
                                           std::span<const StudentGroup> student_groups,
                                           const EngineConfig& cfg, int iteration);

// (R - mean) / std with population std; all zeros when std < epsilon_std.
std::vector<double> compute_advantages(std::span<const double> rewards, double epsilon_std);

// Fills advantages per (role, group_id) group, in place.
void apply_group_advantages(std::vector<TrainingSample>& samples, double epsilon_std);

// Appends one JSON record per sample:
//   {iteration, role, group_id, prompt, completion, reward, advantage, token_unit}
// Non-finite rewards or advantages are rejected before anything is written.
// Returns the number of records written; an empty batch still creates the file.
std::size_t emit_batch(std::span<const TrainingSample> samples,
                       const std::filesystem::path& path);

// Reads a batch file back. Throws std::runtime_error naming the line on a
// malformed or truncated record.
std::vector<TrainingSample> read_batch(const std::filesystem::path& path);

std::string sample_record_json(const TrainingSample& sample);
TrainingSample parse_sample_record(std::string_view line);

}  // namespace selfplay
