#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfplay/config.hpp"
#include "selfplay/embedder.hpp"
#include "selfplay/policy.hpp"
#include "selfplay/pool.hpp"
#include "selfplay/prompts.hpp"
#include "selfplay/types.hpp"

namespace selfplay {

inline constexpr int kMetricsSchemaVersion = 1;

struct DroppedReference {
  std::string group_id;
  std::string stage;  // "generate", "solve" or "embed"
  std::string error;
};

// One generated problem after scoring. Kept in memory only.
struct ScoredRecord {
  std::string group_id;
  Problem problem;
  std::optional<SolveStats> stats;  // absent for problems never solved
  ScoreBreakdown scores;
};

struct IterationReport {
  int iteration = 0;
  bool aborted = false;
  std::string abort_reason;

  std::size_t references = 0;
  std::size_t generated = 0;
  std::size_t valid = 0;
  std::size_t overlong = 0;  // well formed, but the solver prompt exceeds max_prompt_tokens
  std::size_t question_tag = 0;
  std::vector<DroppedReference> dropped;

  std::size_t teacher_groups = 0;
  std::size_t student_problems = 0;
  bool teacher_shortfall = false;
  bool student_shortfall = false;
  std::size_t samples = 0;

  // Over every solved problem in the batch: selected teacher groups'
  // members and the selected students, each once.
  std::optional<double> selected_solve_rate_mean;
  std::optional<double> selected_solve_rate_std;
  std::optional<double> mean_novelty;
  std::optional<double> teacher_reward_mean;
  std::optional<double> student_reward_mean;

  std::size_t inserted = 0;
  std::size_t pool_size = 0;
  long retries = 0;
  nlohmann::json policy_state = nlohmann::json::object();

  // Detail for callers; not written to the metrics file.
  std::vector<ScoredRecord> scored;
  std::vector<Problem> selected_students;
  std::vector<TrainingSample> batch;
};

nlohmann::json report_json(const IterationReport& report);

struct IterationContext {
  const EngineConfig& cfg;
  PolicyBackend& policy;
  Embedder& embedder;
  ProblemPool& pool;
  std::uint64_t seed = 0;
  const PromptTemplates& templates;
  std::optional<std::filesystem::path> batch_path;  // nothing written when absent
};

// One generate -> solve -> score -> select -> emit -> update -> insert pass.
// Backend failures drop the affected reference group. With no valid problems
// left the iteration is reported as aborted: an empty batch is written and
// neither the policy nor the pool changes.
IterationReport run_iteration(int t, IterationContext& ctx);

// Calls fn(i) for i in [0, n) on up to `parallelism` threads. The first
// exception thrown by any call is rethrown after all threads finish.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn);

struct RunOptions {
  int iterations = 1;
  std::uint64_t seed = 0;
  // Layout: pool.jsonl, metrics.jsonl, checkpoint.json, batches/. When absent
  // the run is in-memory only.
  std::optional<std::filesystem::path> output_dir;
  PromptTemplates templates = PromptTemplates::defaults();
  bool keep_details = false;  // keep scored/selected/batch in the reports
  std::function<void(const IterationReport&)> on_iteration;
};

struct RunResult {
  std::vector<IterationReport> reports;  // iterations executed by this call
  int start_iteration = 1;
  ProblemPool pool;
};

// Runs iterations up to options.iterations. A checkpoint in output_dir is
// resumed: the pool and metrics are cut back to the last completed iteration
// and the loop continues from there. The checkpoint's config and seed must
// match.
RunResult run(const EngineConfig& cfg, PolicyBackend& policy, Embedder& embedder,
              const RunOptions& options);

std::filesystem::path batch_file_path(const std::filesystem::path& output_dir, int iteration);

}  // namespace selfplay
