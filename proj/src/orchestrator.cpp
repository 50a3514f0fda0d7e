#include "selfplay/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "selfplay/batch.hpp"
#include "selfplay/jsonl.hpp"
#include "selfplay/majority.hpp"
#include "selfplay/parsing.hpp"
#include "selfplay/rng.hpp"
#include "selfplay/scoring.hpp"
#include "selfplay/selection.hpp"

namespace selfplay {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kStreamReferences = 0;
constexpr std::uint64_t kStreamGenerate = 1;
constexpr std::uint64_t kStreamSolve = 2;

std::string format_id(const char* fmt, int a, std::size_t b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::optional<double> population_std(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return std::sqrt(population_variance(xs));
}

struct GeneratedGroup {
  Problem reference;
  std::string group_id;
  std::string prompt;
  std::vector<std::string> completions;
  std::vector<Problem> problems;        // one per completion
  std::vector<std::string> solver_prompts;
  std::vector<std::optional<SolveStats>> stats;
  std::vector<std::vector<SolutionAttempt>> attempts;
  std::optional<DroppedReference> dropped;
};

}  // namespace

void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

json report_json(const IterationReport& r) {
  json dropped = json::array();
  for (const auto& d : r.dropped) {
    dropped.push_back({{"group_id", d.group_id}, {"stage", d.stage}, {"error", d.error}});
  }
  return {
      {"schema_version", kMetricsSchemaVersion},
      {"iteration", r.iteration},
      {"aborted", r.aborted},
      {"abort_reason", r.abort_reason},
      {"references", r.references},
      {"generated", r.generated},
      {"valid", r.valid},
      {"overlong", r.overlong},
      {"question_tag", r.question_tag},
      {"dropped_references", r.dropped.size()},
      {"dropped", dropped},
      {"teacher_groups", r.teacher_groups},
      {"student_problems", r.student_problems},
      {"teacher_shortfall", r.teacher_shortfall},
      {"student_shortfall", r.student_shortfall},
      {"samples", r.samples},
      {"selected_solve_rate_mean", optional_number(r.selected_solve_rate_mean)},
      {"selected_solve_rate_std", optional_number(r.selected_solve_rate_std)},
      {"mean_novelty", optional_number(r.mean_novelty)},
      {"teacher_reward_mean", optional_number(r.teacher_reward_mean)},
      {"student_reward_mean", optional_number(r.student_reward_mean)},
      {"inserted", r.inserted},
      {"pool_size", r.pool_size},
      {"retries", r.retries},
      {"policy_state", r.policy_state},
  };
}

IterationReport run_iteration(int t, IterationContext& ctx) {
  const EngineConfig& cfg = ctx.cfg;
  const int G = cfg.group_size;
  const std::size_t k = static_cast<std::size_t>(cfg.references_per_iteration());
  const std::size_t m = static_cast<std::size_t>(cfg.selection_size());
  const long retries_before = ctx.policy.retry_count() + ctx.embedder.retry_count();

  IterationReport report;
  report.iteration = t;
  report.references = k;

  // Everything is scored against the pool as it stood when the iteration began.
  const PoolSnapshot snapshot = ctx.pool.snapshot();
  const auto refs = ctx.pool.sample_references(k, derive_seed(ctx.seed, {static_cast<std::uint64_t>(t), kStreamReferences}));

  std::vector<GeneratedGroup> groups(k);
  for (std::size_t i = 0; i < k; ++i) {
    groups[i].reference = refs[i];
    groups[i].group_id = format_id("t%06d-r%03zu", t, i);
    groups[i].prompt = render_prompt(ctx.templates.teacher, refs[i].text);
  }

  GenerationRequest base_request;
  base_request.group_size = G;
  base_request.temperature = cfg.temperature;
  base_request.max_tokens = cfg.max_solution_tokens;

  parallel_for(k, cfg.parallelism, [&](std::size_t i) {
    auto& g = groups[i];
    GenerationRequest req = base_request;
    req.stream_seed = derive_seed(ctx.seed, {static_cast<std::uint64_t>(t), kStreamGenerate, i});
    try {
      g.completions = ctx.policy.generate_problems(g.reference, g.prompt, req);
      if (g.completions.size() != static_cast<std::size_t>(G)) {
        throw BackendError("backend returned " + std::to_string(g.completions.size()) +
                           " completions, expected " + std::to_string(G));
      }
    } catch (const BackendError& e) {
      g.completions.clear();
      g.dropped = DroppedReference{g.group_id, "generate", e.what()};
    }
  });

  // Parse into problems; collect the solve work list.
  struct SolveTask {
    std::size_t group;
    std::size_t index;
  };
  std::vector<SolveTask> tasks;
  for (std::size_t i = 0; i < k; ++i) {
    auto& g = groups[i];
    if (g.dropped) continue;
    report.generated += g.completions.size();
    g.stats.assign(g.completions.size(), std::nullopt);
    g.attempts.assign(g.completions.size(), {});
    g.solver_prompts.assign(g.completions.size(), {});
    for (std::size_t j = 0; j < g.completions.size(); ++j) {
      const TeacherParse parsed = parse_teacher_output(g.completions[j]);
      Problem p;
      p.id = g.group_id + "-q" + std::to_string(j);
      p.parent_id = g.reference.id;
      p.iteration = t;
      p.format_valid = parsed.format_valid;
      if (parsed.format_valid) {
        p.text = parsed.problem_text;
        p.concepts = parsed.concepts;
        if (parsed.tag == ProblemTag::kQuestion) ++report.question_tag;
        g.solver_prompts[j] = render_prompt(ctx.templates.student, p.text);
        if (count_whitespace_tokens(g.solver_prompts[j]) >
            static_cast<std::size_t>(cfg.max_prompt_tokens)) {
          p.format_valid = false;
          ++report.overlong;
        }
      }
      if (p.format_valid) tasks.push_back({i, j});
      g.problems.push_back(std::move(p));
    }
  }
  report.valid = tasks.size();

  if (tasks.empty()) {
    report.aborted = true;
    report.abort_reason = "no valid problems";
    for (const auto& g : groups) {
      if (g.dropped) report.dropped.push_back(*g.dropped);
    }
    if (ctx.batch_path) emit_batch({}, *ctx.batch_path);
    report.pool_size = ctx.pool.size();
    report.retries = ctx.policy.retry_count() + ctx.embedder.retry_count() - retries_before;
    report.policy_state = ctx.policy.save_state();
    return report;
  }

  std::vector<std::optional<std::string>> solve_errors(tasks.size());
  parallel_for(tasks.size(), cfg.parallelism, [&](std::size_t n) {
    const auto [i, j] = tasks[n];
    auto& g = groups[i];
    const Problem& p = g.problems[j];
    GenerationRequest req = base_request;
    req.stream_seed =
        derive_seed(ctx.seed, {static_cast<std::uint64_t>(t), kStreamSolve, i, j});
    try {
      auto completions = ctx.policy.solve(p, g.solver_prompts[j], req);
      if (completions.size() != static_cast<std::size_t>(G)) {
        throw BackendError("backend returned " + std::to_string(completions.size()) +
                           " solutions, expected " + std::to_string(G));
      }
      std::vector<SolutionAttempt> attempts;
      attempts.reserve(completions.size());
      for (auto& c : completions) attempts.push_back(make_attempt(p.id, std::move(c)));
      g.stats[j] = majority_vote(attempts, G);
      g.attempts[j] = std::move(attempts);
    } catch (const BackendError& e) {
      solve_errors[n] = e.what();
    }
  });
  for (std::size_t n = 0; n < tasks.size(); ++n) {
    auto& g = groups[tasks[n].group];
    if (solve_errors[n] && !g.dropped) {
      g.dropped = DroppedReference{g.group_id, "solve", *solve_errors[n]};
    }
  }

  // Embed the valid problems of each surviving group.
  parallel_for(k, cfg.parallelism, [&](std::size_t i) {
    auto& g = groups[i];
    if (g.dropped) return;
    std::vector<std::string> texts;
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < g.problems.size(); ++j) {
      if (g.problems[j].format_valid) {
        texts.push_back(g.problems[j].text);
        idx.push_back(j);
      }
    }
    if (texts.empty()) return;
    try {
      auto vectors = ctx.embedder.embed(texts);
      if (vectors.size() != texts.size()) throw BackendError("embedder returned wrong count");
      for (std::size_t n = 0; n < idx.size(); ++n) {
        if (vectors[n].size() != snapshot.pool->dimension()) {
          throw BackendError("embedding dimension differs from the pool");
        }
        g.problems[idx[n]].embedding = std::move(vectors[n]);
      }
    } catch (const BackendError& e) {
      g.dropped = DroppedReference{g.group_id, "embed", e.what()};
    }
  });

  // Sequential from here on: scoring, selection, emission, update, insertion.
  std::vector<GroupScores> group_scores;
  std::vector<ScoredProblem> candidates;
  std::vector<std::vector<ScoreBreakdown>> breakdowns(k);
  std::vector<double> all_novelty;
  for (std::size_t i = 0; i < k; ++i) {
    auto& g = groups[i];
    if (g.dropped) {
      report.dropped.push_back(*g.dropped);
      continue;
    }
    GroupScores gs{g.group_id, {}};
    for (std::size_t j = 0; j < g.problems.size(); ++j) {
      auto& p = g.problems[j];
      const SolveStats* stats = g.stats[j] ? &*g.stats[j] : nullptr;
      if (stats) p.solve_rate = stats->solve_rate;
      const ScoreBreakdown b = score_problem(p, stats, snapshot, cfg);
      breakdowns[i].push_back(b);
      gs.novelty.push_back(b.novelty);
      all_novelty.push_back(b.novelty);
      if (p.format_valid) candidates.push_back({p, b.novelty});
      report.scored.push_back({g.group_id, p, g.stats[j], b});
    }
    group_scores.push_back(std::move(gs));
  }
  report.mean_novelty = mean_of(all_novelty);

  if (candidates.empty()) {
    report.aborted = true;
    report.abort_reason = "no valid problems";
    if (ctx.batch_path) emit_batch({}, *ctx.batch_path);
    report.pool_size = ctx.pool.size();
    report.retries = ctx.policy.retry_count() + ctx.embedder.retry_count() - retries_before;
    report.policy_state = ctx.policy.save_state();
    return report;
  }

  const TeacherSelection teachers = select_teacher_groups(group_scores, m);
  const StudentSelection students = select_student_problems(candidates, m);
  report.teacher_groups = teachers.group_ids.size();
  report.student_problems = students.problems.size();
  report.teacher_shortfall = teachers.shortfall;
  report.student_shortfall = students.shortfall;

  auto group_index = [&](const std::string& group_id) {
    for (std::size_t i = 0; i < k; ++i) {
      if (groups[i].group_id == group_id) return i;
    }
    throw std::logic_error("unknown group " + group_id);
  };

  // Solve rates of every problem that reaches the batch, each counted once:
  // the solved members of selected teacher groups plus the selected students.
  std::map<std::string, double> selected_rate_by_id;

  std::vector<TeacherGroup> teacher_groups;
  for (const auto& id : teachers.group_ids) {
    const std::size_t i = group_index(id);
    const auto& g = groups[i];
    teacher_groups.push_back({id, g.prompt, g.completions, breakdowns[i]});
    for (std::size_t j = 0; j < g.problems.size(); ++j) {
      if (g.stats[j]) selected_rate_by_id[g.problems[j].id] = g.stats[j]->solve_rate;
    }
  }

  std::vector<StudentGroup> student_groups;
  for (const auto& p : students.problems) {
    const std::size_t i = group_index(p.id.substr(0, p.id.rfind("-q")));
    const std::size_t j = std::stoul(p.id.substr(p.id.rfind("-q") + 2));
    const auto& g = groups[i];
    student_groups.push_back(
        {p.id, g.solver_prompts[j], g.attempts[j], g.stats[j]->reference_answer});
    selected_rate_by_id[p.id] = g.stats[j]->solve_rate;
    report.selected_students.push_back(p);
  }
  std::vector<double> selected_rates;
  for (const auto& [id, rate] : selected_rate_by_id) selected_rates.push_back(rate);
  report.selected_solve_rate_mean = mean_of(selected_rates);
  report.selected_solve_rate_std = population_std(selected_rates);

  std::vector<TrainingSample> samples = assign_rewards(teacher_groups, student_groups, cfg, t);
  apply_group_advantages(samples, cfg.epsilon_std);
  report.samples = samples.size();
  {
    std::vector<double> tr, sr;
    for (const auto& s : samples) (s.role == Role::kTeacher ? tr : sr).push_back(s.reward);
    report.teacher_reward_mean = mean_of(tr);
    report.student_reward_mean = mean_of(sr);
  }
  if (ctx.batch_path) emit_batch(samples, *ctx.batch_path);

  ctx.policy.update(samples);

  std::vector<Problem> fresh;
  for (const auto& g : groups) {
    if (g.dropped) continue;
    for (const auto& p : g.problems) {
      if (p.format_valid) fresh.push_back(p);
    }
  }
  report.inserted = ctx.pool.insert_valid(fresh);
  report.pool_size = ctx.pool.size();
  report.retries = ctx.policy.retry_count() + ctx.embedder.retry_count() - retries_before;
  report.policy_state = ctx.policy.save_state();
  report.batch = std::move(samples);
  return report;
}

fs::path batch_file_path(const fs::path& output_dir, int iteration) {
  char name[64];
  std::snprintf(name, sizeof name, "batch_%06d.jsonl", iteration);
  return output_dir / "batches" / name;
}

namespace {

json config_json(const EngineConfig& cfg) {
  json j = json::object();
  for (const auto& [key, value] : to_key_values(cfg)) j[key] = value;
  return j;
}

void trim_metrics(const fs::path& path, int completed) {
  if (!fs::exists(path)) return;
  jsonl::truncate_partial_tail(path);
  std::string kept;
  for (const auto& line : jsonl::read_lines(path)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.at("iteration").get<int>() <= completed) kept += line + "\n";
  }
  jsonl::write_atomically(path, kept);
}

}  // namespace

RunResult run(const EngineConfig& cfg, PolicyBackend& policy, Embedder& embedder,
              const RunOptions& options) {
  if (options.iterations < 1) throw std::invalid_argument("iterations must be >= 1");

  std::optional<fs::path> pool_log, metrics_path, checkpoint_path;
  if (options.output_dir) {
    fs::create_directories(*options.output_dir / "batches");
    pool_log = *options.output_dir / "pool.jsonl";
    metrics_path = *options.output_dir / "metrics.jsonl";
    checkpoint_path = *options.output_dir / "checkpoint.json";
  }

  int completed = 0;
  std::optional<ProblemPool> pool;
  if (checkpoint_path && fs::exists(*checkpoint_path)) {
    std::ifstream in(*checkpoint_path);
    const json ck = json::parse(in);
    if (ck.at("config") != config_json(cfg)) {
      throw std::runtime_error("config differs from the checkpoint in " +
                               options.output_dir->string());
    }
    if (ck.at("seed").get<std::uint64_t>() != options.seed) {
      throw std::runtime_error("seed differs from the checkpoint in " +
                               options.output_dir->string());
    }
    if (ck.at("embedder").get<std::string>() != embedder.name()) {
      throw std::runtime_error("embedder differs from the checkpoint");
    }
    completed = ck.at("completed_iteration").get<int>();
    policy.load_state(ck.at("policy"));
    pool.emplace(ProblemPool::load(*pool_log, completed, cfg.dedup_pool));
    trim_metrics(*metrics_path, completed);
  } else {
    if (metrics_path) {
      std::error_code ec;
      fs::remove(*metrics_path, ec);
      for (const auto& entry : fs::directory_iterator(*options.output_dir / "batches")) {
        fs::remove(entry.path(), ec);
      }
    }
    pool.emplace(ProblemPool::create(cfg.seed_problem_text, embedder,
                                     PoolOptions{pool_log, cfg.dedup_pool}));
  }

  RunResult result{{}, completed + 1, std::move(*pool)};
  for (int t = completed + 1; t <= options.iterations; ++t) {
    IterationContext ctx{cfg, policy, embedder, result.pool, options.seed, options.templates,
                         std::nullopt};
    if (options.output_dir) {
      ctx.batch_path = batch_file_path(*options.output_dir, t);
      std::error_code ec;
      fs::remove(*ctx.batch_path, ec);
    }
    IterationReport report = run_iteration(t, ctx);

    if (metrics_path) {
      const std::vector<std::string> line = {report_json(report).dump()};
      jsonl::append_lines(*metrics_path, line);
      const json ck = {
          {"completed_iteration", t},
          {"seed", options.seed},
          {"config", config_json(cfg)},
          {"embedder", embedder.name()},
          {"policy", policy.save_state()},
      };
      jsonl::write_atomically(*checkpoint_path, ck.dump(2) + "\n");
    }
    if (options.on_iteration) options.on_iteration(report);
    if (!options.keep_details) {
      report.scored.clear();
      report.selected_students.clear();
      report.batch.clear();
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace selfplay
