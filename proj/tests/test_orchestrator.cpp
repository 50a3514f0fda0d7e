#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "selfplay/batch.hpp"
#include "selfplay/jsonl.hpp"
#include "selfplay/orchestrator.hpp"
#include "selfplay/rng.hpp"
#include "selfplay/synthetic.hpp"
#include "test_util.hpp"

using namespace selfplay;

namespace {

EngineConfig small_config() {
  EngineConfig cfg;
  cfg.group_size = 4;
  cfg.batch_size = 32;
  cfg.parallelism = 3;
  return cfg;
}

// Fails selected calls, delegating the rest.
class FlakyPolicy final : public PolicyBackend {
 public:
  explicit FlakyPolicy(PolicyBackend& inner) : inner_(inner) {}
  BackendInfo info() const override { return inner_.info(); }
  std::vector<std::string> generate_problems(const Problem& ref, std::string_view prompt,
                                             const GenerationRequest& r) override {
    if (fail_generate_for_seed && r.stream_seed == *fail_generate_for_seed) {
      throw BackendError("injected generate failure");
    }
    auto out = inner_.generate_problems(ref, prompt, r);
    if (short_generate) out.pop_back();
    return out;
  }
  std::vector<std::string> solve(const Problem& p, std::string_view prompt,
                                 const GenerationRequest& r) override {
    if (!fail_solve_prefix.empty() && p.id.starts_with(fail_solve_prefix)) {
      throw BackendError("injected solve failure");
    }
    return inner_.solve(p, prompt, r);
  }
  void update(std::span<const TrainingSample> s) override { inner_.update(s); }
  nlohmann::json save_state() const override { return inner_.save_state(); }
  void load_state(const nlohmann::json& j) override { inner_.load_state(j); }

  std::optional<std::uint64_t> fail_generate_for_seed;
  std::string fail_solve_prefix;
  bool short_generate = false;

 private:
  PolicyBackend& inner_;
};

class FailingEmbedder final : public Embedder {
 public:
  std::string name() const override { return inner.name(); }
  std::vector<Embedding> embed(std::span<const std::string> texts) override {
    if (armed && !texts.empty() && texts.front().find(trigger) != std::string::npos) {
      throw BackendError("injected embed failure");
    }
    return inner.embed(texts);
  }
  HashedEmbedder inner;
  bool armed = false;
  std::string trigger;
};

std::map<std::string, std::size_t> group_sizes(const std::vector<TrainingSample>& batch) {
  std::map<std::string, std::size_t> n;
  for (const auto& s : batch) ++n[std::string(role_name(s.role)) + "/" + s.group_id];
  return n;
}

std::string dir_fingerprint(const std::filesystem::path& dir, int iterations) {
  std::string out = testutil::read_file(dir / "pool.jsonl") + "\n--\n" +
                    testutil::read_file(dir / "metrics.jsonl");
  for (int t = 1; t <= iterations; ++t) {
    out += "\n--\n" + testutil::read_file(batch_file_path(dir, t));
  }
  return out;
}

}  // namespace

TEST_CASE("first iteration at the defaults") {
  const EngineConfig cfg;
  SyntheticAgent agent(SyntheticSettings{}, true);
  HashedEmbedder emb;
  auto pool = ProblemPool::create(cfg.seed_problem_text, emb);
  const auto templates = PromptTemplates::defaults();
  IterationContext ctx{cfg, agent, emb, pool, 7, templates, std::nullopt};
  const auto report = run_iteration(1, ctx);

  CHECK(report.references == 32);
  CHECK(report.generated == 256);
  CHECK_FALSE(report.aborted);
  CHECK(report.batch.size() <= 256);
  CHECK(report.batch.size() == report.samples);
  CHECK(report.teacher_groups == 16);
  CHECK(report.student_problems == 16);
  CHECK(report.samples == 256);
  for (const auto& r : report.scored) CHECK(r.problem.parent_id == "seed-0");
  for (const auto& [group, n] : group_sizes(report.batch)) {
    INFO(group);
    CHECK(n == 8);
  }
  CHECK(pool.size() == 1 + report.inserted);
  CHECK(report.inserted <= report.valid);
}

TEST_CASE("scores use the iteration-start snapshot") {
  const EngineConfig cfg = small_config();
  SyntheticAgent agent(SyntheticSettings{}, true);
  HashedEmbedder emb;
  auto pool = ProblemPool::create(cfg.seed_problem_text, emb);
  const auto templates = PromptTemplates::defaults();
  IterationContext ctx{cfg, agent, emb, pool, 3, templates, std::nullopt};
  run_iteration(1, ctx);
  const std::size_t before = pool.size();
  const auto report = run_iteration(2, ctx);
  for (const auto& r : report.scored) {
    if (!r.problem.format_valid) continue;
    CHECK(r.scores.div == pool.min_distance(*r.problem.embedding, before));
  }
}

TEST_CASE("all-malformed iteration aborts") {
  testutil::TempDir dir;
  const EngineConfig cfg = small_config();
  SyntheticSettings s;
  s.invalid_rate = 1.0;
  SyntheticAgent agent(s, true);
  const auto state_before = agent.state();
  HashedEmbedder emb;
  auto pool = ProblemPool::create(cfg.seed_problem_text, emb);
  const auto templates = PromptTemplates::defaults();
  IterationContext ctx{cfg, agent, emb, pool, 1, templates, dir / "batch.jsonl"};
  const auto report = run_iteration(1, ctx);
  CHECK(report.aborted);
  CHECK(report.abort_reason == "no valid problems");
  CHECK(report.valid == 0);
  CHECK(report.generated == 32);
  CHECK(pool.size() == 1);
  CHECK(agent.state() == state_before);
  CHECK(std::filesystem::file_size(dir / "batch.jsonl") == 0);
}

TEST_CASE("failures drop only the affected reference") {
  const EngineConfig cfg = small_config();
  SyntheticAgent agent(SyntheticSettings{}, true);
  FlakyPolicy flaky(agent);
  HashedEmbedder emb;
  auto pool = ProblemPool::create(cfg.seed_problem_text, emb);
  const auto templates = PromptTemplates::defaults();
  IterationContext ctx{cfg, flaky, emb, pool, 5, templates, std::nullopt};

  flaky.fail_generate_for_seed = derive_seed(5, {1, 1, 2});
  flaky.fail_solve_prefix = "t000001-r005";
  const auto report = run_iteration(1, ctx);
  REQUIRE(report.dropped.size() == 2);
  CHECK(report.dropped[0].group_id == "t000001-r002");
  CHECK(report.dropped[0].stage == "generate");
  CHECK(report.dropped[1].group_id == "t000001-r005");
  CHECK(report.dropped[1].stage == "solve");
  CHECK(report.generated == 7 * 4);
  for (const auto& s : report.batch) {
    CHECK_FALSE(s.group_id.starts_with("t000001-r002"));
    CHECK_FALSE(s.group_id.starts_with("t000001-r005"));
  }
  for (const auto& p : pool.problems()) CHECK_FALSE(p.id.starts_with("t000001-r005"));
}

TEST_CASE("a short teacher response is a dropped reference, never a partial group") {
  const EngineConfig cfg = small_config();
  SyntheticAgent agent(SyntheticSettings{}, true);
  FlakyPolicy flaky(agent);
  flaky.short_generate = true;
  HashedEmbedder emb;
  auto pool = ProblemPool::create(cfg.seed_problem_text, emb);
  const auto templates = PromptTemplates::defaults();
  IterationContext ctx{cfg, flaky, emb, pool, 5, templates, std::nullopt};
  const auto report = run_iteration(1, ctx);
  CHECK(report.aborted);
  CHECK(report.dropped.size() == 8);
  CHECK(pool.size() == 1);
}

TEST_CASE("embedding failure drops the group") {
  const EngineConfig cfg = small_config();
  SyntheticSettings s;
  s.invalid_rate = 0;
  SyntheticAgent agent(s, true);
  FailingEmbedder emb;
  auto pool = ProblemPool::create(cfg.seed_problem_text, emb);
  const auto templates = PromptTemplates::defaults();
  IterationContext ctx{cfg, agent, emb, pool, 5, templates, std::nullopt};
  // Any problem text works as a trigger; take one the first group will emit.
  GenerationRequest req;
  req.group_size = 4;
  req.temperature = cfg.temperature;
  req.max_tokens = cfg.max_solution_tokens;
  req.stream_seed = derive_seed(5, {1, 1, 0});
  const auto first = agent.generate_problems(pool[0], "", req);
  emb.trigger = first[0].substr(first[0].find("<problem>") + 9, 30);
  emb.armed = true;
  const auto report = run_iteration(1, ctx);
  REQUIRE(report.dropped.size() == 1);
  CHECK(report.dropped[0].group_id == "t000001-r000");
  CHECK(report.dropped[0].stage == "embed");
}

TEST_CASE("runs are deterministic across thread counts") {
  testutil::TempDir a, b;
  EngineConfig cfg = small_config();
  HashedEmbedder emb;
  RunOptions opts;
  opts.iterations = 4;
  opts.seed = 11;

  SyntheticAgent agent_a(SyntheticSettings{}, true);
  opts.output_dir = a.path();
  cfg.parallelism = 1;
  run(cfg, agent_a, emb, opts);

  SyntheticAgent agent_b(SyntheticSettings{}, true);
  opts.output_dir = b.path();
  EngineConfig cfg_b = cfg;
  cfg_b.parallelism = 4;
  run(cfg_b, agent_b, emb, opts);

  // Metrics carry no config, so everything must match byte for byte.
  CHECK(dir_fingerprint(a.path(), 4) == dir_fingerprint(b.path(), 4));
  CHECK(agent_a.state() == agent_b.state());
}

TEST_CASE("resume after an interrupted iteration equals an uninterrupted run") {
  testutil::TempDir straight, resumed;
  const EngineConfig cfg = small_config();
  HashedEmbedder emb;
  RunOptions opts;
  opts.seed = 21;

  SyntheticAgent a(SyntheticSettings{}, true);
  opts.iterations = 6;
  opts.output_dir = straight.path();
  run(cfg, a, emb, opts);

  SyntheticAgent b(SyntheticSettings{}, true);
  opts.iterations = 3;
  opts.output_dir = resumed.path();
  run(cfg, b, emb, opts);
  // Crash partway through iteration 4: some pool records and a torn line
  // were written, the metrics line and batch file are incomplete, and no
  // checkpoint was taken.
  const std::string straight_pool = testutil::read_file(straight / "pool.jsonl");
  std::vector<std::string> iter4;
  for (const auto& line : jsonl::read_lines(straight / "pool.jsonl")) {
    if (line.find("\"iteration\":4") != std::string::npos) iter4.push_back(line);
  }
  REQUIRE(iter4.size() >= 2);
  jsonl::append_lines(resumed / "pool.jsonl", std::vector<std::string>{iter4[0], iter4[1]});
  {
    std::ofstream torn(resumed / "pool.jsonl", std::ios::app);
    torn << iter4[1].substr(0, 20);
    std::ofstream metrics(resumed / "metrics.jsonl", std::ios::app);
    metrics << "{\"iteration\":4,\"sch";
    std::ofstream batch(batch_file_path(resumed.path(), 4));
    batch << "{\"iteration\":4}\n{\"rol";
  }

  SyntheticAgent c(SyntheticSettings{}, true);
  opts.iterations = 6;
  const auto result = run(cfg, c, emb, opts);
  CHECK(result.start_iteration == 4);
  CHECK(result.reports.size() == 3);
  CHECK(dir_fingerprint(straight.path(), 6) == dir_fingerprint(resumed.path(), 6));
  CHECK(c.state() == a.state());
}

TEST_CASE("resume rejects a changed config or seed") {
  testutil::TempDir dir;
  EngineConfig cfg = small_config();
  HashedEmbedder emb;
  SyntheticAgent agent(SyntheticSettings{}, true);
  RunOptions opts;
  opts.iterations = 1;
  opts.output_dir = dir.path();
  run(cfg, agent, emb, opts);
  opts.iterations = 2;
  EngineConfig other = cfg;
  other.s_min = 0.4;
  CHECK_THROWS_WITH(run(other, agent, emb, opts), doctest::Contains("config differs"));
  opts.seed = 99;
  CHECK_THROWS_WITH(run(cfg, agent, emb, opts), doctest::Contains("seed differs"));
}

TEST_CASE("pool grows monotonically and keeps the seed") {
  const EngineConfig cfg = small_config();
  HashedEmbedder emb;
  SyntheticAgent agent(SyntheticSettings{}, true);
  RunOptions opts;
  opts.iterations = 8;
  std::vector<std::size_t> sizes;
  opts.on_iteration = [&](const IterationReport& r) { sizes.push_back(r.pool_size); };
  const auto result = run(cfg, agent, emb, opts);
  REQUIRE(sizes.size() == 8);
  CHECK(sizes.front() >= 1);
  for (std::size_t i = 1; i < sizes.size(); ++i) CHECK(sizes[i] >= sizes[i - 1]);
  CHECK(result.pool[0].id == "seed-0");
  std::set<std::string> texts;
  for (const auto& p : result.pool.problems()) CHECK(texts.insert(p.text).second);
}

TEST_CASE("metrics lines carry the schema version") {
  testutil::TempDir dir;
  const EngineConfig cfg = small_config();
  HashedEmbedder emb;
  SyntheticAgent agent(SyntheticSettings{}, true);
  RunOptions opts;
  opts.iterations = 2;
  opts.output_dir = dir.path();
  run(cfg, agent, emb, opts);
  const auto lines = jsonl::read_lines(dir / "metrics.jsonl");
  REQUIRE(lines.size() == 2);
  const auto j = nlohmann::json::parse(lines[1]);
  CHECK(j["schema_version"] == kMetricsSchemaVersion);
  CHECK(j["iteration"] == 2);
  CHECK(j.contains("selected_solve_rate_mean"));
  CHECK(read_batch(batch_file_path(dir.path(), 2)).size() == j["samples"].get<std::size_t>());
}

TEST_CASE("parallel_for rethrows") {
  std::atomic<int> count{0};
  CHECK_THROWS_AS(parallel_for(20, 4,
                               [&](std::size_t i) {
                                 ++count;
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  CHECK(count == 20);
}
