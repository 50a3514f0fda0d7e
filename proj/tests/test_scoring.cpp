#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "selfplay/answer.hpp"
#include "selfplay/embedder.hpp"
#include "selfplay/parsing.hpp"
#include "selfplay/pool.hpp"
#include "selfplay/scoring.hpp"

using namespace selfplay;

namespace {

// Two-segment linear interpolation between (s_min, 1/G), (s_mid, 1), (s_max, 1/G).
double triangle_oracle(double s, double lo, double hi, int g) {
  if (s < lo || s > hi) return 0.0;
  const double mid = (lo + hi) / 2.0;
  const double edge = 1.0 / g;
  if (s <= mid) return edge + (1.0 - edge) * (s - lo) / (mid - lo);
  return edge + (1.0 - edge) * (hi - s) / (hi - mid);
}

Problem pooled(std::string id, std::string text, Embedding e, std::vector<std::string> concepts) {
  Problem p;
  p.id = std::move(id);
  p.text = std::move(text);
  normalize(e);
  p.embedding = std::move(e);
  p.concepts = std::move(concepts);
  p.format_valid = true;
  return p;
}

}  // namespace

TEST_CASE("triangle at the defaults") {
  const EngineConfig cfg;
  CHECK(solvability_score(0.7, cfg) == 1.0);
  CHECK(solvability_score(0.5, cfg) == 0.125);
  CHECK(solvability_score(0.9, cfg) == 0.125);
  CHECK(solvability_score(0.49, cfg) == 0.0);
  CHECK(solvability_score(0.91, cfg) == 0.0);
  CHECK(solvability_score(0.0, cfg) == 0.0);
  CHECK(solvability_score(1.0, cfg) == 0.0);
  CHECK(slope_coefficient(cfg) == doctest::Approx(4.375).epsilon(1e-12));
}

TEST_CASE("triangle matches interpolation for other bands") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    EngineConfig cfg;
    cfg.s_min = 0.05 + 0.4 * u(gen);
    cfg.s_max = cfg.s_min + 0.05 + (0.95 - cfg.s_min - 0.05) * u(gen);
    cfg.group_size = 1 + static_cast<int>(u(gen) * 16);
    for (int i = 0; i <= 100; ++i) {
      const double s = i / 100.0;
      CHECK(solvability_score(s, cfg) ==
            doctest::Approx(triangle_oracle(s, cfg.s_min, cfg.s_max, cfg.group_size))
                .epsilon(1e-12));
    }
    CHECK(solvability_score(cfg.s_min, cfg) == doctest::Approx(1.0 / cfg.group_size));
  }
}

TEST_CASE("length score saturates at l_cap/l_base") {
  const EngineConfig cfg;
  CHECK(length_score(0, cfg) == 0.0);
  CHECK(length_score(500, cfg) == 0.5);
  CHECK(length_score(2048, cfg) == 2.048);
  CHECK(length_score(10000, cfg) == 2.048);
}

TEST_CASE("novelty is the weighted sum") {
  EngineConfig cfg;
  cfg.w_sol = 2;
  cfg.w_len = 0.5;
  cfg.w_div = 3;
  cfg.w_fmt = 0.1;
  const auto b = novelty_score(0.5, 0.2, 0.3, 1, cfg);
  CHECK(b.novelty == doctest::Approx(1.0 + 0.1 + 0.9 + 0.1).epsilon(1e-15));
  CHECK(b.sol == 0.5);
  CHECK(b.fmt == 1.0);
}

TEST_CASE("correctness score") {
  const EngineConfig cfg;
  const auto ref = selfplay::canonicalize("12");
  CHECK(correctness_score(make_attempt("p", "\\boxed{12.0}"), ref, cfg) == 1.1);
  CHECK(correctness_score(make_attempt("p", "\\boxed{7}"), ref, cfg) == 0.1);
  CHECK(correctness_score(make_attempt("p", "no box"), ref, cfg) == 0.0);
  CHECK(correctness_score(make_attempt("p", "\\boxed{7}"), std::nullopt, cfg) == 0.1);
}

TEST_CASE("diversity against a snapshot") {
  std::vector<Problem> seeds = {pooled("a", "A", {1, 0, 0}, {"arithmetic"}),
                                pooled("b", "B", {0, 1, 0}, {"Geometry"})};
  const ProblemPool pool = ProblemPool::from_problems(seeds);
  const Embedding e = {0.6, 0.8, 0};
  CHECK(diversity_score(e, pool.snapshot()) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(diversity_score(e, PoolSnapshot{&pool, 1}) == doctest::Approx(0.4).epsilon(1e-12));

  // Exact duplicates of any entry are worth nothing.
  for (const auto& p : seeds) CHECK(diversity_score(*p.embedding, pool.snapshot()) == 0.0);

  const std::vector<std::string> concepts = {"  GEOMETRY ", "algebra", "number theory"};
  CHECK(concept_diversity_score(concepts, pool.snapshot()) == doctest::Approx(2.0 / 3.0));
  CHECK(concept_diversity_score(concepts, PoolSnapshot{&pool, 1}) == 1.0);
  const std::vector<std::string> repeated = {"logic", "Logic"};
  CHECK(concept_diversity_score(repeated, pool.snapshot()) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("duplicate problem texts score zero diversity under the hashed embedder") {
  HashedEmbedder emb;
  const std::vector<std::string> texts = {"What is 1+1?", "Find x if 2x=6.",
                                          "A train leaves at noon going 60 mph."};
  std::vector<Problem> entries;
  const auto vecs = emb.embed(texts);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    entries.push_back(pooled("p" + std::to_string(i), texts[i], vecs[i], {"x"}));
  }
  const ProblemPool pool = ProblemPool::from_problems(entries);
  SolveStats stats;
  stats.solve_rate = 0.7;
  for (const auto& t : texts) {
    CHECK(diversity_score(emb.embed_one(t), pool.snapshot()) == doctest::Approx(0.0).epsilon(1e-15));
    Problem dup = pooled("new", t, emb.embed_one(t), {"x"});
    for (auto mode : {DiversityMode::kEmbedding, DiversityMode::kConcept}) {
      EngineConfig cfg;
      cfg.diversity_mode = mode;
      CHECK(score_problem(dup, &stats, pool.snapshot(), cfg).div == 0.0);
    }
  }
  // Outside the snapshot the earlier copy does not count.
  Problem later = pooled("new", texts[2], emb.embed_one(texts[2]), {"x"});
  CHECK(score_problem(later, &stats, PoolSnapshot{&pool, 2}, EngineConfig{}).div > 0.1);
}

TEST_CASE("score_problem") {
  std::vector<Problem> seeds = {pooled("a", "A", {1, 0, 0}, {"arithmetic"})};
  const ProblemPool pool = ProblemPool::from_problems(seeds);
  const EngineConfig cfg;

  Problem p = pooled("q", "Q", {0, 1, 0}, {"algebra"});
  SolveStats stats;
  stats.solve_rate = 0.75;
  stats.mean_length = 250;
  const auto b = score_problem(p, &stats, pool.snapshot(), cfg);
  CHECK(b.sol == doctest::Approx(1.0 - 0.875 * 0.25).epsilon(1e-12));
  CHECK(b.len == 0.25);
  CHECK(b.div == doctest::Approx(1.0));
  CHECK(b.fmt == 1.0);
  CHECK(b.novelty == doctest::Approx(b.sol + 0.25 + 1.0 + 0.1).epsilon(1e-15));

  p.format_valid = false;
  CHECK(score_problem(p, &stats, pool.snapshot(), cfg) == ScoreBreakdown{});
  p.format_valid = true;
  CHECK(score_problem(p, nullptr, pool.snapshot(), cfg) == ScoreBreakdown{});

  EngineConfig concept_cfg;
  concept_cfg.diversity_mode = DiversityMode::kConcept;
  p.embedding.reset();
  CHECK(score_problem(p, &stats, pool.snapshot(), concept_cfg).div == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS(score_problem(p, &stats, pool.snapshot(), cfg));
}
