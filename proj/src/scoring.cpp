#include "selfplay/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace selfplay {

double slope_coefficient(const EngineConfig& cfg) {
  const double s_mid = (cfg.s_min + cfg.s_max) / 2.0;
  return (1.0 - 1.0 / cfg.group_size) / (s_mid - cfg.s_min);
}

double solvability_score(double solve_rate, const EngineConfig& cfg) {
  if (solve_rate < cfg.s_min || solve_rate > cfg.s_max) return 0.0;
  const double s_mid = (cfg.s_min + cfg.s_max) / 2.0;
  // slope * |s - s_mid| written as a fraction of the half-width on the side
  // of s, so the band edges land on exactly 1/G.
  const double half = solve_rate <= s_mid ? s_mid - cfg.s_min : cfg.s_max - s_mid;
  const double fraction = std::abs(solve_rate - s_mid) / half;
  return 1.0 - (1.0 - 1.0 / cfg.group_size) * fraction;
}

double length_score(double mean_length, const EngineConfig& cfg) {
  return std::min(mean_length / cfg.l_base, cfg.l_cap / cfg.l_base);
}

double diversity_score(std::span<const double> embedding, const PoolSnapshot& snapshot) {
  if (snapshot.pool == nullptr || snapshot.size == 0) {
    throw std::invalid_argument("diversity_score: empty pool");
  }
  return snapshot.pool->min_distance(embedding, snapshot.size);
}

double concept_diversity_score(std::span<const std::string> concepts,
                               const PoolSnapshot& snapshot) {
  if (snapshot.pool == nullptr) throw std::invalid_argument("concept_diversity_score: no pool");
  std::set<std::string> unique;
  for (const auto& c : concepts) unique.insert(normalize_concept(c));
  std::size_t known = 0;
  for (const auto& c : unique) {
    if (snapshot.pool->has_concept(c, snapshot.size)) ++known;
  }
  return static_cast<double>(unique.size() - known) / 3.0;
}

ScoreBreakdown novelty_score(double sol, double len, double div, double fmt,
                             const EngineConfig& cfg) {
  ScoreBreakdown b;
  b.sol = sol;
  b.len = len;
  b.div = div;
  b.fmt = fmt;
  b.novelty = cfg.w_sol * sol + cfg.w_len * len + cfg.w_div * div + cfg.w_fmt * fmt;
  return b;
}

double correctness_score(const SolutionAttempt& attempt,
                         const std::optional<CanonicalAnswer>& reference,
                         const EngineConfig& cfg) {
  const bool correct = reference && attempt.parsed_answer && *attempt.parsed_answer == *reference;
  return (correct ? 1.0 : 0.0) + cfg.w_fmt * (attempt.format_valid ? 1.0 : 0.0);
}

ScoreBreakdown score_problem(const Problem& problem, const SolveStats* stats,
                             const PoolSnapshot& snapshot, const EngineConfig& cfg) {
  if (!problem.format_valid || stats == nullptr) return novelty_score(0, 0, 0, 0, cfg);
  const double sol = solvability_score(stats->solve_rate, cfg);
  const double len = length_score(stats->mean_length, cfg);
  double div = 0.0;
  if (snapshot.pool != nullptr && snapshot.pool->has_text(problem.text, snapshot.size)) {
    // An exact repeat of a pooled problem adds nothing, whatever its vector.
  } else if (cfg.diversity_mode == DiversityMode::kConcept) {
    div = concept_diversity_score(problem.concepts, snapshot);
  } else {
    if (!problem.embedding) throw std::invalid_argument("score_problem: missing embedding");
    div = diversity_score(*problem.embedding, snapshot);
  }
  return novelty_score(sol, len, div, 1.0, cfg);
}

}  // namespace selfplay
