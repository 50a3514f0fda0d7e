#pragma once

#include <span>
#include <string>
#include <vector>

#include "selfplay/config.hpp"
#include "selfplay/pool.hpp"
#include "selfplay/types.hpp"

namespace selfplay {

// (1 - 1/G) / (s_mid - s_min): the triangle's slope, derived from the band.
double slope_coefficient(const EngineConfig& cfg);

// Triangle over [s_min, s_max]: 1 at the midpoint, 1/G at both edges, 0
// outside the band.
double solvability_score(double solve_rate, const EngineConfig& cfg);

// min(l/l_base, l_cap/l_base).
double length_score(double mean_length, const EngineConfig& cfg);

// Min cosine distance to the snapshot's entries.
double diversity_score(std::span<const double> embedding, const PoolSnapshot& snapshot);

// Share of the (at most three) concepts not present in the snapshot, over 3.
double concept_diversity_score(std::span<const std::string> concepts,
                               const PoolSnapshot& snapshot);

ScoreBreakdown novelty_score(double sol, double len, double div, double fmt,
                             const EngineConfig& cfg);

// 1[parsed == reference] + w_fmt * 1[format_valid].
double correctness_score(const SolutionAttempt& attempt,
                         const std::optional<CanonicalAnswer>& reference,
                         const EngineConfig& cfg);

// Full teacher score for one generated problem. Format-invalid problems are
// never solved; they get all-zero sub-scores.
ScoreBreakdown score_problem(const Problem& problem, const SolveStats* stats,
                             const PoolSnapshot& snapshot, const EngineConfig& cfg);

}  // namespace selfplay
