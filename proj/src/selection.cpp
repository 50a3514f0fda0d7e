#include "selfplay/selection.hpp"

#include <algorithm>
#include <numeric>

namespace selfplay {

double population_variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

TeacherSelection select_teacher_groups(std::span<const GroupScores> groups, std::size_t m) {
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(groups.size());
  for (const auto& g : groups) ranked.emplace_back(population_variance(g.novelty), &g.group_id);
  const std::size_t take = std::min(m, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                    ranked.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return *a.second < *b.second;
                    });
  TeacherSelection out;
  out.shortfall = ranked.size() < m;
  for (std::size_t i = 0; i < take; ++i) out.group_ids.push_back(*ranked[i].second);
  return out;
}

StudentSelection select_student_problems(std::span<const ScoredProblem> problems, std::size_t m) {
  std::vector<const ScoredProblem*> ranked;
  ranked.reserve(problems.size());
  for (const auto& p : problems) ranked.push_back(&p);
  const std::size_t take = std::min(m, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                    ranked.end(), [](const ScoredProblem* a, const ScoredProblem* b) {
                      if (a->novelty != b->novelty) return a->novelty > b->novelty;
                      return a->problem.id < b->problem.id;
                    });
  StudentSelection out;
  out.shortfall = ranked.size() < m;
  for (std::size_t i = 0; i < take; ++i) out.problems.push_back(ranked[i]->problem);
  return out;
}

}  // namespace selfplay
