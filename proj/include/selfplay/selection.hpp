#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "selfplay/types.hpp"

namespace selfplay {

struct GroupScores {
  std::string group_id;
  std::vector<double> novelty;  // one per generated problem, G entries
};

struct ScoredProblem {
  Problem problem;
  double novelty = 0.0;
};

struct TeacherSelection {
  std::vector<std::string> group_ids;
  bool shortfall = false;
};

struct StudentSelection {
  std::vector<Problem> problems;
  bool shortfall = false;
};

double population_variance(std::span<const double> values);

// The m groups with the largest population variance of novelty, ties broken
// by ascending group_id. Fewer than m groups selects all and sets shortfall.
TeacherSelection select_teacher_groups(std::span<const GroupScores> groups, std::size_t m);

// Top m problems by novelty, ties broken by ascending problem id.
StudentSelection select_student_problems(std::span<const ScoredProblem> problems, std::size_t m);

}  // namespace selfplay
