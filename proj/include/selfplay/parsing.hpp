#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selfplay/types.hpp"

namespace selfplay {

// Which tag name carried the problem body. `question` is accepted as an alias
// of `problem`.
enum class ProblemTag { kProblem, kQuestion };

std::string_view problem_tag_name(ProblemTag tag);

struct TeacherParse {
  std::string problem_text;
  std::vector<std::string> concepts;
  bool format_valid = false;
  std::optional<ProblemTag> tag;
};

// Well formed iff, outside any <think> block, there is exactly one problem
// block with a non-empty body and exactly one <concepts> block holding one to
// three non-empty comma-separated items. Malformed input yields empty fields.
TeacherParse parse_teacher_output(std::string_view text);

struct StudentParse {
  std::optional<CanonicalAnswer> answer;
  std::size_t token_length = 0;
  bool format_valid = false;
};

// The last \boxed{...} occurrence (braces matched) carries the answer.
StudentParse parse_student_solution(std::string_view text);

std::size_t count_whitespace_tokens(std::string_view text);

SolutionAttempt make_attempt(std::string problem_id, std::string completion);

}  // namespace selfplay
