#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfplay {

using Embedding = std::vector<double>;

// Normalized final answer. Two answers are equal iff kind and value match.
struct CanonicalAnswer {
  enum class Kind { kInteger, kRational, kDecimal, kExpression };

  Kind kind = Kind::kExpression;
  std::string value;

  bool operator==(const CanonicalAnswer&) const = default;
};

std::string_view kind_name(CanonicalAnswer::Kind kind);

// A seed or generated question. Pool entries always have format_valid set and
// an embedding attached.
struct Problem {
  std::string id;
  std::string text;
  std::vector<std::string> concepts;
  std::optional<std::string> parent_id;  // absent only for seeds
  int iteration = 0;
  std::optional<Embedding> embedding;
  bool format_valid = false;
  // Solve rate observed when the problem was created; seeds have none.
  std::optional<double> solve_rate;

  bool operator==(const Problem&) const = default;
};

struct SolutionAttempt {
  std::string problem_id;
  std::string text;
  std::optional<CanonicalAnswer> parsed_answer;
  std::size_t token_length = 0;
  bool format_valid = false;
};

struct SolveStats {
  std::optional<CanonicalAnswer> reference_answer;
  double solve_rate = 0.0;
  int attempts = 0;
  int reference_count = 0;
  double mean_length = 0.0;
};

struct ScoreBreakdown {
  double sol = 0.0;
  double len = 0.0;
  double div = 0.0;
  double fmt = 0.0;
  double novelty = 0.0;

  bool operator==(const ScoreBreakdown&) const = default;
};

enum class Role { kTeacher, kStudent };

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);

struct TrainingSample {
  Role role = Role::kTeacher;
  std::string group_id;
  std::string prompt;
  std::string completion;
  double reward = 0.0;
  double advantage = 0.0;
  int iteration = 0;
  std::string token_unit = "whitespace";

  bool operator==(const TrainingSample&) const = default;
};

}  // namespace selfplay
