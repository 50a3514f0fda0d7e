#include "selfplay/majority.hpp"

#include <map>
#include <stdexcept>
#include <string>

#include "selfplay/answer.hpp"

namespace selfplay {

SolveStats majority_vote(std::span<const SolutionAttempt> attempts, int group_size) {
  if (group_size < 1 || attempts.size() != static_cast<std::size_t>(group_size)) {
    throw std::invalid_argument("majority_vote: expected " + std::to_string(group_size) +
                                " attempts, got " + std::to_string(attempts.size()));
  }

  std::map<std::string, std::pair<const CanonicalAnswer*, int>> tally;
  double total_length = 0.0;
  for (const auto& attempt : attempts) {
    total_length += static_cast<double>(attempt.token_length);
    if (!attempt.parsed_answer) continue;
    auto& slot = tally[render(*attempt.parsed_answer)];
    slot.first = &*attempt.parsed_answer;
    ++slot.second;
  }

  SolveStats stats;
  stats.attempts = group_size;
  stats.mean_length = total_length / group_size;
  // std::map iterates renderings in ascending order, so a strict > keeps the
  // smallest among tied maxima.
  for (const auto& [key, entry] : tally) {
    if (entry.second > stats.reference_count) {
      stats.reference_count = entry.second;
      stats.reference_answer = *entry.first;
    }
  }
  stats.solve_rate = static_cast<double>(stats.reference_count) / group_size;
  return stats;
}

}  // namespace selfplay
