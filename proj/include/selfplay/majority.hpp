#pragma once

#include <span>

#include "selfplay/types.hpp"

namespace selfplay {

// Reference answer and solve rate over one problem's G attempts.
//
// The reference is the most frequent parsed answer; ties go to the
// lexicographically smallest rendering so the result does not depend on
// attempt order. Unparsed attempts count toward G but never vote.
// Throws std::invalid_argument when attempts.size() != G or G < 1.
SolveStats majority_vote(std::span<const SolutionAttempt> attempts, int group_size);

}  // namespace selfplay
