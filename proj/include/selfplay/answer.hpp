#pragma once

#include <string>
#include <string_view>

#include "selfplay/types.hpp"

namespace selfplay {

// Normalizes a raw final answer:
//  - drops `$` and LaTeX spacing commands (\, \; \: \! \quad \qquad "\ "),
//    plus \left / \right
//  - integers lose sign noise and leading zeros ("+007" -> 7, "-0" -> 0)
//  - a/b and \frac{a}{b} reduce to lowest terms with a positive denominator;
//    a unit denominator yields an integer
//  - decimals drop trailing zeros ("-0.50" -> -0.5, "2.0" -> 2)
//  - anything else is an expression string with whitespace runs collapsed
// Idempotent: canonicalize(render(canonicalize(s))) == canonicalize(s).
CanonicalAnswer canonicalize(std::string_view raw);

std::string render(const CanonicalAnswer& answer);

}  // namespace selfplay
