#pragma once

#include <string>
#include <string_view>

namespace selfplay {

// Prompt templates with a `{Problem}` placeholder. The defaults are the
// operative wire contract for problem generation and solving.
struct PromptTemplates {
  std::string teacher;
  std::string student;

  static PromptTemplates defaults();
};

inline constexpr std::string_view kProblemPlaceholder = "{Problem}";

// Substitutes every placeholder occurrence.
std::string render_prompt(std::string_view tmpl, std::string_view problem_text);

}  // namespace selfplay
