#include "selfplay/prompts.hpp"

namespace selfplay {

namespace {

constexpr std::string_view kTeacherTemplate =
    "You are given a math problem: {Problem}\n"
    "\n"
    "Your task is to create a math problem that is conceptually different from the provided "
    "problem. The new problem must be answerable with a numerical value or mathematical "
    "expression.\n"
    "\n"
    "First, explain how your new problem differs conceptually from the original problem inside "
    "the <think>...</think> tags. Then, present your new problem inside the "
    "<problem>...</problem> tags. Finally, identify at most three math concepts required to "
    "solve your problem. Provide these concepts in a comma separated list inside the "
    "<concepts>...</concepts> tags.";

constexpr std::string_view kStudentTemplate =
    "You are a helpful AI Assistant, designed to provide well-reasoned and detailed responses. "
    "You FIRST think about the reasoning process step by step and then provide the user with "
    "the answer. The last line of your response should be 'Therefore, the final answer is: "
    "$\\boxed{ANSWER}$' (without quotes) where ANSWER is just the final number or expression "
    "that solves the problem.\n"
    "\n"
    "{Problem}";

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  return {std::string(kTeacherTemplate), std::string(kStudentTemplate)};
}

std::string render_prompt(std::string_view tmpl, std::string_view problem_text) {
  std::string out;
  out.reserve(tmpl.size() + problem_text.size());
  while (true) {
    const auto pos = tmpl.find(kProblemPlaceholder);
    if (pos == std::string_view::npos) {
      out.append(tmpl);
      break;
    }
    out.append(tmpl.substr(0, pos));
    out.append(problem_text);
    tmpl.remove_prefix(pos + kProblemPlaceholder.size());
  }
  return out;
}

}  // namespace selfplay
