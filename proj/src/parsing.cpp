#include "selfplay/parsing.hpp"

#include <cctype>

#include "selfplay/answer.hpp"

namespace selfplay {
namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

// Removes every <think>...</think> span. An unterminated block swallows the
// rest of the text.
std::string strip_think_blocks(std::string_view text) {
  constexpr std::string_view kOpen = "<think>";
  constexpr std::string_view kClose = "</think>";
  std::string out;
  out.reserve(text.size());
  while (!text.empty()) {
    const auto open = text.find(kOpen);
    if (open == std::string_view::npos) {
      out.append(text);
      break;
    }
    out.append(text.substr(0, open));
    const auto close = text.find(kClose, open + kOpen.size());
    if (close == std::string_view::npos) break;
    text.remove_prefix(close + kClose.size());
  }
  return out;
}

struct TagScan {
  std::size_t blocks = 0;  // opening tags seen
  bool balanced = true;
  std::string_view body;
};

TagScan scan_tag(std::string_view text, std::string_view name) {
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  TagScan scan;
  scan.blocks = count_occurrences(text, open);
  const std::size_t closes = count_occurrences(text, close);
  scan.balanced = scan.blocks == closes;
  if (scan.blocks == 1 && closes == 1) {
    const auto b = text.find(open) + open.size();
    const auto e = text.find(close);
    if (e < b) {
      scan.balanced = false;
    } else {
      scan.body = text.substr(b, e - b);
    }
  }
  return scan;
}

}  // namespace

std::string_view problem_tag_name(ProblemTag tag) {
  return tag == ProblemTag::kQuestion ? "question" : "problem";
}

TeacherParse parse_teacher_output(std::string_view text) {
  const std::string visible = strip_think_blocks(text);

  const TagScan problem = scan_tag(visible, "problem");
  const TagScan question = scan_tag(visible, "question");
  if (problem.blocks + question.blocks != 1 || !problem.balanced || !question.balanced) {
    return {};
  }
  const TagScan& chosen = problem.blocks == 1 ? problem : question;
  const std::string_view body = trim(chosen.body);
  if (body.empty()) return {};

  const TagScan concepts = scan_tag(visible, "concepts");
  if (concepts.blocks != 1 || !concepts.balanced) return {};

  std::vector<std::string> items;
  std::string_view rest = concepts.body;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (item.empty()) return {};
    items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (items.empty() || items.size() > 3) return {};

  TeacherParse out;
  out.problem_text = std::string(body);
  out.concepts = std::move(items);
  out.format_valid = true;
  out.tag = problem.blocks == 1 ? ProblemTag::kProblem : ProblemTag::kQuestion;
  return out;
}

std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

StudentParse parse_student_solution(std::string_view text) {
  constexpr std::string_view kBoxed = "\\boxed{";
  StudentParse out;
  out.token_length = count_whitespace_tokens(text);

  const auto pos = text.rfind(kBoxed);
  if (pos == std::string_view::npos) return out;
  const std::size_t start = pos + kBoxed.size();
  int depth = 1;
  std::size_t i = start;
  for (; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      if (--depth == 0) break;
    }
  }
  if (depth != 0) return out;

  const std::string_view content = trim(text.substr(start, i - start));
  if (content.empty()) return out;
  CanonicalAnswer answer = canonicalize(content);
  if (answer.value.empty()) return out;
  out.answer = std::move(answer);
  out.format_valid = true;
  return out;
}

SolutionAttempt make_attempt(std::string problem_id, std::string completion) {
  const StudentParse parsed = parse_student_solution(completion);
  SolutionAttempt attempt;
  attempt.problem_id = std::move(problem_id);
  attempt.text = std::move(completion);
  attempt.parsed_answer = parsed.answer;
  attempt.token_length = parsed.token_length;
  attempt.format_valid = parsed.format_valid;
  return attempt;
}

}  // namespace selfplay
