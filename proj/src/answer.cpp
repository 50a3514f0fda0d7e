#include "selfplay/answer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <numeric>
#include <optional>

namespace selfplay {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_digit(c)) return false;
  }
  return true;
}

// One pass of markup removal; returns true when something was removed.
bool strip_once(std::string& s) {
  static constexpr std::array<std::string_view, 5> kWordCommands = {
      "\\qquad", "\\quad", "\\left", "\\right", "\\displaystyle"};
  static constexpr std::array<std::string_view, 5> kSymbolCommands = {
      "\\,", "\\;", "\\:", "\\!", "\\ "};

  std::string out;
  out.reserve(s.size());
  bool changed = false;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '$') {
      changed = true;
      ++i;
      continue;
    }
    if (s[i] == '\\') {
      const std::string_view rest = std::string_view(s).substr(i);
      bool matched = false;
      for (auto cmd : kSymbolCommands) {
        if (rest.starts_with(cmd)) {
          i += cmd.size();
          matched = true;
          break;
        }
      }
      if (!matched) {
        for (auto cmd : kWordCommands) {
          if (rest.starts_with(cmd) &&
              (rest.size() == cmd.size() || !is_alpha(rest[cmd.size()]))) {
            i += cmd.size();
            matched = true;
            break;
          }
        }
      }
      if (matched) {
        changed = true;
        continue;
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  s = std::move(out);
  return changed;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string strip_leading_zeros(std::string_view digits) {
  const auto first = digits.find_first_not_of('0');
  if (first == std::string_view::npos) return "0";
  return std::string(digits.substr(first));
}

// Splits an optional leading sign; returns true when negative.
bool take_sign(std::string_view& s) {
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    const bool neg = s.front() == '-';
    s.remove_prefix(1);
    return neg;
  }
  return false;
}

std::optional<std::string> thousands_to_digits(std::string_view s) {
  // d{1,3}(,ddd)+
  const auto comma = s.find(',');
  if (comma == std::string_view::npos || comma == 0 || comma > 3) return std::nullopt;
  std::string out(s.substr(0, comma));
  if (!all_digits(out)) return std::nullopt;
  std::string_view rest = s.substr(comma);
  while (!rest.empty()) {
    if (rest.size() < 4 || rest[0] != ',') return std::nullopt;
    const auto group = rest.substr(1, 3);
    if (!all_digits(group)) return std::nullopt;
    out += group;
    rest.remove_prefix(4);
  }
  return out;
}

CanonicalAnswer make_integer(bool negative, std::string_view digits) {
  std::string v = strip_leading_zeros(digits);
  if (negative && v != "0") v.insert(v.begin(), '-');
  return {CanonicalAnswer::Kind::kInteger, std::move(v)};
}

std::optional<std::int64_t> parse_i64(std::string_view digits) {
  std::int64_t out = 0;
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) return std::nullopt;
  return out;
}

std::optional<CanonicalAnswer> make_rational(bool negative, std::string_view num,
                                             std::string_view den) {
  bool neg = negative;
  neg ^= take_sign(num);
  neg ^= take_sign(den);
  if (!all_digits(num) || !all_digits(den)) return std::nullopt;
  const auto n = parse_i64(num);
  const auto d = parse_i64(den);
  if (!n || !d || *d == 0) return std::nullopt;
  const std::int64_t g = std::gcd(*n, *d);
  const std::int64_t rn = g == 0 ? 0 : *n / g;
  const std::int64_t rd = g == 0 ? 1 : *d / g;
  if (rn == 0) return CanonicalAnswer{CanonicalAnswer::Kind::kInteger, "0"};
  std::string value = neg ? "-" : "";
  value += std::to_string(rn);
  if (rd == 1) return CanonicalAnswer{CanonicalAnswer::Kind::kInteger, std::move(value)};
  value += '/';
  value += std::to_string(rd);
  return CanonicalAnswer{CanonicalAnswer::Kind::kRational, std::move(value)};
}

std::optional<CanonicalAnswer> parse_frac_command(bool negative, std::string_view s) {
  for (std::string_view head : {"\\frac{", "\\dfrac{", "\\tfrac{"}) {
    if (!s.starts_with(head)) continue;
    std::string_view rest = s.substr(head.size());
    const auto close1 = rest.find('}');
    if (close1 == std::string_view::npos) return std::nullopt;
    const auto num = rest.substr(0, close1);
    rest.remove_prefix(close1 + 1);
    if (rest.empty() || rest.front() != '{' || rest.back() != '}') return std::nullopt;
    const auto den = rest.substr(1, rest.size() - 2);
    return make_rational(negative, num, den);
  }
  return std::nullopt;
}

std::optional<CanonicalAnswer> parse_numeric(std::string_view compact) {
  std::string_view s = compact;
  const bool negative = take_sign(s);
  if (s.empty()) return std::nullopt;

  if (all_digits(s)) return make_integer(negative, s);
  if (auto digits = thousands_to_digits(s)) return make_integer(negative, *digits);
  if (s.front() == '\\') return parse_frac_command(negative, s);

  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    return make_rational(negative, s.substr(0, slash), s.substr(slash + 1));
  }

  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    const auto int_part = s.substr(0, dot);
    auto frac_part = s.substr(dot + 1);
    if (int_part.empty() && frac_part.empty()) return std::nullopt;
    if (!int_part.empty() && !all_digits(int_part)) return std::nullopt;
    if (!frac_part.empty() && !all_digits(frac_part)) return std::nullopt;
    while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);
    const std::string whole = int_part.empty() ? "0" : strip_leading_zeros(int_part);
    if (frac_part.empty()) return make_integer(negative, whole);
    std::string value = negative ? "-" : "";
    value += whole;
    value += '.';
    value += frac_part;
    return CanonicalAnswer{CanonicalAnswer::Kind::kDecimal, std::move(value)};
  }
  return std::nullopt;
}

}  // namespace

std::string_view kind_name(CanonicalAnswer::Kind kind) {
  switch (kind) {
    case CanonicalAnswer::Kind::kInteger:
      return "integer";
    case CanonicalAnswer::Kind::kRational:
      return "rational";
    case CanonicalAnswer::Kind::kDecimal:
      return "decimal";
    case CanonicalAnswer::Kind::kExpression:
      break;
  }
  return "expression";
}

CanonicalAnswer canonicalize(std::string_view raw) {
  std::string s(raw);
  for (char& c : s) {
    if (is_space(c)) c = ' ';
  }
  while (strip_once(s)) {
  }
  std::string collapsed = collapse_whitespace(s);

  std::string compact;
  compact.reserve(collapsed.size());
  for (char c : collapsed) {
    if (c != ' ') compact.push_back(c);
  }
  if (auto numeric = parse_numeric(compact)) return *numeric;
  return {CanonicalAnswer::Kind::kExpression, std::move(collapsed)};
}

std::string render(const CanonicalAnswer& answer) { return answer.value; }

}  // namespace selfplay
