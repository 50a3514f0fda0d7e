#include "selfplay/synthetic.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "selfplay/parsing.hpp"
#include "selfplay/rng.hpp"

namespace selfplay {

namespace {

constexpr std::array<std::string_view, 8> kTopics = {
    "arithmetic",    "algebra",     "geometry", "number theory",
    "combinatorics", "probability", "calculus", "trigonometry",
};

constexpr std::array<std::array<std::string_view, 10>, 8> kVocabulary = {{
    {"sum", "product", "difference", "total", "apples", "coins", "remaining", "each", "price",
     "change"},
    {"equation", "variable", "linear", "quadratic", "root", "coefficient", "polynomial",
     "expression", "factor", "system"},
    {"triangle", "circle", "radius", "angle", "area", "perimeter", "polygon", "diagonal", "chord",
     "square"},
    {"prime", "divisor", "remainder", "modulo", "gcd", "congruence", "digit", "multiple",
     "parity", "factorization"},
    {"arrangements", "choose", "permutations", "committee", "subsets", "paths", "lattice",
     "seating", "distinct", "ways"},
    {"dice", "chance", "expected", "random", "draw", "marbles", "fair", "outcome", "independent",
     "coin"},
    {"derivative", "integral", "limit", "slope", "tangent", "maximum", "rate", "curve", "series",
     "convergence"},
    {"sine", "cosine", "secant", "radians", "identity", "cotangent", "amplitude", "period",
     "arcsin", "phase"},
}};

constexpr std::array<std::string_view, 4> kVerbs = {"Find", "Compute", "Determine", "Evaluate"};

const std::string& filler() {
  static const std::string s = [] {
    std::string out;
    for (int i = 0; i < 8192; ++i) out += "so ";
    return out;
  }();
  return s;
}

void check_known_keys(const KeyValueMap& raw) {
  static const std::array<std::string_view, 16> known = {
      "synthetic_initial_capability", "synthetic_initial_target_offset",
      "synthetic_invalid_rate",       "synthetic_ill_posed_rate",
      "synthetic_initial_topic_share", "synthetic_difficulty_spread",
      "synthetic_answer_max",         "synthetic_ill_posed_answer_space",
      "synthetic_length_intercept",   "synthetic_length_slope",
      "synthetic_length_noise",       "synthetic_difficulty_step",
      "synthetic_capability_rate",    "synthetic_topic_rate",
      "synthetic_topic_floor",        "synthetic_student_format_error_rate",
  };
  for (const auto& [key, value] : raw) {
    if (!key.starts_with("synthetic_")) continue;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void check_probability(double p, const char* key) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(key) + " must be in [0, 1]");
}

std::vector<double> initial_mixture(double first_share) {
  std::vector<double> w(kTopics.size(), (1.0 - first_share) / (kTopics.size() - 1));
  w[0] = first_share;
  return w;
}

std::size_t draw_index(Rng& rng, std::span<const double> weights) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

std::string teacher_completion(const SyntheticLatent& latent, Rng& rng) {
  const auto& vocab = kVocabulary[latent.topic];
  const auto w1 = vocab[static_cast<std::size_t>(rng.uniform_int(0, 9))];
  const auto w2 = vocab[static_cast<std::size_t>(rng.uniform_int(0, 9))];
  const auto w3 = vocab[static_cast<std::size_t>(rng.uniform_int(0, 9))];
  const auto verb = kVerbs[static_cast<std::size_t>(rng.uniform_int(0, 3))];
  const auto n1 = rng.uniform_int(2, 99);
  const auto n2 = rng.uniform_int(2, 99);

  std::string text;
  text.reserve(160);
  text.append(verb).append(" the ").append(w1).append(" for ").append(std::to_string(n1));
  text.append(" ").append(w2).append(" and ").append(std::to_string(n2)).append(" ").append(w3);
  if (latent.ill_posed) text.append(" given an unspecified quantity");
  text.append(". ").append(encode_latent(latent));

  std::string out = "<think>Shift toward ";
  out.append(kTopics[latent.topic]).append(".</think>\n<problem>").append(text);
  out.append("</problem>\n<concepts>").append(kTopics[latent.topic]).append(", ").append(w1);
  out.append("</concepts>");
  return out;
}

// Three ways to break the tag grammar.
std::string malformed(std::string completion, Rng& rng) {
  switch (rng.uniform_int(0, 2)) {
    case 0: {
      const auto pos = completion.find("</problem>");
      completion.erase(pos, std::string_view("</problem>").size());
      return completion;
    }
    case 1: {
      const auto pos = completion.find("</concepts>");
      completion.insert(pos, ", logic, sets");
      return completion;
    }
    default: {
      const auto pos = completion.find("\n<concepts>");
      completion.erase(pos);
      return completion;
    }
  }
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::span<const std::string_view> synthetic_topics() { return kTopics; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

SyntheticSettings SyntheticSettings::from_config(const KeyValueMap& raw) {
  check_known_keys(raw);
  SyntheticSettings s;
  auto d = [&](const char* key, double& field) { field = kv::get_double(raw, key, field); };
  auto i = [&](const char* key, int& field) { field = kv::get_int(raw, key, field); };
  d("synthetic_initial_capability", s.initial_capability);
  d("synthetic_initial_target_offset", s.initial_target_offset);
  d("synthetic_invalid_rate", s.invalid_rate);
  d("synthetic_ill_posed_rate", s.ill_posed_rate);
  d("synthetic_initial_topic_share", s.initial_topic_share);
  d("synthetic_difficulty_spread", s.difficulty_spread);
  i("synthetic_answer_max", s.answer_max);
  i("synthetic_ill_posed_answer_space", s.ill_posed_answer_space);
  d("synthetic_length_intercept", s.length_intercept);
  d("synthetic_length_slope", s.length_slope);
  d("synthetic_length_noise", s.length_noise);
  d("synthetic_difficulty_step", s.difficulty_step);
  d("synthetic_capability_rate", s.capability_rate);
  d("synthetic_topic_rate", s.topic_rate);
  d("synthetic_topic_floor", s.topic_floor);
  d("synthetic_student_format_error_rate", s.student_format_error_rate);

  check_probability(s.invalid_rate, "synthetic_invalid_rate");
  check_probability(s.ill_posed_rate, "synthetic_ill_posed_rate");
  check_probability(s.initial_topic_share, "synthetic_initial_topic_share");
  check_probability(s.student_format_error_rate, "synthetic_student_format_error_rate");
  if (s.difficulty_spread < 0) throw ConfigError("synthetic_difficulty_spread must be >= 0");
  if (s.answer_max < 1) throw ConfigError("synthetic_answer_max must be >= 1");
  if (s.ill_posed_answer_space < 1) {
    throw ConfigError("synthetic_ill_posed_answer_space must be >= 1");
  }
  if (s.topic_floor < 0 || s.topic_floor * kTopics.size() >= 1.0) {
    throw ConfigError("synthetic_topic_floor must be in [0, 1/topics)");
  }
  return s;
}

std::string encode_latent(const SyntheticLatent& latent) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[d=%.4f a=%lld k=%zu i=%d]", latent.difficulty,
                static_cast<long long>(latent.answer), latent.topic, latent.ill_posed ? 1 : 0);
  return buf;
}

std::optional<SyntheticLatent> decode_latent(std::string_view text) {
  const auto open = text.rfind("[d=");
  if (open == std::string_view::npos) return std::nullopt;
  const auto close = text.find(']', open);
  if (close == std::string_view::npos) return std::nullopt;
  const std::string body(text.substr(open + 1, close - open - 1));
  SyntheticLatent latent;
  long long answer = 0;
  std::size_t topic = 0;
  int ill = 0;
  int consumed = 0;
  if (std::sscanf(body.c_str(), "d=%lf a=%lld k=%zu i=%d%n", &latent.difficulty, &answer, &topic,
                  &ill, &consumed) != 4 ||
      static_cast<std::size_t>(consumed) != body.size() || topic >= kTopics.size() ||
      !std::isfinite(latent.difficulty)) {
    return std::nullopt;
  }
  latent.answer = answer;
  latent.topic = topic;
  latent.ill_posed = ill != 0;
  return latent;
}

SyntheticAgent::SyntheticAgent(SyntheticSettings settings, bool adapt)
    : settings_(settings) {
  state_.capability = settings.initial_capability;
  state_.target_difficulty = settings.initial_capability + settings.initial_target_offset;
  state_.invalid_rate = settings.invalid_rate;
  state_.topic_mixture = initial_mixture(settings.initial_topic_share);
  state_.adapt = adapt;
}

SyntheticAgent::SyntheticAgent(SyntheticSettings settings, SyntheticAgentState state)
    : settings_(settings), state_(std::move(state)) {
  if (state_.topic_mixture.size() != kTopics.size()) {
    throw std::invalid_argument("topic mixture must have one weight per topic");
  }
}

std::vector<std::string> SyntheticAgent::generate_problems(const Problem&, std::string_view,
                                                           const GenerationRequest& request) {
  Rng rng(request.stream_seed);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(request.group_size));
  for (int j = 0; j < request.group_size; ++j) {
    SyntheticLatent latent;
    latent.difficulty = rng.normal(state_.target_difficulty, settings_.difficulty_spread);
    latent.topic = draw_index(rng, state_.topic_mixture);
    latent.answer = rng.uniform_int(1, settings_.answer_max);
    latent.ill_posed = rng.bernoulli(settings_.ill_posed_rate);
    std::string completion = teacher_completion(latent, rng);
    if (rng.bernoulli(state_.invalid_rate)) completion = malformed(std::move(completion), rng);
    out.push_back(std::move(completion));
  }
  return out;
}

std::vector<std::string> SyntheticAgent::solve(const Problem& problem, std::string_view,
                                               const GenerationRequest& request) {
  Rng rng(request.stream_seed);
  const auto latent = decode_latent(problem.text);
  const bool ill_posed = !latent || latent->ill_posed;
  const double difficulty = latent ? latent->difficulty : state_.target_difficulty;
  const double p = sigmoid(state_.capability - difficulty);

  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(request.group_size));
  for (int j = 0; j < request.group_size; ++j) {
    std::int64_t answer;
    if (ill_posed) {
      answer = rng.uniform_int(1, settings_.ill_posed_answer_space);
    } else if (rng.bernoulli(p)) {
      answer = latent->answer;
    } else {
      const auto off = rng.uniform_int(1, 5);
      answer = latent->answer + (rng.bernoulli(0.5) ? off : -off);
    }
    const bool drop_box = rng.bernoulli(settings_.student_format_error_rate);

    const double mean_len = settings_.length_intercept + settings_.length_slope * difficulty;
    const auto tokens = std::clamp<long long>(
        std::llround(rng.normal(mean_len, settings_.length_noise)), 8, request.max_tokens);
    // The closing sentence is 6 whitespace tokens; filler makes up the rest.
    const auto fill = static_cast<std::size_t>(tokens - 6);
    std::string text;
    text.reserve(fill * 3 + 64);
    text.append(filler(), 0, std::min(fill * 3, filler().size()));
    text.append("Therefore, the final answer is: ");
    if (drop_box) {
      text.append(std::to_string(answer));
    } else {
      text.append("$\\boxed{").append(std::to_string(answer)).append("}$");
    }
    out.push_back(std::move(text));
  }
  return out;
}

void SyntheticAgent::update(std::span<const TrainingSample> samples) {
  struct Entry {
    double reward;
    double difficulty;
    std::size_t topic;
  };
  std::map<std::string, std::vector<Entry>> teacher;
  double student_sum = 0.0;
  std::size_t student_n = 0;
  for (const auto& s : samples) {
    if (s.role == Role::kStudent) {
      student_sum += s.reward;
      ++student_n;
      continue;
    }
    const auto parsed = parse_teacher_output(s.completion);
    if (!parsed.format_valid) continue;
    const auto latent = decode_latent(parsed.problem_text);
    if (!latent) continue;
    teacher[s.group_id].push_back({s.reward, latent->difficulty, latent->topic});
  }

  if (state_.adapt) {
    double gradient = 0.0;
    std::vector<double> topic_dev(kTopics.size(), 0.0);
    std::vector<std::size_t> topic_n(kTopics.size(), 0);
    for (const auto& [id, entries] : teacher) {
      double r_mean = 0.0, d_mean = 0.0;
      for (const auto& e : entries) {
        r_mean += e.reward;
        d_mean += e.difficulty;
      }
      r_mean /= static_cast<double>(entries.size());
      d_mean /= static_cast<double>(entries.size());
      for (const auto& e : entries) {
        gradient += (e.reward - r_mean) * (e.difficulty - d_mean);
        topic_dev[e.topic] += e.reward - r_mean;
        ++topic_n[e.topic];
      }
    }
    state_.target_difficulty += settings_.difficulty_step * sign(gradient);

    auto& w = state_.topic_mixture;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (topic_n[k] > 0) {
        w[k] *= std::exp(settings_.topic_rate * topic_dev[k] / static_cast<double>(topic_n[k]));
      }
    }
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x = std::max(x / total, settings_.topic_floor);
    total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
  }

  if (student_n > 0) {
    state_.capability += settings_.capability_rate * student_sum / static_cast<double>(student_n);
  }
}

nlohmann::json SyntheticAgent::save_state() const {
  return {
      {"capability", state_.capability},
      {"target_difficulty", state_.target_difficulty},
      {"invalid_rate", state_.invalid_rate},
      {"topic_mixture", state_.topic_mixture},
      {"adapt", state_.adapt},
  };
}

void SyntheticAgent::load_state(const nlohmann::json& j) {
  SyntheticAgentState s;
  s.capability = j.at("capability").get<double>();
  s.target_difficulty = j.at("target_difficulty").get<double>();
  s.invalid_rate = j.at("invalid_rate").get<double>();
  s.topic_mixture = j.at("topic_mixture").get<std::vector<double>>();
  s.adapt = j.at("adapt").get<bool>();
  if (s.topic_mixture.size() != kTopics.size()) {
    throw std::invalid_argument("topic mixture must have one weight per topic");
  }
  state_ = std::move(s);
}

}  // namespace selfplay
