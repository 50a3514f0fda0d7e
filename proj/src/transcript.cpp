#include "selfplay/transcript.hpp"

#include <stdexcept>

#include "selfplay/majority.hpp"
#include "selfplay/pool.hpp"
#include "selfplay/scoring.hpp"

namespace selfplay {

using nlohmann::json;

KeyValueMap key_values_from_json(const json& object) {
  KeyValueMap out;
  if (object.is_null()) return out;
  if (!object.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (value.is_string()) {
      out[key] = value.get<std::string>();
    } else if (value.is_boolean()) {
      out[key] = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer()) {
      out[key] = std::to_string(value.get<long long>());
    } else if (value.is_number()) {
      out[key] = kv::format_double(value.get<double>());
    } else {
      throw ConfigError("invalid value for '" + key + "': expected a scalar");
    }
  }
  return out;
}

namespace {

Embedding embedding_or_compute(const json& entry, const std::string& text, Embedder& embedder) {
  if (entry.contains("embedding") && !entry["embedding"].is_null()) {
    Embedding v = entry["embedding"].get<Embedding>();
    normalize(v);
    return v;
  }
  const std::vector<std::string> texts = {text};
  return embedder.embed(texts).at(0);
}

}  // namespace

std::vector<TranscriptScore> score_transcript(const json& doc, Embedder& embedder,
                                              const KeyValueMap& overrides) {
  KeyValueMap raw = key_values_from_json(doc.value("config", json(nullptr)));
  for (const auto& [key, value] : overrides) raw[key] = value;
  const EngineConfig cfg = validate_config(raw);

  std::vector<Problem> entries;
  const json& pool_doc = doc.at("pool");
  for (std::size_t i = 0; i < pool_doc.size(); ++i) {
    const json& e = pool_doc[i];
    Problem p;
    p.id = e.value("id", "pool-" + std::to_string(i));
    p.text = e.at("text").get<std::string>();
    p.concepts = e.value("concepts", std::vector<std::string>{});
    p.format_valid = true;
    p.embedding = embedding_or_compute(e, p.text, embedder);
    entries.push_back(std::move(p));
  }
  const ProblemPool pool = ProblemPool::from_problems(entries);
  const PoolSnapshot snapshot = pool.snapshot();

  std::vector<TranscriptScore> out;
  for (const json& item : doc.at("problems")) {
    TranscriptScore s;
    s.id = item.at("id").get<std::string>();
    s.parse = parse_teacher_output(item.at("teacher_completion").get<std::string>());
    Problem p;
    p.id = s.id;
    p.format_valid = s.parse.format_valid;
    p.text = s.parse.problem_text;
    p.concepts = s.parse.concepts;
    if (p.format_valid) {
      const auto solutions = item.at("solutions").get<std::vector<std::string>>();
      if (solutions.size() != static_cast<std::size_t>(cfg.group_size)) {
        throw std::invalid_argument("problem " + s.id + ": expected " +
                                    std::to_string(cfg.group_size) + " solutions, got " +
                                    std::to_string(solutions.size()));
      }
      std::vector<SolutionAttempt> attempts;
      for (const auto& text : solutions) attempts.push_back(make_attempt(s.id, text));
      s.stats = majority_vote(attempts, cfg.group_size);
      p.embedding = embedding_or_compute(item, p.text, embedder);
    }
    s.scores = score_problem(p, s.stats ? &*s.stats : nullptr, snapshot, cfg);
    out.push_back(std::move(s));
  }
  return out;
}

json transcript_score_json(const TranscriptScore& s) {
  json j;
  j["id"] = s.id;
  j["format_valid"] = s.parse.format_valid;
  if (s.stats) {
    j["solve_rate"] = s.stats->solve_rate;
    j["reference_answer"] =
        s.stats->reference_answer ? json(s.stats->reference_answer->value) : json(nullptr);
    j["mean_length"] = s.stats->mean_length;
  } else {
    j["solve_rate"] = nullptr;
    j["reference_answer"] = nullptr;
    j["mean_length"] = nullptr;
  }
  j["sol"] = s.scores.sol;
  j["len"] = s.scores.len;
  j["div"] = s.scores.div;
  j["fmt"] = s.scores.fmt;
  j["novelty"] = s.scores.novelty;
  return j;
}

}  // namespace selfplay
