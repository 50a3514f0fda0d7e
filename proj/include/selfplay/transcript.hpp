#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfplay/config.hpp"
#include "selfplay/embedder.hpp"
#include "selfplay/parsing.hpp"
#include "selfplay/types.hpp"

namespace selfplay {

struct TranscriptScore {
  std::string id;
  TeacherParse parse;
  std::optional<SolveStats> stats;
  ScoreBreakdown scores;
};

// Scores a recorded transcript offline. The document looks like
//
//   {"config": {"G": 4, ...},
//    "pool": [{"text": ..., "concepts": [...], "embedding": [...]}, ...],
//    "problems": [{"id": ..., "teacher_completion": ..., "solutions": [...],
//                  "embedding": [...]}, ...]}
//
// Embeddings are optional; missing ones come from `embedder`. Keys in
// `overrides` take precedence over the document's config.
std::vector<TranscriptScore> score_transcript(const nlohmann::json& doc, Embedder& embedder,
                                              const KeyValueMap& overrides = {});

nlohmann::json transcript_score_json(const TranscriptScore& score);

// JSON scalars as config strings: numbers in shortest round-trip form.
KeyValueMap key_values_from_json(const nlohmann::json& object);

}  // namespace selfplay
