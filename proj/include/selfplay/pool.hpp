#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "selfplay/embedder.hpp"
#include "selfplay/types.hpp"

namespace selfplay {

// Case-folded concept with whitespace runs collapsed; the matching key for
// concept novelty.
std::string normalize_concept(std::string_view concept_name);

class ProblemPool;

// The first `size` entries of a pool, fixed at iteration start. Entries
// appended later are invisible through the snapshot.
struct PoolSnapshot {
  const ProblemPool* pool = nullptr;
  std::size_t size = 0;
};

struct PoolOptions {
  std::optional<std::filesystem::path> log_path;
  bool dedup_exact_text = true;
};

// Growing problem pool with an optional append-only log. One writer appends;
// readers work through snapshots between appends.
//
// Log records are JSON lines {id, text, concepts, parent_id, iteration,
// embedding, solve_rate}.
class ProblemPool {
 public:
  using Options = PoolOptions;

  // Seeds a fresh pool (iteration 0, concept "arithmetic"). An existing log
  // at options.log_path is replaced.
  static ProblemPool create(std::string_view seed_text, Embedder& embedder,
                            Options options = {});

  // Rebuilds a pool from its log. A partial trailing record is truncated, and
  // records newer than `max_iteration` are dropped from both memory and log.
  static ProblemPool load(const std::filesystem::path& log_path,
                          std::optional<int> max_iteration = std::nullopt,
                          bool dedup_exact_text = true);

  // In-memory pool over existing entries, each with an embedding of equal
  // dimension. Used for offline scoring.
  static ProblemPool from_problems(std::span<const Problem> problems);

  ProblemPool(ProblemPool&&) noexcept = default;
  ProblemPool& operator=(ProblemPool&&) noexcept = default;
  ProblemPool(const ProblemPool&) = delete;
  ProblemPool& operator=(const ProblemPool&) = delete;

  std::size_t size() const { return problems_.size(); }
  std::size_t dimension() const { return dimension_; }
  const Problem& operator[](std::size_t i) const { return problems_[i]; }
  std::span<const Problem> problems() const { return problems_; }
  PoolSnapshot snapshot() const { return {this, problems_.size()}; }
  const std::optional<std::filesystem::path>& log_path() const { return options_.log_path; }

  // k uniform draws: without replacement when size() >= k, with replacement
  // otherwise. Same seed, same pool => same sample.
  std::vector<Problem> sample_references(std::size_t k, std::uint64_t seed) const;

  // Appends every problem whose text is not already present (when dedup is
  // on), persisting to the log first. On a write failure nothing changes and
  // the error propagates. Returns the number inserted.
  std::size_t insert_valid(std::span<const Problem> problems);

  // Exact min cosine distance over the first `upto` entries (linear scan).
  double min_distance(std::span<const double> embedding, std::size_t upto) const;
  double min_distance(std::span<const double> embedding) const {
    return min_distance(embedding, size());
  }

  // Whether the exact text occurs among the first `upto` entries.
  bool has_text(std::string_view text, std::size_t upto) const;

  // Whether a normalized concept occurs among the first `upto` entries.
  bool has_concept(std::string_view normalized, std::size_t upto) const;
  std::size_t distinct_concepts() const { return concept_first_seen_.size(); }

  // Mean of 1 - dot over all unordered pairs, via the sum vector.
  double mean_pairwise_distance() const;

 private:
  explicit ProblemPool(Options options);

  void add_in_memory(Problem problem);

  Options options_;
  std::vector<Problem> problems_;
  std::vector<double> matrix_;  // row-major copy of the embeddings
  // Per coordinate, the rows nonzero there (ascending) and their values.
  std::vector<std::vector<std::uint32_t>> posting_rows_;
  std::vector<std::vector<double>> posting_values_;
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::size_t> text_first_seen_;
  std::unordered_set<std::string> ids_;
  std::unordered_map<std::string, std::size_t> concept_first_seen_;
};

std::string pool_record_json(const Problem& problem);
Problem parse_pool_record(std::string_view line);

}  // namespace selfplay
