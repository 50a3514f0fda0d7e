#include "selfplay/pool.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "selfplay/jsonl.hpp"
#include "selfplay/rng.hpp"

namespace selfplay {

namespace fs = std::filesystem;
using nlohmann::json;

std::string normalize_concept(std::string_view concept_name) {
  std::string out;
  bool pending = false;
  for (char c : concept_name) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string pool_record_json(const Problem& p) {
  json j;
  j["id"] = p.id;
  j["text"] = p.text;
  j["concepts"] = p.concepts;
  j["parent_id"] = p.parent_id ? json(*p.parent_id) : json(nullptr);
  j["iteration"] = p.iteration;
  j["embedding"] = p.embedding ? json(*p.embedding) : json::array();
  j["solve_rate"] = p.solve_rate ? json(*p.solve_rate) : json(nullptr);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Problem parse_pool_record(std::string_view line) {
  const json j = json::parse(line);
  Problem p;
  p.id = j.at("id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.concepts = j.at("concepts").get<std::vector<std::string>>();
  if (!j.at("parent_id").is_null()) p.parent_id = j.at("parent_id").get<std::string>();
  p.iteration = j.at("iteration").get<int>();
  p.embedding = j.at("embedding").get<std::vector<double>>();
  if (j.contains("solve_rate") && !j.at("solve_rate").is_null()) {
    p.solve_rate = j.at("solve_rate").get<double>();
  }
  p.format_valid = true;
  return p;
}

ProblemPool::ProblemPool(Options options) : options_(std::move(options)) {}

ProblemPool ProblemPool::create(std::string_view seed_text, Embedder& embedder,
                                Options options) {
  if (seed_text.empty()) throw std::invalid_argument("seed problem text must be non-empty");
  ProblemPool pool(std::move(options));

  Problem seed;
  seed.id = "seed-0";
  seed.text = std::string(seed_text);
  seed.concepts = {"arithmetic"};
  seed.iteration = 0;
  seed.format_valid = true;
  const std::vector<std::string> texts = {seed.text};
  seed.embedding = embedder.embed(texts).at(0);

  if (pool.options_.log_path) {
    std::error_code ec;
    fs::remove(*pool.options_.log_path, ec);
    const std::vector<std::string> lines = {pool_record_json(seed)};
    jsonl::append_lines(*pool.options_.log_path, lines);
  }
  pool.add_in_memory(std::move(seed));
  return pool;
}

ProblemPool ProblemPool::load(const fs::path& log_path, std::optional<int> max_iteration,
                              bool dedup_exact_text) {
  jsonl::truncate_partial_tail(log_path);
  const auto lines = jsonl::read_lines(log_path);

  ProblemPool pool(Options{log_path, dedup_exact_text});
  std::vector<std::string> kept;
  kept.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Problem p;
    try {
      p = parse_pool_record(lines[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error(log_path.string() + ":" + std::to_string(i + 1) +
                               ": bad pool record: " + e.what());
    }
    if (max_iteration && p.iteration > *max_iteration) continue;
    kept.push_back(lines[i]);
    pool.add_in_memory(std::move(p));
  }
  if (pool.size() == 0) throw std::runtime_error("pool log " + log_path.string() + " is empty");
  if (kept.size() != lines.size()) {
    std::string content;
    for (const auto& l : kept) {
      content += l;
      content += '\n';
    }
    jsonl::write_atomically(log_path, content);
  }
  return pool;
}

ProblemPool ProblemPool::from_problems(std::span<const Problem> problems) {
  if (problems.empty()) throw std::invalid_argument("pool needs at least one problem");
  ProblemPool pool(Options{});
  for (const auto& p : problems) pool.add_in_memory(p);
  return pool;
}

void ProblemPool::add_in_memory(Problem problem) {
  if (!problem.embedding || problem.embedding->empty()) {
    throw std::invalid_argument("pool entries need an embedding: " + problem.id);
  }
  if (dimension_ == 0) {
    dimension_ = problem.embedding->size();
    posting_rows_.resize(dimension_);
    posting_values_.resize(dimension_);
  } else if (problem.embedding->size() != dimension_) {
    throw std::invalid_argument("embedding dimension mismatch for " + problem.id);
  }
  matrix_.insert(matrix_.end(), problem.embedding->begin(), problem.embedding->end());
  const auto row = static_cast<std::uint32_t>(problems_.size());
  for (std::size_t i = 0; i < dimension_; ++i) {
    const double v = (*problem.embedding)[i];
    if (v != 0.0) {
      posting_rows_[i].push_back(row);
      posting_values_[i].push_back(v);
    }
  }
  for (const auto& c : problem.concepts) {
    concept_first_seen_.try_emplace(normalize_concept(c), problems_.size());
  }
  text_first_seen_.try_emplace(problem.text, problems_.size());
  ids_.insert(problem.id);
  problems_.push_back(std::move(problem));
}

std::vector<Problem> ProblemPool::sample_references(std::size_t k, std::uint64_t seed) const {
  Rng rng(seed);
  const std::size_t n = problems_.size();
  std::vector<Problem> out;
  out.reserve(k);
  if (n >= k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
      std::swap(idx[i], idx[j]);
      out.push_back(problems_[idx[i]]);
    }
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(n - 1)));
      out.push_back(problems_[j]);
    }
  }
  return out;
}

std::size_t ProblemPool::insert_valid(std::span<const Problem> problems) {
  std::vector<const Problem*> accepted;
  std::unordered_set<std::string_view> batch_texts;
  for (const auto& p : problems) {
    if (!p.format_valid) throw std::invalid_argument("insert_valid: " + p.id + " is not format-valid");
    if (!p.embedding || p.embedding->size() != dimension_) {
      throw std::invalid_argument("insert_valid: " + p.id + " lacks a matching embedding");
    }
    if (ids_.contains(p.id)) continue;
    if (options_.dedup_exact_text) {
      if (text_first_seen_.contains(p.text) || !batch_texts.insert(p.text).second) continue;
    }
    accepted.push_back(&p);
  }
  if (accepted.empty()) return 0;

  if (options_.log_path) {
    std::vector<std::string> lines;
    lines.reserve(accepted.size());
    for (const auto* p : accepted) lines.push_back(pool_record_json(*p));
    jsonl::append_lines(*options_.log_path, lines);
  }
  for (const auto* p : accepted) add_in_memory(*p);
  return accepted.size();
}

double ProblemPool::min_distance(std::span<const double> embedding, std::size_t upto) const {
  if (upto == 0 || upto > problems_.size()) {
    throw std::invalid_argument("min_distance: snapshot size out of range");
  }
  if (embedding.size() != dimension_) {
    throw std::invalid_argument("min_distance: embedding dimension mismatch");
  }
  // Each row's dot product accumulates only the coordinates where both sides
  // are nonzero, in ascending coordinate order. The terms skipped are exact
  // zeros, so this equals the dense scan bit for bit.
  std::vector<double> acc(upto, 0.0);
  for (std::size_t i = 0; i < dimension_; ++i) {
    const double q = embedding[i];
    if (q == 0.0) continue;
    const auto& rows = posting_rows_[i];
    const auto& values = posting_values_[i];
    // Rows are ascending, so the snapshot prefix is a prefix of the list.
    const std::size_t n =
        static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), upto) - rows.begin());
    const std::uint32_t* r = rows.data();
    const double* v = values.data();
    double* a = acc.data();
    for (std::size_t j = 0; j < n; ++j) a[r[j]] += q * v[j];
  }
  double best = -std::numeric_limits<double>::infinity();
  for (double s : acc) best = std::max(best, s);
  // Unit vectors are at distance >= 0; rounding can leave a hair below.
  return std::max(0.0, 1.0 - best);
}

bool ProblemPool::has_text(std::string_view text, std::size_t upto) const {
  const auto it = text_first_seen_.find(std::string(text));
  return it != text_first_seen_.end() && it->second < upto;
}

bool ProblemPool::has_concept(std::string_view normalized, std::size_t upto) const {
  const auto it = concept_first_seen_.find(std::string(normalized));
  return it != concept_first_seen_.end() && it->second < upto;
}

double ProblemPool::mean_pairwise_distance() const {
  const std::size_t n = problems_.size();
  if (n < 2) return 0.0;
  std::vector<double> sum(dimension_, 0.0);
  double self = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = matrix_.data() + r * dimension_;
    for (std::size_t i = 0; i < dimension_; ++i) {
      sum[i] += row[i];
      self += row[i] * row[i];
    }
  }
  double total = 0.0;
  for (double s : sum) total += s * s;
  const double pair_dot = (total - self) / 2.0;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return 1.0 - pair_dot / pairs;
}

}  // namespace selfplay
