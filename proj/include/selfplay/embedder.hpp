#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfplay/types.hpp"

namespace selfplay {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  // One unit-norm vector per input text.
  // Must be safe to call from several threads at once.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
  virtual long retry_count() const { return 0; }
};

// L2-normalizes in place; throws std::invalid_argument on a zero or
// non-finite vector.
void normalize(Embedding& v);

double dot(std::span<const double> a, std::span<const double> b);

// 1 - dot(a, b) for unit vectors.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Feature-hashed character n-grams. The text is ASCII-lowercased and padded
// with one space on each side; each n-gram adds 1 to bucket
// fnv1a64(gram) % dimension. Deterministic across runs and platforms.
class HashedEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDimension = 256;
  static constexpr std::size_t kDefaultNgram = 3;

  explicit HashedEmbedder(std::size_t dimension = kDefaultDimension,
                          std::size_t ngram = kDefaultNgram);

  std::string name() const override;
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  Embedding embed_one(std::string_view text) const;

  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
  std::size_t ngram_;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace selfplay
