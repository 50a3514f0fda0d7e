#include "selfplay/embedder.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace selfplay {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void normalize(Embedding& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("cannot normalize a zero or non-finite vector");
  }
  for (double& x : v) x /= norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  return 1.0 - dot(a, b);
}

HashedEmbedder::HashedEmbedder(std::size_t dimension, std::size_t ngram)
    : dimension_(dimension), ngram_(ngram) {
  if (dimension_ == 0 || ngram_ == 0) {
    throw std::invalid_argument("HashedEmbedder: dimension and n-gram size must be > 0");
  }
}

std::string HashedEmbedder::name() const {
  return "hashed-" + std::to_string(ngram_) + "gram-" + std::to_string(dimension_);
}

Embedding HashedEmbedder::embed_one(std::string_view text) const {
  std::string padded;
  padded.reserve(text.size() + 2);
  padded.push_back(' ');
  for (char c : text) {
    padded.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  padded.push_back(' ');

  Embedding v(dimension_, 0.0);
  const std::string_view s(padded);
  if (s.size() < ngram_) {
    v[fnv1a64(s) % dimension_] += 1.0;
  } else {
    for (std::size_t i = 0; i + ngram_ <= s.size(); ++i) {
      v[fnv1a64(s.substr(i, ngram_)) % dimension_] += 1.0;
    }
  }
  normalize(v);
  return v;
}

std::vector<Embedding> HashedEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

}  // namespace selfplay
