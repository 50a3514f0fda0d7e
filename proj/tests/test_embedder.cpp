#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfplay/embedder.hpp"

using namespace selfplay;

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("hashed embedding is unit norm and deterministic") {
  HashedEmbedder emb;
  const auto a = emb.embed_one("What is 1+1?");
  CHECK(a.size() == 256);
  double n = 0;
  for (double x : a) n += x * x;
  CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(emb.embed_one("What is 1+1?") == a);
  CHECK(emb.embed_one("WHAT IS 1+1?") == a);
  CHECK(emb.embed_one("What is 2+2?") != a);
}

TEST_CASE("hashed embedding counts padded n-grams") {
  // " ab " has trigrams " ab" and "ab ".
  HashedEmbedder emb(1024, 3);
  const auto v = emb.embed_one("ab");
  Embedding expected(1024, 0.0);
  expected[fnv1a64(" ab") % 1024] += 1;
  expected[fnv1a64("ab ") % 1024] += 1;
  normalize(expected);
  CHECK(v == expected);
}

TEST_CASE("batch embed matches single embedding") {
  HashedEmbedder emb;
  const std::vector<std::string> texts = {"one", "two", ""};
  const auto vs = emb.embed(texts);
  REQUIRE(vs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(vs[i] == emb.embed_one(texts[i]));
}

TEST_CASE("normalize and cosine distance") {
  Embedding v = {3, 4};
  normalize(v);
  CHECK(v == Embedding{0.6, 0.8});
  Embedding zero = {0, 0};
  CHECK_THROWS_AS(normalize(zero), std::invalid_argument);
  Embedding bad = {NAN, 1};
  CHECK_THROWS_AS(normalize(bad), std::invalid_argument);
  CHECK(cosine_distance(Embedding{1, 0}, Embedding{0, 1}) == 1.0);
  CHECK(cosine_distance(Embedding{1, 0}, Embedding{-1, 0}) == 2.0);
}

TEST_CASE("hashed distance tracks surface overlap") {
  HashedEmbedder emb;
  const auto a = emb.embed_one("What is 2+2?");
  const auto b = emb.embed_one("What is 2+3?");
  const auto c = emb.embed_one("Describe the migration patterns of arctic terns.");
  CHECK(cosine_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_distance(a, b) < cosine_distance(a, c));
  CHECK(cosine_distance(a, c) > 0.5);
}
