#include <stdexcept>

#include <doctest.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfplay/majority.hpp"
#include "selfplay/parsing.hpp"

using namespace selfplay;

namespace {

std::vector<SolutionAttempt> attempts_for(const std::vector<std::string>& answers) {
  std::vector<SolutionAttempt> out;
  for (const auto& a : answers) {
    out.push_back(make_attempt("p", a.empty() ? "no box here" : "so \\boxed{" + a + "}"));
  }
  return out;
}

}  // namespace

TEST_CASE("direct counts") {
  auto s = majority_vote(attempts_for({"2", "2", "3"}), 3);
  REQUIRE(s.reference_answer);
  CHECK(s.reference_answer->value == "2");
  CHECK(s.solve_rate == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s.reference_count == 2);

  s = majority_vote(attempts_for({"5", "5", "5", "5", "5", "5", "5", "5"}), 8);
  CHECK(s.reference_answer->value == "5");
  CHECK(s.solve_rate == 1.0);
}

TEST_CASE("ties go to the smallest rendering") {
  const auto s = majority_vote(attempts_for({"2", "1", "2", "1"}), 4);
  CHECK(s.reference_answer->value == "1");
  CHECK(s.solve_rate == 0.5);
}

TEST_CASE("unparsed attempts never vote but count toward G") {
  auto s = majority_vote(attempts_for({"", "", "", "7"}), 4);
  CHECK(s.reference_answer->value == "7");
  CHECK(s.solve_rate == 0.25);
  s = majority_vote(attempts_for({"", "", ""}), 3);
  CHECK_FALSE(s.reference_answer);
  CHECK(s.solve_rate == 0.0);
}

TEST_CASE("equivalent renderings vote together") {
  const auto s = majority_vote(attempts_for({"1/2", "2/4", "0.5", "\\frac{1}{2}"}), 4);
  CHECK(s.reference_answer->value == "1/2");
  CHECK(s.solve_rate == 0.75);
}

TEST_CASE("mean length covers every attempt") {
  std::vector<SolutionAttempt> a = {make_attempt("p", "a b \\boxed{1}"),
                                    make_attempt("p", "a b c d e")};
  const auto s = majority_vote(a, 2);
  CHECK(s.mean_length == 4.0);
}

TEST_CASE("size mismatch is rejected") {
  CHECK_THROWS_AS(majority_vote(attempts_for({"1", "2"}), 3), std::invalid_argument);
  CHECK_THROWS_AS(majority_vote({}, 0), std::invalid_argument);
}
