#include "qmoments/combinatorics.hpp"
#include "qmoments/types.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

using namespace qmoments;

namespace {

// (2k - 1)!! by the recursion "pair the first slot with any other".
std::uint64_t matchings_by_recursion(int size) {
  if (size == 0) return 1;
  return static_cast<std::uint64_t>(size - 1) * matchings_by_recursion(size - 2);
}

std::uint64_t factorial(int k) { return k <= 1 ? 1 : k * factorial(k - 1); }

}  // namespace

TEST_CASE("double factorial") {
  CHECK(double_factorial(-1) == 1);
  CHECK(double_factorial(1) == 1);
  CHECK(double_factorial(5) == 15);
  CHECK(double_factorial(7) == 105);
}

TEST_CASE("perfect matchings of small slot sets") {
  const std::vector<int> none{}, three{0, 1, 2}, four{0, 1, 2, 3};
  CHECK(perfect_matchings(none).size() == 1);
  CHECK(perfect_matchings(three).empty());
  const auto m4 = perfect_matchings(four);
  REQUIRE(m4.size() == 3);
  const std::set<Matching> expect{{{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}, {{0, 3}, {1, 2}}};
  CHECK(std::set<Matching>(m4.begin(), m4.end()) == expect);
  for (int size = 0; size <= 10; size += 2) {
    std::vector<int> slots(size);
    std::iota(slots.begin(), slots.end(), 0);
    const auto all = perfect_matchings(slots);
    CHECK(all.size() == matchings_by_recursion(size));
    for (const auto& m : all) {
      for (const auto& [a, b] : m) CHECK(a < b);
    }
  }
}

TEST_CASE("first-order partitions") {
  const auto& terms = enumerate_partitions(1);
  REQUIRE(terms.size() == 2);
  int drive = 0, initial = 0;
  for (const auto& t : terms) {
    drive += t.drive.size() == 1;
    initial += t.initial.size() == 1;
    CHECK(t.pairs.empty());
  }
  CHECK(drive == 1);
  CHECK(initial == 1);
}

TEST_CASE("second-order partitions are four slot assignments plus the pairing") {
  const auto& terms = enumerate_partitions(2);
  CHECK(terms.size() == 5);
  int pairing = 0;
  for (const auto& t : terms) {
    if (!t.pairs.empty()) {
      ++pairing;
      CHECK(t.pairs == Matching{{0, 1}});
    }
  }
  CHECK(pairing == 1);
}

TEST_CASE("fourth-order partitions without drive slots") {
  int pure = 0, one_pair = 0, none = 0;
  std::set<Matching> pure_pairings;
  for (const auto& t : enumerate_partitions(4)) {
    if (!t.drive.empty()) continue;
    if (t.pairs.size() == 2) {
      ++pure;
      pure_pairings.insert(t.pairs);
    } else if (t.pairs.size() == 1) {
      ++one_pair;
    } else {
      ++none;
    }
  }
  CHECK(pure == 3);
  CHECK(one_pair == 6);
  CHECK(none == 1);
  CHECK(pure_pairings == std::set<Matching>{{{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}, {{0, 3}, {1, 2}}});
}

TEST_CASE("partition count identity and exact-once coverage up to order eight") {
  for (int k = 0; k <= 8; ++k) {
    // Independent count: choose the drive set, the initial set, then a matching.
    std::uint64_t count = 0;
    for (int j = 0; j <= k; ++j) {
      for (int p = 0; 2 * p + j <= k; ++p) {
        const int r = k - j - 2 * p;
        count += factorial(k) / (factorial(j) * factorial(2 * p) * factorial(r)) * matchings_by_recursion(2 * p);
      }
    }
    const auto& terms = enumerate_partitions(k);
    CHECK(terms.size() == count);
    CHECK(partition_count(k) == count);
    std::set<std::tuple<std::vector<int>, Matching, std::vector<int>>> seen;
    for (const auto& t : terms) {
      std::vector<int> covered(t.drive);
      covered.insert(covered.end(), t.initial.begin(), t.initial.end());
      for (const auto& [a, b] : t.pairs) {
        covered.push_back(a);
        covered.push_back(b);
      }
      std::sort(covered.begin(), covered.end());
      std::vector<int> all(k);
      std::iota(all.begin(), all.end(), 0);
      CHECK(covered == all);
      CHECK(std::is_sorted(t.drive.begin(), t.drive.end()));
      CHECK(std::is_sorted(t.initial.begin(), t.initial.end()));
      seen.insert({t.drive, t.pairs, t.initial});
    }
    CHECK(seen.size() == terms.size());
  }
  CHECK(partition_count(1) == 2);
  CHECK(partition_count(2) == 5);
  CHECK(partition_count(4) == 43);
  CHECK(partition_count(8) == 7193);
}

TEST_CASE("orders above the budget are refused") {
  CHECK_THROWS_AS(enumerate_partitions(9), BudgetError);
  CHECK_THROWS_AS(enumerate_partitions(5, 4), BudgetError);
}
