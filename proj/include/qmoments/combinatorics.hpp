#pragma once

#include "qmoments/defaults.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace qmoments {

using SlotPair = std::pair<int, int>;  // first < second
using Matching = std::vector<SlotPair>;

/// One summand of the three-set expansion I = I1 u I2 u I3 of an ordered
/// slot set {0, ..., k-1}: drive slots (I1), noise slots matched into
/// ascending pairs (I2), and slots carried by the initial moment (I3).
/// Every slot list is ascending.
struct PartitionTerm {
  std::vector<int> drive;
  Matching pairs;
  std::vector<int> initial;
};

/// All perfect matchings of `slots` (empty for odd size, one empty matching
/// for no slots). Pairs are ascending and listed by their first element.
std::vector<Matching> perfect_matchings(std::span<const int> slots);

/// All partition terms for a slot set of the given size, memoized per order.
/// Throws BudgetError when order > max_order.
const std::vector<PartitionTerm>& enumerate_partitions(int order, int max_order = defaults::kMaxOrder);

/// (n-1)!! with (-1)!! = 1; n must be odd or -1.
std::uint64_t double_factorial(int n);

/// sum_{j + 2p + r = k} k! / (j! (2p)! r!) (2p - 1)!!
std::uint64_t partition_count(int order);

}  // namespace qmoments
