#include "qmoments/combinatorics.hpp"

#include "qmoments/types.hpp"

#include <map>
#include <mutex>
#include <string>

namespace qmoments {

namespace {

void matchings_rec(std::vector<int>& rest, Matching& current, std::vector<Matching>& out) {
  if (rest.empty()) {
    out.push_back(current);
    return;
  }
  const int first = rest.front();
  for (std::size_t j = 1; j < rest.size(); ++j) {
    const int partner = rest[j];
    std::vector<int> remaining;
    remaining.reserve(rest.size() - 2);
    for (std::size_t q = 1; q < rest.size(); ++q) {
      if (q != j) remaining.push_back(rest[q]);
    }
    current.emplace_back(first, partner);
    matchings_rec(remaining, current, out);
    current.pop_back();
  }
}

std::vector<PartitionTerm> build_partitions(int order) {
  std::vector<PartitionTerm> terms;
  // Each slot goes to drive (0), noise (1) or initial (2): base-3 enumeration.
  std::uint64_t combos = 1;
  for (int i = 0; i < order; ++i) combos *= 3;
  for (std::uint64_t code = 0; code < combos; ++code) {
    std::vector<int> drive, noise, initial;
    std::uint64_t c = code;
    for (int slot = 0; slot < order; ++slot, c /= 3) {
      switch (c % 3) {
        case 0: drive.push_back(slot); break;
        case 1: noise.push_back(slot); break;
        default: initial.push_back(slot); break;
      }
    }
    if (noise.size() % 2 != 0) continue;
    for (auto& m : perfect_matchings(noise)) terms.push_back({drive, std::move(m), initial});
  }
  return terms;
}

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

}  // namespace

std::vector<Matching> perfect_matchings(std::span<const int> slots) {
  std::vector<Matching> out;
  if (slots.size() % 2 != 0) return out;
  std::vector<int> rest(slots.begin(), slots.end());
  Matching current;
  matchings_rec(rest, current, out);
  return out;
}

const std::vector<PartitionTerm>& enumerate_partitions(int order, int max_order) {
  if (order < 0) throw std::invalid_argument("enumerate_partitions: negative order");
  if (order > max_order) {
    throw BudgetError("enumerate_partitions: order " + std::to_string(order) + " exceeds the limit " +
                      std::to_string(max_order));
  }
  static std::mutex mutex;
  static std::map<int, std::vector<PartitionTerm>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_partitions(order)).first;
  return it->second;
}

std::uint64_t double_factorial(int n) {
  if (n < -1) throw std::invalid_argument("double_factorial: argument below -1");
  std::uint64_t f = 1;
  for (int i = n; i > 1; i -= 2) f *= static_cast<std::uint64_t>(i);
  return f;
}

std::uint64_t partition_count(int order) {
  std::uint64_t total = 0;
  for (int p = 0; 2 * p <= order; ++p) {
    for (int j = 0; j + 2 * p <= order; ++j) {
      const int r = order - j - 2 * p;
      total += factorial(order) / (factorial(j) * factorial(2 * p) * factorial(r)) * double_factorial(2 * p - 1);
    }
  }
  return total;
}

}  // namespace qmoments
