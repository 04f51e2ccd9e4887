#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "uniwalk/rng.hpp"

using namespace uniwalk;

TEST_CASE("splitmix64 matches reference outputs") {
  // First three values of the canonical splitmix64 stream seeded with 0,
  // i.e. inputs 0, gamma, 2*gamma for the golden-ratio increment.
  constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(gamma) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(2 * gamma) == 0x06c45d188009454fULL);
  CHECK(splitmix64(1234567) == 0x599ed017fb08fc85ULL);
}

TEST_CASE("mix_seed separates nearby inputs") {
  CHECK(mix_seed(1, 1) != mix_seed(1, 2));
  CHECK(mix_seed(1, 1) != mix_seed(2, 1));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
  CHECK(mix_seed(0, 0) != 0);
}

TEST_CASE("mix_seed is deterministic") {
  CHECK(mix_seed(42, 7) == mix_seed(42, 7));
  CHECK(mix_seed(42, 7, 9, 11) == mix_seed(42, 7, 9, 11));
}

TEST_CASE("uniform_unit stays in [0, 1) and is reproducible") {
  std::mt19937_64 a(99), b(99);
  for (int k = 0; k < 10000; ++k) {
    const double x = uniform_unit(a);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(x == uniform_unit(b));
  }
}

TEST_CASE("uniform_unit is roughly uniform") {
  std::mt19937_64 rng(7);
  std::array<int, 10> buckets{};
  const int n = 100000;
  for (int k = 0; k < n; ++k) ++buckets[static_cast<std::size_t>(uniform_unit(rng) * 10)];
  for (int count : buckets) CHECK(std::abs(count - n / 10) < 500);
}

TEST_CASE("uniform_below covers the full range without bias") {
  std::mt19937_64 rng(11);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int k = 0; k < n; ++k) ++counts[uniform_below(rng, 7)];
  for (int count : counts) CHECK(std::abs(count - n / 7) < 500);
}

TEST_CASE("deterministic_shuffle produces a permutation, identical across runs") {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  std::mt19937_64 a(5), b(5);
  deterministic_shuffle(v.begin(), v.end(), a);
  deterministic_shuffle(w.begin(), w.end(), b);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(100);
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(sorted == expected);
}
