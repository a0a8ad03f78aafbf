#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hcrep {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of an independent stream for (base, a, b), e.g. (seed, sweep point, trial).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0) { return Rng(derive_seed(base, a, b)); }

/// k distinct values from [0, n), in ascending order.
inline std::vector<std::int64_t> sample_without_replacement(Rng& rng, std::int64_t n, std::int64_t k) {
  std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (std::int64_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::int64_t> d(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(d(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

struct Interval {
  double lo = 0;
  double hi = 1;
};

/// Wilson score interval; z = 1.96 gives 95 %.
inline Interval wilson(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054) {
  if (trials <= 0) return {0, 1};
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double den = 1 + z2 / n;
  const double centre = (ph + z2 / (2 * n)) / den;
  const double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / den;
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

/// Nearest-rank percentile of a sample; NaN when empty.
inline double percentile(std::vector<double> v, double pct) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(v.size())));
  return v[std::min(v.size() - 1, rank == 0 ? 0 : rank - 1)];
}

}  // namespace hcrep
