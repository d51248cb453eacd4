#ifndef LEXMDL_COMMON_HPP
#define LEXMDL_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lexmdl {

using TermId = std::int32_t;
using WordId = std::int32_t;

constexpr double kInfBits = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Bad input data (files, parameters, unparseable sequences).  The CLI maps
// this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// log2(2^a + 2^b) without leaving the log domain.
inline double log2_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log2(1.0 + std::exp2(b - a));
}

inline double bits_from_prob(double p) {
  return p > 0.0 ? -std::log2(p) : kInfBits;
}

// Polynomial fingerprint over id sequences; shared by the lexicon surface
// index and the chart scan so substring probes need no allocation.
constexpr std::uint64_t kHashMul = 0x9e3779b97f4a7c15ull;

inline std::uint64_t hash_extend(std::uint64_t h, TermId t) {
  return h * kHashMul + static_cast<std::uint64_t>(t) + 1;
}

inline std::uint64_t hash_ids(std::span<const TermId> ids) {
  std::uint64_t h = 0;
  for (TermId t : ids) h = hash_extend(h, t);
  return h;
}

// Deterministic RNG used by synth and the test harnesses.  splitmix64 core;
// the helpers avoid the implementation-defined std distributions so that a
// seed pins byte-identical output everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, n)
  std::size_t uniform_index(std::size_t n) { return next_u64() % n; }

  // uniform in [0, 1)
  double uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // index sampled from unnormalized weights
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = uniform_real() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      r -= weights[i];
      if (r < 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  // geometric over {1, 2, ...} with the given mean
  int geometric_at_least_one(double mean) {
    double stop = 1.0 / mean;
    int k = 1;
    while (uniform_real() >= stop && k < 1000) ++k;
    return k;
  }

 private:
  std::uint64_t state_;
};

}  // namespace lexmdl

#endif  // LEXMDL_COMMON_HPP
