#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "fqr/stats.hpp"
#include "fqr/types.hpp"

namespace fqr {

// Counter-based splittable generator: every (seed, replicate, stream) triple
// names an independent stream, so parallel and serial study runs draw the
// same numbers.
class Rng {
 public:
  enum Stream : std::uint64_t {
    kScores = 0,
    kResponseNoise = 1,
    kMeasurementNoise = 2,
    kSamplingTimes = 3,
    kBootstrap = 4,
    kCrossValidation = 5,
    kGeneric = 6,
  };

  Rng(std::uint64_t seed, std::uint64_t replicate = 0, std::uint64_t stream = kGeneric) {
    std::uint64_t s = seed;
    s = mix(s + 0x9E3779B97F4A7C15ULL * (replicate + 1));
    s = mix(s ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    state_ = s;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform draw strictly inside (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal via the inverse distribution function.
  double normal() { return normal_quantile(uniform()); }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Uniform integer in [0, n).
  Index uniform_index(Index n) {
    return static_cast<Index>((static_cast<__uint128_t>(next_u64()) *
                               static_cast<__uint128_t>(n)) >> 64);
  }

  /// k distinct indices from {0, ..., n-1}, in random order.
  std::vector<Index> sample_without_replacement(Index n, Index k) {
    std::vector<Index> idx(n);
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index i = 0; i < k; ++i) {
      Index j = i + uniform_index(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  std::vector<Index> permutation(Index n) { return sample_without_replacement(n, n); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace fqr
