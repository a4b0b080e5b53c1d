#pragma once

// Counter-based 64-bit generator keyed by (seed, stream).
//
// Seed derivation, version 1:
//   key(seed, stream) = mix64(mix64(seed ^ 0x5851f42d4c957f2d) + (stream + 1) * 0xd1b54a32d192ed03)
//   output_k          = mix64(key + k * 0x9e3779b97f4a7c15),  k = 1, 2, ...
// where mix64 is the SplitMix64 finalizer. Any output can be recomputed from
// (seed, stream, k) alone, so replicas are independent of scheduling.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace torvac {

inline constexpr int kSeedDerivationVersion = 1;

__extension__ using uint128 = unsigned __int128;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + (stream + 1) * 0xd1b54a32d192ed03ULL);
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(derive_stream_key(seed, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // Independent child stream.
  CounterRng split(std::uint64_t child) const { return CounterRng(key_, child); }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Exact uniform integer in [0, n), n >= 1 (Lemire, 64-bit with rejection).
  std::uint64_t below(std::uint64_t n) {
    uint128 m = static_cast<uint128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<uint128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform choices in [0, n) for small n, two per 64-bit draw (exact, Lemire
// on 32-bit halves with rejection). Used for the 2d-way step choice.
class SmallChoiceStream {
 public:
  SmallChoiceStream(CounterRng& rng, std::uint32_t n)
      : rng_(&rng), n_(n), threshold_((0u - n) % n) {}

  std::uint32_t next() {
    while (true) {
      if (!have_) {
        buffer_ = (*rng_)();
        have_ = 2;
      }
      const auto half = static_cast<std::uint32_t>(buffer_);
      buffer_ >>= 32;
      --have_;
      const std::uint64_t m = static_cast<std::uint64_t>(half) * n_;
      if (static_cast<std::uint32_t>(m) >= threshold_) return static_cast<std::uint32_t>(m >> 32);
    }
  }

 private:
  CounterRng* rng_;
  std::uint32_t n_;
  std::uint32_t threshold_;
  std::uint64_t buffer_ = 0;
  int have_ = 0;
};

// Walker's alias method over a finite weight vector.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  std::size_t sample(CounterRng& rng) const {
    const std::size_t i = static_cast<std::size_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace torvac
