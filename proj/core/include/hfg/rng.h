/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/rng.h
 * @brief Counter-based random streams.
 *
 * Every random decision in sampling and scheduling draws from a stream whose
 * state is a pure function of a small key tuple. Results are therefore the
 * same regardless of which thread, process, or machine performs the draw.
 * The generator is splitmix64; bounded draws use Lemire's multiply-shift with
 * rejection so they do not depend on the standard library's distributions.
 */
#ifndef HFG_RNG_H_
#define HFG_RNG_H_

#include <cstdint>
#include <initializer_list>

namespace hfg {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::initializer_list<std::uint64_t> key) {
    std::uint64_t s = 0x6A09E667F3BCC909ULL;
    for (std::uint64_t k : key) s = mix64(s ^ mix64(k + 0x9E3779B97F4A7C15ULL));
    state_ = s;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace hfg

#endif  // HFG_RNG_H_
