#pragma once

#include <cstdint>

namespace binsim {

// Counter-based splittable PRNG. A stream is a 64-bit key plus a draw
// counter; child streams are derived by mixing a path component into the
// key. Identical (seed, path...) always yields bit-identical output,
// independent of platform, thread schedule, or how sibling streams are
// consumed. That keeps every trial and every round independently
// replayable.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix64(seed + kGamma)) {}

  // Derive an independent child stream; does not disturb this stream.
  RngStream split(std::uint64_t path) const {
    return RngStream(mix64(key_ ^ mix64(path + kPathSalt)), 0);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) {
    // Lemire's multiply-shift rejection method.
    while (true) {
      std::uint64_t x = next_u64();
      unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
      auto low = static_cast<std::uint64_t>(m);
      if (low < bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        if (low < threshold) continue;
      }
      return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  std::uint64_t key() const { return key_; }

 private:
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kPathSalt = 0x632BE59BD9B4E019ull;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace binsim
