#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "binsim/rng.hpp"

namespace binsim {

// One allocation instance: n bins, b balls, k bin choices offered per ball,
// and a persistent-memory budget of m bits for the placement policy.
struct ProblemSize {
  std::uint64_t n = 0;
  std::uint64_t b = 0;
  std::uint64_t k = 1;
  std::uint64_t m = 0;

  void validate() const {
    if (n == 0) throw std::invalid_argument("problem: n must be at least 1");
    if (b > n) throw std::invalid_argument("problem: balls must not exceed n");
    if (k == 0 || k > n) throw std::invalid_argument("problem: k must be in [1, n]");
  }
};

// Per-bin ball counts. Bins are 0-indexed.
class LoadVector {
 public:
  explicit LoadVector(std::size_t n) : counts_(n, 0) {}

  static LoadVector from_counts(std::vector<std::uint32_t> counts) {
    LoadVector lv(0);
    lv.counts_ = std::move(counts);
    for (std::uint32_t c : lv.counts_) lv.placed_ += c;
    return lv;
  }

  void place(std::size_t bin) {
    if (bin >= counts_.size()) throw std::out_of_range("place: bin index out of range");
    ++counts_[bin];
    ++placed_;
  }

  std::uint32_t operator[](std::size_t bin) const { return counts_[bin]; }
  std::size_t size() const { return counts_.size(); }
  std::uint64_t placed() const { return placed_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

 private:
  std::vector<std::uint32_t> counts_;
  std::uint64_t placed_ = 0;
};

inline std::uint32_t max_load(const LoadVector& loads) {
  std::uint32_t best = 0;
  for (std::uint32_t c : loads.counts()) best = std::max(best, c);
  return best;
}

// Sum over bins of C(load, q): the number of q-subsets of balls sharing a
// bin. q = 2 counts colliding pairs. Accumulated in 128-bit arithmetic;
// saturation or a result above 2^64-1 is an error, never a silent wrap.
inline std::uint64_t collisions(const LoadVector& loads, unsigned q) {
  if (q == 0) throw std::invalid_argument("collisions: order q must be at least 1");
  using u128 = unsigned __int128;
  constexpr u128 kMax = ~static_cast<u128>(0);
  u128 total = 0;
  for (std::uint32_t c : loads.counts()) {
    if (c < q) continue;
    // C(c, q) built incrementally; r stays integral (r = C(c-q+i, i)).
    u128 r = 1;
    for (unsigned i = 1; i <= q; ++i) {
      u128 factor = static_cast<u128>(c) - q + i;
      if (factor != 0 && r > kMax / factor) throw std::overflow_error("collisions: 128-bit overflow");
      r = r * factor / i;
    }
    if (total > kMax - r) throw std::overflow_error("collisions: 128-bit overflow");
    total += r;
  }
  if (total > static_cast<u128>(std::numeric_limits<std::uint64_t>::max()))
    throw std::overflow_error("collisions: result exceeds 64 bits");
  return static_cast<std::uint64_t>(total);
}

// k bin indices in draw order; entries may repeat when repetitions_allowed.
struct UniformOffer {
  std::vector<std::uint32_t> bins;
  bool repetitions_allowed = true;
};

// Independent inclusion of each bin with probability alpha, stored as a
// bitmask over [0, n).
struct BernoulliOffer {
  std::vector<std::uint64_t> mask;
  std::uint64_t n = 0;
  double alpha = 0.5;

  bool contains(std::uint64_t bin) const {
    return (mask[bin >> 6] >> (bin & 63)) & 1u;
  }

  std::uint64_t count() const {
    std::uint64_t total = 0;
    for (std::uint64_t w : mask) total += static_cast<std::uint64_t>(__builtin_popcountll(w));
    return total;
  }

  // First included bin at cyclic distance >= 1 from `from`, scanning
  // from+1, from+2, ... with wraparound (distance n lands back on `from`).
  // Returns n when the mask is empty.
  std::uint64_t next_included(std::uint64_t from) const {
    for (std::uint64_t d = 1; d <= n; ++d) {
      std::uint64_t bin = from + d;
      if (bin >= n) bin -= n;
      if (contains(bin)) return bin;
    }
    return n;
  }
};

using Offer = std::variant<UniformOffer, BernoulliOffer>;

// Refill `out` with k draws; with repetitions the draws are i.i.d. uniform,
// without they form a uniformly random k-subset in draw order.
inline void sample_offer_uniform(std::uint64_t n, std::uint64_t k, bool repetitions_allowed,
                                 RngStream& rng, UniformOffer& out) {
  if (n == 0 || k == 0) throw std::invalid_argument("offer: need n >= 1 and k >= 1");
  if (!repetitions_allowed && k > n)
    throw std::invalid_argument("offer: k distinct bins require k <= n");
  out.repetitions_allowed = repetitions_allowed;
  out.bins.clear();
  out.bins.reserve(k);
  if (repetitions_allowed) {
    for (std::uint64_t i = 0; i < k; ++i)
      out.bins.push_back(static_cast<std::uint32_t>(rng.next_below(n)));
    return;
  }
  if (k <= 128) {
    // Rejection with linear membership scan; cheap at small k.
    while (out.bins.size() < k) {
      auto bin = static_cast<std::uint32_t>(rng.next_below(n));
      if (std::find(out.bins.begin(), out.bins.end(), bin) == out.bins.end())
        out.bins.push_back(bin);
    }
  } else {
    std::vector<bool> seen(n, false);
    while (out.bins.size() < k) {
      auto bin = static_cast<std::uint32_t>(rng.next_below(n));
      if (!seen[bin]) {
        seen[bin] = true;
        out.bins.push_back(bin);
      }
    }
  }
}

inline UniformOffer sample_offer_uniform(std::uint64_t n, std::uint64_t k,
                                         bool repetitions_allowed, RngStream& rng) {
  UniformOffer out;
  sample_offer_uniform(n, k, repetitions_allowed, rng, out);
  return out;
}

inline void sample_offer_bernoulli(std::uint64_t n, double alpha, RngStream& rng,
                                   BernoulliOffer& out) {
  if (n == 0) throw std::invalid_argument("offer: need n >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("offer: alpha must lie strictly between 0 and 1");
  out.n = n;
  out.alpha = alpha;
  std::size_t words = static_cast<std::size_t>((n + 63) / 64);
  out.mask.assign(words, 0);
  if (alpha == 0.5) {
    // One fair coin per bin is exactly one random bit; draw whole words.
    for (std::size_t w = 0; w < words; ++w) out.mask[w] = rng.next_u64();
  } else {
    for (std::uint64_t bin = 0; bin < n; ++bin)
      if (rng.next_bernoulli(alpha)) out.mask[bin >> 6] |= 1ull << (bin & 63);
  }
  std::uint64_t tail = n & 63;
  if (tail) out.mask[words - 1] &= (1ull << tail) - 1;
}

inline BernoulliOffer sample_offer_bernoulli(std::uint64_t n, double alpha, RngStream& rng) {
  BernoulliOffer out;
  sample_offer_bernoulli(n, alpha, rng, out);
  return out;
}

// Why a placement policy gave up on a round.
enum class FailureCause { miss_all_arrays, block_exhaustion, stage_precondition };

inline const char* to_string(FailureCause c) {
  switch (c) {
    case FailureCause::miss_all_arrays: return "miss_all_arrays";
    case FailureCause::block_exhaustion: return "block_exhaustion";
    case FailureCause::stage_precondition: return "stage_precondition";
  }
  return "unknown";
}

struct PolicyOutcome {
  bool is_placed = false;
  std::uint32_t bin = 0;
  FailureCause cause = FailureCause::miss_all_arrays;
  int phase = -1;  // set by phased policies on failure

  static PolicyOutcome placed(std::uint32_t bin) { return {true, bin, FailureCause::miss_all_arrays, -1}; }
  static PolicyOutcome failed(FailureCause cause, int phase = -1) { return {false, 0, cause, phase}; }
};

}  // namespace binsim
