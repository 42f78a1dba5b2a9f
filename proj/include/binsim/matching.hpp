#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "binsim/core.hpp"
#include "binsim/membits.hpp"
#include "binsim/policies.hpp"

namespace binsim {

// Number of arrays the tiered matcher maintains. Shrinks as the constant C
// grows; below 1 the construction is rejected rather than degraded.
inline std::uint64_t tiered_tier_count(std::uint64_t n, double delta, double capital_c,
                                       bool log_base_natural) {
  double logn = log_base_natural ? std::log(static_cast<double>(n))
                                 : std::log2(static_cast<double>(n));
  double x = (5.0 / (capital_c * delta)) * logn;
  if (!(x > 0)) throw std::invalid_argument("tiered matching: array-count formula undefined");
  double d = std::ceil(std::log2(x));
  if (d < 1) throw std::invalid_argument("tiered matching: array count below 1 (C too large for n)");
  return static_cast<std::uint64_t>(d);
}

inline std::uint64_t intermediate_tier_count(std::uint64_t m) {
  if (m < 16) throw std::invalid_argument("intermediate matching: array count below 1 (m too small)");
  return static_cast<std::uint64_t>(std::log2(static_cast<double>(m))) / 4;
}

namespace detail {

struct TierConfig {
  std::uint64_t blocks;      // blocks spanned by this array
  std::uint64_t tuple_size;  // bins folded into one occupancy bit
};

// Occupancy directory for a family of arrays laid out over fixed-width
// blocks of bins. Each array tracks its span at a per-array tuple
// resolution with one bit per tuple; arrays that fill past the configured
// emptiness floor move wholesale to fresh blocks past the frontier. All
// persistent state (tuple bits, array start pointers, frontier) lives in
// the caller's BitLedger; members here only mirror ledger contents.
class TupleDirectory {
 public:
  struct Tier {
    std::uint64_t blocks = 0;
    std::uint64_t tuple_size = 0;
    std::uint64_t tuple_count = 0;
    RegionHandle bits;
    std::uint64_t start_block = 0;   // mirror of the pointer region
    std::uint64_t empty_tuples = 0;  // mirror of the zero bits in `bits`
  };

  struct Hit {
    std::uint32_t tier = 0;
    std::uint64_t bin = 0;
    std::uint64_t tuple = 0;
  };

  TupleDirectory(BitLedger& ledger, std::uint64_t n_bins, double delta,
                 std::vector<TierConfig> configs)
      : ledger_(&ledger), n_(n_bins), half_delta_(delta / 2.0) {
    std::string why;
    // Preferred block width is half the budget; when the occupancy bits
    // plus pointers do not fit beside it, fall back to a sixth so the
    // bookkeeping earns its room.
    for (std::uint64_t w : {ledger.capacity() / 2, ledger.capacity() / 6}) {
      if (try_build(w, configs, why)) return;
    }
    throw std::invalid_argument("matching arrays: " + why);
  }

  std::uint64_t block_width() const { return block_width_; }
  std::uint64_t block_count() const { return block_count_; }
  std::uint64_t frontier() const { return frontier_; }
  std::uint64_t relocations() const { return relocations_; }
  std::size_t tier_count() const { return tiers_.size(); }
  const Tier& tier(std::size_t j) const { return tiers_[j]; }

  bool tuple_bit(std::size_t j, std::uint64_t tuple) const {
    return ledger_->get_bit(tiers_[j].bits, tuple);
  }

  // Serve any relocation owed from the previous round. False means a
  // needed relocation cannot be served: the block supply is exhausted.
  bool service_pending() {
    for (std::uint32_t j = 0; j < tiers_.size(); ++j)
      if (below_floor(j) && !relocate(j)) return false;
    return true;
  }

  // Lowest tier holding an offered bin whose tuple is still marked empty;
  // within a tier the first qualifying bin in offer order wins.
  template <class BinRange>
  std::optional<Hit> find(const BinRange& bins) const {
    for (std::uint32_t j = 0; j < tiers_.size(); ++j) {
      const Tier& t = tiers_[j];
      std::uint64_t base = t.start_block * block_width_;
      std::uint64_t span = t.blocks * block_width_;
      for (std::uint64_t bin : bins) {
        if (bin < base || bin - base >= span) continue;
        std::uint64_t tuple = (bin - base) / t.tuple_size;
        if (tuple >= t.tuple_count) continue;  // untracked tail of the span
        if (!ledger_->get_bit(t.bits, tuple)) return Hit{j, bin, tuple};
      }
    }
    return std::nullopt;
  }

  void mark(const Hit& hit) {
    Tier& t = tiers_[hit.tier];
    ledger_->set_bit(t.bits, hit.tuple, true);
    --t.empty_tuples;
  }

  // Post-placement relocation check. A failed relocation is left pending;
  // the next service_pending() call reports the exhaustion.
  void settle(std::uint32_t j) {
    if (below_floor(j)) (void)relocate(j);
  }

  bool below_floor(std::uint32_t j) const {
    const Tier& t = tiers_[j];
    return static_cast<double>(t.empty_tuples) < half_delta_ * static_cast<double>(t.tuple_count);
  }

  // Restore the initial layout in place (same regions, rewritten).
  void reset() {
    std::uint64_t next = 0;
    for (std::uint32_t j = 0; j < tiers_.size(); ++j) {
      move_tier(j, next);
      next += tiers_[j].blocks;
    }
    set_frontier(next);
  }

  // True when every mirror field agrees with the ledger bits it shadows.
  bool mirrors_consistent() const {
    for (std::uint32_t j = 0; j < tiers_.size(); ++j) {
      const Tier& t = tiers_[j];
      if (ledger_->read_uint(pointers_, j * ptr_bits_, ptr_bits_) != t.start_block) return false;
      if (t.tuple_count - ledger_->popcount_region(t.bits) != t.empty_tuples) return false;
    }
    return ledger_->read_uint(frontier_region_, 0, frontier_bits_) == frontier_;
  }

 private:
  bool try_build(std::uint64_t w, const std::vector<TierConfig>& configs, std::string& why) {
    if (w == 0) {
      why = "memory budget too small for any block";
      return false;
    }
    std::uint64_t blocks = n_ / w;
    std::uint64_t initial = 0;
    std::uint64_t bits_needed = 0;
    for (const TierConfig& c : configs) {
      std::uint64_t tuples = c.blocks * w / c.tuple_size;
      if (tuples == 0) {
        why = "array too narrow to hold a single tuple";
        return false;
      }
      initial += c.blocks;
      bits_needed += tuples;
    }
    if (initial > blocks) {
      why = "initial array layout does not fit in the available blocks";
      return false;
    }
    unsigned pb = std::max(1, static_cast<int>(std::bit_width(blocks > 1 ? blocks - 1 : 1ull)));
    unsigned fb = std::max(1, static_cast<int>(std::bit_width(blocks)));
    bits_needed += configs.size() * pb + fb;
    if (bits_needed > ledger_->capacity()) {
      why = "occupancy bits and pointers exceed the memory budget";
      return false;
    }

    block_width_ = w;
    block_count_ = blocks;
    ptr_bits_ = pb;
    frontier_bits_ = fb;
    tiers_.clear();
    for (std::size_t j = 0; j < configs.size(); ++j) {
      Tier t;
      t.blocks = configs[j].blocks;
      t.tuple_size = configs[j].tuple_size;
      t.tuple_count = configs[j].blocks * w / configs[j].tuple_size;
      t.bits = ledger_->alloc(t.tuple_count, "array_" + std::to_string(j) + "_tuples");
      tiers_.push_back(t);
    }
    pointers_ = ledger_->alloc(configs.size() * pb, "array_pointers");
    frontier_region_ = ledger_->alloc(fb, "frontier");
    reset();
    return true;
  }

  void move_tier(std::uint32_t j, std::uint64_t start_block) {
    Tier& t = tiers_[j];
    t.start_block = start_block;
    ledger_->write_uint(pointers_, j * ptr_bits_, ptr_bits_, start_block);
    ledger_->clear_region(t.bits);
    t.empty_tuples = t.tuple_count;
  }

  void set_frontier(std::uint64_t value) {
    frontier_ = value;
    ledger_->write_uint(frontier_region_, 0, frontier_bits_, value);
  }

  bool relocate(std::uint32_t j) {
    Tier& t = tiers_[j];
    if (frontier_ + t.blocks > block_count_) return false;
    std::uint64_t start = frontier_;
    move_tier(j, start);
    set_frontier(start + t.blocks);
    ++relocations_;
    return true;
  }

  BitLedger* ledger_;
  std::uint64_t n_;
  double half_delta_;
  std::uint64_t block_width_ = 0;
  std::uint64_t block_count_ = 0;
  unsigned ptr_bits_ = 0;
  unsigned frontier_bits_ = 0;
  RegionHandle pointers_;
  RegionHandle frontier_region_;
  std::uint64_t frontier_ = 0;
  std::uint64_t relocations_ = 0;
  std::vector<Tier> tiers_;
};

inline void check_matching_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("matching: delta must lie strictly between 0 and 1");
}

}  // namespace detail

// Stage-by-stage matcher. The bins are split into fixed blocks; each stage
// tracks one block with a plain per-bin bitmap and admits a fixed quota of
// balls before moving on. The bitmap, the stage index, and the in-stage
// round counter all live in the ledger.
class BasicMatchingPolicy final : public Policy {
 public:
  BasicMatchingPolicy(const ProblemSize& p, const PolicySpec& spec) : ledger_(p.m) {
    detail::check_matching_delta(spec.delta);
    if (static_cast<double>(p.m) < 2.0 * std::log2(static_cast<double>(p.n)))
      throw std::invalid_argument("basic matching: budget below twice log2(n)");
    width_ = p.m / 2;
    if (width_ == 0) throw std::invalid_argument("basic matching: budget too small for a block");
    stages_ = p.n / width_;
    if (stages_ == 0) throw std::invalid_argument("basic matching: block wider than the bin range");
    if (spec.delta * static_cast<double>(width_) < 1.0)
      throw std::invalid_argument("basic matching: blocks too narrow to keep any bin empty");
    quota_ = static_cast<std::uint64_t>((1.0 - spec.delta) * static_cast<double>(width_));
    if (quota_ == 0) throw std::invalid_argument("basic matching: per-stage quota is zero");
    bitmap_ = ledger_.alloc(width_, "stage_bitmap");
    stage_bits_ = std::max(1, static_cast<int>(std::bit_width(stages_)));
    round_bits_ = std::max(1, static_cast<int>(std::bit_width(quota_ > 1 ? quota_ - 1 : 1ull)));
    stage_region_ = ledger_.alloc(stage_bits_, "stage_index");
    round_region_ = ledger_.alloc(round_bits_, "stage_round");
    double need = (3.0 / spec.delta) * static_cast<double>(p.n) * std::log(static_cast<double>(p.n));
    if (static_cast<double>(p.k) * static_cast<double>(p.m) < need)
      warnings_.push_back("basic matching: k*m below the advisable (3/delta)*n*ln(n)");
  }

  PolicyOutcome decide(const Offer& offer, const LoadVector&, std::uint64_t) override {
    const auto& u = detail::require_uniform(offer, "basic matching");
    std::uint64_t stage = ledger_.read_uint(stage_region_, 0, stage_bits_);
    if (stage >= stages_) return PolicyOutcome::failed(FailureCause::block_exhaustion);
    std::uint64_t base = stage * width_;
    std::uint64_t best = n_sentinel();
    for (std::uint32_t bin : u.bins) {
      if (bin < base || bin - base >= width_) continue;
      if (ledger_.get_bit(bitmap_, bin - base)) continue;
      if (bin < best) best = bin;
    }
    if (best == n_sentinel()) return PolicyOutcome::failed(FailureCause::miss_all_arrays);
    ledger_.set_bit(bitmap_, best - base, true);
    std::uint64_t used = ledger_.read_uint(round_region_, 0, round_bits_) + 1;
    if (used == quota_) {
      ledger_.write_uint(stage_region_, 0, stage_bits_, stage + 1);
      ledger_.write_uint(round_region_, 0, round_bits_, 0);
      ledger_.clear_region(bitmap_);
    } else {
      ledger_.write_uint(round_region_, 0, round_bits_, used);
    }
    return PolicyOutcome::placed(static_cast<std::uint32_t>(best));
  }

  const BitLedger* ledger() const override { return &ledger_; }
  std::uint64_t stage_quota() const { return quota_; }
  std::uint64_t stage_count() const { return stages_; }
  std::uint64_t block_width() const { return width_; }

 private:
  static constexpr std::uint64_t n_sentinel() { return ~0ull; }

  BitLedger ledger_;
  std::uint64_t width_ = 0;
  std::uint64_t stages_ = 0;
  std::uint64_t quota_ = 0;
  unsigned stage_bits_ = 0;
  unsigned round_bits_ = 0;
  RegionHandle bitmap_, stage_region_, round_region_;
};

// Shared body of the two tier-directory policies.
class TierMatchingBase : public Policy {
 public:
  PolicyOutcome decide(const Offer& offer, const LoadVector&, std::uint64_t round) override {
    const auto& u = detail::require_uniform(offer, "matching");
    if (round >= rounds_limit_) return PolicyOutcome::failed(FailureCause::stage_precondition);
    if (!dir_->service_pending()) return PolicyOutcome::failed(FailureCause::block_exhaustion);
    auto hit = dir_->find(u.bins);
    if (!hit) return PolicyOutcome::failed(FailureCause::miss_all_arrays);
    dir_->mark(*hit);
    dir_->settle(hit->tier);
    return PolicyOutcome::placed(static_cast<std::uint32_t>(hit->bin));
  }

  const BitLedger* ledger() const override { return &ledger_; }
  const detail::TupleDirectory& directory() const { return *dir_; }
  std::uint64_t rounds_limit() const { return rounds_limit_; }

 protected:
  TierMatchingBase(const ProblemSize& p, double delta, std::vector<detail::TierConfig> configs)
      : ledger_(p.m) {
    detail::check_matching_delta(delta);
    rounds_limit_ = static_cast<std::uint64_t>((1.0 - delta) * static_cast<double>(p.n));
    dir_.emplace(ledger_, p.n, delta, std::move(configs));
  }

  BitLedger ledger_;
  std::uint64_t rounds_limit_ = 0;
  std::optional<detail::TupleDirectory> dir_;
};

// Tier j spans one block and folds 2^j bins per occupancy bit.
class IntermediateMatchingPolicy final : public TierMatchingBase {
 public:
  IntermediateMatchingPolicy(const ProblemSize& p, const PolicySpec& spec)
      : TierMatchingBase(p, spec.delta, make_configs(p.m)) {
    double need = (3.0 / spec.delta) * static_cast<double>(p.n) * std::log(static_cast<double>(p.n));
    if (static_cast<double>(p.k) * static_cast<double>(p.m) < need)
      warnings_.push_back("intermediate matching: k*m below the advisable (3/delta)*n*ln(n)");
  }

 private:
  static std::vector<detail::TierConfig> make_configs(std::uint64_t m) {
    std::uint64_t d = intermediate_tier_count(m);
    if (d < 1) throw std::invalid_argument("intermediate matching: array count below 1");
    std::vector<detail::TierConfig> configs;
    for (std::uint64_t j = 0; j < d; ++j) configs.push_back({1, 1ull << j});
    return configs;
  }
};

// Tier j spans 2^j blocks and folds 4^j bins per occupancy bit, so every
// tier costs the same number of occupancy bits as it loses resolution.
class TieredMatchingPolicy final : public TierMatchingBase {
 public:
  TieredMatchingPolicy(const ProblemSize& p, const PolicySpec& spec)
      : TierMatchingBase(p, spec.delta, make_configs(p, spec)) {
    double logn = std::log(static_cast<double>(p.n));
    if (static_cast<double>(p.k) < (3.0 / spec.delta) * logn)
      warnings_.push_back("tiered matching: k below the advisable (3/delta)*ln(n)");
    double log2n = std::log2(static_cast<double>(p.n));
    if (static_cast<double>(p.m) < log2n * std::log2(log2n))
      warnings_.push_back("tiered matching: m below the advisable log2(n)*log2(log2(n))");
  }

 private:
  static std::vector<detail::TierConfig> make_configs(const ProblemSize& p, const PolicySpec& spec) {
    std::uint64_t d = tiered_tier_count(p.n, spec.delta, spec.capital_c, spec.log_base_natural);
    std::vector<detail::TierConfig> configs;
    for (std::uint64_t j = 0; j < d; ++j) configs.push_back({1ull << j, 1ull << (2 * j)});
    return configs;
  }
};

// Groups bins into super-bins and runs the tiered matcher over super-bins
// in phases, resetting the matcher between phases. Each phase adds at most
// one ball per super-bin, which caps the per-bin load by the phase count.
class ConstantLoadPolicy final : public Policy {
 public:
  ConstantLoadPolicy(const ProblemSize& p, const PolicySpec& spec) : ledger_(p.m) {
    double c = spec.load_c ? *spec.load_c
                           : static_cast<double>(p.k) * static_cast<double>(p.m) /
                                 static_cast<double>(p.n);
    if (!(c > 0)) throw std::invalid_argument("constant load: ratio c must be positive");
    if (spec.delta != 0.5)
      warnings_.push_back("constant load: delta is fixed at 1/2; configured value ignored");
    if (static_cast<double>(p.k) * static_cast<double>(p.m) < c * static_cast<double>(p.n))
      warnings_.push_back("constant load: k*m below the configured c*n");
    group_ = static_cast<std::uint64_t>(std::ceil(spec.capital_c / c));
    if (group_ == 0) group_ = 1;
    super_n_ = p.n / group_;
    if (super_n_ < 2) throw std::invalid_argument("constant load: fewer than two super-bins");
    phase_len_ = super_n_ / 2;
    std::uint64_t d = tiered_tier_count(super_n_, 0.5, spec.capital_c, spec.log_base_natural);
    std::vector<detail::TierConfig> configs;
    for (std::uint64_t j = 0; j < d; ++j) configs.push_back({1ull << j, 1ull << (2 * j)});
    dir_.emplace(ledger_, super_n_, 0.5, std::move(configs));
  }

  PolicyOutcome decide(const Offer& offer, const LoadVector&, std::uint64_t round) override {
    const auto& u = detail::require_uniform(offer, "constant load");
    std::uint64_t phase = round / phase_len_;
    if (phase != current_phase_) {
      dir_->reset();
      current_phase_ = phase;
    }
    int ph = static_cast<int>(phase);
    if (!dir_->service_pending()) return PolicyOutcome::failed(FailureCause::block_exhaustion, ph);
    scratch_.clear();
    std::uint64_t covered = super_n_ * group_;
    for (std::uint32_t bin : u.bins)
      if (bin < covered) scratch_.push_back(static_cast<std::uint32_t>(bin / group_));
    auto hit = dir_->find(scratch_);
    if (!hit) return PolicyOutcome::failed(FailureCause::miss_all_arrays, ph);
    dir_->mark(*hit);
    dir_->settle(hit->tier);
    // The ball physically lands in the lowest-indexed offered member bin.
    std::uint32_t best = ~0u;
    for (std::uint32_t bin : u.bins)
      if (bin < covered && bin / group_ == hit->bin && bin < best) best = bin;
    return PolicyOutcome::placed(best);
  }

  const BitLedger* ledger() const override { return &ledger_; }
  std::uint64_t group_size() const { return group_; }
  std::uint64_t super_bin_count() const { return super_n_; }
  std::uint64_t phase_length() const { return phase_len_; }

 private:
  BitLedger ledger_;
  std::uint64_t group_ = 1;
  std::uint64_t super_n_ = 0;
  std::uint64_t phase_len_ = 0;
  std::uint64_t current_phase_ = 0;
  std::optional<detail::TupleDirectory> dir_;
  std::vector<std::uint32_t> scratch_;
};

inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const ProblemSize& p) {
  p.validate();
  switch (spec.kind) {
    case PolicyKind::random: return std::make_unique<RandomPolicy>();
    case PolicyKind::greedy_unbounded: return std::make_unique<GreedyUnboundedPolicy>();
    case PolicyKind::basic_matching: return std::make_unique<BasicMatchingPolicy>(p, spec);
    case PolicyKind::intermediate_matching:
      return std::make_unique<IntermediateMatchingPolicy>(p, spec);
    case PolicyKind::tiered_matching: return std::make_unique<TieredMatchingPolicy>(p, spec);
    case PolicyKind::constant_load: return std::make_unique<ConstantLoadPolicy>(p, spec);
    case PolicyKind::nonadaptive_cyclic: return std::make_unique<NonadaptiveCyclicPolicy>(p);
  }
  throw std::invalid_argument("unknown policy kind");
}

}  // namespace binsim
