#include "binsim/core.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "binsim/rng.hpp"

namespace {

using namespace binsim;

TEST(Rng, SameSeedSameStream) {
  RngStream a(42), b(42);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiffer) {
  RngStream a(1), b(2);
  int same = 0;
  for (int i = 0; i < 16; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_LT(same, 2);
}

TEST(Rng, SplitIsDeterministicAndIndependent) {
  RngStream root(7);
  RngStream a = root.split(3), b = root.split(3), c = root.split(4);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  RngStream a2 = root.split(3);
  EXPECT_NE(a2.next_u64(), c.next_u64());
  // splitting does not consume from the parent
  RngStream fresh(7);
  (void)fresh.split(99);
  RngStream fresh2(7);
  EXPECT_EQ(fresh.next_u64(), fresh2.next_u64());
}

TEST(Rng, NextBelowStaysInRange) {
  RngStream rng(5);
  for (std::uint64_t bound : {1ull, 2ull, 3ull, 10ull, 1000ull}) {
    for (int i = 0; i < 2000; ++i) EXPECT_LT(rng.next_below(bound), bound);
  }
  for (int i = 0; i < 10; ++i) EXPECT_EQ(rng.next_below(1), 0u);
}

TEST(Rng, NextBelowRoughlyUniform) {
  RngStream rng(11);
  std::vector<int> buckets(4, 0);
  for (int i = 0; i < 40000; ++i) ++buckets[rng.next_below(4)];
  for (int b : buckets) {
    EXPECT_GT(b, 9000);
    EXPECT_LT(b, 11000);
  }
}

TEST(Rng, NextDoubleInUnitInterval) {
  RngStream rng(13);
  for (int i = 0; i < 10000; ++i) {
    double d = rng.next_double();
    EXPECT_GE(d, 0.0);
    EXPECT_LT(d, 1.0);
  }
}

TEST(ProblemSize, Validation) {
  EXPECT_NO_THROW((ProblemSize{8, 8, 2, 16}).validate());
  EXPECT_NO_THROW((ProblemSize{8, 0, 1, 0}).validate());
  EXPECT_THROW((ProblemSize{0, 0, 1, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((ProblemSize{8, 9, 1, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((ProblemSize{8, 8, 0, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((ProblemSize{8, 8, 9, 0}).validate(), std::invalid_argument);
}

TEST(LoadVector, PlaceAndQuery) {
  LoadVector lv(4);
  lv.place(2);
  lv.place(2);
  lv.place(0);
  EXPECT_EQ(lv[0], 1u);
  EXPECT_EQ(lv[1], 0u);
  EXPECT_EQ(lv[2], 2u);
  EXPECT_EQ(lv.placed(), 3u);
  EXPECT_EQ(lv.size(), 4u);
  EXPECT_THROW(lv.place(4), std::out_of_range);
}

TEST(LoadVector, FromCountsSumsPlaced) {
  LoadVector lv = LoadVector::from_counts({3, 0, 2});
  EXPECT_EQ(lv.placed(), 5u);
  EXPECT_EQ(lv[0], 3u);
}

TEST(MaxLoad, Basics) {
  EXPECT_EQ(max_load(LoadVector(5)), 0u);
  EXPECT_EQ(max_load(LoadVector::from_counts({1, 7, 3})), 7u);
}

TEST(Collisions, FrozenSmallCase) {
  LoadVector lv = LoadVector::from_counts({3, 1, 2, 0});
  EXPECT_EQ(collisions(lv, 1), 6u);  // just the ball count
  EXPECT_EQ(collisions(lv, 2), 4u);  // C(3,2) + C(2,2)
  EXPECT_EQ(collisions(lv, 3), 1u);  // C(3,3)
  EXPECT_EQ(collisions(lv, 4), 0u);
  EXPECT_THROW(collisions(lv, 0), std::invalid_argument);
}

// Oracle: expand loads into a ball list and count same-bin pairs directly.
TEST(Collisions, MatchesPairOracle) {
  RngStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    LoadVector lv(10);
    for (int b = 0; b < 30; ++b) lv.place(rng.next_below(10));
    std::vector<int> balls;
    for (std::size_t i = 0; i < lv.size(); ++i)
      for (std::uint32_t c = 0; c < lv[i]; ++c) balls.push_back(static_cast<int>(i));
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < balls.size(); ++i)
      for (std::size_t j = i + 1; j < balls.size(); ++j) pairs += balls[i] == balls[j];
    EXPECT_EQ(collisions(lv, 2), pairs);
  }
}

TEST(Collisions, OverflowIsAnError) {
  std::vector<std::uint32_t> counts(4, std::numeric_limits<std::uint32_t>::max());
  LoadVector lv = LoadVector::from_counts(std::move(counts));
  EXPECT_THROW(collisions(lv, 2), std::overflow_error);
}

TEST(UniformOffer, WithRepetitionDrawsKInRange) {
  RngStream rng(23);
  UniformOffer o = sample_offer_uniform(8, 5, true, rng);
  EXPECT_EQ(o.bins.size(), 5u);
  for (auto b : o.bins) EXPECT_LT(b, 8u);
  RngStream rng2(23);
  UniformOffer o2 = sample_offer_uniform(8, 5, true, rng2);
  EXPECT_EQ(o.bins, o2.bins);
}

TEST(UniformOffer, DistinctDrawsAreDistinct) {
  RngStream rng(29);
  UniformOffer o = sample_offer_uniform(16, 16, false, rng);
  std::set<std::uint32_t> s(o.bins.begin(), o.bins.end());
  EXPECT_EQ(s.size(), 16u);  // full permutation when k = n
  UniformOffer o3 = sample_offer_uniform(16, 3, false, rng);
  std::set<std::uint32_t> s3(o3.bins.begin(), o3.bins.end());
  EXPECT_EQ(s3.size(), 3u);
  EXPECT_THROW(sample_offer_uniform(4, 5, false, rng), std::invalid_argument);
}

TEST(UniformOffer, DistinctLargeKUsesBitmapPath) {
  RngStream rng(31);
  UniformOffer o = sample_offer_uniform(300, 200, false, rng);
  std::set<std::uint32_t> s(o.bins.begin(), o.bins.end());
  EXPECT_EQ(s.size(), 200u);
  for (auto b : o.bins) EXPECT_LT(b, 300u);
}

TEST(BernoulliOffer, HalfDensitySampling) {
  RngStream rng(37);
  BernoulliOffer o = sample_offer_bernoulli(100, 0.5, rng);
  EXPECT_EQ(o.n, 100u);
  std::uint64_t c = o.count();
  EXPECT_GT(c, 20u);
  EXPECT_LT(c, 80u);
  // bits past n are cleared
  EXPECT_EQ(o.mask[1] >> (100 - 64), 0u);
  RngStream rng2(37);
  BernoulliOffer o2 = sample_offer_bernoulli(100, 0.5, rng2);
  EXPECT_EQ(o.mask, o2.mask);
}

TEST(BernoulliOffer, GeneralDensitySampling) {
  RngStream rng(41);
  BernoulliOffer o = sample_offer_bernoulli(200, 0.25, rng);
  std::uint64_t c = o.count();
  EXPECT_GT(c, 20u);
  EXPECT_LT(c, 90u);
  EXPECT_THROW(sample_offer_bernoulli(10, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_offer_bernoulli(10, 1.0, rng), std::invalid_argument);
}

TEST(BernoulliOffer, NextIncludedScansCyclically) {
  BernoulliOffer o;
  o.n = 10;
  o.mask = {0};
  o.mask[0] |= 1ull << 3;
  o.mask[0] |= 1ull << 7;
  EXPECT_EQ(o.next_included(0), 3u);
  EXPECT_EQ(o.next_included(2), 3u);
  EXPECT_EQ(o.next_included(3), 7u);  // strictly after `from`
  EXPECT_EQ(o.next_included(7), 3u);  // wraps
  EXPECT_EQ(o.next_included(9), 3u);
  BernoulliOffer empty;
  empty.n = 10;
  empty.mask = {0};
  EXPECT_EQ(empty.next_included(4), 10u);
}

TEST(PolicyOutcome, Helpers) {
  PolicyOutcome p = PolicyOutcome::placed(9);
  EXPECT_TRUE(p.is_placed);
  EXPECT_EQ(p.bin, 9u);
  PolicyOutcome f = PolicyOutcome::failed(FailureCause::block_exhaustion, 2);
  EXPECT_FALSE(f.is_placed);
  EXPECT_EQ(f.cause, FailureCause::block_exhaustion);
  EXPECT_EQ(f.phase, 2);
  EXPECT_STREQ(to_string(FailureCause::miss_all_arrays), "miss_all_arrays");
  EXPECT_STREQ(to_string(FailureCause::stage_precondition), "stage_precondition");
}

}  // namespace
