#include "binsim/verify.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

namespace {

using namespace binsim;

// The full battery is expensive, so it runs once and every TEST below
// reads from the same result list.
const std::vector<CheckResult>& results() {
  static const std::vector<CheckResult> all = run_acceptance(false, 2);
  return all;
}

const CheckResult& check(const std::string& name) {
  for (const CheckResult& c : results())
    if (c.name == name) return c;
  ADD_FAILURE() << "no check named " << name;
  static CheckResult missing;
  return missing;
}

void expect_pass(const std::string& name) {
  const CheckResult& c = check(name);
  EXPECT_TRUE(c.pass) << name << " measured: " << c.measured
                      << " | threshold: " << c.threshold;
}

TEST(Acceptance, BatteryIsComplete) { EXPECT_EQ(results().size(), 15u); }

TEST(Acceptance, RandomMedianMaxLoad) { expect_pass("random_median_max_load"); }

TEST(Acceptance, RandomMeanPairCollisions) { expect_pass("random_mean_col2"); }

TEST(Acceptance, GreedyTwoChoiceMaxLoad) { expect_pass("greedy_two_choice_max_load"); }

TEST(Acceptance, TieredPerfectMatching) { expect_pass("tiered_perfect_matching"); }

TEST(Acceptance, BasicMatchingSuccess) { expect_pass("basic_matching_success"); }

TEST(Acceptance, CollisionFloor) { expect_pass("collision_floor"); }

TEST(Acceptance, CyclicBernoulliMaxLoad) { expect_pass("cyclic_bernoulli_max_load"); }

TEST(Acceptance, StrategySumBound) { expect_pass("strategy_sum_bound"); }

TEST(Acceptance, PackingBoundTiny) { expect_pass("packing_bound_tiny"); }

TEST(Acceptance, MartingaleDeviationRate) { expect_pass("martingale_deviation_rate"); }

TEST(Acceptance, MemoryBudgetHonesty) { expect_pass("memory_budget_honesty"); }

TEST(Acceptance, UnaryRoundtrip) { expect_pass("unary_roundtrip"); }

TEST(Acceptance, PhaseSweepMonotonic) { expect_pass("phase_sweep_monotonic"); }

TEST(Acceptance, CsvSchema) { expect_pass("csv_schema"); }

TEST(Acceptance, MinimalTieredBudgetScanReported) {
  const CheckResult& c = check("tiered_min_capital_c");
  EXPECT_TRUE(c.informational);
  EXPECT_FALSE(c.measured.empty());
}

}  // namespace
