#include "binsim/harness.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "binsim/config.hpp"

namespace {

using namespace binsim;

Config config_of(const std::string& text) { return Config::from_string(text, "test"); }

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::size_t field_count(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

// Drops the final comma-separated field (the wall-clock column).
std::string strip_last_field(const std::string& line) {
  return line.substr(0, line.rfind(','));
}

TEST(ParseExperiment, FillsDefaults) {
  ExperimentConfig cfg = parse_experiment(config_of(R"(
    problem.n = 64
    problem.k = 2
    policy.kind = greedy_unbounded
  )"));
  EXPECT_EQ(cfg.problem.n, 64u);
  EXPECT_EQ(cfg.problem.b, 64u);  // balls default to n
  EXPECT_EQ(cfg.problem.k, 2u);
  EXPECT_EQ(cfg.problem.m, 0u);
  EXPECT_EQ(cfg.offer_mode, OfferMode::uniform);
  EXPECT_DOUBLE_EQ(cfg.alpha, 0.5);
  EXPECT_EQ(cfg.policy.kind, PolicyKind::greedy_unbounded);
  EXPECT_DOUBLE_EQ(cfg.policy.delta, 0.5);
  EXPECT_DOUBLE_EQ(cfg.policy.capital_c, 40.0);
  EXPECT_TRUE(cfg.policy.log_base_natural);
  EXPECT_FALSE(cfg.policy.load_c.has_value());
  EXPECT_EQ(cfg.trials, 20u);
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_GE(cfg.threads, 1u);
}

TEST(ParseExperiment, RejectsBadInputs) {
  auto parse = [](const std::string& text) { return parse_experiment(config_of(text)); };
  const std::string base = "problem.n = 64\nproblem.k = 2\npolicy.kind = greedy_unbounded\n";
  EXPECT_THROW(parse(base + "problem.typo = 1"), config_error);
  EXPECT_THROW(parse("problem.k = 2\npolicy.kind = random"), config_error);  // n missing
  EXPECT_THROW(parse("problem.n = 0\nproblem.k = 1\npolicy.kind = random"), config_error);
  EXPECT_THROW(parse(base + "run.trials = 0"), config_error);
  EXPECT_THROW(parse("problem.n = 64\nproblem.k = 2\npolicy.kind = no_such"), config_error);
  // The cyclic policy and bernoulli offers require each other.
  EXPECT_THROW(parse("problem.n = 64\nproblem.k = 1\npolicy.kind = nonadaptive_cyclic"),
               config_error);
  EXPECT_THROW(parse(base + "offer.mode = bernoulli"), config_error);
  EXPECT_NO_THROW(parse(
      "problem.n = 64\nproblem.k = 1\npolicy.kind = nonadaptive_cyclic\noffer.mode = bernoulli"));
  EXPECT_THROW(parse("problem.n = 64\nproblem.k = 1\npolicy.kind = nonadaptive_cyclic\n"
                     "offer.mode = bernoulli\noffer.alpha = 1.0"),
               config_error);
}

TEST(RunTrial, DeterministicForASeedAndIndex) {
  ExperimentConfig cfg = parse_experiment(config_of(R"(
    problem.n = 256
    problem.k = 2
    policy.kind = greedy_unbounded
    run.seed = 42
  )"));
  TrialResult a = run_trial(cfg, 3);
  TrialResult b = run_trial(cfg, 3);
  EXPECT_EQ(a.max_load, b.max_load);
  EXPECT_EQ(a.collisions2, b.collisions2);
  EXPECT_EQ(a.balls_placed, 256u);
  EXPECT_FALSE(a.failed);
  EXPECT_GE(a.max_load, 1u);
}

TEST(RunTrial, FailureStopsTheTrialAtTheFailingRound) {
  // A tiered matcher starved of both choices and width: with k=1 over 64
  // bins and arrays covering 12 of them, a miss arrives within a few balls.
  ExperimentConfig cfg = parse_experiment(config_of(R"(
    problem.n = 64
    problem.balls = 32
    problem.k = 1
    problem.m = 24
    policy.kind = tiered_matching
    policy.capital_c = 20
    run.seed = 5
  )"));
  TrialResult r = run_trial(cfg, 0);
  ASSERT_TRUE(r.failed);
  EXPECT_EQ(r.balls_placed, r.failure_round);
  EXPECT_LE(r.bits_used, cfg.problem.m);
  EXPECT_LT(r.failure_round, 32u);
}

TEST(RunExperiment, ThreadCountNeverChangesRecords) {
  const std::string base = R"(
    problem.n = 512
    problem.k = 2
    policy.kind = greedy_unbounded
    run.trials = 8
    run.seed = 9
  )";
  ExperimentConfig serial = parse_experiment(config_of(base + "run.threads = 1"));
  ExperimentConfig parallel = parse_experiment(config_of(base + "run.threads = 4"));
  ExperimentResult a = run_experiment(serial);
  ExperimentResult b = run_experiment(parallel);
  ASSERT_EQ(a.trials.size(), 8u);
  ASSERT_EQ(b.trials.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a.trials[i].trial, b.trials[i].trial);
    EXPECT_EQ(a.trials[i].max_load, b.trials[i].max_load);
    EXPECT_EQ(a.trials[i].collisions2, b.trials[i].collisions2);
    EXPECT_EQ(a.trials[i].balls_placed, b.trials[i].balls_placed);
    EXPECT_EQ(a.trials[i].failed, b.trials[i].failed);
    EXPECT_EQ(a.trials[i].bits_used, b.trials[i].bits_used);
  }
}

TEST(Summarize, AggregatesHandBuiltTrials) {
  std::vector<TrialResult> trials(2);
  trials[0].max_load = 3;
  trials[0].collisions2 = 10;
  trials[0].balls_placed = 100;
  trials[0].bits_used = 5;
  trials[1].max_load = 5;
  trials[1].collisions2 = 20;
  trials[1].balls_placed = 50;
  trials[1].failed = true;
  trials[1].bits_used = 9;
  Summary s = summarize(trials);
  EXPECT_EQ(s.trials, 2u);
  EXPECT_DOUBLE_EQ(s.failure_rate, 0.5);
  EXPECT_DOUBLE_EQ(s.max_load_mean, 4.0);
  EXPECT_DOUBLE_EQ(s.max_load_median, 4.0);
  EXPECT_EQ(s.max_load_max, 5u);
  EXPECT_DOUBLE_EQ(s.col2_mean, 15.0);
  EXPECT_DOUBLE_EQ(s.col2_median, 15.0);
  EXPECT_EQ(s.bits_used_peak, 9u);
  EXPECT_DOUBLE_EQ(s.balls_placed_mean, 75.0);
}

TEST(RunCsv, GoldenShapeAndDeterminism) {
  ExperimentConfig cfg = parse_experiment(config_of(R"(
    problem.n = 16
    problem.k = 2
    policy.kind = greedy_unbounded
    run.trials = 2
    run.seed = 7
    run.threads = 1
  )"));
  auto render = [&cfg]() {
    ExperimentResult res = run_experiment(cfg);
    std::ostringstream out;
    write_run_csv(out, cfg, res);
    return out.str();
  };
  std::vector<std::string> lines = split_lines(render());
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "# binsim run trials=2 seed=7");
  EXPECT_EQ(lines[1], run_csv_header());
  EXPECT_EQ(field_count(lines[1]), 16u);
  for (std::size_t i = 2; i < lines.size(); ++i) EXPECT_EQ(field_count(lines[i]), 16u);
  EXPECT_EQ(lines[2].substr(0, 34), "0,16,16,2,0,greedy_unbounded,unifo");
  // Everything left of the wall-clock column is reproducible byte for byte.
  std::vector<std::string> again = split_lines(render());
  ASSERT_EQ(again.size(), lines.size());
  for (std::size_t i = 2; i < lines.size(); ++i)
    EXPECT_EQ(strip_last_field(lines[i]), strip_last_field(again[i]));
}

TEST(Sweep, WritesOneRowPerCellWithLastKeyFastest) {
  Config base = config_of(R"(
    problem.m = 8
    policy.kind = greedy_unbounded
    run.trials = 2
    run.seed = 11
    run.threads = 1
  )");
  Config grid = config_of("problem.k = 1, 2\nproblem.n = 32, 64");
  std::ostringstream out;
  std::vector<std::string> warnings;
  run_sweep(base, grid, out, &warnings);
  std::vector<std::string> lines = split_lines(out.str());
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "# binsim sweep trials=2 seed=11");
  EXPECT_EQ(lines[1], summary_csv_header());
  EXPECT_EQ(field_count(lines[1]), 20u);
  // problem.n varies fastest; km/n for the first cell is 1*8/32.
  EXPECT_EQ(lines[2].substr(0, 12), "32,1,8,0.25,");
  EXPECT_EQ(lines[3].substr(0, 7), "64,1,8,");
  EXPECT_EQ(lines[4].substr(0, 7), "32,2,8,");
  EXPECT_EQ(lines[5].substr(0, 7), "64,2,8,");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    EXPECT_EQ(field_count(lines[i]), 20u);
    EXPECT_EQ(lines[i].back(), ',');  // empty error column on success
  }
}

TEST(Sweep, RecordsPerCellErrorsAndKeepsGoing) {
  Config base = config_of(R"(
    problem.n = 64
    problem.k = 2
    run.trials = 1
    run.threads = 1
  )");
  // m=0 cannot host any matching state, so the second cell must error out.
  Config grid = config_of("policy.kind = greedy_unbounded, tiered_matching");
  std::ostringstream out;
  run_sweep(base, grid, out);
  std::vector<std::string> lines = split_lines(out.str());
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_NE(lines[2].find("greedy_unbounded"), std::string::npos);
  EXPECT_EQ(lines[2].back(), ',');
  EXPECT_NE(lines[3].find("tiered_matching"), std::string::npos);
  EXPECT_NE(lines[3].find(",,,,,,,"), std::string::npos);
  EXPECT_NE(lines[3].back(), ',');  // error text present
  EXPECT_EQ(field_count(lines[3]), 20u);
}

TEST(ExpandGrid, RejectsEmptyValues) {
  EXPECT_THROW(expand_grid(config_of("problem.n = 32,,64")), config_error);
  EXPECT_THROW(expand_grid(config_of("# nothing\n")), config_error);
}

TEST(Comparison, GreedyBeatsRandomOnMaxLoad) {
  const std::string base = R"(
    problem.n = 65536
    problem.k = 2
    run.trials = 20
    run.seed = 31
    run.threads = 1
  )";
  ExperimentConfig random_cfg = parse_experiment(config_of(base + "policy.kind = random"));
  ExperimentConfig greedy_cfg =
      parse_experiment(config_of(base + "policy.kind = greedy_unbounded"));
  Summary random_sum = run_experiment(random_cfg).summary;
  Summary greedy_sum = run_experiment(greedy_cfg).summary;
  EXPECT_GE(random_sum.max_load_mean, greedy_sum.max_load_mean + 1.0);
  EXPECT_DOUBLE_EQ(greedy_sum.failure_rate, 0.0);
}

}  // namespace
