#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "binsim/harness.hpp"
#include "binsim/membits.hpp"

namespace binsim {

struct CheckResult {
  std::string name;
  bool pass = false;
  bool informational = false;  // reported but never fails the suite
  std::string measured;
  std::string threshold;
};

namespace detail {

inline ExperimentConfig accept_cfg(std::uint64_t n, std::uint64_t balls, std::uint64_t k,
                                   std::uint64_t m, PolicyKind kind, OfferMode mode,
                                   std::uint64_t trials, std::uint64_t seed, unsigned threads) {
  ExperimentConfig cfg;
  cfg.problem = ProblemSize{n, balls, k, m};
  cfg.offer_mode = mode;
  cfg.policy.kind = kind;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

inline std::uint64_t need_of(double fraction, std::uint64_t trials) {
  return static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(trials)));
}

inline std::string fmt2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

// Full acceptance suite. `quick` shrinks trial counts, never problem
// sizes, so every check still exercises the same code paths.
inline std::vector<CheckResult> run_acceptance(bool quick, unsigned threads) {
  using detail::accept_cfg;
  using detail::fmt2;
  std::vector<CheckResult> out;
  auto scale = [&](std::uint64_t full, std::uint64_t small) { return quick ? small : full; };

  // 1. One uniform choice per ball: the classic maximum-occupancy regime.
  {
    auto cfg = accept_cfg(1000000, 1000000, 1, 0, PolicyKind::random, OfferMode::uniform,
                          scale(20, 5), 1001, threads);
    auto res = run_experiment(cfg);
    double med = res.summary.max_load_median;
    CheckResult c{"random_median_max_load", med >= 8.0 && med <= 11.0, false,
                  "median=" + fmt2(med), "[8, 11]"};
    out.push_back(c);
  }

  // 2. Mean pairwise collisions for one choice match (n-1)/2.
  {
    auto cfg = accept_cfg(10000, 10000, 1, 0, PolicyKind::random, OfferMode::uniform,
                          scale(200, 50), 1002, threads);
    auto res = run_experiment(cfg);
    double target = (10000.0 - 1.0) / 2.0;
    double rel = std::abs(res.summary.col2_mean - target) / target;
    out.push_back({"random_mean_col2", rel <= 0.05, false,
                   "mean=" + fmt2(res.summary.col2_mean) + " rel_err=" + fmt2(rel),
                   "within 5% of " + fmt2(target)});
  }

  // 3. Least-loaded of two choices keeps the maximum in a narrow band.
  {
    auto cfg = accept_cfg(1000000, 1000000, 2, 0, PolicyKind::greedy_unbounded,
                          OfferMode::uniform, scale(20, 5), 1003, threads);
    auto res = run_experiment(cfg);
    std::uint64_t lo = ~0ull, hi = 0;
    for (const auto& t : res.trials) {
      lo = std::min(lo, t.max_load);
      hi = std::max(hi, t.max_load);
    }
    out.push_back({"greedy_two_choice_max_load", lo >= 3 && hi <= 5, false,
                   "per-trial max in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
                   "[3, 5] in every trial"});
  }

  // 4. Tiered matcher at its headline operating point. At n=2^18, k=75,
  //    m=139811 the block width m/2 leaves exactly 3 blocks and the
  //    initial layout occupies all 3, so the first relocation demand hits
  //    an empty block supply near ball 52k of 131k; total tuple capacity
  //    (104857 bits) is also below the ball count, so no trigger reading
  //    rescues it. The check stays as stated instead of being loosened;
  //    expect it red. The same machinery passes at smaller n with a
  //    larger budget constant (see tiered_min_capital_c below and the
  //    matcher unit tests).
  Summary tiered_summary;
  {
    std::uint64_t trials = scale(20, 5);
    auto cfg = accept_cfg(262144, 131072, 75, 139811, PolicyKind::tiered_matching,
                          OfferMode::uniform, trials, 1004, threads);
    cfg.policy.delta = 0.5;
    cfg.policy.capital_c = 40.0;
    auto res = run_experiment(cfg);
    tiered_summary = res.summary;
    std::uint64_t good = 0;
    for (const auto& t : res.trials)
      if (!t.failed && t.collisions2 == 0 && t.balls_placed == 131072) ++good;
    std::uint64_t need = detail::need_of(0.9, trials);
    out.push_back({"tiered_perfect_matching", good >= need, false,
                   std::to_string(good) + "/" + std::to_string(trials) +
                       " clean trials (mean balls placed " + fmt2(res.summary.balls_placed_mean) +
                       " of 131072)",
                   ">= " + std::to_string(need) + "/" + std::to_string(trials)});
  }

  // 5. Stage-by-stage matcher with k*m comfortably above (3/delta)n ln n.
  Summary basic_summary;
  {
    std::uint64_t trials = scale(20, 5);
    auto cfg = accept_cfg(16384, 8192, 117, 8192, PolicyKind::basic_matching, OfferMode::uniform,
                          trials, 1005, threads);
    cfg.policy.delta = 0.5;
    auto res = run_experiment(cfg);
    basic_summary = res.summary;
    std::uint64_t good = 0;
    for (const auto& t : res.trials)
      if (!t.failed && t.balls_placed == 8192) ++good;
    std::uint64_t need = detail::need_of(0.95, trials);
    out.push_back({"basic_matching_success", good >= need, false,
                   std::to_string(good) + "/" + std::to_string(trials) + " failure-free trials",
                   ">= " + std::to_string(need) + "/" + std::to_string(trials)});
  }

  // 6. With k*m far below n, strategies that place every ball pay at
  //    least n/16 pairwise collisions by the end.
  {
    std::uint64_t trials = scale(20, 5);
    std::uint64_t floor_val = 1048576 / 16;
    std::uint64_t worst = ~0ull;
    for (PolicyKind kind : {PolicyKind::random, PolicyKind::greedy_unbounded}) {
      auto cfg = accept_cfg(1048576, 1048576, 2, 64, kind, OfferMode::uniform, trials, 1006,
                            threads);
      auto res = run_experiment(cfg);
      for (const auto& t : res.trials) worst = std::min(worst, t.collisions2);
    }
    out.push_back({"collision_floor", worst >= floor_val, false,
                   "min col2 across both policies = " + std::to_string(worst),
                   ">= " + std::to_string(floor_val) + " in all trials"});
  }

  // 7. Memoryless cyclic first-fit over density-1/2 offers.
  {
    std::uint64_t trials = scale(20, 5);
    auto cfg = accept_cfg(65536, 65536, 1, 0, PolicyKind::nonadaptive_cyclic,
                          OfferMode::bernoulli, trials, 1007, threads);
    cfg.alpha = 0.5;
    auto res = run_experiment(cfg);
    double cap = 3.0 * std::sqrt(std::log(65536.0));
    std::uint64_t lo = ~0ull, hi = 0;
    for (const auto& t : res.trials) {
      lo = std::min(lo, t.max_load);
      hi = std::max(hi, t.max_load);
    }
    bool ok = lo >= 2 && static_cast<double>(hi) <= cap;
    out.push_back({"cyclic_bernoulli_max_load", ok, false,
                   "per-trial max in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
                   "2 <= max <= " + fmt2(cap) + " in every trial"});
  }

  // 8. Deterministic pair-overlap lower bound over random capped
  //    strategy sequences.
  {
    std::uint64_t cases = scale(1000, 250);
    RngStream rng(1008);
    std::uint64_t violations = 0;
    for (std::uint64_t i = 0; i < cases; ++i) {
      RngStream local = rng.split(i);
      std::uint64_t n = 2 + local.next_below(63);
      std::uint64_t t = 1 + local.next_below(64);
      std::uint64_t k = 1 + local.next_below(std::min<std::uint64_t>(8, n));
      std::vector<StrategyDistribution> seq;
      for (std::uint64_t s = 0; s < t; ++s) seq.push_back(random_capped_strategy(n, k, local));
      if (!check_claim_sum_lower_bound(seq, k).holds) ++violations;
    }
    out.push_back({"strategy_sum_bound", violations == 0, false,
                   std::to_string(violations) + " violations in " + std::to_string(cases) +
                       " sequences",
                   "0 violations"});
  }

  // 9. Brute-force tuple-collision bound on tiny instances.
  {
    std::uint64_t cases = scale(500, 125);
    RngStream rng(1009);
    std::uint64_t violations = 0;
    for (std::uint64_t i = 0; i < cases; ++i) {
      RngStream local = rng.split(i);
      std::uint64_t q = 2 + local.next_below(3);
      std::uint64_t t = q + local.next_below(12 - q + 1);
      std::uint64_t n = 2 + local.next_below(15);
      std::uint64_t k = 1 + local.next_below(3);
      std::vector<StrategyDistribution> seq;
      for (std::uint64_t s = 0; s < t; ++s) seq.push_back(random_capped_strategy(n, k, local));
      if (!check_packing_bound(seq, q, 1.0, k).holds) ++violations;
    }
    out.push_back({"packing_bound_tiny", violations == 0, false,
                   std::to_string(violations) + " violations in " + std::to_string(cases) +
                       " instances",
                   "0 violations"});
  }

  // 10. Empirical deviation-event rate vs the martingale tail bound.
  {
    std::uint64_t trials = scale(10000, 2000);
    bool all_ok = true;
    double worst_margin = 1e300;
    RngStream rng(1010);
    int scenario_id = 0;
    for (auto scenario : {FreedmanScenario::constant_mean, FreedmanScenario::drifting_mean,
                          FreedmanScenario::state_coupled}) {
      for (double h : {40.0, 100.0, 200.0}) {
        RngStream local = rng.split(static_cast<std::uint64_t>(scenario_id * 8) +
                                    static_cast<std::uint64_t>(h));
        auto res = freedman_event_rate(scenario, h, static_cast<std::uint64_t>(10.0 * h), trials,
                                       local);
        double sigma = std::sqrt(std::max(res.bound * (1.0 - res.bound), 0.0) /
                                 static_cast<double>(trials));
        double limit = res.bound + 3.0 * sigma;
        if (res.event_rate > limit) all_ok = false;
        worst_margin = std::min(worst_margin, limit - res.event_rate);
      }
      ++scenario_id;
    }
    out.push_back({"martingale_deviation_rate", all_ok, false,
                   "worst margin (limit - rate) = " + fmt2(worst_margin),
                   "rate <= bound + 3 sigma in all 9 scenario/h combinations"});
  }

  // 11. Memory honesty: the matcher runs above stayed inside m bits and
  //     over-allocation fails loudly.
  {
    bool peaks_ok = tiered_summary.bits_used_peak <= 139811 && basic_summary.bits_used_peak <= 8192;
    bool throws_ok = false;
    std::string msg;
    try {
      BitLedger tiny(16);
      tiny.alloc(8, "first");
      tiny.alloc(9, "second");
    } catch (const std::length_error& e) {
      throws_ok = true;
      msg = e.what();
    }
    out.push_back({"memory_budget_honesty", peaks_ok && throws_ok && !msg.empty(), false,
                   "peaks " + std::to_string(tiered_summary.bits_used_peak) + "/139811 and " +
                       std::to_string(basic_summary.bits_used_peak) +
                       "/8192; over-allocation " + (throws_ok ? "rejected" : "ACCEPTED"),
                   "peaks <= m and clean error on over-allocation"});
  }

  // 12. Unary occupancy encoding round-trips at length n + b - 1.
  {
    std::uint64_t cases = scale(1000, 250);
    RngStream rng(1012);
    std::uint64_t bad = 0;
    for (std::uint64_t i = 0; i < cases; ++i) {
      RngStream local = rng.split(i);
      std::uint64_t n = 1 + local.next_below(64);
      std::uint64_t b = local.next_below(257);
      LoadVector loads(n);
      for (std::uint64_t j = 0; j < b; ++j)
        loads.place(static_cast<std::uint32_t>(local.next_below(n)));
      std::string bits = unary_encode(loads);
      if (bits.size() != n + b - 1) {
        ++bad;
        continue;
      }
      LoadVector back = unary_decode(bits, n);
      if (back.counts() != loads.counts()) ++bad;
    }
    out.push_back({"unary_roundtrip", bad == 0, false,
                   std::to_string(bad) + " mismatches in " + std::to_string(cases) + " round trips",
                   "0 mismatches, length exactly n+b-1"});
  }

  // 13. Failure rate across k*m/n in {0.1, 1, 10} at n=2^16, k=67. All
  //     three ratios sit far below the feasibility constant the tiered
  //     construction itself requires (k*m/n around 40 at this n), so
  //     every cell fails every trial and the strict ordering never
  //     materializes. Kept as stated rather than weakened; expect it
  //     red. The direction is recoverable only with cells spanning the
  //     constant (see tiered_min_capital_c).
  {
    std::uint64_t reps = scale(20, 5);
    std::uint64_t cell_trials = scale(10, 4);
    std::uint64_t ok_reps = 0;
    double last_rates[3] = {0, 0, 0};
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      double rates[3];
      int cell = 0;
      for (double ratio : {0.1, 1.0, 10.0}) {
        std::uint64_t m = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(std::llround(ratio * 65536.0 / 67.0)));
        auto cfg = accept_cfg(65536, 32768, 67, m, PolicyKind::tiered_matching,
                              OfferMode::uniform, cell_trials, 1013 + rep * 31, threads);
        cfg.policy.delta = 0.5;
        cfg.policy.capital_c = 40.0;
        auto res = run_experiment(cfg);
        rates[cell++] = res.summary.failure_rate;
      }
      if (rates[0] > rates[1] && rates[1] > rates[2]) ++ok_reps;
      last_rates[0] = rates[0];
      last_rates[1] = rates[1];
      last_rates[2] = rates[2];
    }
    std::uint64_t need = detail::need_of(0.9, reps);
    out.push_back({"phase_sweep_monotonic", ok_reps >= need, false,
                   std::to_string(ok_reps) + "/" + std::to_string(reps) +
                       " reps strictly decreasing; last rates " + fmt2(last_rates[0]) + ", " +
                       fmt2(last_rates[1]) + ", " + fmt2(last_rates[2]),
                   ">= " + std::to_string(need) + "/" + std::to_string(reps)});
  }

  // 14. CSV schemas are frozen; drift here breaks downstream plotting.
  {
    bool ok = std::string(summary_csv_header()) ==
                  "n,k,m,km_over_n,policy,delta,capital_c,offer_mode,balls,trials,failure_rate,"
                  "max_load_mean,max_load_median,max_load_max,col2_mean,col2_median,"
                  "bits_used_peak,thm2_bound,random_alloc_bound,error" &&
              std::string(run_csv_header()) ==
                  "trial,n,balls,k,m,policy,offer_mode,max_load,collisions2,balls_placed,failed,"
                  "failure_cause,failure_round,failure_phase,bits_used,wall_ms";
    std::ostringstream probe;
    auto cfg = accept_cfg(16, 16, 2, 0, PolicyKind::random, OfferMode::uniform, 2, 1014, 1);
    auto res = run_experiment(cfg);
    write_run_csv(probe, cfg, res);
    ok = ok && probe.str().rfind("# binsim run trials=2 seed=1014\n", 0) == 0;
    out.push_back({"csv_schema", ok, false, ok ? "headers match" : "headers drifted",
                   "golden column lists"});
  }

  // Informational: smallest budget constant at which the tiered matcher
  // goes failure-free at n=2^16, k=67. Not monotone in C: larger C can
  // shrink the block count and strand the relocation frontier.
  {
    std::uint64_t trials = scale(5, 3);
    std::string rates;
    std::string best = "none";
    for (double cc : {20.0, 40.0, 60.0, 80.0, 100.0, 120.0}) {
      std::uint64_t m =
          static_cast<std::uint64_t>(std::ceil(cc * 65536.0 / 67.0));
      auto cfg = accept_cfg(65536, 32768, 67, m, PolicyKind::tiered_matching, OfferMode::uniform,
                            trials, 1015, threads);
      cfg.policy.capital_c = cc;
      std::string s;
      try {
        auto res = run_experiment(cfg);
        s = fmt2(res.summary.failure_rate);
        if (res.summary.failure_rate == 0.0 && best == "none")
          best = "C=" + fmt2(cc);
      } catch (const std::exception&) {
        s = "invalid";
      }
      if (!rates.empty()) rates += " ";
      rates += "C=" + fmt2(cc) + ":" + s;
    }
    out.push_back({"tiered_min_capital_c", true, true, rates + " -> first clean " + best,
                   "informational scan"});
  }

  return out;
}

// Prints one line per check and returns the process exit code.
inline int print_acceptance(std::ostream& os, bool quick, unsigned threads) {
  auto results = run_acceptance(quick, threads);
  bool all_ok = true;
  for (const CheckResult& c : results) {
    const char* tag = c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL");
    os << tag << " " << c.name << " measured: " << c.measured
       << " | threshold: " << c.threshold << "\n";
    if (!c.pass && !c.informational) all_ok = false;
  }
  os << (all_ok ? "acceptance: all checks passed\n" : "acceptance: at least one check failed\n");
  return all_ok ? 0 : 1;
}

}  // namespace binsim
