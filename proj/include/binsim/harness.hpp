#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "binsim/config.hpp"
#include "binsim/core.hpp"
#include "binsim/diagnostics.hpp"
#include "binsim/matching.hpp"
#include "binsim/policies.hpp"
#include "binsim/rng.hpp"

namespace binsim {

enum class OfferMode { uniform, uniform_distinct, bernoulli };

inline const char* to_string(OfferMode m) {
  switch (m) {
    case OfferMode::uniform: return "uniform";
    case OfferMode::uniform_distinct: return "uniform_distinct";
    case OfferMode::bernoulli: return "bernoulli";
  }
  return "?";
}

inline OfferMode offer_mode_from_string(const std::string& s) {
  if (s == "uniform") return OfferMode::uniform;
  if (s == "uniform_distinct") return OfferMode::uniform_distinct;
  if (s == "bernoulli") return OfferMode::bernoulli;
  throw config_error("unknown offer mode: '" + s + "'");
}

struct ExperimentConfig {
  ProblemSize problem;
  OfferMode offer_mode = OfferMode::uniform;
  double alpha = 0.5;
  PolicySpec policy;
  std::uint64_t trials = 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline const std::vector<std::string>& experiment_config_keys() {
  static const std::vector<std::string> keys = {
      "problem.n",    "problem.balls",    "problem.k",
      "problem.m",    "offer.mode",       "offer.alpha",
      "policy.kind",  "policy.delta",     "policy.capital_c",
      "policy.log_base_natural",          "policy.load_c",
      "run.trials",   "run.seed",         "run.threads",
  };
  return keys;
}

inline ExperimentConfig parse_experiment(const Config& c) {
  c.require_known(experiment_config_keys());
  ExperimentConfig e;
  e.problem.n = c.get_u64("problem.n");
  e.problem.k = c.get_u64("problem.k");
  e.problem.m = c.get_u64_or("problem.m", 0);
  e.problem.b = c.get_u64_or("problem.balls", e.problem.n);
  try {
    e.problem.validate();
  } catch (const std::exception& ex) {
    throw config_error(ex.what());
  }
  e.offer_mode = offer_mode_from_string(c.get_string_or("offer.mode", "uniform"));
  e.alpha = c.get_double_or("offer.alpha", 0.5);
  std::string kind_name = c.get_string("policy.kind");
  auto kind = policy_kind_from_string(kind_name);
  if (!kind) throw config_error("unknown policy kind: '" + kind_name + "'");
  e.policy.kind = *kind;
  e.policy.delta = c.get_double_or("policy.delta", 0.5);
  e.policy.capital_c = c.get_double_or("policy.capital_c", 40.0);
  e.policy.log_base_natural = c.get_bool_or("policy.log_base_natural", true);
  if (c.has("policy.load_c")) e.policy.load_c = c.get_double("policy.load_c");
  e.trials = c.get_u64_or("run.trials", 20);
  if (e.trials == 0) throw config_error("run.trials must be at least 1");
  e.seed = c.get_u64_or("run.seed", 0);
  unsigned hw = std::thread::hardware_concurrency();
  e.threads = static_cast<unsigned>(c.get_u64_or("run.threads", hw ? hw : 1));
  if (e.threads == 0) throw config_error("run.threads must be at least 1");

  bool wants_bernoulli = e.policy.kind == PolicyKind::nonadaptive_cyclic;
  bool has_bernoulli = e.offer_mode == OfferMode::bernoulli;
  if (wants_bernoulli != has_bernoulli)
    throw config_error("policy '" + std::string(to_string(e.policy.kind)) +
                       "' requires offer mode '" +
                       (wants_bernoulli ? "bernoulli" : "uniform/uniform_distinct") + "'");
  if (has_bernoulli && !(e.alpha > 0.0 && e.alpha < 1.0))
    throw config_error("offer.alpha must lie strictly between 0 and 1");
  return e;
}

struct TrialResult {
  std::uint64_t trial = 0;
  std::uint64_t max_load = 0;
  std::uint64_t collisions2 = 0;
  std::uint64_t balls_placed = 0;
  bool failed = false;
  FailureCause cause = FailureCause::miss_all_arrays;
  std::uint64_t failure_round = 0;  // meaningful only when failed
  int failure_phase = -1;           // meaningful only for phased policies
  std::uint64_t bits_used = 0;
  double wall_ms = 0.0;
};

namespace detail {

inline void ensure_offered(const Offer& offer, std::uint32_t bin) {
  bool ok = false;
  if (const auto* u = std::get_if<UniformOffer>(&offer)) {
    for (std::uint32_t b : u->bins)
      if (b == bin) {
        ok = true;
        break;
      }
  } else {
    ok = std::get<BernoulliOffer>(offer).contains(bin);
  }
  if (!ok) throw std::logic_error("policy placed a ball in a bin it was not offered");
}

inline double median_of(std::vector<std::uint64_t> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  if (v.size() % 2 == 1) return static_cast<double>(v[h]);
  return 0.5 * (static_cast<double>(v[h - 1]) + static_cast<double>(v[h]));
}

}  // namespace detail

inline TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t trial_index) {
  auto t0 = std::chrono::steady_clock::now();
  TrialResult r;
  r.trial = trial_index;
  auto policy = make_policy(cfg.policy, cfg.problem);
  RngStream trial_stream = RngStream(cfg.seed).split(trial_index);
  LoadVector loads(cfg.problem.n);
  Offer offer;
  if (cfg.offer_mode == OfferMode::bernoulli)
    offer = BernoulliOffer{};
  else
    offer = UniformOffer{{}, cfg.offer_mode == OfferMode::uniform};

  for (std::uint64_t round = 0; round < cfg.problem.b; ++round) {
    RngStream rs = trial_stream.split(round);
    if (cfg.offer_mode == OfferMode::bernoulli)
      sample_offer_bernoulli(cfg.problem.n, cfg.alpha, rs, std::get<BernoulliOffer>(offer));
    else
      sample_offer_uniform(cfg.problem.n, cfg.problem.k,
                           cfg.offer_mode == OfferMode::uniform, rs,
                           std::get<UniformOffer>(offer));
    PolicyOutcome out = policy->decide(offer, loads, round);
    if (!out.is_placed) {
      r.failed = true;
      r.cause = out.cause;
      r.failure_round = round;
      r.failure_phase = out.phase;
      break;
    }
    detail::ensure_offered(offer, out.bin);
    loads.place(out.bin);
  }

  r.max_load = max_load(loads);
  r.collisions2 = collisions(loads, 2);
  r.balls_placed = loads.placed();
  if (const BitLedger* l = policy->ledger()) {
    r.bits_used = l->bits_used();
    if (r.bits_used > cfg.problem.m)
      throw std::logic_error("policy state exceeded its declared bit budget");
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                  .count();
  return r;
}

struct Summary {
  std::uint64_t trials = 0;
  double failure_rate = 0.0;
  double max_load_mean = 0.0;
  double max_load_median = 0.0;
  std::uint64_t max_load_max = 0;
  double col2_mean = 0.0;
  double col2_median = 0.0;
  std::uint64_t bits_used_peak = 0;
  double balls_placed_mean = 0.0;
};

inline Summary summarize(const std::vector<TrialResult>& trials) {
  Summary s;
  s.trials = trials.size();
  if (trials.empty()) return s;
  std::vector<std::uint64_t> loads, cols;
  for (const TrialResult& t : trials) {
    loads.push_back(t.max_load);
    cols.push_back(t.collisions2);
    s.failure_rate += t.failed ? 1.0 : 0.0;
    s.max_load_mean += static_cast<double>(t.max_load);
    s.max_load_max = std::max(s.max_load_max, t.max_load);
    s.col2_mean += static_cast<double>(t.collisions2);
    s.bits_used_peak = std::max(s.bits_used_peak, t.bits_used);
    s.balls_placed_mean += static_cast<double>(t.balls_placed);
  }
  double n = static_cast<double>(trials.size());
  s.failure_rate /= n;
  s.max_load_mean /= n;
  s.col2_mean /= n;
  s.balls_placed_mean /= n;
  s.max_load_median = detail::median_of(std::move(loads));
  s.col2_median = detail::median_of(std::move(cols));
  return s;
}

struct ExperimentResult {
  std::vector<TrialResult> trials;
  Summary summary;
  std::vector<std::string> warnings;
};

// Runs all trials, in parallel when asked. Trial i's randomness depends
// only on (seed, i), so the thread count never changes any record.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult out;
  {
    // One up-front construction surfaces parameter errors before any
    // thread starts and harvests construction warnings exactly once.
    auto probe = make_policy(cfg.policy, cfg.problem);
    out.warnings = probe->warnings();
  }
  out.trials.resize(cfg.trials);
  unsigned workers = static_cast<unsigned>(
      std::min<std::uint64_t>({cfg.threads, cfg.trials, 64}));
  std::atomic<std::uint64_t> next{0};
  std::vector<std::string> errors(workers);
  auto body = [&](unsigned slot) {
    try {
      for (;;) {
        std::uint64_t i = next.fetch_add(1);
        if (i >= cfg.trials) break;
        out.trials[i] = run_trial(cfg, i);
      }
    } catch (const std::exception& e) {
      errors[slot] = e.what();
    }
  };
  if (workers <= 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  out.summary = summarize(out.trials);
  return out;
}

// ---- CSV output ----------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace detail

inline const char* run_csv_header() {
  return "trial,n,balls,k,m,policy,offer_mode,max_load,collisions2,balls_placed,"
         "failed,failure_cause,failure_round,failure_phase,bits_used,wall_ms";
}

// Per-trial records. Every column except wall_ms is a pure function of the
// config and seed.
inline void write_run_csv(std::ostream& os, const ExperimentConfig& cfg,
                          const ExperimentResult& result) {
  os << "# binsim run trials=" << cfg.trials << " seed=" << cfg.seed << "\n";
  os << run_csv_header() << "\n";
  for (const TrialResult& t : result.trials) {
    os << t.trial << ',' << cfg.problem.n << ',' << cfg.problem.b << ',' << cfg.problem.k << ','
       << cfg.problem.m << ',' << to_string(cfg.policy.kind) << ',' << to_string(cfg.offer_mode)
       << ',' << t.max_load << ',' << t.collisions2 << ',' << t.balls_placed << ','
       << (t.failed ? 1 : 0) << ',' << (t.failed ? to_string(t.cause) : "") << ',';
    if (t.failed) os << t.failure_round;
    os << ',';
    if (t.failed && t.failure_phase >= 0) os << t.failure_phase;
    os << ',' << t.bits_used << ',' << detail::fmt_double(t.wall_ms) << "\n";
  }
}

inline const char* summary_csv_header() {
  return "n,k,m,km_over_n,policy,delta,capital_c,offer_mode,balls,trials,failure_rate,"
         "max_load_mean,max_load_median,max_load_max,col2_mean,col2_median,bits_used_peak,"
         "thm2_bound,random_alloc_bound,error";
}

inline void write_summary_row(std::ostream& os, const ExperimentConfig& cfg,
                              const Summary* s, const std::string& error) {
  double km_over_n = static_cast<double>(cfg.problem.k) * static_cast<double>(cfg.problem.m) /
                     static_cast<double>(cfg.problem.n);
  BoundReport bounds;
  try {
    bounds = theoretical_bounds(cfg.problem);
  } catch (const std::exception&) {
    // Error rows may carry coordinates no bound formula accepts.
  }
  os << cfg.problem.n << ',' << cfg.problem.k << ',' << cfg.problem.m << ','
     << detail::fmt_double(km_over_n) << ',' << to_string(cfg.policy.kind) << ','
     << detail::fmt_double(cfg.policy.delta) << ',' << detail::fmt_double(cfg.policy.capital_c)
     << ',' << to_string(cfg.offer_mode) << ',' << cfg.problem.b << ',' << cfg.trials << ',';
  if (s) {
    os << detail::fmt_double(s->failure_rate) << ',' << detail::fmt_double(s->max_load_mean) << ','
       << detail::fmt_double(s->max_load_median) << ',' << s->max_load_max << ','
       << detail::fmt_double(s->col2_mean) << ',' << detail::fmt_double(s->col2_median) << ','
       << s->bits_used_peak << ',';
  } else {
    os << ",,,,,,,";
  }
  if (bounds.max_load_lower) os << detail::fmt_double(*bounds.max_load_lower);
  os << ',';
  if (bounds.one_choice_max_load) os << detail::fmt_double(*bounds.one_choice_max_load);
  os << ',' << detail::sanitize_field(error) << "\n";
}

// ---- Sweeps --------------------------------------------------------------

// A grid file uses the same key=value format; each value is a comma list.
// Cells are the Cartesian product, iterated with the alphabetically last
// key varying fastest.
inline std::vector<std::vector<std::pair<std::string, std::string>>> expand_grid(
    const Config& grid) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const std::string& key : grid.keys()) {
    std::vector<std::string> values;
    std::string raw = grid.get_string(key);
    std::size_t pos = 0;
    while (pos <= raw.size()) {
      std::size_t comma = raw.find(',', pos);
      std::string item = raw.substr(pos, comma == std::string::npos ? std::string::npos
                                                                    : comma - pos);
      std::size_t a = item.find_first_not_of(" \t");
      std::size_t b = item.find_last_not_of(" \t");
      if (a == std::string::npos) throw config_error("grid key '" + key + "' has an empty value");
      values.push_back(item.substr(a, b - a + 1));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    axes.emplace_back(key, std::move(values));
  }
  if (axes.empty()) throw config_error("grid file defines no axes");
  std::vector<std::vector<std::pair<std::string, std::string>>> cells;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    std::vector<std::pair<std::string, std::string>> cell;
    for (std::size_t a = 0; a < axes.size(); ++a)
      cell.emplace_back(axes[a].first, axes[a].second[idx[a]]);
    cells.push_back(std::move(cell));
    std::size_t a = axes.size();
    while (a > 0) {
      if (++idx[a - 1] < axes[a - 1].second.size()) break;
      idx[a - 1] = 0;
      --a;
    }
    if (a == 0) break;
  }
  return cells;
}

// One summary row per cell. A cell that cannot be configured or run gets
// its error recorded in the final column instead of aborting the sweep.
inline void run_sweep(const Config& base, const Config& grid, std::ostream& os,
                      std::vector<std::string>* warnings_out = nullptr) {
  auto cells = expand_grid(grid);
  os << "# binsim sweep trials=" << base.get_u64_or("run.trials", 20)
     << " seed=" << base.get_u64_or("run.seed", 0) << "\n";
  os << summary_csv_header() << "\n";
  for (const auto& cell : cells) {
    Config merged = base;
    for (const auto& [k, v] : cell) merged.set(k, v);
    ExperimentConfig cfg;
    try {
      cfg = parse_experiment(merged);
    } catch (const std::exception& e) {
      // Best-effort echo of the cell's coordinates for the error row.
      cfg.problem.n = merged.get_u64_or("problem.n", 0);
      cfg.problem.k = merged.get_u64_or("problem.k", 0);
      cfg.problem.m = merged.get_u64_or("problem.m", 0);
      cfg.problem.b = merged.get_u64_or("problem.balls", cfg.problem.n);
      cfg.trials = merged.get_u64_or("run.trials", 20);
      if (cfg.problem.n == 0) cfg.problem.n = 1;  // keep the ratio finite
      if (auto k = policy_kind_from_string(merged.get_string_or("policy.kind", "random")))
        cfg.policy.kind = *k;
      write_summary_row(os, cfg, nullptr, e.what());
      continue;
    }
    try {
      ExperimentResult res = run_experiment(cfg);
      if (warnings_out)
        for (const auto& w : res.warnings) warnings_out->push_back(w);
      write_summary_row(os, cfg, &res.summary, "");
    } catch (const std::exception& e) {
      write_summary_row(os, cfg, nullptr, e.what());
    }
  }
}

}  // namespace binsim
