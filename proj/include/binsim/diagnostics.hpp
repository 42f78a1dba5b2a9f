#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "binsim/core.hpp"
#include "binsim/rng.hpp"

namespace binsim {

// Per-round distribution of the chosen bin. Any strategy that picks one of
// k uniformly offered bins puts at most k/n mass on a single bin, so the
// cap is part of validation.
class StrategyDistribution {
 public:
  StrategyDistribution(std::vector<double> probs, std::uint64_t k) : probs_(std::move(probs)) {
    if (probs_.empty()) throw std::invalid_argument("strategy: empty distribution");
    double cap = static_cast<double>(k) / static_cast<double>(probs_.size());
    double sum = 0.0;
    for (double p : probs_) {
      if (p < 0.0 || p > cap + 1e-12)
        throw std::invalid_argument("strategy: entry outside [0, k/n]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("strategy: entries sum to " + std::to_string(sum));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

  std::uint32_t sample(RngStream& rng) const {
    double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs_.size(); ++i) {
      acc += probs_[i];
      if (u < acc) return static_cast<std::uint32_t>(i);
    }
    return static_cast<std::uint32_t>(probs_.size() - 1);
  }

 private:
  std::vector<double> probs_;
};

// Random distribution over n bins with every entry capped at k/n.
// Exponential weights are scaled by a bisected factor so that the capped
// entries sum to exactly 1.
inline StrategyDistribution random_capped_strategy(std::uint64_t n, std::uint64_t k,
                                                   RngStream& rng) {
  if (n == 0 || k == 0) throw std::invalid_argument("strategy: n and k must be positive");
  double cap = static_cast<double>(k) / static_cast<double>(n);
  std::vector<double> weight(n);
  for (auto& w : weight) w = -std::log(1.0 - rng.next_double());
  auto capped_sum = [&](double scale) {
    double s = 0.0;
    for (double w : weight) s += std::min(w * scale, cap);
    return s;
  };
  // The capped sum plateaus at k (all entries capped), which can round to
  // just below 1.0 when k == 1, so the doubling loop must be bounded; the
  // residual pass below absorbs the leftover mass.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 128 && capped_sum(hi) < 1.0; ++it) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (capped_sum(mid) < 1.0 ? lo : hi) = mid;
  }
  std::vector<double> probs(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = std::min(weight[i] * hi, cap);
    total += probs[i];
  }
  // Push any residual onto entries with headroom, largest first.
  double residual = 1.0 - total;
  for (std::size_t i = 0; i < n && std::abs(residual) > 0; ++i) {
    double room = residual > 0 ? cap - probs[i] : probs[i];
    double shift = std::clamp(residual, -room, room);
    probs[i] += shift;
    residual -= shift;
  }
  return StrategyDistribution(std::move(probs), k);
}

// Round-by-round pairwise-collision accounting. For each placement the
// increment is the current load of the chosen bin, so the running integer
// total equals the pairwise collision count exactly. The running double
// total accumulates the conditional expectation of each increment under
// the declared strategy.
struct PredictionTrace {
  std::vector<std::uint64_t> increments;    // realized load of the chosen bin
  std::vector<double> expectations;         // strategy-weighted mean load
  std::uint64_t total_increments = 0;
  double total_expectation = 0.0;
};

inline PredictionTrace collision_predictor(std::uint64_t n,
                                           const std::vector<StrategyDistribution>& strategies,
                                           const std::vector<std::uint32_t>& chosen) {
  if (strategies.size() != chosen.size())
    throw std::invalid_argument("predictor: one strategy per placement required");
  LoadVector loads(n);
  PredictionTrace trace;
  trace.increments.reserve(chosen.size());
  trace.expectations.reserve(chosen.size());
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    if (strategies[s].size() != n) throw std::invalid_argument("predictor: strategy size mismatch");
    double v = 0.0;
    for (std::uint64_t i = 0; i < n; ++i)
      v += strategies[s][i] * static_cast<double>(loads[static_cast<std::uint32_t>(i)]);
    std::uint64_t x = loads[chosen[s]];
    trace.increments.push_back(x);
    trace.expectations.push_back(v);
    trace.total_increments += x;
    trace.total_expectation += v;
    loads.place(chosen[s]);
  }
  return trace;
}

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// The expected pairwise-collision total of a strategy sequence, which is
// the sum over ordered pairs of the overlap between their distributions,
// is at least t(t-k)/(2n) whenever no entry exceeds k/n.
inline InequalityCheck check_claim_sum_lower_bound(
    const std::vector<StrategyDistribution>& strategies, std::uint64_t k) {
  if (strategies.empty()) throw std::invalid_argument("claim check: no strategies");
  std::size_t n = strategies.front().size();
  std::vector<double> running(n, 0.0);
  double lhs = 0.0;
  for (const auto& q : strategies) {
    if (q.size() != n) throw std::invalid_argument("claim check: strategy size mismatch");
    for (std::size_t i = 0; i < n; ++i) lhs += running[i] * q[i];
    for (std::size_t i = 0; i < n; ++i) running[i] += q[i];
  }
  double t = static_cast<double>(strategies.size());
  InequalityCheck out;
  out.lhs = lhs;
  out.rhs = t * (t - static_cast<double>(k)) / (2.0 * static_cast<double>(n));
  out.holds = out.lhs >= out.rhs - 1e-9 * std::max(1.0, std::abs(out.rhs));
  return out;
}

// Expected number of q-wise collision tuples for a strategy sequence,
// computed by brute force over all q-subsets of rounds, against the
// packing lower bound (t - (1+a)kq)^q / (e^{q/2a} n^{q-1} q!), clamped to
// zero when the base is nonpositive. Guards keep the enumeration small.
inline InequalityCheck check_packing_bound(const std::vector<StrategyDistribution>& strategies,
                                           std::uint64_t q, double alpha, std::uint64_t k) {
  std::size_t t = strategies.size();
  if (t == 0 || t > 12) throw std::invalid_argument("packing check: need 1 <= t <= 12");
  if (q < 2 || q > 4) throw std::invalid_argument("packing check: need 2 <= q <= 4");
  std::size_t n = strategies.front().size();
  if (n > 16) throw std::invalid_argument("packing check: need n <= 16");
  if (!(alpha > 0)) throw std::invalid_argument("packing check: alpha must be positive");
  for (const auto& s : strategies)
    if (s.size() != n) throw std::invalid_argument("packing check: strategy size mismatch");

  double lhs = 0.0;
  std::vector<std::size_t> idx(q);
  for (std::size_t i = 0; i < q; ++i) idx[i] = i;
  if (t >= q) {
    while (true) {
      for (std::size_t bin = 0; bin < n; ++bin) {
        double prod = 1.0;
        for (std::size_t j = 0; j < q; ++j) prod *= strategies[idx[j]][bin];
        lhs += prod;
      }
      // next q-combination of {0..t-1}
      std::size_t j = q;
      while (j > 0 && idx[j - 1] == t - q + j - 1) --j;
      if (j == 0) break;
      ++idx[j - 1];
      for (std::size_t i = j; i < q; ++i) idx[i] = idx[i - 1] + 1;
    }
  }

  double base = static_cast<double>(t) -
                (1.0 + alpha) * static_cast<double>(k) * static_cast<double>(q);
  double rhs = 0.0;
  if (base > 0) {
    double qfact = 1.0;
    for (std::uint64_t i = 2; i <= q; ++i) qfact *= static_cast<double>(i);
    rhs = std::pow(base, static_cast<double>(q)) /
          (std::exp(static_cast<double>(q) / (2.0 * alpha)) *
           std::pow(static_cast<double>(n), static_cast<double>(q - 1)) * qfact);
  }
  InequalityCheck out;
  out.lhs = lhs;
  out.rhs = rhs;
  out.holds = out.lhs >= out.rhs - 1e-9 * std::max(1.0, std::abs(out.rhs));
  return out;
}

// Monte Carlo estimate of the probability that a sum of Bernoulli
// increments ever strays from its predictable compensator by a factor of
// one half once the compensator has grown past h. Increments are bounded
// by 1, so the tail bound exp(-h/20 + 2) applies to every scenario here.
enum class FreedmanScenario { constant_mean, drifting_mean, state_coupled };

struct FreedmanResult {
  double event_rate = 0.0;
  double bound = 0.0;
  std::uint64_t trials = 0;
};

inline FreedmanResult freedman_event_rate(FreedmanScenario scenario, double h,
                                          std::uint64_t rounds, std::uint64_t trials,
                                          RngStream& rng) {
  if (!(h > 0)) throw std::invalid_argument("deviation check: h must be positive");
  std::uint64_t hits = 0;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    RngStream local = rng.split(trial);
    double sum_x = 0.0, sum_y = 0.0;
    bool event = false;
    for (std::uint64_t s = 0; s < rounds && !event; ++s) {
      double p = 0.0;
      switch (scenario) {
        case FreedmanScenario::constant_mean: p = 0.3; break;
        case FreedmanScenario::drifting_mean:
          p = 0.05 + 0.9 * static_cast<double>(s % 100) / 100.0;
          break;
        case FreedmanScenario::state_coupled:
          p = std::clamp((sum_x + 1.0) / (sum_y + 2.0) * 0.5, 0.05, 0.95);
          break;
      }
      sum_y += p;
      if (local.next_bernoulli(p)) sum_x += 1.0;
      if (sum_y >= h && std::abs(sum_x / sum_y - 1.0) >= 0.5) event = true;
    }
    if (event) ++hits;
  }
  FreedmanResult out;
  out.event_rate = trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  out.bound = std::exp(-h / 20.0 + 2.0);
  out.trials = trials;
  return out;
}

// Closed-form reference values. Optional fields are absent where the
// formula leaves its domain.
struct BoundReport {
  std::uint64_t n = 0, k = 0, m = 0;
  std::optional<double> max_load_lower;        // ln(n/m) / (ln ln(n/m) + ln k)
  std::optional<double> matching_bits_lower;   // log2(ln(n/(k m)))
  std::optional<double> one_choice_max_load;   // ln n / ln ln n
  std::optional<double> greedy_max_load;       // ln ln n / ln k
  double col2_threshold = 0.0;                 // 500 k m

  double col2_floor_at(std::uint64_t t) const {
    double td = static_cast<double>(t);
    return td * td / (16.0 * static_cast<double>(n));
  }
};

inline BoundReport theoretical_bounds(const ProblemSize& p) {
  p.validate();
  BoundReport r;
  r.n = p.n;
  r.k = p.k;
  r.m = p.m;
  r.col2_threshold = 500.0 * static_cast<double>(p.k) * static_cast<double>(p.m);
  double nd = static_cast<double>(p.n);
  if (p.m > 0) {
    double ratio = nd / static_cast<double>(p.m);
    if (std::log(ratio) > 1.0) {
      double denom = std::log(std::log(ratio)) + std::log(static_cast<double>(p.k));
      if (denom > 0) r.max_load_lower = std::log(ratio) / denom;
    }
  }
  if (p.m > 0) {
    double inner = std::log(nd / (static_cast<double>(p.k) * static_cast<double>(p.m)));
    if (inner > 0) r.matching_bits_lower = std::log2(inner);
  }
  if (std::log(std::log(nd)) > 0) r.one_choice_max_load = std::log(nd) / std::log(std::log(nd));
  if (p.k >= 2) r.greedy_max_load = std::log(std::log(nd)) / std::log(static_cast<double>(p.k));
  return r;
}

}  // namespace binsim
