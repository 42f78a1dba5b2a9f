#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "binsim/core.hpp"
#include "binsim/membits.hpp"

namespace binsim {

enum class PolicyKind {
  random,
  greedy_unbounded,
  basic_matching,
  intermediate_matching,
  tiered_matching,
  constant_load,
  nonadaptive_cyclic,
};

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::random: return "random";
    case PolicyKind::greedy_unbounded: return "greedy_unbounded";
    case PolicyKind::basic_matching: return "basic_matching";
    case PolicyKind::intermediate_matching: return "intermediate_matching";
    case PolicyKind::tiered_matching: return "tiered_matching";
    case PolicyKind::constant_load: return "constant_load";
    case PolicyKind::nonadaptive_cyclic: return "nonadaptive_cyclic";
  }
  return "unknown";
}

inline std::optional<PolicyKind> policy_kind_from_string(const std::string& s) {
  for (PolicyKind k : {PolicyKind::random, PolicyKind::greedy_unbounded, PolicyKind::basic_matching,
                       PolicyKind::intermediate_matching, PolicyKind::tiered_matching,
                       PolicyKind::constant_load, PolicyKind::nonadaptive_cyclic})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::random;
  double delta = 0.5;        // fraction of bins matching policies leave unfilled
  double capital_c = 40.0;   // array-count constant for the tiered family
  bool log_base_natural = true;  // base of the unsubscripted logs in derived sizes
  std::optional<double> load_c;  // constant-load target ratio k*m/n; defaults to the actual ratio
};

// A placement policy consumes one offer per round and either names a bin or
// gives up. `loads` is ground truth that only memory-unbounded reference
// policies may read; `round` is the external clock. Policies that keep
// state between rounds keep all of it in their BitLedger.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyOutcome decide(const Offer& offer, const LoadVector& loads, std::uint64_t round) = 0;
  virtual const BitLedger* ledger() const { return nullptr; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

namespace detail {
inline const UniformOffer& require_uniform(const Offer& offer, const char* who) {
  const auto* u = std::get_if<UniformOffer>(&offer);
  if (!u) throw std::invalid_argument(std::string(who) + ": requires a uniform offer");
  return *u;
}
inline const BernoulliOffer& require_bernoulli(const Offer& offer, const char* who) {
  const auto* b = std::get_if<BernoulliOffer>(&offer);
  if (!b) throw std::invalid_argument(std::string(who) + ": requires a bernoulli offer");
  return *b;
}
}  // namespace detail

// Takes the first offered bin. With k = 1 this is the plain uniform
// baseline. Keeps no state.
class RandomPolicy final : public Policy {
 public:
  PolicyOutcome decide(const Offer& offer, const LoadVector&, std::uint64_t) override {
    const auto& u = detail::require_uniform(offer, "random policy");
    return PolicyOutcome::placed(u.bins.front());
  }
};

// Least-loaded offered bin, first occurrence winning ties. Reads the ground
// truth load vector, so it models unlimited memory.
class GreedyUnboundedPolicy final : public Policy {
 public:
  PolicyOutcome decide(const Offer& offer, const LoadVector& loads, std::uint64_t) override {
    const auto& u = detail::require_uniform(offer, "greedy policy");
    std::uint32_t best = u.bins.front();
    std::uint32_t best_load = loads[best];
    for (std::size_t i = 1; i < u.bins.size(); ++i) {
      std::uint32_t c = loads[u.bins[i]];
      if (c < best_load) {
        best = u.bins[i];
        best_load = c;
      }
    }
    return PolicyOutcome::placed(best);
  }
};

// First included bin strictly after the round's own position in cyclic
// order. Uses the round index as a clock and keeps no memory at all.
class NonadaptiveCyclicPolicy final : public Policy {
 public:
  explicit NonadaptiveCyclicPolicy(const ProblemSize& p) : n_(p.n) {}

  PolicyOutcome decide(const Offer& offer, const LoadVector&, std::uint64_t round) override {
    const auto& b = detail::require_bernoulli(offer, "cyclic policy");
    std::uint64_t hit = b.next_included(round % n_);
    if (hit >= n_) return PolicyOutcome::failed(FailureCause::miss_all_arrays);
    return PolicyOutcome::placed(static_cast<std::uint32_t>(hit));
  }

 private:
  std::uint64_t n_;
};

}  // namespace binsim
