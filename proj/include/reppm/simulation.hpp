#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "reppm/domain.hpp"
#include "reppm/mechanisms.hpp"

namespace reppm {

/// Built-in contribution strategies. All of them are deterministic given the
/// run history.
///
///   Equilibrium            contribute the equilibrium cap (clamped by the
///                          remaining target) on arrival; refer everyone when
///                          the mechanism pays referral bonuses
///   FreeRider              contribute nothing but refer everyone
///   NoReferralEquilibrium  equilibrium amount, never refers
///   Delayed                equilibrium amount evaluated at the deadline
///   Overcontributor        contribute the full private value on arrival
///   Custom                 contribute a fixed amount on arrival
enum class StrategyKind {
  Equilibrium,
  FreeRider,
  NoReferralEquilibrium,
  Delayed,
  Overcontributor,
  Custom,
};

std::string to_string(StrategyKind kind);

struct Strategy {
  StrategyKind kind = StrategyKind::Equilibrium;
  double custom_amount = 0.0;  // Custom only
};

struct StrategyAssignment {
  Strategy fallback;
  std::map<AgentId, Strategy> per_agent;

  const Strategy& for_agent(AgentId id) const;
};

struct RunConfig {
  MechanismSpec mechanism;
  SocialNetwork network;
  std::vector<AgentId> initial_aware;  // M at t = 0
  StrategyAssignment strategies;
  std::uint64_t seed = 0;   // recorded in traces; the engine itself is deterministic
  double time_grid = 1.0;   // > 0; actions happen on this grid

  void validate() const;
};

struct TraceStep {
  ContributionEvent event;
  double h_before = 0.0;  // remaining target when the agent acted
  double h_after = 0.0;
  double q_before = 0.0;  // outstanding securities (market kinds)
  double q_after = 0.0;
};

struct RunTrace {
  std::vector<TraceStep> steps;
  std::map<AgentId, double> awareness;  // time each agent entered M
  SettlementReport settlement;

  std::vector<ContributionEvent> events() const;
};

/// Plays one run: agents act in (time, id) order once they are aware and
/// arrived; awareness spreads instantly along referrals and a newly referred
/// agent can act from the next grid step. Contributions flow through the
/// mechanism, are truncated at the remaining target and settled at the
/// deadline. Pathological configurations yield unfunded traces, not errors.
RunTrace run(const RunConfig& config);

/// Total unfunded bonus payments (refund plus referral); zero when funded.
double sponsor_outlay(const SettlementReport& report);

struct NamedRunConfig {
  std::string name;
  RunConfig config;
};

struct SweepRow {
  std::string name;
  int replicates = 0;
  double funding_rate = 0.0;
  double mean_contributed = 0.0;
  double mean_sponsor_outlay = 0.0;
  double mean_awareness_coverage = 0.0;
  bool equilibrium_exists = false;
};

std::vector<SweepRow> sweep(std::span<const NamedRunConfig> configs, int replicates);

}  // namespace reppm
