#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reppm/domain.hpp"
#include "reppm/market.hpp"
#include "reppm/rbf.hpp"

namespace reppm {

enum class MechanismKind { PPB, PPR, PPS, REPP_R, REPP_S };

std::string to_string(MechanismKind kind);

/// Market-backed kinds allot securities; the others settle in plain currency.
bool is_market_mechanism(MechanismKind kind);
/// Kinds that pay a referral bonus through an RBF.
bool has_referral_bonus(MechanismKind kind);
/// Kinds whose induced game is sequential (arrival order matters).
bool is_sequential(MechanismKind kind);

struct MechanismSpec {
  MechanismKind kind = MechanismKind::PPB;
  ProjectSpec project;
  std::optional<double> refund_budget;        // B, PPR / REPP-R
  std::optional<CostFunction> cost_function;  // PPS / REPP-S
  std::optional<RbfSpec> rbf;                 // REPP-R / REPP-S

  static MechanismSpec ppb(ProjectSpec project);
  static MechanismSpec ppr(ProjectSpec project, double budget);
  static MechanismSpec pps(ProjectSpec project, CostFunction market);
  static MechanismSpec repp_r(ProjectSpec project, double budget, RbfSpec rbf);
  static MechanismSpec repp_s(ProjectSpec project, CostFunction market, RbfSpec rbf);

  double budget() const;              // throws unless PPR / REPP-R
  const CostFunction& market() const; // throws unless PPS / REPP-S
  const RbfSpec& bonus_curve() const; // throws unless REPP-R / REPP-S
  void validate() const;
};

/// Per-agent settlement outcome. Securities counts are the payout-bearing
/// claims of the unfunded outcome; every bonus field is zero when the
/// project funds. Utility is net of the contribution: theta - x when funded,
/// the bonus payments otherwise (refunds return the contribution itself).
struct AgentSettlement {
  double collected = 0.0;
  double refunded = 0.0;
  double refund_bonus = 0.0;
  double referral_bonus = 0.0;
  double securities_refund = 0.0;
  double securities_referral = 0.0;
  double utility = 0.0;

  bool operator==(const AgentSettlement&) const = default;
};

struct SettlementReport {
  bool funded = false;
  double total_contributed = 0.0;  // chi after truncation at the target
  std::map<AgentId, AgentSettlement> agents;

  bool operator==(const SettlementReport&) const = default;
};

/// A selected point from the equilibrium set: contribution, contribution
/// time and referral set per agent.
struct EquilibriumProfile {
  std::map<AgentId, double> contributions;
  std::map<AgentId, double> times;
  std::map<AgentId, std::vector<AgentId>> referrals;
};

/// Utility of one agent for a raw profile of events, under the given
/// outcome. Events must be ordered by (time, agent); market kinds replay
/// the allotments in that order. Amounts are taken as given (no truncation);
/// the forest must be the one induced by the events.
double utility(const MechanismSpec& spec, std::span<const AgentProfile> agents,
               std::span<const ContributionEvent> events, const ReferralForest& forest,
               AgentId agent, bool funded);

/// Settlement of a run: contributions are collected in event order and
/// truncated at the remaining target; the project funds iff the target is
/// reached by the deadline. Referral securities in REPP-S are credited from
/// the final allotments, i.e. at the deadline. Events after the deadline are
/// rejected.
SettlementReport settle(const MechanismSpec& spec, std::span<const AgentProfile> agents,
                        std::span<const ContributionEvent> events,
                        const ReferralForest& forest);

/// Upper edge of the equilibrium contribution range for an agent with the
/// given value; market kinds evaluate it at the outstanding count seen on
/// arrival. Negative formula values clamp to zero (the agent refers but does
/// not contribute).
double equilibrium_cap(const MechanismSpec& spec, double theta, double q_at_arrival = 0.0);

/// Canonical selection from the equilibrium set, or nullopt when the
/// existence condition fails. Simultaneous kinds split the target in
/// proportion to the per-agent caps; sequential kinds fill greedily in
/// arrival order at the cap seen on arrival. Referral sets are the full
/// neighborhoods for REPP kinds.
std::optional<EquilibriumProfile> equilibrium_profile(const MechanismSpec& spec,
                                                      const SocialNetwork& network);

/// Net value over the agents strictly exceeds tau.
bool socially_desirable(std::span<const AgentProfile> agents, double tau);

enum class AgentSet { MCapN, N };

std::string to_string(AgentSet set);

struct DesirabilityThreshold {
  AgentSet set = AgentSet::MCapN;
  double tau = 0.0;
};

/// Funding threshold of the mechanism: the agent set it is measured over and
/// the value the net value must exceed. Undefined for PPB.
DesirabilityThreshold desirability_threshold(const MechanismSpec& spec, int n, int d);

/// Closed-form threshold for LMSR-backed kinds: h0 + b ln 2 (+ nd sigma).
DesirabilityThreshold desirability_threshold_lmsr(const MechanismSpec& spec, int n, int d);

/// Largest admissible bonus cap for REPP kinds on this network; a value
/// <= 0 means no cap sustains the funded equilibrium. n and d are taken
/// from the positive-value support of the network.
double sigma_bound(const MechanismSpec& spec, const SocialNetwork& network);

/// Worst-case referral tree shapes: n minimal contributions each reached
/// through its own chain of d referrers, or all reached through one chain.
enum class WorstCaseTree { ChainPerContributor, SingleHub };

struct BonusBound {
  double exact = 0.0;  // payout of the extremal tree itself
  double bound = 0.0;  // its closed-form envelope
};

/// Extremal unfunded payout for REPP kinds when the target is met by n
/// contributions of h0/n. REPP-R counts referral bonuses; REPP-S counts
/// total securities (refund plus referral).
BonusBound worst_case_bonus(const MechanismSpec& spec, int n, int d, WorstCaseTree tree);

}  // namespace reppm
