#pragma once

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace reppm {

using AgentId = int;

/// Reserved id of the project sponsor. The sponsor roots the referral
/// forest, holds no value for the project and never contributes.
inline constexpr AgentId kSponsorId = 0;

/// One strategic participant: private value theta, platform arrival time
/// and acquaintances in the social network.
struct AgentProfile {
  AgentId id = 0;
  double theta = 0.0;    // value derived if the project is provisioned, >= 0
  double arrival = 0.0;  // arrival time on the platform, in [0, deadline]
  std::vector<AgentId> neighbors;
};

struct ProjectSpec {
  double provision_point = 0.0;  // funding target, > 0
  double deadline = 0.0;         // collection closes at this time, > 0

  void validate() const;
};

/// Undirected acquaintance graph over agent profiles. Adjacency is kept on
/// the profiles themselves; construction checks symmetry, id uniqueness and
/// absence of self edges or the sponsor id.
class SocialNetwork {
 public:
  SocialNetwork() = default;
  explicit SocialNetwork(std::vector<AgentProfile> agents);

  const std::vector<AgentProfile>& agents() const { return agents_; }
  const AgentProfile& agent(AgentId id) const;
  bool has_agent(AgentId id) const { return index_.count(id) > 0; }
  std::size_t size() const { return agents_.size(); }

  /// Edges as (u, v) pairs with u < v, sorted.
  std::vector<std::pair<AgentId, AgentId>> edges() const;

 private:
  std::vector<AgentProfile> agents_;  // sorted by id
  std::unordered_map<AgentId, std::size_t> index_;
};

/// A single contribution action: amount paid, the time it happened and the
/// neighbors the agent referred at that moment. An amount of zero is legal;
/// it still registers the referrals.
struct ContributionEvent {
  AgentId agent = 0;
  double amount = 0.0;
  double time = 0.0;
  std::vector<AgentId> referred;
};

/// Sponsor-rooted forest induced by contribution events: every contributor
/// has exactly one parent, either the referrer whose referral reached him
/// first or the sponsor.
class ReferralForest {
 public:
  bool contains(AgentId id) const { return parent_.count(id) > 0; }
  AgentId parent_of(AgentId id) const;
  double attached_at(AgentId id) const;
  const std::vector<AgentId>& children_of(AgentId id) const;

  /// Non-root node count.
  std::size_t size() const { return parent_.size(); }
  const std::map<AgentId, AgentId>& parents() const { return parent_; }

 private:
  friend ReferralForest build_referral_forest(std::span<const ContributionEvent>);

  std::map<AgentId, AgentId> parent_;
  std::map<AgentId, double> attached_at_;
  std::map<AgentId, std::vector<AgentId>> children_;
};

/// Builds the referral forest from events ordered by (time, agent id).
/// A referral becomes effective at the referrer's contribution time; when
/// several referrals reach the same agent the earliest wins, ties broken by
/// the lower referring id. Contributors nobody referred before their own
/// event attach to the sponsor.
///
/// Throws std::invalid_argument on unsorted input, duplicate contributions,
/// or a referred set containing the sponsor or the acting agent itself.
ReferralForest build_referral_forest(std::span<const ContributionEvent> events);

/// Longest shortest-path length over the subgraph induced by agents with
/// theta > 0, by all-pairs BFS. Throws std::runtime_error when that
/// subgraph is empty or disconnected (Assumption-3 violated).
int diameter(const SocialNetwork& network);

/// Sum of private values over the given agents.
double net_value(std::span<const AgentProfile> agents);
double net_value(const SocialNetwork& network);

}  // namespace reppm
