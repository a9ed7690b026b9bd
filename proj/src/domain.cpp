#include "reppm/domain.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <stdexcept>

namespace reppm {

void ProjectSpec::validate() const {
  if (!(provision_point > 0.0))
    throw std::invalid_argument("project: provision point must be positive");
  if (!(deadline > 0.0))
    throw std::invalid_argument("project: deadline must be positive");
}

SocialNetwork::SocialNetwork(std::vector<AgentProfile> agents)
    : agents_(std::move(agents)) {
  std::sort(agents_.begin(), agents_.end(),
            [](const AgentProfile& a, const AgentProfile& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const AgentProfile& a = agents_[i];
    if (a.id == kSponsorId)
      throw std::invalid_argument("network: agent id 0 is reserved for the sponsor");
    if (!index_.emplace(a.id, i).second)
      throw std::invalid_argument("network: duplicate agent id " + std::to_string(a.id));
    if (a.theta < 0.0)
      throw std::invalid_argument("network: negative theta for agent " + std::to_string(a.id));
    if (a.arrival < 0.0)
      throw std::invalid_argument("network: negative arrival for agent " + std::to_string(a.id));
  }
  for (AgentProfile& a : agents_) {
    std::sort(a.neighbors.begin(), a.neighbors.end());
    a.neighbors.erase(std::unique(a.neighbors.begin(), a.neighbors.end()), a.neighbors.end());
    for (AgentId nb : a.neighbors) {
      if (nb == a.id)
        throw std::invalid_argument("network: self edge at agent " + std::to_string(a.id));
      auto it = index_.find(nb);
      if (it == index_.end())
        throw std::invalid_argument("network: agent " + std::to_string(a.id) +
                                    " lists unknown neighbor " + std::to_string(nb));
      const AgentProfile& other = agents_[it->second];
      if (!std::binary_search(other.neighbors.begin(), other.neighbors.end(), a.id))
        throw std::invalid_argument("network: adjacency not symmetric between " +
                                    std::to_string(a.id) + " and " + std::to_string(nb));
    }
  }
}

const AgentProfile& SocialNetwork::agent(AgentId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw std::out_of_range("network: unknown agent id " + std::to_string(id));
  return agents_[it->second];
}

std::vector<std::pair<AgentId, AgentId>> SocialNetwork::edges() const {
  std::vector<std::pair<AgentId, AgentId>> out;
  for (const AgentProfile& a : agents_)
    for (AgentId nb : a.neighbors)
      if (a.id < nb) out.emplace_back(a.id, nb);
  std::sort(out.begin(), out.end());
  return out;
}

AgentId ReferralForest::parent_of(AgentId id) const {
  auto it = parent_.find(id);
  if (it == parent_.end())
    throw std::out_of_range("forest: agent " + std::to_string(id) + " not present");
  return it->second;
}

double ReferralForest::attached_at(AgentId id) const {
  auto it = attached_at_.find(id);
  if (it == attached_at_.end())
    throw std::out_of_range("forest: agent " + std::to_string(id) + " not present");
  return it->second;
}

const std::vector<AgentId>& ReferralForest::children_of(AgentId id) const {
  static const std::vector<AgentId> kNone;
  auto it = children_.find(id);
  return it == children_.end() ? kNone : it->second;
}

ReferralForest build_referral_forest(std::span<const ContributionEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    const ContributionEvent& prev = events[i - 1];
    const ContributionEvent& cur = events[i];
    if (cur.time < prev.time || (cur.time == prev.time && cur.agent < prev.agent))
      throw std::invalid_argument("forest: events must be ordered by (time, agent)");
  }

  ReferralForest forest;
  // Earliest referral registered so far for agents that have not contributed
  // yet, as (time, referrer).
  std::map<AgentId, std::pair<double, AgentId>> pending;

  for (const ContributionEvent& ev : events) {
    if (ev.agent == kSponsorId)
      throw std::invalid_argument("forest: the sponsor cannot contribute");
    if (ev.amount < 0.0)
      throw std::invalid_argument("forest: negative contribution from agent " +
                                  std::to_string(ev.agent));
    if (forest.parent_.count(ev.agent))
      throw std::invalid_argument("forest: agent " + std::to_string(ev.agent) +
                                  " contributed more than once");
    for (AgentId ref : ev.referred) {
      if (ref == kSponsorId)
        throw std::invalid_argument("forest: referred set contains the sponsor");
      if (ref == ev.agent)
        throw std::invalid_argument("forest: agent " + std::to_string(ev.agent) +
                                    " refers itself");
    }

    auto it = pending.find(ev.agent);
    if (it != pending.end()) {
      forest.parent_[ev.agent] = it->second.second;
      forest.attached_at_[ev.agent] = it->second.first;
      forest.children_[it->second.second].push_back(ev.agent);
      pending.erase(it);
    } else {
      forest.parent_[ev.agent] = kSponsorId;
      forest.attached_at_[ev.agent] = ev.time;
      forest.children_[kSponsorId].push_back(ev.agent);
    }

    for (AgentId ref : ev.referred) {
      if (forest.parent_.count(ref)) continue;  // already contributed
      auto [pit, inserted] = pending.emplace(ref, std::make_pair(ev.time, ev.agent));
      if (!inserted && std::make_pair(ev.time, ev.agent) < pit->second)
        pit->second = {ev.time, ev.agent};
    }
  }
  return forest;
}

int diameter(const SocialNetwork& network) {
  std::vector<AgentId> support;
  for (const AgentProfile& a : network.agents())
    if (a.theta > 0.0) support.push_back(a.id);
  if (support.empty())
    throw std::runtime_error("diameter: Assumption-3 violated (no agent values the project)");

  std::map<AgentId, std::size_t> pos;
  for (std::size_t i = 0; i < support.size(); ++i) pos[support[i]] = i;

  int best = 0;
  std::vector<int> dist(support.size());
  for (std::size_t s = 0; s < support.size(); ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    std::deque<std::size_t> queue{s};
    while (!queue.empty()) {
      std::size_t u = queue.front();
      queue.pop_front();
      for (AgentId nb : network.agent(support[u]).neighbors) {
        auto it = pos.find(nb);  // paths stay inside the support subgraph
        if (it == pos.end()) continue;
        if (dist[it->second] < 0) {
          dist[it->second] = dist[u] + 1;
          queue.push_back(it->second);
        }
      }
    }
    for (int d : dist) {
      if (d < 0)
        throw std::runtime_error(
            "diameter: Assumption-3 violated (positive-value agents are disconnected)");
      best = std::max(best, d);
    }
  }
  return best;
}

double net_value(std::span<const AgentProfile> agents) {
  double total = 0.0;
  for (const AgentProfile& a : agents) total += a.theta;
  return total;
}

double net_value(const SocialNetwork& network) { return net_value(network.agents()); }

}  // namespace reppm
