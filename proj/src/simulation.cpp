#include "reppm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

namespace reppm {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Equilibrium: return "equilibrium";
    case StrategyKind::FreeRider: return "free_rider";
    case StrategyKind::NoReferralEquilibrium: return "no_referral_equilibrium";
    case StrategyKind::Delayed: return "delayed";
    case StrategyKind::Overcontributor: return "overcontributor";
    case StrategyKind::Custom: return "custom";
  }
  return "?";
}

const Strategy& StrategyAssignment::for_agent(AgentId id) const {
  auto it = per_agent.find(id);
  return it == per_agent.end() ? fallback : it->second;
}

void RunConfig::validate() const {
  mechanism.validate();
  if (!(time_grid > 0.0))
    throw std::invalid_argument("run: time grid step must be positive");
  for (AgentId id : initial_aware)
    if (!network.has_agent(id))
      throw std::invalid_argument("run: initial_aware lists unknown agent " +
                                  std::to_string(id));
  for (const auto& [id, st] : strategies.per_agent) {
    if (!network.has_agent(id))
      throw std::invalid_argument("run: strategy override for unknown agent " +
                                  std::to_string(id));
    if (st.kind == StrategyKind::Custom && st.custom_amount < 0.0)
      throw std::invalid_argument("run: negative custom amount for agent " +
                                  std::to_string(id));
  }
  if (strategies.fallback.kind == StrategyKind::Custom &&
      strategies.fallback.custom_amount < 0.0)
    throw std::invalid_argument("run: negative custom amount");
  for (const AgentProfile& a : network.agents())
    if (a.arrival > mechanism.project.deadline)
      throw std::invalid_argument("run: agent " + std::to_string(a.id) +
                                  " arrives after the deadline");
}

std::vector<ContributionEvent> RunTrace::events() const {
  std::vector<ContributionEvent> out;
  out.reserve(steps.size());
  for (const TraceStep& s : steps) out.push_back(s.event);
  return out;
}

namespace {

struct PendingAction {
  double time;
  AgentId id;
  bool operator>(const PendingAction& o) const {
    return std::tie(time, id) > std::tie(o.time, o.id);
  }
};

double snap_up(double t, double grid, double deadline) {
  const double k = std::ceil(t / grid - 1e-9);
  return std::min(k * grid, deadline);
}

bool refers(const Strategy& st, MechanismKind kind) {
  switch (st.kind) {
    case StrategyKind::FreeRider:
      return true;  // refers regardless of the mechanism
    case StrategyKind::NoReferralEquilibrium:
      return false;
    default:
      return has_referral_bonus(kind);
  }
}

}  // namespace

RunTrace run(const RunConfig& config) {
  config.validate();
  const MechanismSpec& spec = config.mechanism;
  const double deadline = spec.project.deadline;
  const double grid = config.time_grid;

  RunTrace trace;
  std::set<AgentId> acted;
  std::priority_queue<PendingAction, std::vector<PendingAction>, std::greater<>> queue;

  auto schedule = [&](AgentId id, double earliest) {
    const Strategy& st = config.strategies.for_agent(id);
    const double at = st.kind == StrategyKind::Delayed
                          ? deadline
                          : std::min(std::max(snap_up(config.network.agent(id).arrival,
                                                      grid, deadline),
                                              earliest),
                                     deadline);
    queue.push({at, id});
  };

  for (AgentId id : config.initial_aware) {
    if (trace.awareness.emplace(id, 0.0).second) schedule(id, 0.0);
  }

  double remaining = spec.project.provision_point;
  MarketState market;
  std::vector<ContributionEvent> events;

  while (!queue.empty()) {
    const PendingAction action = queue.top();
    queue.pop();
    if (!acted.insert(action.id).second) continue;
    const AgentProfile& agent = config.network.agent(action.id);
    const Strategy& st = config.strategies.for_agent(action.id);

    double desired = 0.0;
    switch (st.kind) {
      case StrategyKind::Equilibrium:
      case StrategyKind::NoReferralEquilibrium:
      case StrategyKind::Delayed:
        desired = std::max(0.0, equilibrium_cap(spec, agent.theta,
                                                is_market_mechanism(spec.kind)
                                                    ? market.outstanding
                                                    : 0.0));
        break;
      case StrategyKind::FreeRider:
        desired = 0.0;
        break;
      case StrategyKind::Overcontributor:
        desired = agent.theta;
        break;
      case StrategyKind::Custom:
        desired = st.custom_amount;
        break;
    }
    const double amount = std::min(desired, remaining);

    std::vector<AgentId> referred;
    if (refers(st, spec.kind)) referred = agent.neighbors;

    if (amount > 0.0 || !referred.empty()) {
      TraceStep step;
      step.event = ContributionEvent{action.id, amount, action.time, referred};
      step.h_before = remaining;
      step.q_before = market.outstanding;
      remaining -= amount;
      if (is_market_mechanism(spec.kind) && amount > 0.0)
        market = allot_securities(spec.market(), market, amount).state;
      step.h_after = remaining;
      step.q_after = market.outstanding;
      trace.steps.push_back(std::move(step));
      events.push_back(trace.steps.back().event);
    }

    for (AgentId nb : referred) {
      if (trace.awareness.count(nb)) continue;
      trace.awareness.emplace(nb, action.time);
      if (action.time + grid <= deadline) schedule(nb, action.time + grid);
    }
  }

  const ReferralForest forest = build_referral_forest(events);
  trace.settlement = settle(spec, config.network.agents(), events, forest);
  return trace;
}

double sponsor_outlay(const SettlementReport& report) {
  if (report.funded) return 0.0;
  double total = 0.0;
  for (const auto& [id, s] : report.agents) total += s.refund_bonus + s.referral_bonus;
  return total;
}

std::vector<SweepRow> sweep(std::span<const NamedRunConfig> configs, int replicates) {
  if (replicates < 1) throw std::invalid_argument("sweep: need at least one replicate");
  std::vector<SweepRow> rows;
  rows.reserve(configs.size());
  for (const NamedRunConfig& named : configs) {
    SweepRow row;
    row.name = named.name;
    row.replicates = replicates;
    for (int rep = 0; rep < replicates; ++rep) {
      const RunTrace trace = run(named.config);
      row.funding_rate += trace.settlement.funded ? 1.0 : 0.0;
      row.mean_contributed += trace.settlement.total_contributed;
      row.mean_sponsor_outlay += sponsor_outlay(trace.settlement);
      row.mean_awareness_coverage +=
          static_cast<double>(trace.awareness.size()) / named.config.network.size();
    }
    row.funding_rate /= replicates;
    row.mean_contributed /= replicates;
    row.mean_sponsor_outlay /= replicates;
    row.mean_awareness_coverage /= replicates;
    try {
      row.equilibrium_exists =
          equilibrium_profile(named.config.mechanism, named.config.network).has_value();
    } catch (const std::runtime_error&) {
      row.equilibrium_exists = false;  // disconnected support
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace reppm
