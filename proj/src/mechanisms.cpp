#include "reppm/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace reppm {

namespace {

double funding_tolerance(double h0) { return 1e-9 * std::max(1.0, h0); }

const AgentProfile& profile_of(std::span<const AgentProfile> agents, AgentId id) {
  for (const AgentProfile& a : agents)
    if (a.id == id) return a;
  throw std::out_of_range("mechanism: unknown agent id " + std::to_string(id));
}

double amount_of(std::span<const ContributionEvent> events, AgentId id) {
  for (const ContributionEvent& ev : events)
    if (ev.agent == id) return ev.amount;
  return 0.0;
}

void check_event_order(std::span<const ContributionEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].time < events[i - 1].time ||
        (events[i].time == events[i - 1].time && events[i].agent <= events[i - 1].agent))
      throw std::invalid_argument("mechanism: events must be ordered by (time, agent)");
}

}  // namespace

std::string to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::PPB: return "PPB";
    case MechanismKind::PPR: return "PPR";
    case MechanismKind::PPS: return "PPS";
    case MechanismKind::REPP_R: return "REPP_R";
    case MechanismKind::REPP_S: return "REPP_S";
  }
  return "?";
}

bool is_market_mechanism(MechanismKind kind) {
  return kind == MechanismKind::PPS || kind == MechanismKind::REPP_S;
}

bool has_referral_bonus(MechanismKind kind) {
  return kind == MechanismKind::REPP_R || kind == MechanismKind::REPP_S;
}

bool is_sequential(MechanismKind kind) { return is_market_mechanism(kind); }

MechanismSpec MechanismSpec::ppb(ProjectSpec project) {
  MechanismSpec spec{MechanismKind::PPB, project, {}, {}, {}};
  spec.validate();
  return spec;
}

MechanismSpec MechanismSpec::ppr(ProjectSpec project, double budget) {
  MechanismSpec spec{MechanismKind::PPR, project, budget, {}, {}};
  spec.validate();
  return spec;
}

MechanismSpec MechanismSpec::pps(ProjectSpec project, CostFunction market) {
  MechanismSpec spec{MechanismKind::PPS, project, {}, market, {}};
  spec.validate();
  return spec;
}

MechanismSpec MechanismSpec::repp_r(ProjectSpec project, double budget, RbfSpec rbf) {
  MechanismSpec spec{MechanismKind::REPP_R, project, budget, {}, rbf};
  spec.validate();
  return spec;
}

MechanismSpec MechanismSpec::repp_s(ProjectSpec project, CostFunction market, RbfSpec rbf) {
  MechanismSpec spec{MechanismKind::REPP_S, project, {}, market, rbf};
  spec.validate();
  return spec;
}

double MechanismSpec::budget() const {
  if (!refund_budget)
    throw std::logic_error("mechanism: " + to_string(kind) + " has no refund budget");
  return *refund_budget;
}

const CostFunction& MechanismSpec::market() const {
  if (!cost_function)
    throw std::logic_error("mechanism: " + to_string(kind) + " has no cost function");
  return *cost_function;
}

const RbfSpec& MechanismSpec::bonus_curve() const {
  if (!rbf) throw std::logic_error("mechanism: " + to_string(kind) + " has no RBF");
  return *rbf;
}

void MechanismSpec::validate() const {
  project.validate();
  const bool wants_budget =
      kind == MechanismKind::PPR || kind == MechanismKind::REPP_R;
  if (wants_budget != refund_budget.has_value())
    throw std::invalid_argument("mechanism: refund budget required for PPR/REPP_R only");
  if (refund_budget && !(*refund_budget > 0.0))
    throw std::invalid_argument("mechanism: refund budget must be positive");
  if (is_market_mechanism(kind) != cost_function.has_value())
    throw std::invalid_argument("mechanism: cost function required for PPS/REPP_S only");
  if (cost_function) cost_function->validate();
  if (has_referral_bonus(kind) != rbf.has_value())
    throw std::invalid_argument("mechanism: RBF required for REPP_R/REPP_S only");
  if (rbf) rbf->validate();
}

double utility(const MechanismSpec& spec, std::span<const AgentProfile> agents,
               std::span<const ContributionEvent> events, const ReferralForest& forest,
               AgentId agent, bool funded) {
  spec.validate();
  check_event_order(events);
  const AgentProfile& self = profile_of(agents, agent);
  const double x = amount_of(events, agent);

  if (funded) return self.theta - x;

  switch (spec.kind) {
    case MechanismKind::PPB:
      return 0.0;
    case MechanismKind::PPR:
    case MechanismKind::REPP_R: {
      double chi = 0.0;
      for (const ContributionEvent& ev : events) chi += ev.amount;
      const double refund_bonus = chi > 0.0 ? (x / chi) * spec.budget() : 0.0;
      double referral_bonus = 0.0;
      if (spec.kind == MechanismKind::REPP_R) {
        double referred_mass = 0.0;
        for (AgentId child : forest.children_of(agent))
          referred_mass += amount_of(events, child);
        referral_bonus = rbf_eval(spec.bonus_curve(), referred_mass);
      }
      return refund_bonus + referral_bonus;
    }
    case MechanismKind::PPS:
    case MechanismKind::REPP_S: {
      const CostFunction& cf = spec.market();
      MarketState state;
      double own_securities = 0.0;
      double referred_securities = 0.0;
      const std::vector<AgentId>& children = forest.children_of(agent);
      for (const ContributionEvent& ev : events) {
        const Allotment lot = allot_securities(cf, state, ev.amount);
        state = lot.state;
        if (ev.agent == agent) own_securities = lot.securities;
        if (std::find(children.begin(), children.end(), ev.agent) != children.end())
          referred_securities += lot.securities;
      }
      double bonus_securities = 0.0;
      if (spec.kind == MechanismKind::REPP_S)
        bonus_securities = rbf_eval(spec.bonus_curve(), referred_securities);
      return own_securities + bonus_securities - x;
    }
  }
  throw std::logic_error("mechanism: unreachable kind");
}

SettlementReport settle(const MechanismSpec& spec, std::span<const AgentProfile> agents,
                        std::span<const ContributionEvent> events,
                        const ReferralForest& forest) {
  spec.validate();
  check_event_order(events);
  const double h0 = spec.project.provision_point;

  for (const ContributionEvent& ev : events) {
    if (ev.time > spec.project.deadline)
      throw std::invalid_argument("settle: event from agent " + std::to_string(ev.agent) +
                                  " after the deadline");
    if (ev.amount < 0.0)
      throw std::invalid_argument("settle: negative contribution from agent " +
                                  std::to_string(ev.agent));
    profile_of(agents, ev.agent);  // must be a known agent
  }

  // Collection truncates at the remaining target; the requester stops
  // collecting once the target is met.
  double remaining = h0;
  double chi = 0.0;
  std::map<AgentId, double> collected;
  for (const ContributionEvent& ev : events) {
    const double eff = std::min(ev.amount, remaining);
    collected[ev.agent] = eff;
    remaining -= eff;
    chi += eff;
  }
  const bool funded = remaining <= funding_tolerance(h0);

  SettlementReport report;
  report.funded = funded;
  report.total_contributed = chi;
  for (const AgentProfile& a : agents) report.agents[a.id];

  if (funded) {
    for (const AgentProfile& a : agents) {
      AgentSettlement& s = report.agents[a.id];
      auto it = collected.find(a.id);
      s.collected = it == collected.end() ? 0.0 : it->second;
      s.utility = a.theta - s.collected;
    }
    return report;
  }

  std::map<AgentId, double> securities;
  if (is_market_mechanism(spec.kind)) {
    const CostFunction& cf = spec.market();
    MarketState state;
    for (const ContributionEvent& ev : events) {
      const Allotment lot = allot_securities(cf, state, collected[ev.agent]);
      state = lot.state;
      securities[ev.agent] = lot.securities;
    }
  }

  for (const ContributionEvent& ev : events) {
    AgentSettlement& s = report.agents[ev.agent];
    const double eff = collected[ev.agent];
    s.refunded = eff;

    switch (spec.kind) {
      case MechanismKind::PPB:
        break;
      case MechanismKind::PPR:
      case MechanismKind::REPP_R:
        s.refund_bonus = chi > 0.0 ? (eff / chi) * spec.budget() : 0.0;
        break;
      case MechanismKind::PPS:
      case MechanismKind::REPP_S:
        s.securities_refund = securities[ev.agent];
        s.refund_bonus = s.securities_refund - eff;
        break;
    }

    if (has_referral_bonus(spec.kind)) {
      const std::map<AgentId, double>& mass_source =
          spec.kind == MechanismKind::REPP_R ? collected : securities;
      double referred_mass = 0.0;
      for (AgentId child : forest.children_of(ev.agent)) {
        auto it = mass_source.find(child);
        if (it != mass_source.end()) referred_mass += it->second;
      }
      const double bonus = rbf_eval(spec.bonus_curve(), referred_mass);
      if (spec.kind == MechanismKind::REPP_S) {
        // Referral securities are credited at the deadline, once every
        // referred contribution has been allotted.
        s.securities_referral = bonus;
      }
      s.referral_bonus = bonus;
    }

    s.utility = s.refund_bonus + s.referral_bonus;
  }
  return report;
}

double equilibrium_cap(const MechanismSpec& spec, double theta, double q_at_arrival) {
  spec.validate();
  if (theta < 0.0) throw std::invalid_argument("mechanism: negative theta");
  if (!is_market_mechanism(spec.kind) && q_at_arrival != 0.0)
    std::cerr << "warning: arrival-state q ignored for " << to_string(spec.kind) << "\n";

  const double h0 = spec.project.provision_point;
  switch (spec.kind) {
    case MechanismKind::PPB:
      return theta;
    case MechanismKind::PPR:
      return theta * h0 / (spec.budget() + h0);
    case MechanismKind::REPP_R:
      return std::max(0.0, theta - spec.bonus_curve().cap) * h0 / (spec.budget() + h0);
    case MechanismKind::PPS:
      return c0(spec.market(), theta + q_at_arrival) - c0(spec.market(), q_at_arrival);
    case MechanismKind::REPP_S:
      return std::max(0.0, c0(spec.market(), theta - spec.bonus_curve().cap + q_at_arrival) -
                               c0(spec.market(), q_at_arrival));
  }
  throw std::logic_error("mechanism: unreachable kind");
}

namespace {

int positive_value_count(const SocialNetwork& network) {
  int n = 0;
  for (const AgentProfile& a : network.agents())
    if (a.theta > 0.0) ++n;
  return n;
}

}  // namespace

std::optional<EquilibriumProfile> equilibrium_profile(const MechanismSpec& spec,
                                                      const SocialNetwork& network) {
  spec.validate();
  if (network.size() == 0) return std::nullopt;
  const double h0 = spec.project.provision_point;
  const double value = net_value(network);

  EquilibriumProfile profile;
  for (const AgentProfile& a : network.agents()) {
    profile.contributions[a.id] = 0.0;
    profile.times[a.id] = a.arrival;
    profile.referrals[a.id] =
        has_referral_bonus(spec.kind) ? a.neighbors : std::vector<AgentId>{};
  }

  if (!is_sequential(spec.kind)) {
    switch (spec.kind) {
      case MechanismKind::PPB:
        if (value < h0) return std::nullopt;
        break;
      case MechanismKind::PPR:
        if (spec.budget() > value - h0) return std::nullopt;
        break;
      case MechanismKind::REPP_R: {
        const double bound = sigma_bound(spec, network);
        if (!(spec.bonus_curve().cap < bound)) return std::nullopt;
        break;
      }
      default:
        break;
    }

    double cap_sum = 0.0;
    std::map<AgentId, double> caps;
    for (const AgentProfile& a : network.agents()) {
      const double cap = equilibrium_cap(spec, a.theta);
      caps[a.id] = cap;
      cap_sum += cap;
    }
    if (cap_sum < h0) return std::nullopt;

    const double share = h0 / cap_sum;
    double assigned = 0.0;
    AgentId widest = network.agents().front().id;
    for (const auto& [id, cap] : caps) {
      profile.contributions[id] = cap * share;
      assigned += cap * share;
      if (cap > caps[widest]) widest = id;
    }
    profile.contributions[widest] += h0 - assigned;  // absorb rounding residue
    return profile;
  }

  if (spec.kind == MechanismKind::REPP_S) {
    const double bound = sigma_bound(spec, network);
    if (!(spec.bonus_curve().cap < bound)) return std::nullopt;
  }

  std::vector<const AgentProfile*> order;
  for (const AgentProfile& a : network.agents()) order.push_back(&a);
  std::sort(order.begin(), order.end(), [](const AgentProfile* a, const AgentProfile* b) {
    return std::make_pair(a->arrival, a->id) < std::make_pair(b->arrival, b->id);
  });

  MarketState state;
  double remaining = h0;
  for (const AgentProfile* a : order) {
    if (remaining <= 0.0) break;
    const double cap = equilibrium_cap(spec, a->theta, state.outstanding);
    const double x = std::min(cap, remaining);
    if (x <= 0.0) continue;
    profile.contributions[a->id] = x;
    state = allot_securities(spec.market(), state, x).state;
    remaining -= x;
  }
  if (remaining > funding_tolerance(h0)) return std::nullopt;
  return profile;
}

bool socially_desirable(std::span<const AgentProfile> agents, double tau) {
  if (tau < 0.0) throw std::invalid_argument("mechanism: negative threshold");
  return net_value(agents) > tau;
}

std::string to_string(AgentSet set) {
  return set == AgentSet::MCapN ? "M∩N" : "N";
}

DesirabilityThreshold desirability_threshold(const MechanismSpec& spec, int n, int d) {
  spec.validate();
  if (n < 1 || d < 0) throw std::invalid_argument("mechanism: need n >= 1, d >= 0");
  const double h0 = spec.project.provision_point;
  switch (spec.kind) {
    case MechanismKind::PPB:
      throw std::invalid_argument("mechanism: no desirability threshold for PPB");
    case MechanismKind::PPR:
      return {AgentSet::MCapN, h0 + spec.budget()};
    case MechanismKind::REPP_R:
      return {AgentSet::N, h0 + spec.budget() + n * d * spec.bonus_curve().cap};
    case MechanismKind::PPS:
      return {AgentSet::MCapN, c0_inverse(spec.market(), h0 + c0(spec.market(), 0.0))};
    case MechanismKind::REPP_S:
      return {AgentSet::N, c0_inverse(spec.market(), h0 + c0(spec.market(), 0.0)) +
                               n * d * spec.bonus_curve().cap};
  }
  throw std::logic_error("mechanism: unreachable kind");
}

DesirabilityThreshold desirability_threshold_lmsr(const MechanismSpec& spec, int n, int d) {
  spec.validate();
  if (n < 1 || d < 0) throw std::invalid_argument("mechanism: need n >= 1, d >= 0");
  if (!is_market_mechanism(spec.kind))
    throw std::invalid_argument("mechanism: LMSR threshold needs a market mechanism");
  const double h0 = spec.project.provision_point;
  const double b = spec.market().liquidity;
  if (spec.kind == MechanismKind::PPS) return {AgentSet::MCapN, h0 + b * std::log(2.0)};
  return {AgentSet::N, h0 + b * std::log(2.0) + n * d * spec.bonus_curve().cap};
}

double sigma_bound(const MechanismSpec& spec, const SocialNetwork& network) {
  spec.validate();
  if (!has_referral_bonus(spec.kind))
    throw std::invalid_argument("mechanism: sigma bound defined for REPP kinds only");
  const double h0 = spec.project.provision_point;
  const double value = net_value(network);
  const int n = positive_value_count(network);
  const int d = diameter(network);
  if (n * d == 0) return std::numeric_limits<double>::infinity();

  if (spec.kind == MechanismKind::REPP_R)
    return (value - h0 - spec.budget()) / (static_cast<double>(n) * d);
  const double issued_at_target = c0_inverse(spec.market(), h0 + c0(spec.market(), 0.0));
  return (value - issued_at_target) / (static_cast<double>(n) * d);
}

BonusBound worst_case_bonus(const MechanismSpec& spec, int n, int d, WorstCaseTree tree) {
  spec.validate();
  if (!has_referral_bonus(spec.kind))
    throw std::invalid_argument("mechanism: no bonus bounds for " + to_string(spec.kind));
  if (n < 0 || d < 1) throw std::invalid_argument("mechanism: need n >= 0, d >= 1");
  if (n == 0) return {0.0, 0.0};

  const double h0 = spec.project.provision_point;
  const double delta = h0 / n;
  const RbfSpec& curve = spec.bonus_curve();
  const double sigma = curve.cap;

  if (spec.kind == MechanismKind::REPP_R) {
    if (tree == WorstCaseTree::ChainPerContributor)
      return {n * d * rbf_eval(curve, delta), n * d * sigma};
    return {d * rbf_eval(curve, n * delta), d * sigma};
  }

  // REPP-S: replay the n minimal contributions through the market; the
  // refund securities telescope to c0^{-1}(h0 + c0(0)).
  const CostFunction& cf = spec.market();
  MarketState state;
  double per_step_bonus = 0.0;
  for (int i = 0; i < n; ++i) {
    const Allotment lot = allot_securities(cf, state, delta);
    per_step_bonus += rbf_eval(curve, lot.securities);
    state = lot.state;
  }
  const double refund_total = state.outstanding;
  const double envelope_base = c0_inverse(cf, h0 + c0(cf, 0.0));
  if (tree == WorstCaseTree::ChainPerContributor)
    return {refund_total + d * per_step_bonus, envelope_base + n * d * sigma};
  return {refund_total + d * rbf_eval(curve, refund_total), envelope_base + d * sigma};
}

}  // namespace reppm
