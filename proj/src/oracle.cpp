#include "reppm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace reppm {

namespace {

constexpr double kImprovementTol = 1e-9;
constexpr double kNoiseTol = 1e-12;

void validate_agents(const GridGame& game) {
  if (game.agents.empty() || game.agents.size() > 6)
    throw std::invalid_argument("oracle: grid games take 1..6 agents");
  std::set<AgentId> seen;
  for (const AgentProfile& a : game.agents) {
    if (a.id == kSponsorId)
      throw std::invalid_argument("oracle: agent id 0 is reserved for the sponsor");
    if (!seen.insert(a.id).second)
      throw std::invalid_argument("oracle: duplicate agent id");
    if (a.theta < 0.0) throw std::invalid_argument("oracle: negative theta");
  }
}

}  // namespace

void GridGame::validate() const {
  mechanism.validate();
  validate_agents(*this);
  if (!(contribution_step > 0.0))
    throw std::invalid_argument("oracle: contribution step must be positive");
  const double ratio = mechanism.project.provision_point / contribution_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw std::invalid_argument(
        "oracle: contribution step must divide the provision point exactly");
  if (time_step < 0.0) throw std::invalid_argument("oracle: negative time step");
}

int GridGame::steps() const {
  return static_cast<int>(
      std::llround(mechanism.project.provision_point / contribution_step));
}

std::uint64_t psne_profile_count(const GridGame& game) {
  game.validate();
  const std::uint64_t actions = static_cast<std::uint64_t>(game.steps()) + 1;
  const bool referral_dim =
      game.referral_choices && has_referral_bonus(game.mechanism.kind);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < game.agents.size(); ++i) {
    count *= actions;
    if (referral_dim) count *= 2;
  }
  return count;
}

namespace {

/// Pre-built simultaneous event list (all events at t = 0, id order) plus its
/// forest, one per referral-choice combination.
struct ComboContext {
  std::vector<ContributionEvent> events;
  ReferralForest forest;
};

std::vector<ComboContext> build_combos(const GridGame& game, bool referral_dim) {
  std::vector<const AgentProfile*> by_id;
  for (const AgentProfile& a : game.agents) by_id.push_back(&a);
  std::sort(by_id.begin(), by_id.end(),
            [](const AgentProfile* a, const AgentProfile* b) { return a->id < b->id; });

  const std::size_t n = game.agents.size();
  const std::size_t combos = referral_dim ? (std::size_t{1} << n) : 1;
  std::vector<ComboContext> out(combos);
  for (std::size_t mask = 0; mask < combos; ++mask) {
    ComboContext& ctx = out[mask];
    for (const AgentProfile* a : by_id) {
      // Combo bits are indexed by the game's agent order.
      std::size_t pos = 0;
      while (game.agents[pos].id != a->id) ++pos;
      const bool refer = referral_dim && (mask >> pos & 1);
      ctx.events.push_back(
          {a->id, 0.0, 0.0, refer ? a->neighbors : std::vector<AgentId>{}});
    }
    ctx.forest = build_referral_forest(ctx.events);
  }
  return out;
}

struct AgentSlot {
  std::size_t event_index;  // position of the agent's event in a combo context
};

std::vector<AgentSlot> build_slots(const GridGame& game,
                                   const ComboContext& reference) {
  std::vector<AgentSlot> slots(game.agents.size());
  for (std::size_t i = 0; i < game.agents.size(); ++i) {
    for (std::size_t e = 0; e < reference.events.size(); ++e)
      if (reference.events[e].agent == game.agents[i].id) slots[i].event_index = e;
  }
  return slots;
}

}  // namespace

std::vector<GridProfile> find_psne(const GridGame& game) {
  game.validate();
  if (is_sequential(game.mechanism.kind))
    throw std::invalid_argument("oracle: find_psne handles simultaneous kinds only");

  const std::uint64_t count = psne_profile_count(game);
  if (count > game.max_profiles)
    throw std::runtime_error("oracle: refusing enumeration of " + std::to_string(count) +
                             " profiles (cap " + std::to_string(game.max_profiles) + ")");

  const std::size_t n = game.agents.size();
  const int K = game.steps();
  const double step = game.contribution_step;
  const bool referral_dim =
      game.referral_choices && has_referral_bonus(game.mechanism.kind);
  std::vector<ComboContext> combos = build_combos(game, referral_dim);
  const std::vector<AgentSlot> slots = build_slots(game, combos.front());

  auto agent_utility = [&](ComboContext& ctx, std::span<const int> levels,
                           std::size_t agent_pos, bool funded) {
    for (std::size_t j = 0; j < n; ++j)
      ctx.events[slots[j].event_index].amount = levels[j] * step;
    return utility(game.mechanism, game.agents, ctx.events, ctx.forest,
                   game.agents[agent_pos].id, funded);
  };

  std::vector<GridProfile> found;
  std::vector<int> levels(n, 0);
  std::vector<int> scratch(n, 0);

  for (std::size_t mask = 0; mask < combos.size(); ++mask) {
    std::fill(levels.begin(), levels.end(), 0);
    while (true) {
      int total = 0;
      for (int k : levels) total += k;
      const bool funded = total >= K;

      bool is_psne = true;
      for (std::size_t i = 0; i < n && is_psne; ++i) {
        const double base =
            agent_utility(combos[mask], levels, i, funded);
        scratch = levels;
        for (std::size_t alt_mask : referral_dim
                                        ? std::vector<std::size_t>{mask, mask ^ (1u << i)}
                                        : std::vector<std::size_t>{mask}) {
          for (int k = 0; k <= K && is_psne; ++k) {
            if (alt_mask == mask && k == levels[i]) continue;
            scratch[i] = k;
            const bool dev_funded = total - levels[i] + k >= K;
            const double dev =
                agent_utility(combos[alt_mask], scratch, i, dev_funded);
            if (dev > base + kImprovementTol) is_psne = false;
          }
          scratch[i] = levels[i];
        }
      }

      if (is_psne) {
        GridProfile profile;
        for (std::size_t i = 0; i < n; ++i) {
          profile.contributions.push_back(levels[i] * step);
          profile.refer_all.push_back(referral_dim && (mask >> i & 1));
        }
        found.push_back(std::move(profile));
      }

      std::size_t pos = 0;  // odometer over contribution levels
      while (pos < n && ++levels[pos] > K) levels[pos++] = 0;
      if (pos == n) break;
    }
  }
  return found;
}

namespace {

std::vector<ContributionEvent> profile_events(const GridGame& game,
                                              const EquilibriumProfile& profile,
                                              bool simultaneous) {
  std::vector<ContributionEvent> events;
  for (const AgentProfile& a : game.agents) {
    auto xit = profile.contributions.find(a.id);
    if (xit == profile.contributions.end())
      throw std::invalid_argument("oracle: profile misses agent " + std::to_string(a.id));
    ContributionEvent ev;
    ev.agent = a.id;
    ev.amount = xit->second;
    ev.time = simultaneous ? 0.0 : profile.times.at(a.id);
    auto rit = profile.referrals.find(a.id);
    ev.referred = rit == profile.referrals.end() ? std::vector<AgentId>{} : rit->second;
    events.push_back(std::move(ev));
  }
  std::sort(events.begin(), events.end(),
            [](const ContributionEvent& a, const ContributionEvent& b) {
              return std::tie(a.time, a.agent) < std::tie(b.time, b.agent);
            });
  return events;
}

double total_amount(std::span<const ContributionEvent> events) {
  double chi = 0.0;
  for (const ContributionEvent& ev : events) chi += ev.amount;
  return chi;
}

}  // namespace

OracleVerdict check_psne(const GridGame& game, const EquilibriumProfile& profile) {
  game.validate();
  if (is_sequential(game.mechanism.kind))
    throw std::invalid_argument("oracle: check_psne handles simultaneous kinds only");

  const double h0 = game.mechanism.project.provision_point;
  const int K = game.steps();
  const double step = game.contribution_step;
  const bool referral_dim =
      game.referral_choices && has_referral_bonus(game.mechanism.kind);

  std::vector<ContributionEvent> base_events = profile_events(game, profile, true);
  const ReferralForest base_forest = build_referral_forest(base_events);
  const bool base_funded = total_amount(base_events) >= h0 - 1e-9;

  for (std::size_t i = 0; i < game.agents.size(); ++i) {
    const AgentId id = game.agents[i].id;
    const double base_u =
        utility(game.mechanism, game.agents, base_events, base_forest, id, base_funded);
    std::size_t self_index = 0;
    for (std::size_t e = 0; e < base_events.size(); ++e)
      if (base_events[e].agent == id) self_index = e;
    const double base_x = base_events[self_index].amount;
    const double others = total_amount(base_events) - base_x;

    std::vector<std::vector<AgentId>> referral_options{base_events[self_index].referred};
    if (referral_dim) {
      const std::vector<AgentId>& all = game.agents[i].neighbors;
      if (base_events[self_index].referred != all) referral_options.push_back(all);
      if (!base_events[self_index].referred.empty()) referral_options.push_back({});
    }

    for (const std::vector<AgentId>& referred : referral_options) {
      std::vector<ContributionEvent> events = base_events;
      events[self_index].referred = referred;
      const ReferralForest forest = build_referral_forest(events);
      for (int k = 0; k <= K; ++k) {
        const double x = k * step;
        if (referred == base_events[self_index].referred && x == base_x) continue;
        events[self_index].amount = x;
        const bool funded = others + x >= h0 - 1e-9;
        const double dev =
            utility(game.mechanism, game.agents, events, forest, id, funded);
        if (dev > base_u + kImprovementTol) {
          OracleVerdict verdict;
          verdict.holds = false;
          verdict.counterexample = OracleDeviation{
              id, x, 0.0, referred == game.agents[i].neighbors && !referred.empty(),
              dev - base_u, 0.0, 0.0,
              "unilateral deviation improves utility"};
          verdict.detail = "agent " + std::to_string(id) + " gains " +
                           std::to_string(dev - base_u) + " by contributing " +
                           std::to_string(x);
          return verdict;
        }
      }
    }
  }
  return {true, std::nullopt, "no improving grid deviation"};
}

namespace {

struct SequentialAction {
  AgentId id = 0;
  double amount = 0.0;
  double time = 0.0;
  std::vector<AgentId> referred;
};

struct RolloutResult {
  std::vector<ContributionEvent> events;
  ReferralForest forest;
};

/// Plays the actions in (time, id) order, clamping every contribution by the
/// remaining target.
RolloutResult rollout(const GridGame& game, std::vector<SequentialAction> actions) {
  std::sort(actions.begin(), actions.end(),
            [](const SequentialAction& a, const SequentialAction& b) {
              return std::tie(a.time, a.id) < std::tie(b.time, b.id);
            });
  double remaining = game.mechanism.project.provision_point;
  RolloutResult result;
  for (SequentialAction& act : actions) {
    const double eff = std::min(act.amount, remaining);
    remaining -= eff;
    result.events.push_back({act.id, eff, act.time, std::move(act.referred)});
  }
  result.forest = build_referral_forest(result.events);
  return result;
}

struct BranchPair {
  double funded = 0.0;
  double unfunded = 0.0;
};

BranchPair branch_utilities(const GridGame& game, const RolloutResult& r, AgentId id) {
  return {utility(game.mechanism, game.agents, r.events, r.forest, id, true),
          utility(game.mechanism, game.agents, r.events, r.forest, id, false)};
}

}  // namespace

OracleVerdict check_sgpe(const GridGame& game, const EquilibriumProfile& profile) {
  game.validate();
  if (!is_sequential(game.mechanism.kind))
    throw std::invalid_argument("oracle: check_sgpe handles sequential kinds only");

  const double deadline = game.mechanism.project.deadline;
  const int K = game.steps();
  const double step = game.contribution_step;
  const bool referral_dim =
      game.referral_choices && has_referral_bonus(game.mechanism.kind);

  std::vector<SequentialAction> prescribed;
  for (const AgentProfile& a : game.agents) {
    auto xit = profile.contributions.find(a.id);
    auto tit = profile.times.find(a.id);
    if (xit == profile.contributions.end() || tit == profile.times.end())
      throw std::invalid_argument("oracle: profile misses agent " + std::to_string(a.id));
    if (tit->second < a.arrival - 1e-12 || tit->second > deadline + 1e-12)
      throw std::invalid_argument("oracle: prescribed time outside [arrival, deadline]");
    SequentialAction act;
    act.id = a.id;
    act.amount = xit->second;
    act.time = tit->second;
    auto rit = profile.referrals.find(a.id);
    if (rit != profile.referrals.end()) act.referred = rit->second;
    prescribed.push_back(std::move(act));
  }

  const RolloutResult base = rollout(game, prescribed);

  // Deviation budget, mirroring the enumeration cap of find_psne.
  std::uint64_t deviations = 0;

  for (std::size_t i = 0; i < game.agents.size(); ++i) {
    const AgentProfile& agent = game.agents[i];
    const BranchPair at_prescription = branch_utilities(game, base, agent.id);

    if (at_prescription.unfunded > at_prescription.funded + kImprovementTol) {
      OracleVerdict verdict;
      verdict.holds = false;
      OracleDeviation dev;
      dev.agent = agent.id;
      dev.contribution = prescribed[i].amount;
      dev.time = prescribed[i].time;
      dev.gain_unfunded = at_prescription.unfunded - at_prescription.funded;
      dev.note = "unfunded branch exceeds the funded branch at the prescription";
      verdict.counterexample = dev;
      verdict.detail = "agent " + std::to_string(agent.id) +
                       ": prescribed contribution is above the indifference cap";
      return verdict;
    }

    std::vector<double> times{agent.arrival, deadline, prescribed[i].time};
    if (game.time_step > 0.0)
      for (double t = agent.arrival; t < deadline; t += game.time_step)
        times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<std::vector<AgentId>> referral_options{prescribed[i].referred};
    if (referral_dim) {
      if (prescribed[i].referred != agent.neighbors)
        referral_options.push_back(agent.neighbors);
      if (!prescribed[i].referred.empty()) referral_options.push_back({});
    }

    for (double t : times) {
      for (const std::vector<AgentId>& referred : referral_options) {
        for (int k = 0; k <= K; ++k) {
          const double x = k * step;
          if (x == prescribed[i].amount && t == prescribed[i].time &&
              referred == prescribed[i].referred)
            continue;
          if (++deviations > game.max_profiles)
            throw std::runtime_error("oracle: refusing deviation scan beyond " +
                                     std::to_string(game.max_profiles));
          std::vector<SequentialAction> actions = prescribed;
          actions[i].amount = x;
          actions[i].time = t;
          actions[i].referred = referred;
          const RolloutResult r = rollout(game, std::move(actions));
          const BranchPair dev = branch_utilities(game, r, agent.id);

          const bool weakly_better = dev.funded >= at_prescription.funded - kNoiseTol &&
                                     dev.unfunded >= at_prescription.unfunded - kNoiseTol;
          const bool strictly_better =
              dev.funded > at_prescription.funded + kImprovementTol ||
              dev.unfunded > at_prescription.unfunded + kImprovementTol;
          if (weakly_better && strictly_better) {
            OracleVerdict verdict;
            verdict.holds = false;
            OracleDeviation out;
            out.agent = agent.id;
            out.contribution = x;
            out.time = t;
            out.refer_all = referred == agent.neighbors && !referred.empty();
            out.gain_funded = dev.funded - at_prescription.funded;
            out.gain_unfunded = dev.unfunded - at_prescription.unfunded;
            out.note = t < prescribed[i].time
                           ? "earlier contribution yields more securities"
                           : "deviation dominates the prescription";
            verdict.counterexample = out;
            verdict.detail = "agent " + std::to_string(agent.id) +
                             " improves (funded " + std::to_string(out.gain_funded) +
                             ", unfunded " + std::to_string(out.gain_unfunded) + ")";
            return verdict;
          }
        }
      }
    }
  }
  return {true, std::nullopt, "no dominating grid deviation at any history"};
}

MonotonicityReport check_monotonicity(const MechanismSpec& spec,
                                      std::span<const double> other_masses,
                                      double x_step, int n, int d) {
  spec.validate();
  if (!(x_step > 0.0)) throw std::invalid_argument("oracle: x step must be positive");
  const double h0 = spec.project.provision_point;

  MonotonicityReport report;
  report.min_slope = std::numeric_limits<double>::infinity();
  report.max_slope = -std::numeric_limits<double>::infinity();
  report.non_incentivizing = spec.kind == MechanismKind::PPB;

  const std::vector<AgentProfile> agents{{1, 1.0, 0.0, {}}, {2, 1.0, 0.0, {}}};

  for (double mass : other_masses) {
    if (mass < 0.0 || mass >= h0)
      throw std::invalid_argument("oracle: prior mass must lie in [0, provision point)");
    std::vector<ContributionEvent> events;
    if (mass > 0.0) events.push_back({2, mass, 0.0, {}});
    events.push_back({1, 0.0, 1.0, {}});
    const ReferralForest forest = build_referral_forest(events);
    ContributionEvent& own = events.back();

    auto unfunded_at = [&](double x) {
      own.amount = x;
      return utility(spec, agents, events, forest, 1, false);
    };

    for (double x = x_step; x + x_step < h0 - mass; x += x_step) {
      const double lo = unfunded_at(x - x_step);
      const double hi = unfunded_at(x + x_step);
      const double slope = (hi - lo) / (2.0 * x_step);
      report.min_slope = std::min(report.min_slope, slope);
      report.max_slope = std::max(report.max_slope, slope);
      ++report.samples;
    }
  }

  if (is_market_mechanism(spec.kind)) {
    double q_max = c0_inverse(spec.market(), h0 + c0(spec.market(), 0.0));
    if (has_referral_bonus(spec.kind)) q_max += n * d * spec.bonus_curve().cap;
    report.marginal_at_qmax = marginal_securities_per_unit(spec.market(), q_max);
  }
  return report;
}

}  // namespace reppm
