#include "reppm/serialization.hpp"

#include <algorithm>
#include <set>

namespace reppm {

void require_keys(const json& j, const std::string& context,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const char* key : required)
    if (!j.contains(key))
      throw ConfigError(context + ": missing field '" + key + "'");
  for (const auto& [key, value] : j.items()) {
    const bool known =
        std::any_of(required.begin(), required.end(),
                    [&](const char* k) { return key == k; }) ||
        std::any_of(optional.begin(), optional.end(),
                    [&](const char* k) { return key == k; });
    if (!known) throw ConfigError(context + ": unknown field '" + key + "'");
  }
}

namespace {

double number_at(const json& j, const char* key, const std::string& context) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(context + "." + key + ": expected a number");
  return v.get<double>();
}

int integer_at(const json& j, const char* key, const std::string& context) {
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw ConfigError(context + "." + key + ": expected an integer");
  return v.get<int>();
}

AgentProfile agent_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"id", "theta", "arrival", "neighbors"});
  AgentProfile a;
  a.id = integer_at(j, "id", context);
  a.theta = number_at(j, "theta", context);
  a.arrival = number_at(j, "arrival", context);
  if (!j.at("neighbors").is_array())
    throw ConfigError(context + ".neighbors: expected an array");
  for (const json& nb : j.at("neighbors")) a.neighbors.push_back(nb.get<AgentId>());
  return a;
}

json agent_to_json(const AgentProfile& a) {
  return json{{"id", a.id},
              {"theta", a.theta},
              {"arrival", a.arrival},
              {"neighbors", a.neighbors}};
}

}  // namespace

json to_json(const SocialNetwork& network) {
  json agents = json::array();
  for (const AgentProfile& a : network.agents()) agents.push_back(agent_to_json(a));
  json edges = json::array();
  for (const auto& [u, v] : network.edges()) edges.push_back(json::array({u, v}));
  return json{{"agents", agents}, {"edges", edges}};
}

SocialNetwork network_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"agents"}, {"edges"});
  std::vector<AgentProfile> agents;
  std::size_t i = 0;
  for (const json& a : j.at("agents"))
    agents.push_back(agent_from_json(a, context + ".agents[" + std::to_string(i++) + "]"));
  SocialNetwork network;
  try {
    network = SocialNetwork(std::move(agents));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(context + ": " + e.what());
  }
  if (j.contains("edges")) {
    std::set<std::pair<AgentId, AgentId>> declared;
    for (const json& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ConfigError(context + ".edges: expected [u, v] pairs");
      AgentId u = e[0].get<AgentId>();
      AgentId v = e[1].get<AgentId>();
      if (u > v) std::swap(u, v);
      declared.emplace(u, v);
    }
    const auto actual = network.edges();
    if (declared != std::set<std::pair<AgentId, AgentId>>(actual.begin(), actual.end()))
      throw ConfigError(context + ": edges do not match the agents' neighbor sets");
  }
  return network;
}

namespace {

MechanismKind kind_from_string(const std::string& s, const std::string& context) {
  if (s == "PPB") return MechanismKind::PPB;
  if (s == "PPR") return MechanismKind::PPR;
  if (s == "PPS") return MechanismKind::PPS;
  if (s == "REPP_R") return MechanismKind::REPP_R;
  if (s == "REPP_S") return MechanismKind::REPP_S;
  throw ConfigError(context + ".kind: unknown mechanism '" + s + "'");
}

RbfFamily rbf_family_from_string(const std::string& s, const std::string& context) {
  if (s == "tanh") return RbfFamily::Tanh;
  if (s == "logistic_shifted") return RbfFamily::LogisticShifted;
  if (s == "arctan_scaled") return RbfFamily::ArctanScaled;
  throw ConfigError(context + ".family: unknown RBF family '" + s + "'");
}

}  // namespace

json to_json(const MechanismSpec& spec) {
  json j{{"kind", to_string(spec.kind)},
         {"h0", spec.project.provision_point},
         {"T", spec.project.deadline}};
  if (spec.refund_budget) j["B"] = *spec.refund_budget;
  if (spec.cost_function)
    j["market"] = json{{"family", to_string(spec.cost_function->family)},
                       {"b", spec.cost_function->liquidity}};
  if (spec.rbf)
    j["rbf"] = json{{"family", to_string(spec.rbf->family)},
                    {"cap", spec.rbf->cap},
                    {"scale", spec.rbf->scale}};
  return j;
}

MechanismSpec mechanism_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"kind", "h0", "T"}, {"B", "market", "rbf"});
  MechanismSpec spec;
  spec.kind = kind_from_string(j.at("kind").get<std::string>(), context);
  spec.project.provision_point = number_at(j, "h0", context);
  spec.project.deadline = number_at(j, "T", context);
  if (j.contains("B")) spec.refund_budget = number_at(j, "B", context);
  if (j.contains("market")) {
    const std::string sub = context + ".market";
    require_keys(j.at("market"), sub, {"family", "b"});
    const std::string family = j.at("market").at("family").get<std::string>();
    if (family != "lmsr") throw ConfigError(sub + ".family: unknown family '" + family + "'");
    spec.cost_function = CostFunction{CostFamily::Lmsr, number_at(j.at("market"), "b", sub)};
  }
  if (j.contains("rbf")) {
    const std::string sub = context + ".rbf";
    require_keys(j.at("rbf"), sub, {"family", "cap", "scale"});
    RbfSpec rbf;
    rbf.family = rbf_family_from_string(j.at("rbf").at("family").get<std::string>(), sub);
    rbf.cap = number_at(j.at("rbf"), "cap", sub);
    rbf.scale = number_at(j.at("rbf"), "scale", sub);
    spec.rbf = rbf;
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return spec;
}

namespace {

StrategyKind strategy_kind_from_string(const std::string& s, const std::string& context) {
  if (s == "equilibrium") return StrategyKind::Equilibrium;
  if (s == "free_rider") return StrategyKind::FreeRider;
  if (s == "no_referral_equilibrium") return StrategyKind::NoReferralEquilibrium;
  if (s == "delayed") return StrategyKind::Delayed;
  if (s == "overcontributor") return StrategyKind::Overcontributor;
  if (s == "custom") return StrategyKind::Custom;
  throw ConfigError(context + ": unknown strategy '" + s + "'");
}

}  // namespace

json to_json(const Strategy& strategy) {
  if (strategy.kind == StrategyKind::Custom)
    return json{{"label", "custom"}, {"amount", strategy.custom_amount}};
  return json(to_string(strategy.kind));
}

Strategy strategy_from_json(const json& j, const std::string& context) {
  Strategy st;
  if (j.is_string()) {
    st.kind = strategy_kind_from_string(j.get<std::string>(), context);
    if (st.kind == StrategyKind::Custom)
      throw ConfigError(context + ": custom strategies need an 'amount'");
    return st;
  }
  require_keys(j, context, {"label"}, {"amount"});
  st.kind = strategy_kind_from_string(j.at("label").get<std::string>(), context);
  if (st.kind == StrategyKind::Custom) {
    if (!j.contains("amount")) throw ConfigError(context + ": custom strategies need an 'amount'");
    st.custom_amount = number_at(j, "amount", context);
  } else if (j.contains("amount")) {
    throw ConfigError(context + ": 'amount' is only valid for custom strategies");
  }
  return st;
}

json to_json(const StrategyAssignment& strategies) {
  json per = json::object();
  for (const auto& [id, st] : strategies.per_agent)
    per[std::to_string(id)] = to_json(st);
  json j{{"default", to_json(strategies.fallback)}};
  if (!per.empty()) j["per_agent"] = per;
  return j;
}

StrategyAssignment strategies_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"default"}, {"per_agent"});
  StrategyAssignment out;
  out.fallback = strategy_from_json(j.at("default"), context + ".default");
  if (j.contains("per_agent")) {
    if (!j.at("per_agent").is_object())
      throw ConfigError(context + ".per_agent: expected an object keyed by agent id");
    for (const auto& [key, value] : j.at("per_agent").items()) {
      AgentId id = 0;
      try {
        id = std::stoi(key);
      } catch (const std::exception&) {
        throw ConfigError(context + ".per_agent: bad agent id '" + key + "'");
      }
      out.per_agent[id] = strategy_from_json(value, context + ".per_agent." + key);
    }
  }
  return out;
}

json to_json(const RunConfig& config) {
  return json{{"mechanism", to_json(config.mechanism)},
              {"network", to_json(config.network)},
              {"initial_aware", config.initial_aware},
              {"strategies", to_json(config.strategies)},
              {"seed", config.seed},
              {"time_grid", config.time_grid}};
}

RunConfig run_config_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"mechanism", "network", "initial_aware", "strategies"},
               {"seed", "time_grid"});
  RunConfig config;
  config.mechanism = mechanism_from_json(j.at("mechanism"), context + ".mechanism");
  config.network = network_from_json(j.at("network"), context + ".network");
  if (!j.at("initial_aware").is_array())
    throw ConfigError(context + ".initial_aware: expected an array of agent ids");
  for (const json& id : j.at("initial_aware"))
    config.initial_aware.push_back(id.get<AgentId>());
  config.strategies = strategies_from_json(j.at("strategies"), context + ".strategies");
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("time_grid")) config.time_grid = number_at(j, "time_grid", context);
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return config;
}

json to_json(const SettlementReport& report) {
  json agents = json::object();
  for (const auto& [id, s] : report.agents)
    agents[std::to_string(id)] = json{{"collected", s.collected},
                                      {"refunded", s.refunded},
                                      {"refund_bonus", s.refund_bonus},
                                      {"referral_bonus", s.referral_bonus},
                                      {"securities_refund", s.securities_refund},
                                      {"securities_referral", s.securities_referral},
                                      {"utility", s.utility}};
  return json{{"funded", report.funded},
              {"chi", report.total_contributed},
              {"agents", agents}};
}

SettlementReport settlement_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"funded", "chi", "agents"});
  SettlementReport report;
  report.funded = j.at("funded").get<bool>();
  report.total_contributed = number_at(j, "chi", context);
  for (const auto& [key, value] : j.at("agents").items()) {
    const std::string sub = context + ".agents." + key;
    require_keys(value, sub,
                 {"collected", "refunded", "refund_bonus", "referral_bonus",
                  "securities_refund", "securities_referral", "utility"});
    AgentSettlement s;
    s.collected = number_at(value, "collected", sub);
    s.refunded = number_at(value, "refunded", sub);
    s.refund_bonus = number_at(value, "refund_bonus", sub);
    s.referral_bonus = number_at(value, "referral_bonus", sub);
    s.securities_refund = number_at(value, "securities_refund", sub);
    s.securities_referral = number_at(value, "securities_referral", sub);
    s.utility = number_at(value, "utility", sub);
    report.agents[std::stoi(key)] = s;
  }
  return report;
}

json to_json(const RunTrace& trace, const RunConfig& config, const std::string& name,
             int replicate) {
  json events = json::array();
  for (const TraceStep& step : trace.steps)
    events.push_back(json{{"agent", step.event.agent},
                          {"amount", step.event.amount},
                          {"time", step.event.time},
                          {"referred", step.event.referred},
                          {"h_before", step.h_before},
                          {"h_after", step.h_after},
                          {"q_before", step.q_before},
                          {"q_after", step.q_after}});
  json awareness = json::object();
  for (const auto& [id, t] : trace.awareness) awareness[std::to_string(id)] = t;
  return json{{"name", name},
              {"replicate", replicate},
              {"config", to_json(config)},
              {"events", events},
              {"awareness", awareness},
              {"settlement", to_json(trace.settlement)}};
}

json to_json(const EquilibriumProfile& profile) {
  json contributions = json::object();
  json times = json::object();
  json referrals = json::object();
  for (const auto& [id, x] : profile.contributions)
    contributions[std::to_string(id)] = x;
  for (const auto& [id, t] : profile.times) times[std::to_string(id)] = t;
  for (const auto& [id, refs] : profile.referrals)
    referrals[std::to_string(id)] = refs;
  return json{{"contributions", contributions}, {"times", times}, {"referrals", referrals}};
}

EquilibriumProfile profile_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"contributions"}, {"times", "referrals"});
  EquilibriumProfile profile;
  for (const auto& [key, value] : j.at("contributions").items())
    profile.contributions[std::stoi(key)] = value.get<double>();
  if (j.contains("times"))
    for (const auto& [key, value] : j.at("times").items())
      profile.times[std::stoi(key)] = value.get<double>();
  if (j.contains("referrals"))
    for (const auto& [key, value] : j.at("referrals").items())
      profile.referrals[std::stoi(key)] = value.get<std::vector<AgentId>>();
  return profile;
}

json to_json(const GridGame& game) {
  json agents = json::array();
  for (const AgentProfile& a : game.agents) agents.push_back(agent_to_json(a));
  return json{{"mechanism", to_json(game.mechanism)},
              {"agents", agents},
              {"contribution_step", game.contribution_step},
              {"time_step", game.time_step},
              {"referral_choices", game.referral_choices},
              {"max_profiles", game.max_profiles}};
}

GridGame grid_game_from_json(const json& j, const std::string& context) {
  require_keys(j, context, {"mechanism", "agents", "contribution_step"},
               {"time_step", "referral_choices", "max_profiles"});
  GridGame game;
  game.mechanism = mechanism_from_json(j.at("mechanism"), context + ".mechanism");
  std::size_t i = 0;
  for (const json& a : j.at("agents"))
    game.agents.push_back(
        agent_from_json(a, context + ".agents[" + std::to_string(i++) + "]"));
  game.contribution_step = number_at(j, "contribution_step", context);
  if (j.contains("time_step")) game.time_step = number_at(j, "time_step", context);
  if (j.contains("referral_choices"))
    game.referral_choices = j.at("referral_choices").get<bool>();
  if (j.contains("max_profiles"))
    game.max_profiles = j.at("max_profiles").get<std::uint64_t>();
  try {
    game.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return game;
}

json to_json(const GridProfile& profile) {
  return json{{"contributions", profile.contributions}, {"refer_all", profile.refer_all}};
}

json to_json(const OracleVerdict& verdict) {
  json j{{"holds", verdict.holds}, {"detail", verdict.detail}};
  if (verdict.counterexample) {
    const OracleDeviation& dev = *verdict.counterexample;
    j["counterexample"] = json{{"agent", dev.agent},
                               {"contribution", dev.contribution},
                               {"time", dev.time},
                               {"refer_all", dev.refer_all},
                               {"utility_gain", dev.utility_gain},
                               {"gain_funded", dev.gain_funded},
                               {"gain_unfunded", dev.gain_unfunded},
                               {"note", dev.note}};
  }
  return j;
}

}  // namespace reppm
