#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "reppm/domain.hpp"
#include "reppm/mechanisms.hpp"
#include "reppm/oracle.hpp"
#include "reppm/simulation.hpp"

namespace reppm {

using json = nlohmann::json;

/// Raised for malformed configuration documents; messages carry the JSON
/// path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejects non-objects, missing required keys and unknown keys.
void require_keys(const json& j, const std::string& context,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {});

json to_json(const SocialNetwork& network);
SocialNetwork network_from_json(const json& j, const std::string& context = "network");

json to_json(const MechanismSpec& spec);
MechanismSpec mechanism_from_json(const json& j, const std::string& context = "mechanism");

json to_json(const Strategy& strategy);
Strategy strategy_from_json(const json& j, const std::string& context);

json to_json(const StrategyAssignment& strategies);
StrategyAssignment strategies_from_json(const json& j, const std::string& context);

json to_json(const RunConfig& config);
RunConfig run_config_from_json(const json& j, const std::string& context = "config");

json to_json(const SettlementReport& report);
SettlementReport settlement_from_json(const json& j, const std::string& context);

json to_json(const RunTrace& trace, const RunConfig& config, const std::string& name,
             int replicate);

json to_json(const EquilibriumProfile& profile);
EquilibriumProfile profile_from_json(const json& j, const std::string& context);

json to_json(const GridGame& game);
GridGame grid_game_from_json(const json& j, const std::string& context = "game");

json to_json(const OracleVerdict& verdict);
json to_json(const GridProfile& profile);

}  // namespace reppm
