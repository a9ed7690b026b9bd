#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reppm/domain.hpp"
#include "reppm/mechanisms.hpp"

namespace reppm {

/// Small discretized instance for exhaustive verification. The contribution
/// grid must divide the provision point exactly so funding is decided in
/// integer steps.
struct GridGame {
  MechanismSpec mechanism;
  std::vector<AgentProfile> agents;  // at most 6
  double contribution_step = 0.1;
  double time_step = 0.0;        // extra timing deviations for sequential checks
  bool referral_choices = true;  // deviations may flip refer-all / refer-none
  std::uint64_t max_profiles = 5'000'000;

  void validate() const;
  int steps() const;  // provision_point / contribution_step
};

/// Profiles find_psne would enumerate; checked against max_profiles before
/// any enumeration starts.
std::uint64_t psne_profile_count(const GridGame& game);

struct GridProfile {
  std::vector<double> contributions;  // by game agent order
  std::vector<bool> refer_all;
};

/// Exhaustive pure-strategy Nash search for simultaneous kinds (PPB, PPR,
/// REPP-R): every grid profile where no unilateral grid deviation, over
/// contributions and referral choices, improves the deviator's utility by
/// more than 1e-9. Refuses oversized instances with a size report.
std::vector<GridProfile> find_psne(const GridGame& game);

struct OracleDeviation {
  AgentId agent = 0;
  double contribution = 0.0;
  double time = 0.0;
  bool refer_all = false;
  double utility_gain = 0.0;   // simultaneous checks
  double gain_funded = 0.0;    // sequential branch deltas
  double gain_unfunded = 0.0;
  std::string note;
};

struct OracleVerdict {
  bool holds = false;
  std::optional<OracleDeviation> counterexample;
  std::string detail;
};

/// Point check of one profile (which may sit off the grid) against all grid
/// deviations, for simultaneous kinds.
OracleVerdict check_psne(const GridGame& game, const EquilibriumProfile& profile);

/// Sequential verification for PPS / REPP-S under the aggregate-history
/// reading: a history is summarized by the remaining target and the
/// outstanding securities, agents act in the profile's (time, id) order, and
/// later agents replay their prescribed contributions clamped by
/// feasibility. Contributors cannot condition on whether the target will be
/// met, so an action is judged by its outcome pair (funded-branch utility,
/// unfunded-branch utility). The profile holds iff at every agent's history
/// (a) the funded branch at the prescription covers its own unfunded branch,
/// and (b) no grid deviation in contribution, timing or referral weakly
/// improves both branches while strictly improving one.
OracleVerdict check_sgpe(const GridGame& game, const EquilibriumProfile& profile);

/// Finite-difference sweep of the unfunded utility in the own contribution,
/// holding the rest of the pool at a fixed prior mass. One sample per
/// (mass, grid point) pair.
struct MonotonicityReport {
  double min_slope = 0.0;
  double max_slope = 0.0;
  double marginal_at_qmax = 0.0;  // market kinds: d(securities)/d(currency) at q_max
  bool non_incentivizing = false; // the unfunded utility ignores the contribution
  int samples = 0;
};

MonotonicityReport check_monotonicity(const MechanismSpec& spec,
                                      std::span<const double> other_masses,
                                      double x_step, int n = 1, int d = 1);

}  // namespace reppm
