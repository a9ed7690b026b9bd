#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reppm/serialization.hpp"

namespace reppm {

/// One named simulation block of an experiment file.
struct RunBlock {
  std::string name;
  RunConfig config;
  int replicates = 1;
};

enum class GridCheck { FindPsne, CheckPsne, CheckSgpe };

/// What a verification block asserts about its profile: the check must hold,
/// the check must fail (counterexample found or construction infeasible), or
/// no canonical profile may exist at all.
enum class Expectation { Holds, Fails, None };

struct GridBlock {
  std::string name;
  GridGame game;
  GridCheck check = GridCheck::CheckPsne;
  Expectation expect = Expectation::Holds;
  std::optional<EquilibriumProfile> explicit_profile;  // default: canonical
  std::optional<bool> expect_nonempty;                 // FindPsne only
};

struct BoundsBlock {
  std::string name;
  MechanismSpec mechanism;
  SocialNetwork network;
};

struct ExperimentFile {
  int version = 1;
  std::vector<RunBlock> runs;
  std::vector<GridBlock> games;
  std::vector<BoundsBlock> bounds;
  std::optional<std::filesystem::path> output_dir;
};

/// Strict loader: unknown fields and version mismatches are rejected; parse
/// errors carry line:column positions.
ExperimentFile load_experiment(const std::filesystem::path& path);
ExperimentFile experiment_from_json(const json& j);

/// Runs every simulation block, writing trace_<name>_<rep>.json files and a
/// summary.csv. Returns 0, or 2 on configuration errors.
int cmd_simulate(const std::filesystem::path& path,
                 std::optional<std::uint64_t> seed_override,
                 std::optional<int> replicates_override,
                 std::optional<std::filesystem::path> out_override, bool quiet,
                 std::ostream& out);

/// Runs every verification block, writing verdict_<name>.json files. Returns
/// 0 when all expectations are met, 1 otherwise.
int cmd_verify_equilibrium(const std::filesystem::path& path,
                           std::optional<std::filesystem::path> out_override, bool quiet,
                           std::ostream& out);

/// Prints thresholds, cap bounds and worst-case payouts for every bounds
/// block.
int cmd_bounds(const std::filesystem::path& path, std::ostream& out);
std::string render_bounds(const BoundsBlock& block);

/// Parameters for the six-row mechanism comparison report.
struct Table1Params {
  double theta = 3.0;      // homogeneous private value
  double sigma = 0.4;      // referral bonus cap
  double h0 = 4.0;
  double budget = 1.0;     // B
  double liquidity = 1.0;  // b
  double q0 = 0.0;         // outstanding securities on arrival
  int n = 2;
  int d = 1;
};

std::string render_table1(const Table1Params& params);
int cmd_table1(const Table1Params& params, std::ostream& out);

int cmd_check_rbf(const RbfSpec& spec, double grid_max, double grid_step,
                  std::ostream& out);
int cmd_check_market(const CostFunction& cf, int trials, std::uint64_t seed,
                     std::ostream& out);

/// Re-settles the events of a trace file; with replay set, compares the
/// result against the stored settlement and fails on any difference.
int cmd_settle(const std::filesystem::path& trace_path, bool replay, std::ostream& out);

}  // namespace reppm
