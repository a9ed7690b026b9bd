#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reppm/experiment.hpp"

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool quiet = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Provision-point crowdfunding mechanisms: simulation, bounds and "
               "equilibrium verification"};
  app.require_subcommand(1);

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  std::string out_value;
  app.add_option("--seed", seed_value, "Override the seed of every run block")
      ->each([&](const std::string&) { flags.seed = seed_value; });
  app.add_option("--out", out_value, "Output directory for traces and reports")
      ->each([&](const std::string&) { flags.out = out_value; });
  app.add_flag("--quiet", flags.quiet, "Suppress progress lines");

  // simulate
  std::string sim_path;
  int replicates = 0;
  auto* sim = app.add_subcommand("simulate", "Run the experiment file's run blocks");
  sim->add_option("file", sim_path, "Experiment JSON file")->required();
  sim->add_option("--replicates", replicates, "Override replicates per block");

  // verify-equilibrium
  std::string verify_path;
  auto* verify = app.add_subcommand("verify-equilibrium",
                                    "Check the experiment file's grid blocks");
  verify->add_option("file", verify_path, "Experiment JSON file")->required();

  // bounds
  std::string bounds_path;
  auto* bounds = app.add_subcommand("bounds", "Report thresholds and payout bounds");
  bounds->add_option("file", bounds_path, "Experiment JSON file")->required();

  // table1
  reppm::Table1Params params;
  auto* table = app.add_subcommand("table1", "Six-row mechanism comparison report");
  table->add_option("--theta", params.theta, "Homogeneous private value");
  table->add_option("--sigma", params.sigma, "Referral bonus cap");
  table->add_option("--h0", params.h0, "Provision point");
  table->add_option("--B", params.budget, "Refund budget");
  table->add_option("--b", params.liquidity, "LMSR liquidity");
  table->add_option("--q0", params.q0, "Outstanding securities on arrival");
  table->add_option("--n", params.n, "Population size");
  table->add_option("--d", params.d, "Network diameter");

  // check-rbf
  reppm::RbfSpec rbf;
  std::string rbf_family = "tanh";
  double grid_max = 10.0, grid_step = 0.01;
  auto* check_rbf = app.add_subcommand("check-rbf", "Numeric RBF admissibility sweep");
  check_rbf->add_option("--family", rbf_family,
                        "tanh | logistic_shifted | arctan_scaled");
  check_rbf->add_option("--cap", rbf.cap, "Bonus cap sigma");
  check_rbf->add_option("--scale", rbf.scale, "Input rescaling kappa");
  check_rbf->add_option("--grid-max", grid_max, "Sweep upper end");
  check_rbf->add_option("--grid-step", grid_step, "Sweep step");

  // check-market
  reppm::CostFunction cf;
  int trials = 200;
  auto* check_market =
      app.add_subcommand("check-market", "Path independence and inverse checks");
  check_market->add_option("--b", cf.liquidity, "LMSR liquidity");
  check_market->add_option("--trials", trials, "Random trials");

  // settle
  std::string trace_path;
  bool replay = false;
  auto* settle = app.add_subcommand("settle", "Re-settle a trace file");
  settle->add_option("file", trace_path, "Trace JSON file")->required();
  settle->add_flag("--replay", replay, "Compare against the stored settlement");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return reppm::cmd_simulate(sim_path, flags.seed,
                                 replicates > 0 ? std::optional<int>(replicates)
                                                : std::nullopt,
                                 flags.out, flags.quiet, std::cout);
    if (verify->parsed())
      return reppm::cmd_verify_equilibrium(verify_path, flags.out, flags.quiet,
                                           std::cout);
    if (bounds->parsed()) return reppm::cmd_bounds(bounds_path, std::cout);
    if (table->parsed()) return reppm::cmd_table1(params, std::cout);
    if (check_rbf->parsed()) {
      if (rbf_family == "tanh") rbf.family = reppm::RbfFamily::Tanh;
      else if (rbf_family == "logistic_shifted")
        rbf.family = reppm::RbfFamily::LogisticShifted;
      else if (rbf_family == "arctan_scaled")
        rbf.family = reppm::RbfFamily::ArctanScaled;
      else throw reppm::ConfigError("check-rbf: unknown family '" + rbf_family + "'");
      return reppm::cmd_check_rbf(rbf, grid_max, grid_step, std::cout);
    }
    if (check_market->parsed())
      return reppm::cmd_check_market(cf, trials, flags.seed.value_or(1), std::cout);
    if (settle->parsed()) return reppm::cmd_settle(trace_path, replay, std::cout);
  } catch (const reppm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
