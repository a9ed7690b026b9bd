#include "reppm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace reppm {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void check_block_name(const std::string& name) {
  if (name.empty()) throw ConfigError("experiments: block name must not be empty");
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      throw ConfigError("experiments: block name '" + name +
                        "' may only use letters, digits, '_' and '-'");
}

std::string position_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return std::to_string(line) + ":" + std::to_string(column);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

ExperimentFile experiment_from_json(const json& j) {
  require_keys(j, "experiment", {"version", "experiments"}, {"output_dir"});
  ExperimentFile file;
  if (!j.at("version").is_number_integer() || j.at("version").get<int>() != 1)
    throw ConfigError("experiment.version: expected version 1");
  file.version = 1;
  if (j.contains("output_dir"))
    file.output_dir = std::filesystem::path(j.at("output_dir").get<std::string>());

  std::size_t index = 0;
  for (const json& block : j.at("experiments")) {
    const std::string ctx = "experiments[" + std::to_string(index++) + "]";
    if (!block.is_object() || !block.contains("type") || !block.contains("name"))
      throw ConfigError(ctx + ": blocks need 'name' and 'type'");
    const std::string type = block.at("type").get<std::string>();
    const std::string name = block.at("name").get<std::string>();
    check_block_name(name);

    if (type == "run") {
      require_keys(block, ctx, {"name", "type", "config"}, {"replicates"});
      RunBlock run;
      run.name = name;
      run.config = run_config_from_json(block.at("config"), ctx + ".config");
      if (block.contains("replicates")) {
        run.replicates = block.at("replicates").get<int>();
        if (run.replicates < 1) throw ConfigError(ctx + ".replicates: must be >= 1");
      }
      file.runs.push_back(std::move(run));
    } else if (type == "grid") {
      require_keys(block, ctx, {"name", "type", "game", "check"},
                   {"profile", "expect", "expect_nonempty"});
      GridBlock grid;
      grid.name = name;
      grid.game = grid_game_from_json(block.at("game"), ctx + ".game");
      const std::string check = block.at("check").get<std::string>();
      if (check == "find_psne") grid.check = GridCheck::FindPsne;
      else if (check == "check_psne") grid.check = GridCheck::CheckPsne;
      else if (check == "check_sgpe") grid.check = GridCheck::CheckSgpe;
      else throw ConfigError(ctx + ".check: unknown check '" + check + "'");
      if (block.contains("expect")) {
        const std::string expect = block.at("expect").get<std::string>();
        if (expect == "holds") grid.expect = Expectation::Holds;
        else if (expect == "fails") grid.expect = Expectation::Fails;
        else if (expect == "none") grid.expect = Expectation::None;
        else throw ConfigError(ctx + ".expect: unknown expectation '" + expect + "'");
      }
      if (block.contains("profile") && !block.at("profile").is_string())
        grid.explicit_profile = profile_from_json(block.at("profile"), ctx + ".profile");
      else if (block.contains("profile") &&
               block.at("profile").get<std::string>() != "canonical")
        throw ConfigError(ctx + ".profile: expected 'canonical' or a profile object");
      if (block.contains("expect_nonempty")) {
        if (grid.check != GridCheck::FindPsne)
          throw ConfigError(ctx + ".expect_nonempty: only valid for find_psne");
        grid.expect_nonempty = block.at("expect_nonempty").get<bool>();
      }
      file.games.push_back(std::move(grid));
    } else if (type == "bounds") {
      require_keys(block, ctx, {"name", "type", "mechanism", "network"});
      BoundsBlock bounds;
      bounds.name = name;
      bounds.mechanism = mechanism_from_json(block.at("mechanism"), ctx + ".mechanism");
      bounds.network = network_from_json(block.at("network"), ctx + ".network");
      file.bounds.push_back(std::move(bounds));
    } else {
      throw ConfigError(ctx + ".type: unknown block type '" + type + "'");
    }
  }
  return file;
}

ExperimentFile load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ":" + position_of(text, e.byte) + ": " + e.what());
  }
  try {
    return experiment_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

int cmd_simulate(const std::filesystem::path& path,
                 std::optional<std::uint64_t> seed_override,
                 std::optional<int> replicates_override,
                 std::optional<std::filesystem::path> out_override, bool quiet,
                 std::ostream& out) {
  ExperimentFile file = load_experiment(path);
  const std::filesystem::path out_dir =
      out_override.value_or(file.output_dir.value_or(std::filesystem::current_path()));
  std::filesystem::create_directories(out_dir);

  std::ostringstream csv;
  csv << "name,replicates,funded,funding_rate,mean_chi,mean_sponsor_outlay,"
         "mean_awareness_coverage,equilibrium_exists\n";

  for (RunBlock& block : file.runs) {
    if (seed_override) block.config.seed = *seed_override;
    const int replicates = replicates_override.value_or(block.replicates);

    double funded_rate = 0.0, mean_chi = 0.0, mean_outlay = 0.0, mean_coverage = 0.0;
    for (int rep = 0; rep < replicates; ++rep) {
      const RunTrace trace = run(block.config);
      funded_rate += trace.settlement.funded ? 1.0 : 0.0;
      mean_chi += trace.settlement.total_contributed;
      mean_outlay += sponsor_outlay(trace.settlement);
      mean_coverage +=
          static_cast<double>(trace.awareness.size()) / block.config.network.size();
      const std::filesystem::path trace_path =
          out_dir / ("trace_" + block.name + "_" + std::to_string(rep) + ".json");
      write_file(trace_path, to_json(trace, block.config, block.name, rep).dump(2) + "\n");
      if (!quiet)
        out << "wrote " << trace_path.string()
            << (trace.settlement.funded ? " (funded)" : " (unfunded)") << "\n";
    }
    funded_rate /= replicates;
    mean_chi /= replicates;
    mean_outlay /= replicates;
    mean_coverage /= replicates;

    bool equilibrium_exists = false;
    try {
      equilibrium_exists =
          equilibrium_profile(block.config.mechanism, block.config.network).has_value();
    } catch (const std::runtime_error&) {
      equilibrium_exists = false;
    }

    csv << block.name << "," << replicates << ","
        << (funded_rate == 1.0 ? "true" : "false") << "," << fmt6(funded_rate) << ","
        << fmt6(mean_chi) << "," << fmt6(mean_outlay) << "," << fmt6(mean_coverage)
        << "," << (equilibrium_exists ? "true" : "false") << "\n";
  }

  const std::filesystem::path summary_path = out_dir / "summary.csv";
  write_file(summary_path, csv.str());
  if (!quiet) out << "wrote " << summary_path.string() << "\n";
  return 0;
}

namespace {

std::optional<EquilibriumProfile> block_profile(const GridBlock& block) {
  if (block.explicit_profile) return block.explicit_profile;
  const SocialNetwork network(block.game.agents);
  return equilibrium_profile(block.game.mechanism, network);
}

}  // namespace

int cmd_verify_equilibrium(const std::filesystem::path& path,
                           std::optional<std::filesystem::path> out_override, bool quiet,
                           std::ostream& out) {
  ExperimentFile file = load_experiment(path);
  const std::filesystem::path out_dir =
      out_override.value_or(file.output_dir.value_or(std::filesystem::current_path()));
  std::filesystem::create_directories(out_dir);

  bool all_ok = true;
  for (const GridBlock& block : file.games) {
    json verdict_doc{{"name", block.name}, {"game", to_json(block.game)}};
    bool ok = true;

    if (block.check == GridCheck::FindPsne) {
      verdict_doc["check"] = "find_psne";
      verdict_doc["profile_count"] = psne_profile_count(block.game);
      const std::vector<GridProfile> psne = find_psne(block.game);
      json list = json::array();
      for (const GridProfile& p : psne) list.push_back(to_json(p));
      verdict_doc["psne"] = list;
      verdict_doc["psne_count"] = psne.size();
      if (block.expect_nonempty) ok = *block.expect_nonempty == !psne.empty();
    } else {
      verdict_doc["check"] =
          block.check == GridCheck::CheckPsne ? "check_psne" : "check_sgpe";
      const std::optional<EquilibriumProfile> profile = block_profile(block);
      if (!profile) {
        verdict_doc["profile"] = nullptr;
        verdict_doc["holds"] = false;
        verdict_doc["detail"] = "no canonical profile: existence condition fails";
        ok = block.expect != Expectation::Holds;
      } else if (block.expect == Expectation::None) {
        verdict_doc["profile"] = to_json(*profile);
        verdict_doc["detail"] = "profile exists but none was expected";
        ok = false;
      } else {
        const OracleVerdict verdict = block.check == GridCheck::CheckPsne
                                          ? check_psne(block.game, *profile)
                                          : check_sgpe(block.game, *profile);
        verdict_doc["profile"] = to_json(*profile);
        verdict_doc.update(to_json(verdict));
        ok = (block.expect == Expectation::Holds) == verdict.holds;
      }
    }

    verdict_doc["pass"] = ok;
    const std::filesystem::path verdict_path =
        out_dir / ("verdict_" + block.name + ".json");
    write_file(verdict_path, verdict_doc.dump(2) + "\n");
    if (!quiet)
      out << (ok ? "[PASS] " : "[FAIL] ") << block.name << " -> "
          << verdict_path.string() << "\n";
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}

std::string render_bounds(const BoundsBlock& block) {
  const MechanismSpec& spec = block.mechanism;
  if (spec.kind == MechanismKind::PPB)
    throw ConfigError("bounds: no bonus bounds for PPB");

  int n = 0;
  for (const AgentProfile& a : block.network.agents())
    if (a.theta > 0.0) ++n;
  const int d = diameter(block.network);
  const double value = net_value(block.network);
  const double h0 = spec.project.provision_point;

  std::ostringstream out;
  out << "mechanism " << to_string(spec.kind) << "  h0=" << fmt6(h0) << "  n=" << n
      << "  d=" << d << "  net_value=" << fmt6(value) << "\n";

  const DesirabilityThreshold threshold = desirability_threshold(spec, n, d);
  out << "  desirability: (" << to_string(threshold.set) << ", " << fmt6(threshold.tau)
      << ")\n";

  if (is_market_mechanism(spec.kind)) {
    const DesirabilityThreshold lmsr = desirability_threshold_lmsr(spec, n, d);
    out << "  desirability (LMSR closed form): (" << to_string(lmsr.set) << ", "
        << fmt6(lmsr.tau) << ")\n";
  }

  if (has_referral_bonus(spec.kind)) {
    const double bound = sigma_bound(spec, block.network);
    out << "  sigma_bound: " << fmt6(bound) << "  (configured sigma "
        << fmt6(spec.bonus_curve().cap)
        << (spec.bonus_curve().cap < bound ? " admissible" : " inadmissible") << ")\n";
    const BonusBound chain =
        worst_case_bonus(spec, n, d, WorstCaseTree::ChainPerContributor);
    const BonusBound hub = worst_case_bonus(spec, n, d, WorstCaseTree::SingleHub);
    out << "  worst_case chain_per_contributor: exact=" << fmt6(chain.exact)
        << " bound=" << fmt6(chain.bound) << "\n";
    out << "  worst_case single_hub: exact=" << fmt6(hub.exact)
        << " bound=" << fmt6(hub.bound) << "\n";
  }

  if (is_market_mechanism(spec.kind)) {
    const CostFunction& cf = spec.market();
    double q_max = c0_inverse(cf, h0 + c0(cf, 0.0));
    if (has_referral_bonus(spec.kind)) q_max += n * d * spec.bonus_curve().cap;
    out << "  q_max: " << fmt6(q_max) << "\n";
    const double sigma_term =
        has_referral_bonus(spec.kind) ? n * d * spec.bonus_curve().cap : 0.0;
    const double lhs = h0 + cf.liquidity * std::log(2.0) + sigma_term;
    out << "  funding condition: h0 + b*ln2"
        << (has_referral_bonus(spec.kind) ? " + nd*sigma" : "") << " = " << fmt6(lhs)
        << " < net_value = " << fmt6(value) << " : "
        << (lhs < value ? "true" : "false") << "\n";
  }
  return out.str();
}

int cmd_bounds(const std::filesystem::path& path, std::ostream& out) {
  const ExperimentFile file = load_experiment(path);
  for (const BoundsBlock& block : file.bounds) {
    out << "== " << block.name << " ==\n";
    out << render_bounds(block);
  }
  return 0;
}

namespace {

struct Table1Row {
  std::string mechanism;
  double contribution;
  std::string set_label;
  double tau;
  std::string condition;
  bool condition_holds;
};

}  // namespace

std::string render_table1(const Table1Params& p) {
  if (!(p.h0 > 0.0) || !(p.budget > 0.0) || !(p.liquidity > 0.0) || p.n < 1 ||
      p.d < 0 || p.sigma < 0.0 || p.theta < 0.0)
    throw ConfigError("table1: invalid parameters");

  const CostFunction cf{CostFamily::Lmsr, p.liquidity};
  const double value = p.n * p.theta;  // homogeneous population
  const double nds = static_cast<double>(p.n) * p.d * p.sigma;
  const double ln2 = std::log(2.0);
  const double issued_at_target = c0_inverse(cf, p.h0 + c0(cf, 0.0));

  auto lmsr_contribution = [&](double theta_eff) {
    return p.liquidity * std::log((1.0 + std::exp((theta_eff + p.q0) / p.liquidity)) /
                                  (1.0 + std::exp(p.q0 / p.liquidity)));
  };

  std::vector<Table1Row> rows;
  rows.push_back({"PPR", p.theta * p.h0 / (p.budget + p.h0), "M∩N", p.h0 + p.budget,
                  "B in (0, value - h0)", p.budget > 0.0 && p.budget < value - p.h0});
  rows.push_back({"REPP-R", std::max(0.0, p.theta - p.sigma) * p.h0 / (p.budget + p.h0),
                  "N", p.h0 + p.budget + nds, "B in (0, value - h0 - nd*sigma)",
                  p.budget > 0.0 && p.budget < value - p.h0 - nds});
  rows.push_back({"PPS", c0(cf, p.theta + p.q0) - c0(cf, p.q0), "M∩N", issued_at_target,
                  "marginal securities per unit > 1 at q_max",
                  check_epps_liquidity(cf, issued_at_target)});
  rows.push_back({"REPP-S",
                  std::max(0.0, c0(cf, p.theta - p.sigma + p.q0) - c0(cf, p.q0)), "N",
                  issued_at_target + nds, "marginal securities per unit > 1 at q_max",
                  check_epps_liquidity(cf, issued_at_target + nds)});
  rows.push_back({"LMSR-PPS", lmsr_contribution(p.theta), "M∩N", p.h0 + p.liquidity * ln2,
                  "b in (0, (value - h0)/ln2)",
                  p.liquidity > 0.0 && p.liquidity < (value - p.h0) / ln2});
  rows.push_back({"LMSR-REPP-S", std::max(0.0, lmsr_contribution(p.theta - p.sigma)), "N",
                  p.h0 + p.liquidity * ln2 + nds, "b in (0, (value - h0 - nd*sigma)/ln2)",
                  p.liquidity > 0.0 && p.liquidity < (value - p.h0 - nds) / ln2});

  std::ostringstream out;
  out << "parameters: theta=" << fmt6(p.theta) << " sigma=" << fmt6(p.sigma)
      << " h0=" << fmt6(p.h0) << " B=" << fmt6(p.budget) << " b=" << fmt6(p.liquidity)
      << " q0=" << fmt6(p.q0) << " n=" << p.n << " d=" << p.d << "\n";
  out << "mechanism    | equilibrium contribution | social desirability      | condition\n";
  out << "-------------+--------------------------+--------------------------+----------\n";
  for (const Table1Row& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s | %24s | ", row.mechanism.c_str(),
                  fmt6(row.contribution).c_str());
    out << line;
    const std::string desirability = "(" + row.set_label + ", " + fmt6(row.tau) + ")";
    out << desirability;
    // the set label may hold a multi-byte glyph; pad by display width
    const std::size_t width =
        desirability.size() - (row.set_label == "M∩N" ? 2 : 0);
    for (std::size_t pad = width; pad < 24; ++pad) out << ' ';
    out << " | " << row.condition << ": " << (row.condition_holds ? "holds" : "violated")
        << "\n";
  }
  return out.str();
}

int cmd_table1(const Table1Params& params, std::ostream& out) {
  out << render_table1(params);
  return 0;
}

int cmd_check_rbf(const RbfSpec& spec, double grid_max, double grid_step,
                  std::ostream& out) {
  const RbfConditionReport report = rbf_check_conditions(spec, grid_max, grid_step);
  out << "rbf " << to_string(spec.family) << " cap=" << fmt6(spec.cap)
      << " scale=" << fmt6(spec.scale) << " grid=[0," << fmt6(grid_max) << "] step "
      << fmt6(grid_step) << "\n";
  out << "  gradient defined:  " << (report.gradient_defined ? "pass" : "FAIL") << "\n";
  out << "  gradient positive: " << (report.gradient_positive ? "pass" : "FAIL")
      << " (min " << report.min_gradient << ")\n";
  out << "  concave:           " << (report.concave ? "pass" : "FAIL") << " (max d2 "
      << report.max_second_difference << ")\n";
  out << "  bounded below cap: " << (report.bounded_below_cap ? "pass" : "FAIL")
      << " (max value " << fmt6(report.max_value) << ")\n";
  out << "  zero at origin:    " << (report.zero_at_origin ? "pass" : "FAIL") << "\n";
  return report.pass() ? 0 : 1;
}

int cmd_check_market(const CostFunction& cf, int trials, std::uint64_t seed,
                     std::ostream& out) {
  cf.validate();
  if (trials < 1) throw ConfigError("check-market: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amount(0.01, 10.0);
  // keep q/b moderate so the marginal rate stays numerically away from 1
  std::uniform_real_distribution<double> start(0.0, 20.0 * cf.liquidity);
  std::uniform_int_distribution<int> pieces(2, 6);

  double worst_split = 0.0;
  double worst_roundtrip = 0.0;
  bool marginal_ok = true;

  for (int t = 0; t < trials; ++t) {
    const double x = amount(rng);
    const double q0 = start(rng);
    const int k = pieces(rng);

    MarketState lump{q0};
    const double lump_total = allot_securities(cf, lump, x).securities;
    MarketState split{q0};
    double split_total = 0.0;
    for (int i = 0; i < k; ++i) {
      const Allotment lot = allot_securities(cf, split, x / k);
      split_total += lot.securities;
      split = lot.state;
    }
    worst_split = std::max(worst_split, std::abs(split_total - lump_total));

    const double y = c0(cf, q0);
    worst_roundtrip = std::max(worst_roundtrip, std::abs(c0(cf, c0_inverse(cf, y)) - y));

    if (marginal_securities_per_unit(cf, q0) <= 1.0) marginal_ok = false;
    if (marginal_securities_per_unit(cf, q0 + 1.0) >=
        marginal_securities_per_unit(cf, q0))
      marginal_ok = false;  // per-unit rate must fall as q grows
  }

  const bool pass = worst_split < 1e-9 && worst_roundtrip < 1e-9 && marginal_ok;
  out << "market lmsr b=" << fmt6(cf.liquidity) << " trials=" << trials << "\n";
  out << "  path independence:  max |split - lump| = " << worst_split << " "
      << (worst_split < 1e-9 ? "pass" : "FAIL") << "\n";
  out << "  inverse round trip: max |c0(c0^-1(y)) - y| = " << worst_roundtrip << " "
      << (worst_roundtrip < 1e-9 ? "pass" : "FAIL") << "\n";
  out << "  marginal rate:      > 1 and falling in q: " << (marginal_ok ? "pass" : "FAIL")
      << "\n";
  return pass ? 0 : 1;
}

int cmd_settle(const std::filesystem::path& trace_path, bool replay, std::ostream& out) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw ConfigError(trace_path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(trace_path.string() + ":" + position_of(buffer.str(), e.byte) +
                      ": " + e.what());
  }

  require_keys(doc, "trace", {"name", "replicate", "config", "events", "awareness",
                              "settlement"});
  const RunConfig config = run_config_from_json(doc.at("config"), "trace.config");
  std::vector<ContributionEvent> events;
  std::size_t i = 0;
  for (const json& ev : doc.at("events")) {
    const std::string ctx = "trace.events[" + std::to_string(i++) + "]";
    require_keys(ev, ctx, {"agent", "amount", "time", "referred", "h_before", "h_after",
                           "q_before", "q_after"});
    ContributionEvent event;
    event.agent = ev.at("agent").get<AgentId>();
    event.amount = ev.at("amount").get<double>();
    event.time = ev.at("time").get<double>();
    event.referred = ev.at("referred").get<std::vector<AgentId>>();
    events.push_back(std::move(event));
  }

  const ReferralForest forest = build_referral_forest(events);
  const SettlementReport report =
      settle(config.mechanism, config.network.agents(), events, forest);
  out << to_json(report).dump(2) << "\n";

  if (!replay) return 0;
  const SettlementReport stored =
      settlement_from_json(doc.at("settlement"), "trace.settlement");
  if (report == stored) {
    out << "replay: settlement matches\n";
    return 0;
  }
  out << "replay: settlement MISMATCH\n";
  return 1;
}

}  // namespace reppm
