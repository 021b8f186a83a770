#pragma once

// Command-line front end. RunCli is callable in-process so tests can drive it.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mpmg/config.hpp"
#include "mpmg/experiment.hpp"
#include "mpmg/game.hpp"
#include "mpmg/report.hpp"

namespace mpmg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kOutputRootEnv = "MPMG_OUTPUT_ROOT";

// Flags shared by run, sweep and analyze. Unset flags leave config values alone.
struct Overrides {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> agent;
  std::optional<int> n;
  std::optional<double> sigma;
  std::optional<double> alpha;
  std::optional<int> episodes;
  std::optional<int> replications;
  std::optional<int> workers;
};

inline void AddRunFlags(CLI::App& cmd, Overrides& o, bool with_market) {
  cmd.add_option("--config", o.config_path, "flat key = value config file");
  cmd.add_option("--out", o.out, "output directory (default: $" + std::string(kOutputRootEnv) + "/<run name>)");
  cmd.add_option("--seed", o.seed, "base seed");
  cmd.add_option("--agent", o.agent, "d3qn, ts, egreedy, mappo or ucb");
  if (with_market) {
    cmd.add_option("--n", o.n, "number of agents");
    cmd.add_option("--sigma", o.sigma, "target standard deviation of market powers");
  }
  cmd.add_option("--alpha", o.alpha, "collusive mark-up factor");
  cmd.add_option("--episodes", o.episodes, "episodes per replication");
  cmd.add_option("--replications", o.replications, "replications per cell");
  cmd.add_option("--workers", o.workers, "worker threads (no effect on results)");
}

inline RunConfig ResolveConfig(const Overrides& o) {
  RunConfig c;
  if (!o.config_path.empty()) c = LoadConfig(o.config_path);
  if (o.seed) c.spec.base_seed = *o.seed;
  if (o.agent) SetKnob(c, "agent", *o.agent);
  if (o.n) c.spec.market.n = *o.n;
  if (o.sigma) c.spec.market.sigma_beta = *o.sigma;
  if (o.alpha) c.spec.market.alpha = *o.alpha;
  if (o.episodes) c.spec.episodes = *o.episodes;
  if (o.replications) c.spec.replications = *o.replications;
  if (o.workers) c.workers = *o.workers;
  return c;
}

inline std::filesystem::path OutputDir(const Overrides& o, const std::string& run_name) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv(kOutputRootEnv);
  return std::filesystem::path(root && *root ? root : "results") / run_name;
}

inline int Execute(const std::string& command, const RunConfig& config, const std::vector<ExperimentSpec>& specs,
                   const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  RunTimes times{std::chrono::system_clock::now(), {}};
  GridResult grid = RunCells(specs, config.workers);
  times.finished = std::chrono::system_clock::now();
  WriteResults(dir, config, command, grid, times);
  int failures = 0;
  for (const auto& c : grid.cells) {
    if (c.error) {
      ++failures;
      err << "cell " << c.spec.CellId() << " failed: " << *c.error << "\n";
    }
  }
  if (grid.cells.size() > 1 && grid.heatmap && grid.heatmap->degenerate) {
    err << "warning: every cell has the same collusion score; heat map values are all 0.5\n";
  }
  out << "wrote " << dir.string() << " (" << grid.cells.size() - static_cast<std::size_t>(failures) << "/"
      << grid.cells.size() << " cells ok)\n";
  return failures == 0 ? kExitOk : kExitRunFailure;
}

inline std::string ProfileLetters(const StrategyProfile& p) { return ActionLetters(p); }

inline void PrintAnalysis(const PowerProfile& betas, double alpha, double v, std::ostream& out) {
  const int n = betas.size();
  const auto table = PayoffTable(betas, alpha, v);
  const GameClassification g = ClassifyGame(betas, alpha, v);
  out << std::setprecision(6);
  out << "market: n = " << n << ", alpha = " << alpha << ", v = " << v << ", sigma(beta) = " << betas.StdDev()
      << "\n\nagent  beta       bid        incentive\n";
  for (int i = 0; i < n; ++i) {
    out << std::left << std::setw(7) << i << std::setw(11) << betas[i] << std::setw(11) << ComputeBid(betas[i], v)
        << IncentiveFactor(betas[i]) << "\n";
  }
  out << std::right << "\npayoffs (F = fair price, C = collusive price)\n";
  for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
    out << "  " << ProfileLetters(StrategyProfile::FromIndex(idx, n)) << "  ";
    for (std::size_t i = 0; i < table[idx].size(); ++i) out << (i ? " / " : "") << table[idx][i];
    out << "\n";
  }
  out << "\nNash equilibria:";
  for (const auto& p : g.nash_profiles) out << ' ' << ProfileLetters(p);
  out << "\nPareto optima:";
  for (const auto& p : g.pareto_profiles) out << ' ' << ProfileLetters(p);
  out << "\nclassification: " << GameKindName(g.kind) << "\n";
  if (g.witness) {
    out << "witness: agent " << g.witness->agent << " violates " << g.witness->violated << " (" << g.witness->lhs
        << " vs " << g.witness->rhs << ")\n";
  }
}

inline nlohmann::json AnalysisJson(const PowerProfile& betas, double alpha, double v) {
  const int n = betas.size();
  const auto table = PayoffTable(betas, alpha, v);
  const GameClassification g = ClassifyGame(betas, alpha, v);
  nlohmann::json payoffs = nlohmann::json::array();
  for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
    payoffs.push_back({{"profile", ProfileLetters(StrategyProfile::FromIndex(idx, n))}, {"payoffs", table[idx]}});
  }
  auto letters = [](const std::vector<StrategyProfile>& ps) {
    std::vector<std::string> out;
    for (const auto& p : ps) out.push_back(ActionLetters(p));
    return out;
  };
  std::vector<double> incentives;
  for (int i = 0; i < n; ++i) incentives.push_back(IncentiveFactor(betas[i]));
  nlohmann::json j = {{"n", n},
                      {"alpha", alpha},
                      {"v", v},
                      {"betas", betas.values()},
                      {"incentive_factors", incentives},
                      {"payoff_table", payoffs},
                      {"nash", letters(g.nash_profiles)},
                      {"pareto", letters(g.pareto_profiles)},
                      {"classification", GameKindName(g.kind)}};
  if (g.witness) {
    j["witness"] = {{"agent", g.witness->agent},
                    {"violated", g.witness->violated},
                    {"lhs", g.witness->lhs},
                    {"rhs", g.witness->rhs}};
  }
  return j;
}

inline std::vector<double> ParseBetaList(const std::string& text) {
  std::vector<double> out;
  for (const auto& field : SplitFields(text, ',')) {
    try {
      out.push_back(ParseCsvDouble(field));
    } catch (const ReportError&) {
      throw ConfigError("betas: bad number '" + field + "'");
    }
  }
  return out;
}

inline int RunCli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Minimum price Markov game lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Overrides run_o;
  auto* run = app.add_subcommand("run", "run one (agent, n, sigma) cell");
  AddRunFlags(*run, run_o, true);

  Overrides sweep_o;
  auto* sweep = app.add_subcommand("sweep", "run every agent on n in {2, 5} x sigma in {0, 0.5}");
  AddRunFlags(*sweep, sweep_o, false);

  Overrides an_o;
  std::string betas_text;
  bool as_json = false;
  auto* analyze = app.add_subcommand("analyze", "payoff table, equilibria and classification of one market");
  analyze->add_option("--config", an_o.config_path, "flat key = value config file");
  analyze->add_option("--seed", an_o.seed, "seed for heterogeneous market powers");
  analyze->add_option("--n", an_o.n, "number of agents");
  analyze->add_option("--sigma", an_o.sigma, "target standard deviation of market powers");
  analyze->add_option("--alpha", an_o.alpha, "collusive mark-up factor");
  analyze->add_option("--betas", betas_text, "explicit market powers, comma separated");
  analyze->add_flag("--json", as_json, "print JSON");

  std::string results_dir;
  std::string report_out;
  auto* report = app.add_subcommand("report", "figures and summary tables from a result directory");
  report->add_option("results", results_dir, "result directory")->required();
  report->add_option("--out", report_out, "figure directory (default: <results>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      RunConfig c = ResolveConfig(run_o);
      ValidateConfig(c);
      return Execute("run", c, {c.spec}, OutputDir(run_o, "run_" + c.spec.CellId() + "_seed" +
                                                             std::to_string(c.spec.base_seed)),
                     out, err);
    }
    if (*sweep) {
      RunConfig c = ResolveConfig(sweep_o);
      ValidateConfig(c);
      std::vector<AgentKind> agents(kAllAgentKinds.begin(), kAllAgentKinds.end());
      if (sweep_o.agent) agents = {c.spec.agent};
      return Execute("sweep", c, GridSpecs(c.spec, agents),
                     OutputDir(sweep_o, "sweep_seed" + std::to_string(c.spec.base_seed)), out, err);
    }
    if (*analyze) {
      RunConfig c = ResolveConfig(an_o);
      if (c.spec.market.n > kMaxEnumerationPlayers) {
        throw CapacityError("analyze enumerates 2^n profiles and supports at most " +
                            std::to_string(kMaxEnumerationPlayers) + " agents, got " +
                            std::to_string(c.spec.market.n));
      }
      PowerProfile betas = betas_text.empty()
                               ? GenerateBetas(c.spec.market.n, c.spec.market.sigma_beta, c.spec.base_seed).profile
                               : PowerProfile(ParseBetaList(betas_text));
      if (betas.size() > kMaxEnumerationPlayers) {
        throw CapacityError("analyze supports at most " + std::to_string(kMaxEnumerationPlayers) + " agents");
      }
      if (as_json) {
        out << AnalysisJson(betas, c.spec.market.alpha, c.spec.market.v).dump(2) << "\n";
      } else {
        PrintAnalysis(betas, c.spec.market.alpha, c.spec.market.v, out);
      }
      return kExitOk;
    }
    if (*report) {
      const std::filesystem::path dir = results_dir;
      const auto files = WriteReport(dir, report_out.empty() ? dir / "report" : std::filesystem::path(report_out));
      out << "wrote " << files.written.size() << " report files\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitUsage;
}

}  // namespace mpmg::cli
