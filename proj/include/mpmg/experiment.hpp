#pragma once

// Agents x market configurations x replications, plus the derived
// statistics: outcome frequencies, confidence bands, heat-map scores.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mpmg/agent.hpp"
#include "mpmg/bandit.hpp"
#include "mpmg/d3qn.hpp"
#include "mpmg/environment.hpp"
#include "mpmg/game.hpp"
#include "mpmg/mappo.hpp"
#include "mpmg/seeding.hpp"

namespace mpmg {

enum class AgentKind { kD3qn, kThompson, kEGreedy, kMappo, kUcb };

// Row order of the summary table.
inline constexpr std::array<AgentKind, 5> kAllAgentKinds = {AgentKind::kD3qn, AgentKind::kThompson,
                                                            AgentKind::kEGreedy, AgentKind::kMappo,
                                                            AgentKind::kUcb};

inline const char* AgentKindName(AgentKind k) {
  switch (k) {
    case AgentKind::kD3qn: return "d3qn";
    case AgentKind::kThompson: return "ts";
    case AgentKind::kEGreedy: return "egreedy";
    case AgentKind::kMappo: return "mappo";
    case AgentKind::kUcb: return "ucb";
  }
  return "?";
}

inline std::optional<AgentKind> ParseAgentKind(std::string_view s) {
  for (AgentKind k : kAllAgentKinds) {
    if (s == AgentKindName(k)) return k;
  }
  if (s == "thompson") return AgentKind::kThompson;
  if (s == "epsilon-greedy" || s == "e-greedy") return AgentKind::kEGreedy;
  return std::nullopt;
}

inline bool IsBandit(AgentKind k) {
  return k == AgentKind::kEGreedy || k == AgentKind::kUcb || k == AgentKind::kThompson;
}

struct AgentHyperParams {
  EpsilonSchedule egreedy;
  ThompsonReward thompson_reward = ThompsonReward::kFractional;
  D3qnHyperParams d3qn;
  PpoHyperParams ppo;
};

struct ExperimentSpec {
  AgentKind agent = AgentKind::kUcb;
  MarketConfig market;
  int episodes = kDefaultEpisodes;
  int replications = 100;
  std::uint64_t base_seed = 0;
  AgentHyperParams hp;

  void Validate() const {
    market.Validate();
    if (market.n > kMaxEnumerationPlayers) throw CapacityError("at most 12 players are supported");
    if (episodes < 1) throw DomainError("episodes must be positive");
    if (replications < 1) throw DomainError("replications must be positive");
  }

  // Market column label, e.g. "n2_s0.0".
  std::string ConfigId() const {
    std::ostringstream os;
    os.precision(1);
    os << "n" << market.n << "_s" << std::fixed << market.sigma_beta;
    return os.str();
  }

  std::string CellId() const { return std::string(AgentKindName(agent)) + "_" + ConfigId(); }
};

// Same market for every agent kind at a given (seed, n, sigma).
inline BetaDraw MarketBetas(const ExperimentSpec& spec) {
  return GenerateBetas(spec.market.n, spec.market.sigma_beta, spec.base_seed);
}

inline std::uint64_t AgentSeed(const ExperimentSpec& spec, int replication, int agent_index) {
  return MixSeed({spec.base_seed, HashName(spec.CellId()), static_cast<std::uint64_t>(replication),
                  static_cast<std::uint64_t>(agent_index)});
}

using AgentFactory =
    std::function<std::unique_ptr<Agent>(const ExperimentSpec&, int agent_index, std::uint64_t seed)>;

inline std::unique_ptr<Agent> MakeAgent(const ExperimentSpec& spec, int, std::uint64_t seed) {
  const int dim = ObservationDim(spec.market.n);
  switch (spec.agent) {
    case AgentKind::kEGreedy: return std::make_unique<EpsilonGreedyAgent>(spec.hp.egreedy, seed);
    case AgentKind::kUcb: return std::make_unique<UcbAgent>();
    case AgentKind::kThompson: return std::make_unique<ThompsonAgent>(seed, spec.hp.thompson_reward);
    case AgentKind::kD3qn: return std::make_unique<D3qnAgent>(dim, spec.hp.d3qn, seed);
    case AgentKind::kMappo: return std::make_unique<MappoAgent>(dim, spec.hp.ppo, seed);
  }
  throw ContractError("unknown agent kind");
}

struct EpisodeRecord {
  StrategyProfile profile;
  PayoffVector rewards;
  std::vector<AgentDiagnostics> diagnostics;  // per agent
};

struct ReplicationLog {
  int replication = 0;
  std::vector<EpisodeRecord> episodes;
};

// Fresh environment and agents; simultaneous moves, payoff, updates.
inline ReplicationLog RunReplication(const ExperimentSpec& spec, int replication,
                                     const AgentFactory& factory = MakeAgent) {
  spec.Validate();
  const int n = spec.market.n;
  const BetaDraw market = MarketBetas(spec);
  MarketEnvironment env;
  Observation obs = env.Reset(spec.market, market.profile, spec.episodes);
  if (obs.dim() != ObservationDim(n)) throw ContractError("observation dimension mismatch");

  std::vector<std::unique_ptr<Agent>> agents;
  for (int i = 0; i < n; ++i) agents.push_back(factory(spec, i, AgentSeed(spec, replication, i)));

  ReplicationLog log;
  log.replication = replication;
  log.episodes.reserve(static_cast<std::size_t>(spec.episodes));
  std::vector<Action> actions(static_cast<std::size_t>(n));
  for (int ep = 0; ep < spec.episodes; ++ep) {
    for (int i = 0; i < n; ++i) actions[static_cast<std::size_t>(i)] = agents[static_cast<std::size_t>(i)]->Act(obs).action;
    StrategyProfile profile(actions);
    StepResult step = env.Step(profile);
    EpisodeRecord rec;
    rec.profile = profile;
    rec.rewards = step.rewards;
    for (int i = 0; i < n; ++i) {
      auto& agent = *agents[static_cast<std::size_t>(i)];
      agent.Observe(Transition{obs, profile[i], step.rewards[static_cast<std::size_t>(i)], step.next_observation,
                               step.done});
      rec.diagnostics.push_back(agent.Diagnostics());
    }
    log.episodes.push_back(std::move(rec));
    obs = std::move(step.next_observation);
  }
  return log;
}

enum class Outcome { kAllFair, kAllCollusive, kOther };

inline Outcome ClassifyProfile(const StrategyProfile& p) {
  if (p.AllFair()) return Outcome::kAllFair;
  if (p.AllCollusive()) return Outcome::kAllCollusive;
  return Outcome::kOther;
}

// kCumulative: per replication, the running frequency of each outcome class
// over episodes 1..t; kInstantaneous: the class of the profile at episode t.
// Either way the value is then averaged across replications.
enum class OutcomeMode { kCumulative, kInstantaneous };

inline constexpr double kCiZ = 1.96;

struct OutcomeSeries {
  std::vector<double> all_fp;
  std::vector<double> all_cp;
  std::vector<double> other;
  std::vector<double> ci_fp;  // 95% half-widths
  std::vector<double> ci_cp;
  std::vector<double> ci_other;
  int replications = 0;

  int episodes() const { return static_cast<int>(all_fp.size()); }
};

// Mean and 1.96 * population-sd / sqrt(R); for 0/1 data this is
// 1.96 sqrt(p (1 - p) / R).
inline std::pair<double, double> MeanAndHalfWidth(std::span<const double> xs) {
  // Identical samples give an exactly zero band instead of rounding residue.
  if (std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end()) return {xs.front(), 0.0};
  const double r = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= r;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, kCiZ * std::sqrt(ss / r / r)};
}

using ProfileMatrix = std::vector<std::vector<StrategyProfile>>;  // [replication][episode]

inline OutcomeSeries ClassifyOutcomes(const ProfileMatrix& profiles, OutcomeMode mode = OutcomeMode::kCumulative) {
  if (profiles.empty()) throw ContractError("no replications to classify");
  const std::size_t episodes = profiles.front().size();
  for (const auto& rep : profiles) {
    if (rep.size() != episodes) throw ContractError("ragged logs: replications differ in episode count");
  }
  const std::size_t reps = profiles.size();
  OutcomeSeries out;
  out.replications = static_cast<int>(reps);
  std::vector<std::array<double, 3>> running(reps, {0.0, 0.0, 0.0});
  std::array<std::vector<double>, 3> column;
  for (auto& c : column) c.resize(reps);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    for (std::size_t r = 0; r < reps; ++r) {
      const auto cls = static_cast<std::size_t>(ClassifyProfile(profiles[r][ep]));
      for (std::size_t c = 0; c < 3; ++c) {
        const double hit = c == cls ? 1.0 : 0.0;
        if (mode == OutcomeMode::kCumulative) {
          running[r][c] += hit;
          column[c][r] = running[r][c] / static_cast<double>(ep + 1);
        } else {
          column[c][r] = hit;
        }
      }
    }
    const auto [fp, ci_fp] = MeanAndHalfWidth(column[0]);
    const auto [cp, ci_cp] = MeanAndHalfWidth(column[1]);
    const auto [ot, ci_ot] = MeanAndHalfWidth(column[2]);
    out.all_fp.push_back(fp);
    out.all_cp.push_back(cp);
    out.other.push_back(ot);
    out.ci_fp.push_back(ci_fp);
    out.ci_cp.push_back(ci_cp);
    out.ci_other.push_back(ci_ot);
  }
  return out;
}

inline ProfileMatrix ProfilesOf(std::span<const ReplicationLog> logs) {
  ProfileMatrix m;
  m.reserve(logs.size());
  for (const auto& log : logs) {
    std::vector<StrategyProfile> row;
    row.reserve(log.episodes.size());
    for (const auto& e : log.episodes) row.push_back(e.profile);
    m.push_back(std::move(row));
  }
  return m;
}

struct HeatmapInput {
  std::string agent;
  std::string config;
  double freq_fp = 0.0;
  double freq_cp = 0.0;
  double freq_other = 0.0;
};

struct HeatmapCell {
  std::string agent;
  std::string config;
  double raw = 0.0;     // freq(AllCP) - freq(AllFP)
  double scaled = 0.0;  // minmax over all cells: 0 most Nash, 1 most Pareto
};

struct HeatmapResult {
  std::vector<HeatmapCell> cells;  // input order
  bool degenerate = false;         // all raw scores equal; every cell scored 0.5
};

// `required` lists "agent/config" keys that must be present.
inline HeatmapResult HeatmapScores(std::span<const HeatmapInput> inputs,
                                   std::span<const std::string> required = {}) {
  if (inputs.empty()) throw ContractError("heat map needs at least one cell");
  for (const auto& key : required) {
    const bool found = std::any_of(inputs.begin(), inputs.end(),
                                   [&](const HeatmapInput& c) { return c.agent + "/" + c.config == key; });
    if (!found) throw ContractError("heat map is missing cell " + key);
  }
  HeatmapResult out;
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double raw = inputs[i].freq_cp - inputs[i].freq_fp;
    out.cells.push_back(HeatmapCell{inputs[i].agent, inputs[i].config, raw, 0.0});
    lo = i == 0 ? raw : std::min(lo, raw);
    hi = i == 0 ? raw : std::max(hi, raw);
  }
  out.degenerate = !(hi > lo);
  for (auto& c : out.cells) c.scaled = out.degenerate ? 0.5 : (c.raw - lo) / (hi - lo);
  return out;
}

// Full grid keys "agent/config" for the given agents.
inline std::vector<std::string> GridKeys(std::span<const AgentKind> agents) {
  std::vector<std::string> keys;
  for (AgentKind a : agents) {
    for (int n : {2, 5}) {
      for (double s : {0.0, 0.5}) {
        ExperimentSpec spec;
        spec.agent = a;
        spec.market.n = n;
        spec.market.sigma_beta = s;
        keys.push_back(std::string(AgentKindName(a)) + "/" + spec.ConfigId());
      }
    }
  }
  return keys;
}

struct CellResult {
  ExperimentSpec spec;
  BetaDraw betas;
  std::vector<ReplicationLog> logs;  // ordered by replication index
  OutcomeSeries outcomes;
  std::optional<std::string> error;
};

struct GridResult {
  std::vector<CellResult> cells;
  std::optional<HeatmapResult> heatmap;

  bool ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return !c.error; });
  }
};

// The four market columns for each agent, sharing `base` for everything else.
inline std::vector<ExperimentSpec> GridSpecs(const ExperimentSpec& base, std::span<const AgentKind> agents) {
  std::vector<ExperimentSpec> specs;
  for (AgentKind a : agents) {
    for (int n : {2, 5}) {
      for (double s : {0.0, 0.5}) {
        ExperimentSpec spec = base;
        spec.agent = a;
        spec.market.n = n;
        spec.market.sigma_beta = s;
        specs.push_back(spec);
      }
    }
  }
  return specs;
}

inline std::vector<HeatmapInput> LastEpisodeTable(std::span<const CellResult> cells) {
  std::vector<HeatmapInput> table;
  for (const auto& c : cells) {
    if (c.error || c.outcomes.episodes() == 0) continue;
    table.push_back(HeatmapInput{AgentKindName(c.spec.agent), c.spec.ConfigId(), c.outcomes.all_fp.back(),
                                 c.outcomes.all_cp.back(), c.outcomes.other.back()});
  }
  return table;
}

// Replications run on `workers` threads; results land in fixed slots, so the
// output does not depend on scheduling or worker count.
inline GridResult RunCells(const std::vector<ExperimentSpec>& specs, int workers = 1,
                           const AgentFactory& factory = MakeAgent) {
  GridResult grid;
  grid.cells.resize(specs.size());
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    grid.cells[c].spec = specs[c];
    try {
      specs[c].Validate();
      grid.cells[c].betas = MarketBetas(specs[c]);
    } catch (const std::exception& e) {
      grid.cells[c].error = e.what();
      continue;
    }
    grid.cells[c].logs.resize(static_cast<std::size_t>(specs[c].replications));
    for (int r = 0; r < specs[c].replications; ++r) tasks.emplace_back(c, r);
  }

  std::vector<std::optional<std::string>> task_errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const auto [c, r] = tasks[t];
      try {
        grid.cells[c].logs[static_cast<std::size_t>(r)] = RunReplication(specs[c], r, factory);
      } catch (const std::exception& e) {
        task_errors[t] = "replication " + std::to_string(r) + ": " + e.what();
      }
    }
  };
  const int threads = std::max(1, workers);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& cell = grid.cells[tasks[t].first];
    if (task_errors[t] && !cell.error) cell.error = *task_errors[t];
  }
  for (auto& cell : grid.cells) {
    if (!cell.error) cell.outcomes = ClassifyOutcomes(ProfilesOf(cell.logs));
  }
  const auto table = LastEpisodeTable(grid.cells);
  if (!table.empty()) grid.heatmap = HeatmapScores(table);
  return grid;
}

inline GridResult RunGrid(const ExperimentSpec& base, std::span<const AgentKind> agents = kAllAgentKinds,
                          int workers = 1) {
  auto specs = GridSpecs(base, agents);
  GridResult grid = RunCells(specs, workers);
  if (grid.ok() && grid.heatmap) {
    const auto keys = GridKeys(agents);
    grid.heatmap = HeatmapScores(LastEpisodeTable(grid.cells), keys);
  }
  return grid;
}

// Regret curves [replication][agent][t], t = 0..episodes, for one cell.
inline std::vector<std::vector<std::vector<double>>> RegretCurves(const CellResult& cell) {
  std::vector<std::vector<std::vector<double>>> out;
  const int n = cell.spec.market.n;
  for (const auto& log : cell.logs) {
    std::vector<StrategyProfile> profiles;
    for (const auto& e : log.episodes) profiles.push_back(e.profile);
    std::vector<std::vector<double>> per_agent;
    for (int i = 0; i < n; ++i) {
      std::vector<double> realized;
      for (const auto& e : log.episodes) realized.push_back(e.rewards[static_cast<std::size_t>(i)]);
      per_agent.push_back(CumulativeRegret(i, profiles, realized, cell.betas.profile, cell.spec.market.alpha,
                                           cell.spec.market.v));
    }
    out.push_back(std::move(per_agent));
  }
  return out;
}

// Named per-episode metric, averaged over replications and agents.
struct MetricSeries {
  std::string metric;
  int first_episode = 1;     // episode of mean[0]; regret starts from 0
  std::vector<double> mean;  // NaN where no replication produced a value
  std::vector<double> ci;
};

inline std::vector<MetricSeries> DiagnosticSeries(const CellResult& cell) {
  using Getter = double (*)(const AgentDiagnostics&);
  const std::vector<std::pair<const char*, Getter>> fields = {
      {"loss", [](const AgentDiagnostics& d) { return d.loss; }},
      {"actor_loss", [](const AgentDiagnostics& d) { return d.actor_loss; }},
      {"critic_loss", [](const AgentDiagnostics& d) { return d.critic_loss; }},
      {"entropy", [](const AgentDiagnostics& d) { return d.entropy; }},
      {"value_fp", [](const AgentDiagnostics& d) { return d.value_fp; }},
      {"value_cp", [](const AgentDiagnostics& d) { return d.value_cp; }},
      {"epsilon", [](const AgentDiagnostics& d) { return d.epsilon; }},
  };
  std::vector<MetricSeries> out;
  if (cell.logs.empty()) return out;
  const std::size_t episodes = cell.logs.front().episodes.size();
  for (const auto& [name, get] : fields) {
    MetricSeries s{name, 1, {}, {}};
    bool any = false;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
      std::vector<double> xs;
      for (const auto& log : cell.logs) {
        for (const auto& d : log.episodes[ep].diagnostics) {
          const double x = get(d);
          if (!std::isnan(x)) xs.push_back(x);
        }
      }
      if (xs.empty()) {
        s.mean.push_back(kNoValue);
        s.ci.push_back(kNoValue);
      } else {
        any = true;
        const auto [m, h] = MeanAndHalfWidth(xs);
        s.mean.push_back(m);
        s.ci.push_back(h);
      }
    }
    if (any) out.push_back(std::move(s));
  }
  if (IsBandit(cell.spec.agent)) {
    const auto curves = RegretCurves(cell);
    MetricSeries s{"regret", 0, {}, {}};
    for (std::size_t ep = 0; ep <= episodes; ++ep) {
      std::vector<double> xs;
      for (const auto& rep : curves) {
        for (const auto& agent_curve : rep) xs.push_back(agent_curve[ep]);
      }
      const auto [m, h] = MeanAndHalfWidth(xs);
      s.mean.push_back(m);
      s.ci.push_back(h);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Mean of the first and last `window` defined values of a series.
inline std::optional<std::pair<double, double>> HeadTailMeans(std::span<const double> series, std::size_t window) {
  std::vector<double> defined;
  for (double x : series) {
    if (!std::isnan(x)) defined.push_back(x);
  }
  if (defined.size() < 2 * window) return std::nullopt;
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    head += defined[i];
    tail += defined[defined.size() - 1 - i];
  }
  return std::make_pair(head / static_cast<double>(window), tail / static_cast<double>(window));
}

}  // namespace mpmg
