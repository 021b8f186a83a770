#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mpmg/experiment.hpp"
#include "oracles.hpp"

namespace mpmg {
namespace {

class FixedAgent final : public Agent {
 public:
  explicit FixedAgent(Action a) : action_(a) {}
  AgentDecision Act(const Observation&) override { return {action_, false}; }
  void Observe(const Transition&) override {}
  std::string_view name() const override { return "fixed"; }

 private:
  Action action_;
};

class ThrowingAgent final : public Agent {
 public:
  AgentDecision Act(const Observation&) override { throw NumericError("diverged"); }
  void Observe(const Transition&) override {}
  std::string_view name() const override { return "throwing"; }
};

ExperimentSpec SmallSpec(AgentKind agent, int n = 2, double sigma = 0.0, int reps = 4, int episodes = 20) {
  ExperimentSpec spec;
  spec.agent = agent;
  spec.market.n = n;
  spec.market.sigma_beta = sigma;
  spec.replications = reps;
  spec.episodes = episodes;
  spec.base_seed = 7;
  spec.hp.d3qn.hidden = 16;
  spec.hp.ppo.hidden = 16;
  return spec;
}

ProfileMatrix FinalProfiles(int all_fp, int all_cp, int other) {
  ProfileMatrix m;
  for (int k = 0; k < all_fp; ++k) m.push_back({StrategyProfile::Uniform(2, Action::kFairPrice)});
  for (int k = 0; k < all_cp; ++k) m.push_back({StrategyProfile::Uniform(2, Action::kCollusivePrice)});
  for (int k = 0; k < other; ++k) m.push_back({StrategyProfile::FromBits(std::vector<int>{0, 1})});
  return m;
}

TEST(ExperimentSpec, Ids) {
  auto spec = SmallSpec(AgentKind::kUcb, 5, 0.5);
  EXPECT_EQ(spec.ConfigId(), "n5_s0.5");
  EXPECT_EQ(spec.CellId(), "ucb_n5_s0.5");
  for (AgentKind k : kAllAgentKinds) EXPECT_EQ(ParseAgentKind(AgentKindName(k)), k);
  EXPECT_FALSE(ParseAgentKind("sarsa").has_value());
}

TEST(ClassifyOutcomes, Examples) {
  const auto all = ClassifyOutcomes(FinalProfiles(100, 0, 0));
  EXPECT_EQ(all.all_fp.back(), 1.0);
  EXPECT_EQ(all.all_cp.back(), 0.0);
  EXPECT_EQ(all.other.back(), 0.0);
  EXPECT_EQ(all.ci_fp.back(), 0.0);

  const auto mixed = ClassifyOutcomes(FinalProfiles(40, 58, 2));
  EXPECT_NEAR(mixed.all_fp.back(), 0.40, 1e-12);
  EXPECT_NEAR(mixed.all_cp.back(), 0.58, 1e-12);
  EXPECT_NEAR(mixed.other.back(), 0.02, 1e-12);
  // Binomial half-width for p = 0.4 over 100 replications.
  EXPECT_NEAR(mixed.ci_fp.back(), 1.96 * std::sqrt(0.4 * 0.6 / 100), 1e-12);

  EXPECT_THROW(ClassifyOutcomes(ProfileMatrix{{StrategyProfile::Uniform(2, Action::kFairPrice)}, {}}),
               ContractError);
}

// Both modes checked against a direct recount of random logs.
TEST(ClassifyOutcomes, MatchesRecount) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int reps = 1 + static_cast<int>(rng() % 30);
    const int eps = 1 + static_cast<int>(rng() % 25);
    ProfileMatrix m(static_cast<std::size_t>(reps));
    for (auto& row : m) {
      for (int e = 0; e < eps; ++e) {
        // Bias toward the uniform profiles so all three classes occur.
        const auto r = rng() % 4;
        row.push_back(r == 0 ? StrategyProfile::Uniform(n, Action::kFairPrice)
                      : r == 1 ? StrategyProfile::Uniform(n, Action::kCollusivePrice)
                               : StrategyProfile::FromIndex(rng() % (1u << n), n));
      }
    }
    const auto inst = ClassifyOutcomes(m, OutcomeMode::kInstantaneous);
    const auto cum = ClassifyOutcomes(m, OutcomeMode::kCumulative);
    for (int e = 0; e < eps; ++e) {
      double fp = 0, cp = 0, cfp = 0, ccp = 0;
      for (const auto& row : m) {
        fp += row[e].AllFair();
        cp += row[e].AllCollusive();
        double rf = 0, rc = 0;
        for (int k = 0; k <= e; ++k) {
          rf += row[k].AllFair();
          rc += row[k].AllCollusive();
        }
        cfp += rf / (e + 1);
        ccp += rc / (e + 1);
      }
      EXPECT_NEAR(inst.all_fp[e], fp / reps, 1e-12);
      EXPECT_NEAR(inst.all_cp[e], cp / reps, 1e-12);
      EXPECT_NEAR(cum.all_fp[e], cfp / reps, 1e-12);
      EXPECT_NEAR(cum.all_cp[e], ccp / reps, 1e-12);
      for (const auto* s : {&inst, &cum}) {
        EXPECT_NEAR(s->all_fp[e] + s->all_cp[e] + s->other[e], 1.0, 1e-12);
        EXPECT_GE(s->all_fp[e], 0.0);
        EXPECT_LE(s->other[e], 1.0);
      }
    }
  }
}

TEST(Heatmap, ReferenceInputs) {
  const auto table = oracle::ReferenceTable();
  const auto h = HeatmapScores(table, GridKeys(kAllAgentKinds));
  ASSERT_EQ(h.cells.size(), 20u);
  EXPECT_FALSE(h.degenerate);
  const auto find = [&](const std::string& a, const std::string& c) {
    return *std::find_if(h.cells.begin(), h.cells.end(), [&](const auto& x) { return x.agent == a && x.config == c; });
  };
  EXPECT_NEAR(find("ucb", "n2_s0.0").raw, 0.18, 1e-12);
  EXPECT_EQ(find("ucb", "n2_s0.0").scaled, 1.0);
  EXPECT_NEAR(find("ts", "n2_s0.0").raw, -0.68, 1e-12);
  EXPECT_EQ(find("ts", "n2_s0.0").scaled, 0.0);
  auto sorted = h.cells;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.scaled > b.scaled; });
  EXPECT_EQ(sorted[0].agent, "ucb");
  EXPECT_EQ(sorted[1].agent, "ucb");
  EXPECT_EQ(sorted[2].agent, "ucb");
}

TEST(Heatmap, DegenerateAndMissingKeys) {
  std::vector<HeatmapInput> same = {{"a", "x", 0.5, 0.5, 0.0}, {"b", "x", 0.2, 0.2, 0.6}};
  const auto h = HeatmapScores(same);
  EXPECT_TRUE(h.degenerate);
  for (const auto& c : h.cells) EXPECT_EQ(c.scaled, 0.5);
  EXPECT_THROW(HeatmapScores(same, std::vector<std::string>{"a/x", "c/x"}), ContractError);
}

TEST(Heatmap, MonotoneInCollusiveFrequency) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    auto table = oracle::ReferenceTable();
    for (auto& t : table) {
      t.freq_fp = u(rng);
      t.freq_cp = u(rng);
    }
    const std::size_t k = rng() % table.size();
    const double before = HeatmapScores(table).cells[k].scaled;
    table[k].freq_cp += 0.1;
    EXPECT_GE(HeatmapScores(table).cells[k].scaled, before - 1e-15);
  }
}

TEST(Runner, ReplicationIsDeterministic) {
  for (AgentKind k : kAllAgentKinds) {
    const auto spec = SmallSpec(k, 2, 0.5, 2, 15);
    const auto a = RunReplication(spec, 1, MakeAgent);
    const auto b = RunReplication(spec, 1, MakeAgent);
    ASSERT_EQ(a.episodes.size(), b.episodes.size());
    for (std::size_t e = 0; e < a.episodes.size(); ++e) {
      EXPECT_EQ(a.episodes[e].profile, b.episodes[e].profile);
      EXPECT_EQ(a.episodes[e].rewards, b.episodes[e].rewards);
    }
  }
}

TEST(Runner, UcbDuopolyIdenticalAcrossReplications) {
  const auto cell = RunCells({SmallSpec(AgentKind::kUcb, 2, 0.0, 30, 100)}).cells.front();
  for (const auto& log : cell.logs) {
    for (std::size_t e = 0; e < log.episodes.size(); ++e) {
      EXPECT_EQ(log.episodes[e].profile, cell.logs.front().episodes[e].profile);
      EXPECT_EQ(log.episodes[e].rewards, cell.logs.front().episodes[e].rewards);
    }
  }
  for (int e = 0; e < cell.outcomes.episodes(); ++e) {
    EXPECT_EQ(cell.outcomes.ci_fp[e], 0.0);
    EXPECT_EQ(cell.outcomes.ci_cp[e], 0.0);
    EXPECT_EQ(cell.outcomes.ci_other[e], 0.0);
  }
}

TEST(Runner, ScriptedDefectorsAlwaysReachAllFp) {
  const AgentFactory defect = [](const ExperimentSpec&, int, std::uint64_t) {
    return std::make_unique<FixedAgent>(Action::kFairPrice);
  };
  const auto grid = RunCells({SmallSpec(AgentKind::kUcb)}, 1, defect);
  ASSERT_TRUE(grid.ok());
  for (const auto& log : grid.cells.front().logs) {
    for (const auto& e : log.episodes) {
      EXPECT_TRUE(e.profile.AllFair());
      for (double r : e.rewards) EXPECT_NEAR(r, 0.25, 1e-12);
    }
  }
  EXPECT_EQ(grid.cells.front().outcomes.all_fp.back(), 1.0);
}

TEST(Runner, FailingCellIsReportedWithoutStoppingOthers) {
  const AgentFactory factory = [](const ExperimentSpec& spec, int i, std::uint64_t seed) -> std::unique_ptr<Agent> {
    if (spec.agent == AgentKind::kMappo) return std::make_unique<ThrowingAgent>();
    return MakeAgent(spec, i, seed);
  };
  const auto grid = RunCells({SmallSpec(AgentKind::kUcb), SmallSpec(AgentKind::kMappo)}, 2, factory);
  EXPECT_FALSE(grid.ok());
  EXPECT_FALSE(grid.cells[0].error.has_value());
  ASSERT_TRUE(grid.cells[1].error.has_value());
  EXPECT_NE(grid.cells[1].error->find("diverged"), std::string::npos);
}

TEST(Runner, InvalidSpecIsACellError) {
  auto bad = SmallSpec(AgentKind::kUcb);
  bad.market.alpha = 3.0;
  const auto grid = RunCells({bad});
  ASSERT_TRUE(grid.cells.front().error.has_value());
}

TEST(Runner, WorkerCountDoesNotChangeResults) {
  std::vector<ExperimentSpec> specs;
  for (AgentKind k : kAllAgentKinds) specs.push_back(SmallSpec(k, 5, 0.5, 3, 12));
  const auto one = RunCells(specs, 1);
  const auto four = RunCells(specs, 4);
  for (std::size_t c = 0; c < specs.size(); ++c) {
    EXPECT_EQ(one.cells[c].outcomes.all_fp, four.cells[c].outcomes.all_fp);
    EXPECT_EQ(one.cells[c].outcomes.other, four.cells[c].outcomes.other);
    for (std::size_t r = 0; r < one.cells[c].logs.size(); ++r) {
      for (std::size_t e = 0; e < one.cells[c].logs[r].episodes.size(); ++e) {
        EXPECT_EQ(one.cells[c].logs[r].episodes[e].rewards, four.cells[c].logs[r].episodes[e].rewards);
      }
    }
  }
}

TEST(Grid, Cardinality) {
  EXPECT_EQ(GridSpecs(ExperimentSpec{}, kAllAgentKinds).size(), 20u);
  const std::vector<AgentKind> one = {AgentKind::kThompson};
  EXPECT_EQ(GridSpecs(ExperimentSpec{}, one).size(), 4u);
  EXPECT_EQ(GridKeys(kAllAgentKinds).size(), 20u);
}

TEST(Grid, SameSeedSameResults) {
  auto base = SmallSpec(AgentKind::kUcb, 2, 0.0, 2, 10);
  const std::vector<AgentKind> agents = {AgentKind::kThompson, AgentKind::kEGreedy};
  const auto a = RunGrid(base, agents);
  const auto b = RunGrid(base, agents);
  ASSERT_EQ(a.cells.size(), 8u);
  for (std::size_t c = 0; c < a.cells.size(); ++c) {
    EXPECT_EQ(a.cells[c].outcomes.all_fp, b.cells[c].outcomes.all_fp);
    EXPECT_EQ(a.cells[c].outcomes.all_cp, b.cells[c].outcomes.all_cp);
  }
  ASSERT_TRUE(a.heatmap.has_value());
  EXPECT_EQ(a.heatmap->cells.size(), 8u);
}

// Total payout per episode is positive and bounded: the FP set splits a
// weighted mean of its bids, an all-CP market pays alpha sum beta b.
TEST(Grid, PayoffConservation) {
  for (AgentKind k : {AgentKind::kThompson, AgentKind::kEGreedy, AgentKind::kUcb}) {
    const auto cell = RunCells({SmallSpec(k, 5, 0.5, 3, 40)}).cells.front();
    const auto& betas = cell.betas.profile;
    double max_bid = 0.0;
    double collusive_total = 0.0;
    for (int i = 0; i < betas.size(); ++i) {
      max_bid = std::max(max_bid, ComputeBid(betas[i], 1.0));
      collusive_total += cell.spec.market.alpha * betas[i] * ComputeBid(betas[i], 1.0);
    }
    for (const auto& log : cell.logs) {
      for (const auto& e : log.episodes) {
        double sum = 0.0;
        for (double r : e.rewards) sum += r;
        EXPECT_LE(sum, (e.profile.AllCollusive() ? collusive_total : max_bid) + 1e-12);
        EXPECT_GT(sum, 0.0);
      }
    }
  }
}

TEST(Diagnostics, SeriesPerAgentKind) {
  for (AgentKind k : kAllAgentKinds) {
    const auto cell = RunCells({SmallSpec(k, 2, 0.0, 2, 40)}).cells.front();
    std::vector<std::string> names;
    for (const auto& s : DiagnosticSeries(cell)) names.push_back(s.metric);
    const auto has = [&](const char* m) { return std::find(names.begin(), names.end(), m) != names.end(); };
    EXPECT_EQ(has("loss"), k == AgentKind::kD3qn);
    EXPECT_EQ(has("actor_loss"), k == AgentKind::kMappo);
    EXPECT_EQ(has("critic_loss"), k == AgentKind::kMappo);
    EXPECT_EQ(has("regret"), IsBandit(k));
    EXPECT_TRUE(has("value_fp"));
  }
}

TEST(Diagnostics, RegretCurvesStartAtZeroAndNeverDecrease) {
  for (AgentKind k : {AgentKind::kThompson, AgentKind::kEGreedy, AgentKind::kUcb}) {
    const auto cell = RunCells({SmallSpec(k, 5, 0.5, 3, 30)}).cells.front();
    for (const auto& rep : RegretCurves(cell)) {
      for (const auto& curve : rep) {
        ASSERT_EQ(curve.size(), 31u);
        EXPECT_EQ(curve.front(), 0.0);
        for (std::size_t t = 1; t < curve.size(); ++t) EXPECT_GE(curve[t], curve[t - 1]);
      }
    }
  }
}

TEST(Diagnostics, HeadTailMeans) {
  const std::vector<double> s = {kNoValue, 1, 2, 3, kNoValue, 4, 5, 6};
  const auto ht = HeadTailMeans(s, 2);
  ASSERT_TRUE(ht.has_value());
  EXPECT_DOUBLE_EQ(ht->first, 1.5);
  EXPECT_DOUBLE_EQ(ht->second, 5.5);
  EXPECT_FALSE(HeadTailMeans(s, 4).has_value());
}

}  // namespace
}  // namespace mpmg
