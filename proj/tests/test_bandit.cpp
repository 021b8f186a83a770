#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mpmg/bandit.hpp"

namespace mpmg {
namespace {

BanditState WithQ(std::vector<double> q) {
  auto s = BanditState::Fresh(static_cast<int>(q.size()));
  s.q_values = std::move(q);
  return s;
}

TEST(ArgmaxLowest, TiesGoToLowestIndex) {
  EXPECT_EQ(ArgmaxLowest(std::vector<double>{0.5, 0.5}), 0);
  EXPECT_EQ(ArgmaxLowest(std::vector<double>{0.1, 0.7, 0.7}), 1);
}

TEST(EpsilonGreedy, GreedyChoices) {
  Rng rng(1);
  EXPECT_EQ(EgreedySelect(WithQ({0.3, 0.7}), 0.0, rng).action, Action::kCollusivePrice);
  EXPECT_EQ(EgreedySelect(WithQ({0.5, 0.5}), 0.0, rng).action, Action::kFairPrice);
  EXPECT_THROW(EgreedySelect(WithQ({0, 0}), 1.5, rng), DomainError);
}

TEST(EpsilonGreedy, FullExplorationIsUniform) {
  Rng rng(2);
  const auto s = WithQ({0.9, 0.1});
  const int draws = 20000;
  int ones = 0;
  for (int k = 0; k < draws; ++k) ones += static_cast<int>(EgreedySelect(s, 1.0, rng).action);
  // Chi-square with one degree of freedom; 10.83 is the 0.001 critical value.
  const double e = draws / 2.0;
  const double chi2 = std::pow(ones - e, 2) / e + std::pow(draws - ones - e, 2) / e;
  EXPECT_LT(chi2, 10.83);
}

TEST(IncrementalUpdate, RunningMean) {
  auto s = IncrementalUpdate(BanditState::Fresh(), 0, 0.5);
  EXPECT_EQ(s.q_values[0], 0.5);
  EXPECT_EQ(s.counts[0], 1);
  s = IncrementalUpdate(BanditState::Fresh(), 1, 1.0);
  s = IncrementalUpdate(s, 1, 0.0);
  EXPECT_EQ(s.q_values[1], 0.5);
  EXPECT_EQ(s.total_pulls, 2);
  EXPECT_THROW(IncrementalUpdate(s, 2, 0.0), ContractError);
}

TEST(IncrementalUpdate, MatchesDirectMean) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  auto s = BanditState::Fresh();
  std::vector<double> log;
  for (int k = 0; k < 10; ++k) {
    log.push_back(u(rng));
    s = IncrementalUpdate(s, 0, log.back());
  }
  EXPECT_NEAR(s.q_values[0], std::accumulate(log.begin(), log.end(), 0.0) / 10.0, 1e-12);
}

TEST(Ucb, ForcedSweepThenIndex) {
  auto s = BanditState::Fresh();
  EXPECT_EQ(UcbSelect(s).action, Action::kFairPrice);
  s = IncrementalUpdate(s, 0, 0.5);
  EXPECT_EQ(UcbSelect(s).action, Action::kCollusivePrice);
  s = IncrementalUpdate(s, 1, 0.5);
  EXPECT_EQ(UcbSelect(s).action, Action::kFairPrice);
}

TEST(Ucb, IndexExample) {
  BanditState s = BanditState::Fresh();
  s.q_values = {0.25, 0.325};
  s.counts = {3, 1};
  s.total_pulls = 4;
  const double i0 = 0.25 + std::sqrt(2 * std::log(4.0) / 3);
  const double i1 = 0.325 + std::sqrt(2 * std::log(4.0));
  EXPECT_NEAR(UcbIndex(s, 0), i0, 1e-15);
  EXPECT_NEAR(UcbIndex(s, 1), i1, 1e-15);
  EXPECT_EQ(UcbSelect(s).action, Action::kCollusivePrice);
}

TEST(Ucb, IdenticalStatesChooseIdentically) {
  UcbAgent a;
  UcbAgent b;
  Observation obs;
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto da = a.Act(obs);
    const auto db = b.Act(obs);
    ASSERT_EQ(da.action, db.action);
    const double r = std::uniform_real_distribution<double>(0, 1)(rng);
    a.Observe({obs, da.action, r, obs, false});
    b.Observe({obs, db.action, r, obs, false});
  }
}

TEST(Thompson, PosteriorUpdates) {
  auto s = ThompsonUpdate(BanditState::Fresh(), 0, 1.0);
  EXPECT_EQ(s.beta_a[0], 2.0);
  EXPECT_EQ(s.beta_b[0], 1.0);
  s = ThompsonUpdate(BanditState::Fresh(), 0, 0.0);
  EXPECT_EQ(s.beta_a[0], 1.0);
  EXPECT_EQ(s.beta_b[0], 2.0);
  EXPECT_THROW(ThompsonUpdate(BanditState::Fresh(), 0, 1.3), ContractError);
  EXPECT_THROW(ThompsonUpdate(BanditState::Fresh(), 0, -0.1), ContractError);
}

TEST(Thompson, BinarizedRewards) {
  EXPECT_EQ(BinarizeReward(0.0), 0.0);
  EXPECT_EQ(BinarizeReward(0.25), 1.0);
}

TEST(Thompson, ConcentratedPosteriorPicksBetterArm) {
  auto s = BanditState::Fresh();
  for (int k = 0; k < 1000; ++k) {
    s = ThompsonUpdate(s, 0, 1.0);
    s = ThompsonUpdate(s, 1, 0.0);
  }
  Rng rng(5);
  int zeros = 0;
  for (int k = 0; k < 10000; ++k) zeros += ThompsonSelect(s, rng).action == Action::kFairPrice;
  EXPECT_GT(zeros / 10000.0, 0.99);
}

TEST(Thompson, SampleBetaMoments) {
  Rng rng(6);
  const double a = 3.0;
  const double b = 5.0;
  double sum = 0.0;
  double sq = 0.0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const double x = SampleBeta(a, b, rng);
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / draws;
  const double var = sq / draws - mean * mean;
  EXPECT_NEAR(mean, a / (a + b), 0.005);
  EXPECT_NEAR(var, a * b / ((a + b) * (a + b) * (a + b + 1)), 0.001);
}

// Agents driven with random rewards keep their bookkeeping exact.
TEST(BanditAgents, StateInvariantsUnderRandomPlay) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  EpsilonGreedyAgent eg(EpsilonSchedule{}, 1);
  UcbAgent ucb;
  ThompsonAgent ts(2);
  ThompsonAgent ts_bin(3, ThompsonReward::kBinary);
  std::vector<Agent*> agents = {&eg, &ucb, &ts, &ts_bin};
  std::vector<std::array<std::vector<double>, 2>> logs(agents.size());
  Observation obs;
  for (int t = 0; t < 300; ++t) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const auto d = agents[k]->Act(obs);
      const double r = u(rng) < 0.3 ? 0.0 : u(rng);
      agents[k]->Observe({obs, d.action, r, obs, false});
      logs[k][static_cast<std::size_t>(d.action)].push_back(r);
    }
  }
  const std::vector<const BanditState*> states = {&eg.state(), &ucb.state(), &ts.state(), &ts_bin.state()};
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto& s = *states[k];
    EXPECT_EQ(s.total_pulls, s.counts[0] + s.counts[1]);
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_EQ(s.counts[a], static_cast<std::int64_t>(logs[k][a].size()));
      if (!logs[k][a].empty() && k < 2) {
        const double mean = std::accumulate(logs[k][a].begin(), logs[k][a].end(), 0.0) / logs[k][a].size();
        EXPECT_NEAR(s.q_values[a], mean, 1e-12);
      }
      EXPECT_GE(s.beta_a[a], 1.0);
      EXPECT_GE(s.beta_b[a], 1.0);
      if (k >= 2) {
        EXPECT_NEAR(s.beta_a[a] + s.beta_b[a] - 2.0, static_cast<double>(s.counts[a]), 1e-9);
      }
    }
  }
}

TEST(EpsilonGreedyAgent, ScheduleDecaysToFloor) {
  EpsilonGreedyAgent agent(EpsilonSchedule{0.3, 0.5, 0.01}, 1);
  Observation obs;
  for (int t = 0; t < 20; ++t) {
    const auto d = agent.Act(obs);
    agent.Observe({obs, d.action, 0.1, obs, false});
  }
  EXPECT_EQ(agent.epsilon(), 0.01);
  EpsilonGreedyAgent constant(EpsilonSchedule{}, 1);
  for (int t = 0; t < 20; ++t) {
    const auto d = constant.Act(obs);
    constant.Observe({obs, d.action, 0.1, obs, false});
  }
  EXPECT_EQ(constant.epsilon(), 0.3);
}

TEST(Regret, Examples) {
  const auto betas = PowerProfile::Homogeneous(2);
  const std::vector<StrategyProfile> sucker = {StrategyProfile::FromBits(std::vector<int>{1, 0})};
  const std::vector<double> zero = {0.0};
  const auto one = CumulativeRegret(0, sucker, zero, betas, 1.3, 1.0);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_EQ(one[0], 0.0);
  // Switching to FP against an FP opponent would have earned 0.25.
  EXPECT_NEAR(one[1], 0.25, 1e-12);

  // Always best-responding: FP against FP earns 0.25 which beats CP's 0.
  std::vector<StrategyProfile> fair(10, StrategyProfile::Uniform(2, Action::kFairPrice));
  std::vector<double> quarter(10, 0.25);
  for (double x : CumulativeRegret(0, fair, quarter, betas, 1.3, 1.0)) EXPECT_NEAR(x, 0.0, 1e-15);

  EXPECT_THROW(CumulativeRegret(0, fair, zero, betas, 1.3, 1.0), ContractError);
  EXPECT_THROW(CumulativeRegret(3, fair, quarter, betas, 1.3, 1.0), ContractError);
}

TEST(Regret, NonDecreasingOnRandomPlay) {
  std::mt19937_64 rng(9);
  for (int n : {2, 3, 5}) {
    const auto betas = GenerateBetas(n, 0.2, 1).profile;
    std::vector<StrategyProfile> profiles;
    std::vector<double> realized;
    for (int t = 0; t < 100; ++t) {
      profiles.push_back(StrategyProfile::FromIndex(rng() % (1u << n), n));
      realized.push_back(ComputePayoffs(profiles.back(), betas, 1.3, 1.0)[0]);
    }
    const auto curve = CumulativeRegret(0, profiles, realized, betas, 1.3, 1.0);
    ASSERT_EQ(curve.size(), profiles.size() + 1);
    EXPECT_EQ(curve.front(), 0.0);
    for (std::size_t t = 1; t < curve.size(); ++t) EXPECT_GE(curve[t], curve[t - 1]);
  }
}

}  // namespace
}  // namespace mpmg
