#pragma once

// Stateless bandit players of the iterated game: epsilon-greedy, UCB1 and
// Beta-Bernoulli Thompson sampling. They ignore observations.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpmg/agent.hpp"
#include "mpmg/errors.hpp"
#include "mpmg/game.hpp"
#include "mpmg/seeding.hpp"

namespace mpmg {

struct BanditState {
  std::vector<double> q_values;
  std::vector<std::int64_t> counts;
  std::int64_t total_pulls = 0;
  std::vector<double> beta_a;  // Thompson posterior, successes + 1
  std::vector<double> beta_b;  // failures + 1

  static BanditState Fresh(int arms = kNumActions) {
    const auto k = static_cast<std::size_t>(arms);
    return BanditState{std::vector<double>(k, 0.0), std::vector<std::int64_t>(k, 0), 0,
                       std::vector<double>(k, 1.0), std::vector<double>(k, 1.0)};
  }

  int arms() const { return static_cast<int>(q_values.size()); }
};

// First index of the maximum.
inline int ArgmaxLowest(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

inline AgentDecision DecisionFor(int arm, bool explored) {
  return AgentDecision{static_cast<Action>(arm), explored};
}

inline AgentDecision EgreedySelect(const BanditState& state, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<int> arm(0, state.arms() - 1);
    return DecisionFor(arm(rng), true);
  }
  return DecisionFor(ArgmaxLowest(state.q_values), false);
}

// Q(a) += (R - Q(a)) / N(a).
inline BanditState IncrementalUpdate(BanditState state, int arm, double reward) {
  if (arm < 0 || arm >= state.arms()) throw ContractError("arm index out of range");
  const auto a = static_cast<std::size_t>(arm);
  ++state.counts[a];
  ++state.total_pulls;
  state.q_values[a] += (reward - state.q_values[a]) / static_cast<double>(state.counts[a]);
  return state;
}

// UCB1 index Q(a) + sqrt(2 ln t / N(a)) with t the total pull count.
inline double UcbIndex(const BanditState& state, int arm) {
  const auto a = static_cast<std::size_t>(arm);
  return state.q_values[a] +
         std::sqrt(2.0 * std::log(static_cast<double>(state.total_pulls)) /
                   static_cast<double>(state.counts[a]));
}

inline AgentDecision UcbSelect(const BanditState& state) {
  for (int a = 0; a < state.arms(); ++a) {
    if (state.counts[static_cast<std::size_t>(a)] == 0) return DecisionFor(a, true);
  }
  std::vector<double> index(static_cast<std::size_t>(state.arms()));
  for (int a = 0; a < state.arms(); ++a) index[static_cast<std::size_t>(a)] = UcbIndex(state, a);
  return DecisionFor(ArgmaxLowest(index), false);
}

inline double SampleBeta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

inline AgentDecision ThompsonSelect(const BanditState& state, Rng& rng) {
  std::vector<double> draws(static_cast<std::size_t>(state.arms()));
  for (std::size_t a = 0; a < draws.size(); ++a) draws[a] = SampleBeta(state.beta_a[a], state.beta_b[a], rng);
  return DecisionFor(ArgmaxLowest(draws), false);
}

// Maps a payoff to a win/loss signal: anything strictly positive is a win.
inline double BinarizeReward(double reward) { return reward > 0.0 ? 1.0 : 0.0; }

// a += r, b += 1 - r. Rewards must lie in [0, 1]; fractional values give the
// usual fractional Beta-Bernoulli update.
inline BanditState ThompsonUpdate(BanditState state, int arm, double reward) {
  if (!(reward >= 0.0 && reward <= 1.0)) {
    throw ContractError("Thompson update expects a reward in [0, 1], got " + std::to_string(reward));
  }
  const auto a = static_cast<std::size_t>(arm);
  state = IncrementalUpdate(std::move(state), arm, reward);
  state.beta_a[a] += reward;
  state.beta_b[a] += 1.0 - reward;
  return state;
}

enum class ThompsonReward { kFractional, kBinary };

// Cumulative regret against the better of the two actions, opponents' realised
// play held fixed. curve[t] covers the first t episodes, so curve[0] = 0 and
// the curve has one more point than the log. Increments are >= 0.
inline std::vector<double> CumulativeRegret(int agent, std::span<const StrategyProfile> profiles,
                                            std::span<const double> realized_rewards,
                                            const PowerProfile& betas, double alpha, double v) {
  if (profiles.size() != realized_rewards.size()) {
    throw ContractError("regret needs one realised reward per logged profile");
  }
  if (agent < 0 || agent >= betas.size()) throw ContractError("agent index out of range");
  std::vector<double> curve;
  curve.reserve(profiles.size() + 1);
  double total = 0.0;
  curve.push_back(total);
  for (std::size_t m = 0; m < profiles.size(); ++m) {
    if (profiles[m].size() != betas.size()) throw ContractError("logged profile is missing opponent actions");
    const double fp = ComputePayoffs(profiles[m].With(agent, Action::kFairPrice), betas, alpha, v)
        [static_cast<std::size_t>(agent)];
    const double cp = ComputePayoffs(profiles[m].With(agent, Action::kCollusivePrice), betas, alpha, v)
        [static_cast<std::size_t>(agent)];
    total += std::max(fp, cp) - realized_rewards[m];
    curve.push_back(total);
  }
  return curve;
}

// Multiplicative decay per episode, floored. The default keeps epsilon at 0.3.
struct EpsilonSchedule {
  double start = 0.3;
  double decay = 1.0;
  double floor = 0.01;
};

class EpsilonGreedyAgent final : public Agent {
 public:
  EpsilonGreedyAgent(EpsilonSchedule schedule, std::uint64_t seed)
      : schedule_(schedule), epsilon_(schedule.start), rng_(seed) {}

  AgentDecision Act(const Observation&) override { return EgreedySelect(state_, epsilon_, rng_); }

  void Observe(const Transition& t) override {
    state_ = IncrementalUpdate(std::move(state_), static_cast<int>(t.action), t.reward);
    epsilon_ = std::max(epsilon_ * schedule_.decay, schedule_.floor);
  }

  AgentDiagnostics Diagnostics() const override {
    AgentDiagnostics d;
    d.value_fp = state_.q_values[0];
    d.value_cp = state_.q_values[1];
    d.epsilon = epsilon_;
    return d;
  }

  std::string_view name() const override { return "egreedy"; }
  const BanditState& state() const { return state_; }
  double epsilon() const { return epsilon_; }

 private:
  EpsilonSchedule schedule_;
  double epsilon_;
  Rng rng_;
  BanditState state_ = BanditState::Fresh();
};

class UcbAgent final : public Agent {
 public:
  AgentDecision Act(const Observation&) override { return UcbSelect(state_); }

  void Observe(const Transition& t) override {
    state_ = IncrementalUpdate(std::move(state_), static_cast<int>(t.action), t.reward);
  }

  AgentDiagnostics Diagnostics() const override {
    AgentDiagnostics d;
    d.value_fp = state_.q_values[0];
    d.value_cp = state_.q_values[1];
    return d;
  }

  std::string_view name() const override { return "ucb"; }
  const BanditState& state() const { return state_; }

 private:
  BanditState state_ = BanditState::Fresh();
};

class ThompsonAgent final : public Agent {
 public:
  explicit ThompsonAgent(std::uint64_t seed, ThompsonReward mode = ThompsonReward::kFractional)
      : mode_(mode), rng_(seed) {}

  AgentDecision Act(const Observation&) override { return ThompsonSelect(state_, rng_); }

  void Observe(const Transition& t) override {
    const double r = mode_ == ThompsonReward::kBinary ? BinarizeReward(t.reward) : t.reward;
    state_ = ThompsonUpdate(std::move(state_), static_cast<int>(t.action), r);
  }

  // Posterior means.
  AgentDiagnostics Diagnostics() const override {
    AgentDiagnostics d;
    d.value_fp = state_.beta_a[0] / (state_.beta_a[0] + state_.beta_b[0]);
    d.value_cp = state_.beta_a[1] / (state_.beta_a[1] + state_.beta_b[1]);
    return d;
  }

  std::string_view name() const override { return "ts"; }
  const BanditState& state() const { return state_; }

 private:
  ThompsonReward mode_;
  Rng rng_;
  BanditState state_ = BanditState::Fresh();
};

}  // namespace mpmg
