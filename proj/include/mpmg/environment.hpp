#pragma once

// Episodic Minimum Price Markov Game. Each episode is one sealed-bid auction;
// the state is the running history statistics of all agents.

#include <cstdint>
#include <span>
#include <vector>

#include "mpmg/errors.hpp"
#include "mpmg/game.hpp"

namespace mpmg {

inline constexpr int kDefaultEpisodes = 100;

inline int ObservationDim(int n) { return 3 * n + (1 << n); }

struct Observation {
  std::vector<double> action_freqs;        // mean past action per agent
  std::vector<double> avg_rewards;         // mean past reward per agent
  std::vector<double> joint_profile_hist;  // 2^n, indexed by StrategyProfile::Index()
  std::vector<double> betas;

  int dim() const {
    return static_cast<int>(action_freqs.size() + avg_rewards.size() + joint_profile_hist.size() +
                            betas.size());
  }

  // Flat network input: [action_freqs | avg_rewards | joint_profile_hist | betas].
  std::vector<double> Flatten() const {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(dim()));
    flat.insert(flat.end(), action_freqs.begin(), action_freqs.end());
    flat.insert(flat.end(), avg_rewards.begin(), avg_rewards.end());
    flat.insert(flat.end(), joint_profile_hist.begin(), joint_profile_hist.end());
    flat.insert(flat.end(), betas.begin(), betas.end());
    return flat;
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct StepResult {
  PayoffVector rewards;
  Observation next_observation;
  int episode_index = 0;  // 1-based index of the episode just played
  bool done = false;      // true on the last episode of the budget
};

class MarketEnvironment {
 public:
  MarketEnvironment() = default;

  Observation Reset(const MarketConfig& config, const PowerProfile& betas,
                    int episode_budget = kDefaultEpisodes) {
    config.Validate();
    if (betas.size() != config.n) throw ContractError("betas length differs from config.n");
    if (config.n > kMaxEnumerationPlayers) {
      throw CapacityError("joint-profile histogram supports at most 12 players");
    }
    if (episode_budget < 1) throw DomainError("episode budget must be positive");
    config_ = config;
    betas_ = betas;
    budget_ = episode_budget;
    t_ = 0;
    const auto n = static_cast<std::size_t>(config.n);
    action_sums_.assign(n, 0.0);
    reward_sums_.assign(n, 0.0);
    profile_counts_.assign(std::size_t{1} << n, 0);
    ready_ = true;
    return MakeObservation();
  }

  StepResult Step(const StrategyProfile& profile) {
    if (!ready_) throw StateError("step called before reset");
    if (t_ >= budget_) throw StateError("episode budget exhausted; reset first");
    if (profile.size() != config_.n) throw ContractError("profile length differs from n");
    StepResult result;
    result.rewards = ComputePayoffs(profile, betas_, config_.alpha, config_.v);
    ++t_;
    for (int i = 0; i < config_.n; ++i) {
      action_sums_[static_cast<std::size_t>(i)] += profile.bit(i);
      reward_sums_[static_cast<std::size_t>(i)] += result.rewards[static_cast<std::size_t>(i)];
    }
    ++profile_counts_[profile.Index()];
    result.next_observation = MakeObservation();
    result.episode_index = t_;
    result.done = t_ == budget_;
    return result;
  }

  Observation CurrentObservation() const {
    if (!ready_) throw StateError("environment has not been reset");
    return MakeObservation();
  }

  int episode() const { return t_; }
  int budget() const { return budget_; }
  const MarketConfig& config() const { return config_; }
  const PowerProfile& betas() const { return betas_; }

 private:
  Observation MakeObservation() const {
    Observation obs;
    const auto n = static_cast<std::size_t>(config_.n);
    obs.action_freqs.assign(n, 0.0);
    obs.avg_rewards.assign(n, 0.0);
    obs.joint_profile_hist.assign(profile_counts_.size(), 0.0);
    if (t_ > 0) {
      const double t = t_;
      for (std::size_t i = 0; i < n; ++i) {
        obs.action_freqs[i] = action_sums_[i] / t;
        obs.avg_rewards[i] = reward_sums_[i] / t;
      }
      for (std::size_t k = 0; k < profile_counts_.size(); ++k) {
        obs.joint_profile_hist[k] = static_cast<double>(profile_counts_[k]) / t;
      }
    }
    const auto vals = betas_.values();
    obs.betas.assign(vals.begin(), vals.end());
    return obs;
  }

  MarketConfig config_;
  PowerProfile betas_;
  int budget_ = kDefaultEpisodes;
  int t_ = 0;
  bool ready_ = false;
  std::vector<double> action_sums_;
  std::vector<double> reward_sums_;
  std::vector<std::int64_t> profile_counts_;
};

// Normalised discounted return (1 - gamma) sum_m gamma^m r^{t-m}, where
// rewards[0] is r^1 and rewards.back() is r^t.
inline double DiscountedReturn(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  double acc = 0.0;
  for (double r : rewards) acc = gamma * acc + r;  // Horner from the oldest reward
  return (1.0 - gamma) * acc;
}

}  // namespace mpmg
