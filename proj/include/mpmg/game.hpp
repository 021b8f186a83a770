#pragma once

// Single-stage Minimum Price Game: bids, payoffs, incentive factors,
// market-power generation and exhaustive classification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpmg/errors.hpp"
#include "mpmg/seeding.hpp"

namespace mpmg {

enum class Action : std::uint8_t { kFairPrice = 0, kCollusivePrice = 1 };

inline constexpr int kNumActions = 2;
inline constexpr int kMaxEnumerationPlayers = 12;
inline constexpr double kPayoffTolerance = 1e-12;
inline constexpr double kBetaFloor = 0.05;

inline const char* ActionName(Action a) {
  return a == Action::kFairPrice ? "FP" : "CP";
}

// Market-power shares beta_i, each in (0, 1), summing to one.
class PowerProfile {
 public:
  PowerProfile() = default;

  explicit PowerProfile(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.size() < 2) throw DomainError("power profile needs at least two players");
    double sum = 0.0;
    for (double b : betas_) {
      if (!(b > 0.0 && b < 1.0)) {
        throw DomainError("market power must lie strictly inside (0, 1), got " + std::to_string(b));
      }
      sum += b;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw DomainError("market powers must sum to 1, got " + std::to_string(sum));
    }
  }

  static PowerProfile Homogeneous(int n) {
    if (n < 2) throw DomainError("need at least two players");
    return PowerProfile(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
  }

  int size() const { return static_cast<int>(betas_.size()); }
  double operator[](int i) const { return betas_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const { return betas_; }

  double Mean() const { return 1.0 / static_cast<double>(betas_.size()); }

  // Population standard deviation sigma(beta).
  double StdDev() const {
    const double mean = std::accumulate(betas_.begin(), betas_.end(), 0.0) / size();
    double ss = 0.0;
    for (double b : betas_) ss += (b - mean) * (b - mean);
    return std::sqrt(ss / size());
  }

 private:
  std::vector<double> betas_;
};

struct MarketConfig {
  int n = 2;
  double sigma_beta = 0.0;
  double alpha = 1.3;
  double v = 1.0;
  double tau = 2.0;

  void Validate() const {
    if (n < 2) throw DomainError("n must be at least 2");
    if (!(sigma_beta >= 0.0 && sigma_beta < 1.0)) throw DomainError("sigma_beta must lie in [0, 1)");
    if (!(tau > 1.0)) throw DomainError("tau must exceed 1");
    if (!(alpha > 1.0 && alpha <= tau)) throw DomainError("alpha must satisfy 1 < alpha <= tau");
    if (!(v > 0.0)) throw DomainError("contract value v must be positive");
  }
};

// One joint action; bit i of Index() is agent i's action.
class StrategyProfile {
 public:
  StrategyProfile() = default;

  explicit StrategyProfile(std::vector<Action> actions) : actions_(std::move(actions)) {}

  static StrategyProfile FromBits(std::span<const int> bits) {
    std::vector<Action> actions;
    actions.reserve(bits.size());
    for (int b : bits) {
      if (b != 0 && b != 1) throw DomainError("strategy entries must be 0 or 1");
      actions.push_back(static_cast<Action>(b));
    }
    return StrategyProfile(std::move(actions));
  }

  static StrategyProfile FromIndex(std::uint64_t index, int n) {
    if (n < 1 || n > 63) throw DomainError("profile length out of range");
    if (index >> n) throw DomainError("profile index out of range");
    std::vector<Action> actions(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) actions[static_cast<std::size_t>(i)] = static_cast<Action>((index >> i) & 1U);
    return StrategyProfile(std::move(actions));
  }

  static StrategyProfile Uniform(int n, Action a) {
    return StrategyProfile(std::vector<Action>(static_cast<std::size_t>(n), a));
  }

  int size() const { return static_cast<int>(actions_.size()); }
  Action operator[](int i) const { return actions_[static_cast<std::size_t>(i)]; }
  int bit(int i) const { return static_cast<int>(actions_[static_cast<std::size_t>(i)]); }

  std::uint64_t Index() const {
    std::uint64_t idx = 0;
    for (int i = 0; i < size(); ++i) idx |= static_cast<std::uint64_t>(bit(i)) << i;
    return idx;
  }

  StrategyProfile With(int agent, Action a) const {
    StrategyProfile copy = *this;
    copy.actions_.at(static_cast<std::size_t>(agent)) = a;
    return copy;
  }

  int CountFair() const {
    return static_cast<int>(std::count(actions_.begin(), actions_.end(), Action::kFairPrice));
  }
  bool AllFair() const { return CountFair() == size(); }
  bool AllCollusive() const { return CountFair() == 0; }

  // "0110": agent 0 first.
  std::string ToString() const {
    std::string s;
    for (Action a : actions_) s.push_back(a == Action::kFairPrice ? '0' : '1');
    return s;
  }

  friend bool operator==(const StrategyProfile&, const StrategyProfile&) = default;

 private:
  std::vector<Action> actions_;
};

using PayoffVector = std::vector<double>;

// Fair bid b_i = (1 - beta_i) v.
inline double ComputeBid(double beta, double v) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie strictly inside (0, 1)");
  if (!(v > 0.0)) throw DomainError("contract value must be positive");
  return (1.0 - beta) * v;
}

// Minimum-price sharing rule. Omega is the set of FP players: each FP player
// gets (beta_i / beta_Omega) b_i; CP players get alpha beta_i b_i when Omega
// is empty and nothing otherwise.
inline PayoffVector ComputePayoffs(const StrategyProfile& profile, const PowerProfile& betas,
                                   double alpha, double v) {
  const int n = betas.size();
  if (profile.size() != n) {
    throw DomainError("profile has " + std::to_string(profile.size()) + " entries but market has " +
                      std::to_string(n) + " players");
  }
  double beta_omega = 0.0;
  for (int i = 0; i < n; ++i) {
    if (profile[i] == Action::kFairPrice) beta_omega += betas[i];
  }
  PayoffVector payoffs(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double bid = ComputeBid(betas[i], v);
    double& u = payoffs[static_cast<std::size_t>(i)];
    if (profile[i] == Action::kFairPrice) {
      u = (betas[i] / beta_omega) * bid;
    } else if (beta_omega == 0.0) {
      u = alpha * betas[i] * bid;
    }
  }
  return payoffs;
}

// Incentive to defect against full collusion, gamma_i = 1 / beta_i.
inline double IncentiveFactor(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie strictly inside (0, 1)");
  return 1.0 / beta;
}

enum class GameKind { kPrisonersDilemma, kNotPrisonersDilemma };

inline const char* GameKindName(GameKind k) {
  return k == GameKind::kPrisonersDilemma ? "PrisonersDilemma" : "NotPrisonersDilemma";
}

// Temptation, reward, punishment and sucker payoffs of one agent.
struct DilemmaPayoffs {
  double temptation = 0.0;  // FP while every opponent plays CP
  double reward = 0.0;      // everyone CP
  double punishment = 0.0;  // everyone FP
  double sucker = 0.0;      // CP while some opponent plays FP (best such case)
};

struct OrderingWitness {
  int agent = -1;
  std::string violated;  // e.g. "T > R"
  double lhs = 0.0;
  double rhs = 0.0;
};

struct GameClassification {
  GameKind kind = GameKind::kNotPrisonersDilemma;
  std::vector<StrategyProfile> nash_profiles;
  std::vector<StrategyProfile> pareto_profiles;
  std::vector<DilemmaPayoffs> dilemma_payoffs;  // per agent
  std::optional<OrderingWitness> witness;
};

// Full payoff table indexed by StrategyProfile::Index().
inline std::vector<PayoffVector> PayoffTable(const PowerProfile& betas, double alpha, double v) {
  const int n = betas.size();
  if (n > kMaxEnumerationPlayers) {
    throw CapacityError("enumeration supports at most " + std::to_string(kMaxEnumerationPlayers) +
                        " players, got " + std::to_string(n));
  }
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<PayoffVector> table;
  table.reserve(count);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    table.push_back(ComputePayoffs(StrategyProfile::FromIndex(idx, n), betas, alpha, v));
  }
  return table;
}

inline GameClassification ClassifyGame(const PowerProfile& betas, double alpha, double v) {
  const int n = betas.size();
  const auto table = PayoffTable(betas, alpha, v);
  const std::uint64_t count = table.size();
  GameClassification out;

  // Pure Nash: no unilateral flip strictly improves the deviator.
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    bool stable = true;
    for (int i = 0; i < n && stable; ++i) {
      const std::uint64_t dev = idx ^ (std::uint64_t{1} << i);
      if (table[dev][i] > table[idx][i] + kPayoffTolerance) stable = false;
    }
    if (stable) out.nash_profiles.push_back(StrategyProfile::FromIndex(idx, n));
  }

  // Pareto: no other profile weakly improves everyone and strictly improves someone.
  for (std::uint64_t p = 0; p < count; ++p) {
    bool dominated = false;
    for (std::uint64_t q = 0; q < count && !dominated; ++q) {
      if (q == p) continue;
      bool weakly = true;
      bool strictly = false;
      for (int i = 0; i < n; ++i) {
        const double diff = table[q][i] - table[p][i];
        if (diff < -kPayoffTolerance) {
          weakly = false;
          break;
        }
        if (diff > kPayoffTolerance) strictly = true;
      }
      dominated = weakly && strictly;
    }
    if (!dominated) out.pareto_profiles.push_back(StrategyProfile::FromIndex(p, n));
  }

  const std::uint64_t all_cp = count - 1;
  const std::uint64_t all_fp = 0;
  bool ordered = true;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    DilemmaPayoffs d;
    d.temptation = table[all_cp & ~bit][i];
    d.reward = table[all_cp][i];
    d.punishment = table[all_fp][i];
    d.sucker = -1.0;
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      if ((idx & bit) && idx != all_cp) d.sucker = std::max(d.sucker, table[idx][i]);
    }
    out.dilemma_payoffs.push_back(d);

    auto check = [&](double lhs, double rhs, const char* name) {
      if (ordered && !(lhs > rhs)) {
        ordered = false;
        out.witness = OrderingWitness{i, name, lhs, rhs};
      }
    };
    check(d.temptation, d.reward, "T > R");
    check(d.reward, d.punishment, "R > P");
    check(d.punishment, d.sucker, "P > S");
  }

  const bool unique_fair_nash = out.nash_profiles.size() == 1 && out.nash_profiles.front().AllFair();
  out.kind = (ordered && unique_fair_nash) ? GameKind::kPrisonersDilemma : GameKind::kNotPrisonersDilemma;
  return out;
}

struct BetaDraw {
  PowerProfile profile;
  double achieved_sigma = 0.0;
};

// Deterministic heterogeneous market. A seeded zero-sum pattern, scaled to
// the target population sd and sorted ascending, is added to 1/n; entries are
// then clipped to [kBetaFloor, 1 - kBetaFloor] and renormalised until stable.
// The target may be infeasible, so the achieved sd is returned.
inline BetaDraw GenerateBetas(int n, double sigma_beta, std::uint64_t seed) {
  if (n < 2) throw DomainError("n must be at least 2");
  if (!(sigma_beta >= 0.0 && sigma_beta < 1.0)) throw DomainError("sigma_beta must lie in [0, 1)");
  const auto un = static_cast<std::size_t>(n);
  if (sigma_beta == 0.0) {
    return BetaDraw{PowerProfile::Homogeneous(n), 0.0};
  }

  Rng rng(MixSeed({seed, HashName("betas"), static_cast<std::uint64_t>(n), DoubleBits(sigma_beta)}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> pattern(un);
  double sd = 0.0;
  while (sd < 1e-9) {
    for (double& z : pattern) z = normal(rng);
    const double mean = std::accumulate(pattern.begin(), pattern.end(), 0.0) / n;
    double ss = 0.0;
    for (double& z : pattern) {
      z -= mean;
      ss += z * z;
    }
    sd = std::sqrt(ss / n);
  }
  std::sort(pattern.begin(), pattern.end());

  std::vector<double> betas(un);
  for (std::size_t i = 0; i < un; ++i) betas[i] = 1.0 / n + pattern[i] * (sigma_beta / sd);

  for (int iter = 0; iter < 1000; ++iter) {
    for (double& b : betas) b = std::clamp(b, kBetaFloor, 1.0 - kBetaFloor);
    const double sum = std::accumulate(betas.begin(), betas.end(), 0.0);
    for (double& b : betas) b /= sum;
    const bool inside = std::all_of(betas.begin(), betas.end(), [](double b) {
      return b >= kBetaFloor - 1e-15 && b <= 1.0 - kBetaFloor + 1e-15;
    });
    if (inside) break;
  }
  PowerProfile profile(std::move(betas));
  const double achieved = profile.StdDev();
  return BetaDraw{std::move(profile), achieved};
}

}  // namespace mpmg
