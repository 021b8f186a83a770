#pragma once

// Per-agent PPO actor-critic (MAPPO with decentralised critics over the
// shared observation), GAE and the clipped surrogate objective.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mpmg/agent.hpp"
#include "mpmg/bandit.hpp"
#include "mpmg/mlp.hpp"

namespace mpmg {

struct PpoHyperParams {
  double lr = 1e-3;
  double gamma = 0.99;
  double clip = 0.2;
  double c1 = 0.5;
  double c2 = 0.01;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.995;
  double epsilon_min = 0.01;
  double gae_lambda = 0.95;
  int hidden = 128;
  int rollout_length = 1;  // transitions per update; one auction per episode
  bool budget_end_is_terminal = false;

  void Validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw DomainError("gae_lambda must lie in [0, 1]");
    if (!(clip > 0.0 && clip < 1.0)) throw DomainError("clip must lie in (0, 1)");
    if (c1 < 0.0 || c2 < 0.0) throw DomainError("loss weights must be non-negative");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw DomainError("epsilon_start must lie in [0, 1]");
    if (rollout_length < 1) throw DomainError("rollout_length must be positive");
  }
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// delta_t = r_t + gamma (1 - done_t) V(s_{t+1}) - V(s_t);
// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}.
inline GaeResult ComputeGae(std::span<const double> rewards, std::span<const double> values,
                            std::span<const double> next_values, const std::vector<bool>& dones, double gamma,
                            double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || dones.size() != n) {
    throw ContractError("GAE inputs must have equal lengths");
  }
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * live * next_values[t] - values[t];
    running = delta + gamma * lambda * live * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

// Column-wise softmax with max subtraction.
inline Matrix Softmax(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    p.col(c).array() -= p.col(c).maxCoeff();
    p.col(c) = p.col(c).array().exp().matrix();
    p.col(c) /= p.col(c).sum();
  }
  return p;
}

struct ActorCritic {
  MlpParams actor;      // in -> hidden -> hidden -> |A| logits
  MlpParams critic;     // in -> hidden -> hidden -> 1
  MlpParams old_actor;  // snapshot used for probability ratios

  static ActorCritic Make(int input_dim, int hidden, Rng& rng) {
    ActorCritic ac;
    ac.actor = MakeMlp({input_dim, hidden, hidden, kNumActions}, false, rng);
    ac.critic = MakeMlp({input_dim, hidden, hidden, 1}, false, rng);
    ac.old_actor = ac.actor;
    return ac;
  }

  Matrix Policy(const Matrix& states) const { return Softmax(MlpForward(actor, states)); }
  Matrix OldPolicy(const Matrix& states) const { return Softmax(MlpForward(old_actor, states)); }
  Matrix Values(const Matrix& states) const { return MlpForward(critic, states); }
};

struct PpoBatch {
  Matrix states;                 // (dim x B)
  std::vector<int> actions;
  std::vector<double> old_probs; // pi_old(a_t | s_t)
  std::vector<double> advantages;
  std::vector<double> returns;
};

struct PpoLosses {
  double actor = 0.0;    // -L^CLIP
  double critic = 0.0;   // mean (R - V)^2
  double entropy = 0.0;  // mean policy entropy
  double total = 0.0;    // actor + c1 critic - c2 entropy
};

struct PpoGradients {
  MlpGradients actor;
  MlpGradients critic;
};

inline double ClippedSurrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

// Total loss L = -L^CLIP + c1 L^VF - c2 H and its gradients.
inline PpoLosses PpoLoss(const ActorCritic& ac, const PpoBatch& batch, const PpoHyperParams& hp,
                         PpoGradients* grads) {
  const auto B = static_cast<Eigen::Index>(batch.actions.size());
  if (B == 0 || batch.states.cols() != B || batch.old_probs.size() != batch.actions.size() ||
      batch.advantages.size() != batch.actions.size() || batch.returns.size() != batch.actions.size()) {
    throw ContractError("PPO batch components have mismatched sizes");
  }
  for (double p : batch.old_probs) {
    if (!(p > 0.0)) throw ContractError("old-policy probability must be positive to form a ratio");
  }
  MlpCache actor_cache;
  MlpCache critic_cache;
  const Matrix logits = MlpForward(ac.actor, batch.states, &actor_cache);
  const Matrix probs = Softmax(logits);
  const Matrix values = MlpForward(ac.critic, batch.states, &critic_cache);

  PpoLosses loss;
  Matrix logit_grad = Matrix::Zero(logits.rows(), B);
  Matrix value_grad = Matrix::Zero(1, B);
  const double inv_b = 1.0 / static_cast<double>(B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const int a = batch.actions[ub];
    const double adv = batch.advantages[ub];
    const double ratio = probs(a, b) / batch.old_probs[ub];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - hp.clip, 1.0 + hp.clip) * adv;
    loss.actor -= std::min(unclipped, clipped) * inv_b;
    // d(surrogate)/d(ratio): A on the unclipped branch, 0 once clipping binds.
    const double dsurr_dratio = unclipped <= clipped ? adv : 0.0;

    double entropy = 0.0;
    for (Eigen::Index k = 0; k < probs.rows(); ++k) entropy -= probs(k, b) * std::log(probs(k, b));
    loss.entropy += entropy * inv_b;

    const double err = values(0, b) - batch.returns[ub];
    loss.critic += err * err * inv_b;
    value_grad(0, b) = hp.c1 * 2.0 * err * inv_b;

    for (Eigen::Index k = 0; k < probs.rows(); ++k) {
      const double pk = probs(k, b);
      const double dratio = ratio * ((k == a ? 1.0 : 0.0) - pk);
      const double dentropy = -pk * (std::log(pk) + entropy);
      logit_grad(k, b) = (-dsurr_dratio * dratio - hp.c2 * dentropy) * inv_b;
    }
  }
  loss.total = loss.actor + hp.c1 * loss.critic - hp.c2 * loss.entropy;
  if (grads) {
    grads->actor = MlpBackward(ac.actor, actor_cache, logit_grad);
    grads->critic = MlpBackward(ac.critic, critic_cache, value_grad);
  }
  return loss;
}

struct PpoOptimizer {
  AdamOptimizer actor;
  AdamOptimizer critic;

  PpoOptimizer() = default;
  PpoOptimizer(const ActorCritic& ac, AdamConfig cfg) : actor(ac.actor, cfg), critic(ac.critic, cfg) {}
};

// One gradient pass over the batch, then refresh the old-policy snapshot.
// Returns the losses evaluated before the step.
inline PpoLosses PpoUpdate(ActorCritic& ac, PpoOptimizer& opt, const PpoBatch& batch, const PpoHyperParams& hp) {
  PpoGradients grads;
  const PpoLosses losses = PpoLoss(ac, batch, hp, &grads);
  opt.actor.Step(ac.actor, grads.actor);
  opt.critic.Step(ac.critic, grads.critic);
  CheckFinite(ac.actor, "MAPPO actor");
  CheckFinite(ac.critic, "MAPPO critic");
  ac.old_actor = ac.actor;
  return losses;
}

class MappoAgent final : public Agent {
 public:
  MappoAgent(int input_dim, PpoHyperParams hp, std::uint64_t seed)
      : hp_(hp), rng_(seed), epsilon_(hp.epsilon_start) {
    hp_.Validate();
    ac_ = ActorCritic::Make(input_dim, hp.hidden, rng_);
    opt_ = PpoOptimizer(ac_, AdamConfig{hp.lr});
  }

  // epsilon-uniform exploration, otherwise argmax of the policy.
  AgentDecision Act(const Observation& observation) override {
    const Matrix probs = ac_.OldPolicy(ColumnFrom(observation.Flatten()));
    last_probs_ = {probs(0, 0), probs(1, 0)};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AgentDecision d;
    if (unit(rng_) < epsilon_) {
      std::uniform_int_distribution<int> arm(0, kNumActions - 1);
      d = DecisionFor(arm(rng_), true);
    } else {
      d = DecisionFor(ArgmaxLowest(last_probs_), false);
    }
    pending_old_prob_ = last_probs_[static_cast<std::size_t>(d.action)];
    return d;
  }

  void Observe(const Transition& t) override {
    memory_.push_back(Stored{t.observation.Flatten(), static_cast<int>(t.action), t.reward,
                             t.next_observation.Flatten(), t.done && hp_.budget_end_is_terminal,
                             pending_old_prob_});
    last_losses_.reset();
    if (static_cast<int>(memory_.size()) >= hp_.rollout_length || t.done) {
      last_losses_ = Update();
      memory_.clear();
      epsilon_ = std::max(epsilon_ * hp_.epsilon_decay, hp_.epsilon_min);
    }
  }

  AgentDiagnostics Diagnostics() const override {
    AgentDiagnostics d;
    if (last_losses_) {
      d.actor_loss = last_losses_->actor;
      d.critic_loss = last_losses_->critic;
      d.entropy = last_losses_->entropy;
    }
    d.value_fp = last_probs_[0];
    d.value_cp = last_probs_[1];
    d.epsilon = epsilon_;
    return d;
  }

  std::string_view name() const override { return "mappo"; }
  const ActorCritic& networks() const { return ac_; }
  double epsilon() const { return epsilon_; }

 private:
  struct Stored {
    std::vector<double> state;
    int action;
    double reward;
    std::vector<double> next_state;
    bool done;
    double old_prob;
  };

  PpoLosses Update() {
    const auto B = static_cast<Eigen::Index>(memory_.size());
    const auto dim = static_cast<Eigen::Index>(memory_.front().state.size());
    PpoBatch batch;
    batch.states.resize(dim, B);
    Matrix next_states(dim, B);
    std::vector<double> rewards;
    std::vector<bool> dones;
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& s = memory_[static_cast<std::size_t>(b)];
      batch.states.col(b) = ColumnFrom(s.state);
      next_states.col(b) = ColumnFrom(s.next_state);
      batch.actions.push_back(s.action);
      batch.old_probs.push_back(s.old_prob);
      rewards.push_back(s.reward);
      dones.push_back(s.done);
    }
    const Matrix v = ac_.Values(batch.states);
    const Matrix v_next = ac_.Values(next_states);
    std::vector<double> values(v.data(), v.data() + B);
    std::vector<double> next_values(v_next.data(), v_next.data() + B);
    GaeResult gae = ComputeGae(rewards, values, next_values, dones, hp_.gamma, hp_.gae_lambda);
    batch.advantages = std::move(gae.advantages);
    batch.returns = std::move(gae.returns);
    return PpoUpdate(ac_, opt_, batch, hp_);
  }

  PpoHyperParams hp_;
  Rng rng_;
  ActorCritic ac_;
  PpoOptimizer opt_;
  double epsilon_;
  double pending_old_prob_ = 1.0;
  std::vector<double> last_probs_ = {0.5, 0.5};
  std::vector<Stored> memory_;
  std::optional<PpoLosses> last_losses_;
};

}  // namespace mpmg
