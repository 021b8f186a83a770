#pragma once

// Dueling double deep Q-network agent.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "mpmg/agent.hpp"
#include "mpmg/bandit.hpp"
#include "mpmg/mlp.hpp"

namespace mpmg {

struct D3qnHyperParams {
  double lr = 1e-3;
  double gamma = 0.99;
  int buffer_capacity = 10000;
  int batch_size = 32;
  int target_sync_interval = 100;  // in training steps
  double epsilon_start = 1.0;
  double epsilon_decay = 0.995;
  double epsilon_min = 0.01;
  int hidden = 128;
  bool budget_end_is_terminal = false;  // false: the budget cut-off bootstraps like any other step
};

// Shared feature layer feeding a state-value stream and an advantage stream.
struct DuelingQNet {
  MlpParams feature;    // in -> hidden, ReLU
  MlpParams value;      // hidden -> hidden -> 1
  MlpParams advantage;  // hidden -> hidden -> |A|

  static DuelingQNet Make(int input_dim, int hidden, int actions, Rng& rng) {
    DuelingQNet net;
    net.feature = MakeMlp({input_dim, hidden}, /*relu_output=*/true, rng);
    net.value = MakeMlp({hidden, hidden, 1}, false, rng);
    net.advantage = MakeMlp({hidden, hidden, actions}, false, rng);
    return net;
  }

  bool AllFinite() const { return feature.AllFinite() && value.AllFinite() && advantage.AllFinite(); }
};

struct DuelingForward {
  Matrix q;          // (|A| x batch)
  Matrix value;      // (1 x batch)
  Matrix advantage;  // (|A| x batch)
  MlpCache feature_cache;
  MlpCache value_cache;
  MlpCache advantage_cache;
};

// Q(s, a) = V(s) + A(s, a) - mean_a' A(s, a').
inline Matrix DuelingAggregate(const Matrix& value, const Matrix& advantage) {
  Matrix q = advantage;
  q.rowwise() -= advantage.colwise().mean();
  q.rowwise() += value.row(0);
  return q;
}

inline DuelingForward DuelingForwardPass(const DuelingQNet& net, const Matrix& states) {
  DuelingForward f;
  const Matrix features = MlpForward(net.feature, states, &f.feature_cache);
  f.value = MlpForward(net.value, features, &f.value_cache);
  f.advantage = MlpForward(net.advantage, features, &f.advantage_cache);
  f.q = DuelingAggregate(f.value, f.advantage);
  return f;
}

inline Matrix QValues(const DuelingQNet& net, const Matrix& states) {
  const Matrix features = MlpForward(net.feature, states);
  return DuelingAggregate(MlpForward(net.value, features), MlpForward(net.advantage, features));
}

struct DuelingGradients {
  MlpGradients feature;
  MlpGradients value;
  MlpGradients advantage;
};

inline DuelingGradients DuelingBackward(const DuelingQNet& net, const DuelingForward& f, const Matrix& q_grad) {
  const Matrix value_grad = q_grad.colwise().sum();
  Matrix adv_grad = q_grad;
  adv_grad.rowwise() -= q_grad.colwise().mean();
  DuelingGradients g;
  g.value = MlpBackward(net.value, f.value_cache, value_grad);
  g.advantage = MlpBackward(net.advantage, f.advantage_cache, adv_grad);
  g.feature = MlpBackward(net.feature, f.feature_cache, g.value.input_grad + g.advantage.input_grad);
  return g;
}

// Mean squared TD error on the taken actions; fills gradients when asked.
inline double DuelingTdLoss(const DuelingQNet& net, const Matrix& states, const std::vector<int>& actions,
                            const std::vector<double>& targets, DuelingGradients* grads) {
  const auto batch = static_cast<Eigen::Index>(actions.size());
  if (states.cols() != batch || targets.size() != actions.size() || batch == 0) {
    throw ContractError("TD loss batch components have mismatched sizes");
  }
  const DuelingForward f = DuelingForwardPass(net, states);
  Matrix q_grad = Matrix::Zero(f.q.rows(), batch);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double err = f.q(actions[static_cast<std::size_t>(b)], b) - targets[static_cast<std::size_t>(b)];
    loss += err * err;
    q_grad(actions[static_cast<std::size_t>(b)], b) = 2.0 * err / static_cast<double>(batch);
  }
  if (grads) *grads = DuelingBackward(net, f, q_grad);
  return loss / static_cast<double>(batch);
}

// y = r + gamma (1 - done) Q_target(s', argmax_a Q_online(s', a)).
inline std::vector<double> DoubleQTargets(const DuelingQNet& online, const DuelingQNet& target,
                                          const std::vector<double>& rewards, const Matrix& next_states,
                                          const std::vector<bool>& dones, double gamma) {
  const Matrix q_online = QValues(online, next_states);
  const Matrix q_target = QValues(target, next_states);
  std::vector<double> y(rewards.size());
  for (std::size_t b = 0; b < rewards.size(); ++b) {
    if (dones[b]) {
      y[b] = rewards[b];
      continue;
    }
    const auto col = static_cast<Eigen::Index>(b);
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q_online.rows(); ++a) {
      if (q_online(a, col) > q_online(best, col)) best = a;
    }
    y[b] = rewards[b] + gamma * q_target(best, col);
  }
  return y;
}

struct ReplayTransition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

// Fixed-capacity FIFO ring.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(static_cast<std::size_t>(capacity)) {
    if (capacity < 1) throw DomainError("replay capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity_, 1024));
  }

  void Push(ReplayTransition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
    }
    head_ = (head_ + 1) % capacity_;
  }

  // Oldest-first view index i.
  const ReplayTransition& at(std::size_t i) const {
    const std::size_t start = items_.size() < capacity_ ? 0 : head_;
    return items_.at((start + i) % items_.size());
  }

  // Distinct indices drawn uniformly.
  std::vector<std::size_t> SampleIndices(int batch, Rng& rng) const {
    if (static_cast<std::size_t>(batch) > items_.size()) throw ContractError("batch larger than buffer");
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < static_cast<std::size_t>(batch); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(static_cast<std::size_t>(batch));
    return idx;
  }

  const ReplayTransition& raw(std::size_t i) const { return items_.at(i); }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<ReplayTransition> items_;
};

struct DuelingOptimizer {
  AdamOptimizer feature;
  AdamOptimizer value;
  AdamOptimizer advantage;

  DuelingOptimizer() = default;
  DuelingOptimizer(const DuelingQNet& net, AdamConfig cfg)
      : feature(net.feature, cfg), value(net.value, cfg), advantage(net.advantage, cfg) {}

  void Step(DuelingQNet& net, const DuelingGradients& g) {
    feature.Step(net.feature, g.feature);
    value.Step(net.value, g.value);
    advantage.Step(net.advantage, g.advantage);
  }
};

class D3qnAgent final : public Agent {
 public:
  D3qnAgent(int input_dim, D3qnHyperParams hp, std::uint64_t seed)
      : hp_(hp), rng_(seed), buffer_(hp.buffer_capacity), epsilon_(hp.epsilon_start) {
    online_ = DuelingQNet::Make(input_dim, hp.hidden, kNumActions, rng_);
    target_ = online_;
    optimizer_ = DuelingOptimizer(online_, AdamConfig{hp.lr});
  }

  AgentDecision Act(const Observation& observation) override {
    const Matrix q = QValues(online_, ColumnFrom(observation.Flatten()));
    last_q_ = {q(0, 0), q(1, 0)};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng_) < epsilon_) {
      std::uniform_int_distribution<int> arm(0, kNumActions - 1);
      return DecisionFor(arm(rng_), true);
    }
    return DecisionFor(ArgmaxLowest(last_q_), false);
  }

  void Observe(const Transition& t) override {
    buffer_.Push(ReplayTransition{t.observation.Flatten(), static_cast<int>(t.action), t.reward,
                                  t.next_observation.Flatten(), t.done && hp_.budget_end_is_terminal});
    last_loss_ = TrainStep();
    epsilon_ = std::max(epsilon_ * hp_.epsilon_decay, hp_.epsilon_min);
  }

  // One minibatch update; empty when the buffer is still smaller than a batch.
  std::optional<double> TrainStep() {
    if (buffer_.size() < static_cast<std::size_t>(hp_.batch_size)) return std::nullopt;
    const auto idx = buffer_.SampleIndices(hp_.batch_size, rng_);
    const auto dim = static_cast<Eigen::Index>(buffer_.raw(idx[0]).state.size());
    Matrix states(dim, hp_.batch_size);
    Matrix next_states(dim, hp_.batch_size);
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<bool> dones;
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto& tr = buffer_.raw(idx[b]);
      states.col(static_cast<Eigen::Index>(b)) = ColumnFrom(tr.state);
      next_states.col(static_cast<Eigen::Index>(b)) = ColumnFrom(tr.next_state);
      actions.push_back(tr.action);
      rewards.push_back(tr.reward);
      dones.push_back(tr.done);
    }
    const auto targets = DoubleQTargets(online_, target_, rewards, next_states, dones, hp_.gamma);
    DuelingGradients grads;
    const double loss = DuelingTdLoss(online_, states, actions, targets, &grads);
    optimizer_.Step(online_, grads);
    if (!online_.AllFinite()) throw NumericError("non-finite parameters in D3QN online network");
    if (++train_steps_ % hp_.target_sync_interval == 0) target_ = online_;
    return loss;
  }

  AgentDiagnostics Diagnostics() const override {
    AgentDiagnostics d;
    d.loss = last_loss_.value_or(kNoValue);
    d.value_fp = last_q_[0];
    d.value_cp = last_q_[1];
    d.epsilon = epsilon_;
    return d;
  }

  std::string_view name() const override { return "d3qn"; }
  const DuelingQNet& online() const { return online_; }
  const DuelingQNet& target() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t train_steps() const { return train_steps_; }

 private:
  D3qnHyperParams hp_;
  Rng rng_;
  DuelingQNet online_;
  DuelingQNet target_;
  DuelingOptimizer optimizer_;
  ReplayBuffer buffer_;
  double epsilon_;
  std::int64_t train_steps_ = 0;
  std::vector<double> last_q_ = {0.0, 0.0};
  std::optional<double> last_loss_;
};

}  // namespace mpmg
