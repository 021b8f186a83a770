#pragma once

#include <limits>
#include <memory>
#include <string_view>

#include "mpmg/environment.hpp"
#include "mpmg/game.hpp"

namespace mpmg {

struct AgentDecision {
  Action action = Action::kFairPrice;
  bool explored = false;
};

// What one agent sees after an auction.
struct Transition {
  const Observation& observation;
  Action action;
  double reward;
  const Observation& next_observation;
  bool done;
};

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

// Per-episode internals; fields an agent does not produce stay NaN.
struct AgentDiagnostics {
  double loss = kNoValue;         // D3QN TD loss
  double actor_loss = kNoValue;   // MAPPO
  double critic_loss = kNoValue;  // MAPPO
  double entropy = kNoValue;      // MAPPO
  double value_fp = kNoValue;     // q-value or policy probability of FP
  double value_cp = kNoValue;     // same for CP
  double epsilon = kNoValue;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual AgentDecision Act(const Observation& observation) = 0;
  virtual void Observe(const Transition& transition) = 0;
  // Snapshot taken after Observe() for the episode just played.
  virtual AgentDiagnostics Diagnostics() const { return {}; }
  virtual std::string_view name() const = 0;
};

}  // namespace mpmg
