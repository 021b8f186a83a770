#pragma once

// Flat "key = value" run configuration. One knob table drives parsing,
// overrides and the manifest echo, so every default is written out.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mpmg/experiment.hpp"

namespace mpmg {

inline constexpr int kConfigSchemaVersion = 1;

// Bad config text or values; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shortest text that parses back to the same double.
inline std::string FormatDouble(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

struct RunConfig {
  ExperimentSpec spec;
  int workers = 1;
};

namespace detail {

inline std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double ParseDoubleField(const std::string& key, const std::string& text) {
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return x;
}

template <typename Int>
Int ParseIntField(const std::string& key, const std::string& text) {
  Int x{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return x;
}

inline bool ParseBoolField(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

}  // namespace detail

struct Knob {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

// Every tunable value, in manifest order.
inline const std::vector<Knob>& Knobs() {
  using detail::ParseBoolField;
  using detail::ParseDoubleField;
  using detail::ParseIntField;
  static const std::vector<Knob> knobs = [] {
    std::vector<Knob> k;
    auto real = [&k](std::string key, auto field) {
      k.push_back({key, [field](const RunConfig& c) { return FormatDouble(field(const_cast<RunConfig&>(c))); },
                   [key, field](RunConfig& c, const std::string& v) { field(c) = ParseDoubleField(key, v); }});
    };
    auto integer = [&k](std::string key, auto field) {
      k.push_back({key, [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); },
                   [key, field](RunConfig& c, const std::string& v) {
                     field(c) = ParseIntField<std::remove_reference_t<decltype(field(c))>>(key, v);
                   }});
    };
    auto boolean = [&k](std::string key, auto field) {
      k.push_back({key, [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)) ? "true" : "false"; },
                   [key, field](RunConfig& c, const std::string& v) { field(c) = ParseBoolField(key, v); }});
    };

    k.push_back({"agent", [](const RunConfig& c) { return std::string(AgentKindName(c.spec.agent)); },
                 [](RunConfig& c, const std::string& v) {
                   const auto kind = ParseAgentKind(v);
                   if (!kind) throw ConfigError("agent: unknown agent '" + v + "' (d3qn, ts, egreedy, mappo, ucb)");
                   c.spec.agent = *kind;
                 }});
    integer("n", [](RunConfig& c) -> int& { return c.spec.market.n; });
    real("sigma", [](RunConfig& c) -> double& { return c.spec.market.sigma_beta; });
    real("alpha", [](RunConfig& c) -> double& { return c.spec.market.alpha; });
    real("v", [](RunConfig& c) -> double& { return c.spec.market.v; });
    real("tau", [](RunConfig& c) -> double& { return c.spec.market.tau; });
    integer("episodes", [](RunConfig& c) -> int& { return c.spec.episodes; });
    integer("replications", [](RunConfig& c) -> int& { return c.spec.replications; });
    integer("seed", [](RunConfig& c) -> std::uint64_t& { return c.spec.base_seed; });
    integer("workers", [](RunConfig& c) -> int& { return c.workers; });

    real("egreedy.epsilon_start", [](RunConfig& c) -> double& { return c.spec.hp.egreedy.start; });
    real("egreedy.epsilon_decay", [](RunConfig& c) -> double& { return c.spec.hp.egreedy.decay; });
    real("egreedy.epsilon_min", [](RunConfig& c) -> double& { return c.spec.hp.egreedy.floor; });
    k.push_back({"ts.reward",
                 [](const RunConfig& c) {
                   return std::string(c.spec.hp.thompson_reward == ThompsonReward::kBinary ? "binary" : "fractional");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "binary") {
                     c.spec.hp.thompson_reward = ThompsonReward::kBinary;
                   } else if (v == "fractional") {
                     c.spec.hp.thompson_reward = ThompsonReward::kFractional;
                   } else {
                     throw ConfigError("ts.reward: expected fractional or binary, got '" + v + "'");
                   }
                 }});

    real("d3qn.lr", [](RunConfig& c) -> double& { return c.spec.hp.d3qn.lr; });
    real("d3qn.gamma", [](RunConfig& c) -> double& { return c.spec.hp.d3qn.gamma; });
    integer("d3qn.buffer_capacity", [](RunConfig& c) -> int& { return c.spec.hp.d3qn.buffer_capacity; });
    integer("d3qn.batch_size", [](RunConfig& c) -> int& { return c.spec.hp.d3qn.batch_size; });
    integer("d3qn.target_sync_interval", [](RunConfig& c) -> int& { return c.spec.hp.d3qn.target_sync_interval; });
    real("d3qn.epsilon_start", [](RunConfig& c) -> double& { return c.spec.hp.d3qn.epsilon_start; });
    real("d3qn.epsilon_decay", [](RunConfig& c) -> double& { return c.spec.hp.d3qn.epsilon_decay; });
    real("d3qn.epsilon_min", [](RunConfig& c) -> double& { return c.spec.hp.d3qn.epsilon_min; });
    integer("d3qn.hidden", [](RunConfig& c) -> int& { return c.spec.hp.d3qn.hidden; });
    boolean("d3qn.budget_end_is_terminal", [](RunConfig& c) -> bool& { return c.spec.hp.d3qn.budget_end_is_terminal; });

    real("ppo.lr", [](RunConfig& c) -> double& { return c.spec.hp.ppo.lr; });
    real("ppo.gamma", [](RunConfig& c) -> double& { return c.spec.hp.ppo.gamma; });
    real("ppo.clip", [](RunConfig& c) -> double& { return c.spec.hp.ppo.clip; });
    real("ppo.c1", [](RunConfig& c) -> double& { return c.spec.hp.ppo.c1; });
    real("ppo.c2", [](RunConfig& c) -> double& { return c.spec.hp.ppo.c2; });
    real("ppo.epsilon_start", [](RunConfig& c) -> double& { return c.spec.hp.ppo.epsilon_start; });
    real("ppo.epsilon_decay", [](RunConfig& c) -> double& { return c.spec.hp.ppo.epsilon_decay; });
    real("ppo.epsilon_min", [](RunConfig& c) -> double& { return c.spec.hp.ppo.epsilon_min; });
    real("ppo.gae_lambda", [](RunConfig& c) -> double& { return c.spec.hp.ppo.gae_lambda; });
    integer("ppo.hidden", [](RunConfig& c) -> int& { return c.spec.hp.ppo.hidden; });
    integer("ppo.rollout_length", [](RunConfig& c) -> int& { return c.spec.hp.ppo.rollout_length; });
    boolean("ppo.budget_end_is_terminal", [](RunConfig& c) -> bool& { return c.spec.hp.ppo.budget_end_is_terminal; });
    return k;
  }();
  return knobs;
}

inline const Knob* FindKnob(std::string_view key) {
  for (const auto& k : Knobs()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

inline void SetKnob(RunConfig& config, const std::string& key, const std::string& value) {
  const Knob* knob = FindKnob(key);
  if (!knob) throw ConfigError(key + ": unknown configuration key");
  knob->set(config, value);
}

// Parses "key = value" lines. '#' starts a comment. schema_version is required.
inline RunConfig ParseConfig(std::string_view text, RunConfig config = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool saw_version = false;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::Trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::Trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::Trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ConfigError(key + ": repeated on lines " + std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    if (key == "schema_version") {
      const int version = detail::ParseIntField<int>(key, value);
      if (version != kConfigSchemaVersion) {
        throw ConfigError("schema_version: expected " + std::to_string(kConfigSchemaVersion) + ", got " + value);
      }
      saw_version = true;
      continue;
    }
    SetKnob(config, key, value);
  }
  if (!saw_version) throw ConfigError("schema_version: missing");
  return config;
}

inline RunConfig LoadConfig(const std::string& path, RunConfig config = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), std::move(config));
}

// Checks that the values describe a runnable experiment; reports the field.
inline void ValidateConfig(const RunConfig& c) {
  const auto& s = c.spec;
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(s.market.n >= 2 && s.market.n <= kMaxEnumerationPlayers, "n: must lie in [2, 12]");
  require(s.market.sigma_beta >= 0.0, "sigma: must be non-negative");
  require(s.market.alpha > 1.0, "alpha: must exceed 1");
  require(s.market.v > 0.0, "v: must be positive");
  require(s.episodes >= 1, "episodes: must be positive");
  require(s.replications >= 1, "replications: must be positive");
  require(c.workers >= 1, "workers: must be positive");
  require(s.hp.egreedy.start >= 0.0 && s.hp.egreedy.start <= 1.0, "egreedy.epsilon_start: must lie in [0, 1]");
  require(s.hp.d3qn.batch_size >= 1 && s.hp.d3qn.batch_size <= s.hp.d3qn.buffer_capacity,
          "d3qn.batch_size: must lie in [1, d3qn.buffer_capacity]");
  require(s.hp.d3qn.target_sync_interval >= 1, "d3qn.target_sync_interval: must be positive");
  require(s.hp.d3qn.hidden >= 1, "d3qn.hidden: must be positive");
  require(s.hp.ppo.hidden >= 1, "ppo.hidden: must be positive");
  require(s.hp.ppo.rollout_length >= 1, "ppo.rollout_length: must be positive");
  try {
    s.Validate();
    s.hp.ppo.Validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// The config file that reproduces `c`.
inline std::string RenderConfig(const RunConfig& c) {
  std::string out = "schema_version = " + std::to_string(kConfigSchemaVersion) + "\n";
  for (const auto& k : Knobs()) out += k.key + " = " + k.get(c) + "\n";
  return out;
}

}  // namespace mpmg
