#pragma once

// Flat key=value scenario configuration. '#' starts a comment, blank lines
// are skipped, unknown keys are hard errors with their line number.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxchain/chain.hpp"
#include "boxchain/ledger.hpp"
#include "boxchain/stochastics.hpp"

namespace boxchain {

enum class Behavior { honest, lazy, malicious };

inline const char* to_string(Behavior b) {
  switch (b) {
    case Behavior::honest: return "honest";
    case Behavior::lazy: return "lazy";
    case Behavior::malicious: return "malicious";
  }
  return "?";
}

struct AgentSpec {
  AgentId id = 0;
  Behavior behavior = Behavior::honest;
  double rate_per_min = 6.0;
  std::optional<PiecewiseIntensity> intensity;  // overrides rate_per_min
};

struct RewardSchedule {
  double primal = 1.0;   // issuing a transaction that approves two parents
  double dual = 1.0;     // performing the dual-layer neighbor check
  double boxer = 5.0;    // sealing a box
  double genesis = 10.0; // confirming the predecessor box
  double report = 3.0;   // flagging an illegal member later upheld
};

struct ScenarioConfig {
  std::string mode = "simulate";  // simulate | attack
  std::uint64_t seed = 1;
  double horizon_sec = 600.0;
  double tau_sec = 20.0;
  CapacityDist capacity = CapacityDist::degenerate(1000000);
  double rate_guard_fraction = 0.25;
  double fee = 1.0;
  double min_fee = 0.0;  // charged on empty transactions
  RewardSchedule rewards;
  double standing_threshold = -1e300;  // balance floor for good standing
  bool empty_tx = true;
  std::vector<AgentSpec> agents;
  // attack mode
  double lambda_per_min = 30.0;
  std::uint64_t trials = 100000;
  // fault injection: flip one recorded check in this box
  std::optional<std::uint32_t> tamper_validation_box;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] inline void config_error(std::size_t lineno, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + what);
}

inline double parse_double(const std::string& v, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    config_error(lineno, "expected a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& v, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const std::uint64_t u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return u;
  } catch (const std::exception&) {
    config_error(lineno, "expected a nonnegative integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, std::size_t lineno) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  config_error(lineno, "expected on/off, got '" + v + "'");
}

}  // namespace detail

inline ScenarioConfig parse_config(std::istream& in) {
  using detail::config_error;
  ScenarioConfig cfg;
  struct Draft {
    std::optional<Behavior> behavior;
    std::optional<double> rate;
    std::optional<PiecewiseIntensity> intensity;
    std::size_t lineno = 0;
  };
  std::map<std::uint32_t, Draft> drafts;
  std::optional<std::size_t> agent_count;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(lineno, "expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) config_error(lineno, "empty key");
    if (value.empty()) config_error(lineno, "empty value for '" + key + "'");

    try {
      if (key == "mode") {
        if (value != "simulate" && value != "attack")
          config_error(lineno, "mode must be simulate or attack");
        cfg.mode = value;
      } else if (key == "seed") {
        cfg.seed = detail::parse_u64(value, lineno);
      } else if (key == "horizon_sec") {
        cfg.horizon_sec = detail::parse_double(value, lineno);
      } else if (key == "tau_sec") {
        cfg.tau_sec = detail::parse_double(value, lineno);
      } else if (key == "capacity") {
        cfg.capacity = CapacityDist::parse(value);
      } else if (key == "rate_guard_fraction") {
        cfg.rate_guard_fraction = detail::parse_double(value, lineno);
      } else if (key == "fee") {
        cfg.fee = detail::parse_double(value, lineno);
      } else if (key == "min_fee") {
        cfg.min_fee = detail::parse_double(value, lineno);
      } else if (key == "reward_primal") {
        cfg.rewards.primal = detail::parse_double(value, lineno);
      } else if (key == "reward_dual") {
        cfg.rewards.dual = detail::parse_double(value, lineno);
      } else if (key == "reward_boxer") {
        cfg.rewards.boxer = detail::parse_double(value, lineno);
      } else if (key == "reward_genesis") {
        cfg.rewards.genesis = detail::parse_double(value, lineno);
      } else if (key == "reward_report") {
        cfg.rewards.report = detail::parse_double(value, lineno);
      } else if (key == "standing_threshold") {
        cfg.standing_threshold = detail::parse_double(value, lineno);
      } else if (key == "empty_tx") {
        cfg.empty_tx = detail::parse_bool(value, lineno);
      } else if (key == "agents") {
        agent_count = detail::parse_u64(value, lineno);
      } else if (key == "lambda_per_min") {
        cfg.lambda_per_min = detail::parse_double(value, lineno);
      } else if (key == "trials") {
        cfg.trials = detail::parse_u64(value, lineno);
      } else if (key == "inject.tamper_validation_box") {
        cfg.tamper_validation_box = static_cast<std::uint32_t>(detail::parse_u64(value, lineno));
      } else if (key.rfind("agent.", 0) == 0) {
        const auto dot = key.find('.', 6);
        if (dot == std::string::npos) config_error(lineno, "expected agent.<i>.<field>");
        std::uint32_t idx = 0;
        try {
          std::size_t pos = 0;
          idx = static_cast<std::uint32_t>(std::stoul(key.substr(6, dot - 6), &pos));
          if (pos != dot - 6) throw std::invalid_argument("");
        } catch (const std::exception&) {
          config_error(lineno, "bad agent index in '" + key + "'");
        }
        const std::string field = key.substr(dot + 1);
        Draft& d = drafts[idx];
        d.lineno = lineno;
        if (field == "behavior") {
          if (value == "honest") d.behavior = Behavior::honest;
          else if (value == "lazy") d.behavior = Behavior::lazy;
          else if (value == "malicious") d.behavior = Behavior::malicious;
          else config_error(lineno, "behavior must be honest, lazy, or malicious");
        } else if (field == "rate_per_min") {
          d.rate = detail::parse_double(value, lineno);
        } else if (field == "intensity") {
          d.intensity = PiecewiseIntensity::parse(value);
        } else {
          config_error(lineno, "unknown key 'agent.<i>." + field + "'");
        }
      } else {
        config_error(lineno, "unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      if (msg.rfind("config line", 0) == 0) throw;
      config_error(lineno, msg);
    }
  }

  if (!(cfg.horizon_sec > 0)) throw std::invalid_argument("config: horizon_sec must be positive");
  if (!(cfg.tau_sec > 0)) throw std::invalid_argument("config: tau_sec must be positive");
  if (cfg.rate_guard_fraction < 0 || cfg.rate_guard_fraction > 1)
    throw std::invalid_argument("config: rate_guard_fraction outside [0,1]");
  if (cfg.fee < 0 || cfg.min_fee < 0) throw std::invalid_argument("config: negative fee");
  if (cfg.trials == 0) throw std::invalid_argument("config: trials must be positive");

  const std::size_t n = agent_count.value_or(drafts.empty() ? 0 : drafts.rbegin()->first + 1);
  for (const auto& [idx, d] : drafts)
    if (idx >= n)
      detail::config_error(d.lineno, "agent index " + std::to_string(idx) + " >= agents=" +
                                         std::to_string(n));
  cfg.agents.clear();
  for (std::size_t i = 0; i < n; ++i) {
    AgentSpec spec;
    spec.id = static_cast<AgentId>(i + 1);  // agent 0 is the system
    if (auto it = drafts.find(static_cast<std::uint32_t>(i)); it != drafts.end()) {
      if (it->second.behavior) spec.behavior = *it->second.behavior;
      if (it->second.rate) spec.rate_per_min = *it->second.rate;
      if (it->second.intensity) spec.intensity = it->second.intensity;
    }
    cfg.agents.push_back(std::move(spec));
  }
  if (cfg.mode == "simulate" && cfg.agents.empty())
    throw std::invalid_argument("config: simulate mode needs at least one agent");
  return cfg;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace boxchain
