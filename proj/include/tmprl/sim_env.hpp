// Stochastic office simulator: navigation time from path length, door-opening
// time from a per-door normal distribution.

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tmprl/motion_planner.hpp"
#include "tmprl/planning_loops.hpp"

namespace tmprl::sim {

struct EnvConfig {
  double nav_speed = 1.0;        // m/s
  double nav_noise_std = 2.0;    // s, additive |N(0, std)|
  double door_open_std = 10.0;   // s
  double default_door_mean = 20.0;
  std::map<std::string, double> door_open_mean;  // s, per door id
  double go_through_duration = 5.0;  // s, also used for every other non-navigation skill
  std::uint64_t seed = 0;

  double door_mean(const std::string& door) const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` lines (nav_speed, nav_noise_std, door_open_std,
/// default_door_mean, go_through_duration, seed) and `door_mean <id> <seconds>`
/// lines; `%` or `#` start comments.
EnvConfig parse_env(std::string_view text);
EnvConfig load_env(const std::string& path);

struct WorldState {
  lang::State state;
  motion::Pose pose;
  double clock = 0.0;  // seconds since reset
  std::uint64_t episode = 0;
  std::uint64_t step = 0;
};

class InapplicableAction : public loops::ExecutionError {
 public:
  using loops::ExecutionError::ExecutionError;
};

class UnknownScenario : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scene {
  const lang::GroundedDomain& domain;
  const motion::SymbolMap& symbols;
  motion::PathCache& paths;
};

/// Start of an episode: the scenario's initial state at its mapped pose.
WorldState env_reset(const EnvConfig& config, const std::vector<planning::Scenario>& scenarios,
                     const std::string& scenario, const Scene& scene, std::uint64_t episode = 0);

/// Executes one action. Random draws depend only on (seed, episode, step).
loops::StepOutcome env_execute(WorldState& world, lang::ActionId action, const EnvConfig& config, const Scene& scene);

/// EnvironmentInterface over one scenario.
class SimEnvironment : public loops::EnvironmentInterface {
 public:
  SimEnvironment(EnvConfig config, const std::vector<planning::Scenario>& scenarios, std::string scenario,
                 const Scene& scene)
      : config_(std::move(config)), scenarios_(scenarios), scenario_(std::move(scenario)), scene_(scene) {}

  lang::State reset(std::uint64_t episode) override;
  loops::StepOutcome execute(const lang::State& state, lang::ActionId action) override;

  void set_scenario(std::string scenario) { scenario_ = std::move(scenario); }
  const WorldState& world() const { return world_; }

 private:
  EnvConfig config_;
  const std::vector<planning::Scenario>& scenarios_;
  std::string scenario_;
  Scene scene_;
  WorldState world_;
};

}  // namespace tmprl::sim
