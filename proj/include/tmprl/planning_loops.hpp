// Task-motion planning with motion-cost learning (inner loop) nested inside
// execution learning (outer loop), plus the TMP and TP-RL baselines.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmprl/action_lang.hpp"
#include "tmprl/motion_planner.hpp"
#include "tmprl/rl_core.hpp"
#include "tmprl/task_planner.hpp"

namespace tmprl::loops {

enum class Mode { kTmp, kTpRl, kTmpRl };

std::string to_string(Mode mode);  // "tmp", "tp-rl", "tmp-rl"
std::optional<Mode> parse_mode(const std::string& text);

struct LoopConfig {
  Mode mode = Mode::kTmpRl;
  int max_inner_iterations = 50;
  int max_horizon = planning::kDefaultMaxHorizon;
  double time_budget = 5.0;  // seconds per planner call
  /// Per-episode probability of planning with a shuffled action order.
  double epsilon = 0.0;
  double alpha = 0.1;
  double beta = 0.5;
};

/// Everything the loops read but never modify, plus the path cache.
struct World {
  const lang::GroundedDomain& domain;
  const motion::SymbolMap& symbols;
  const rl::StateAbstraction& abstraction;
  motion::PathCache& paths;
};

/// Planner-facing view of the tables: stored rho, else the default rule.
class TableEstimator : public planning::QualityEstimator {
 public:
  TableEstimator(const World& world, const rl::ValueTables& tables, rl::DefaultPolicy policy)
      : world_(world), tables_(tables), policy_(policy) {}

  double lookup(const lang::State& state, lang::ActionId action, const lang::State& next) const override;
  double upper_bound() const override;

  double default_rho(const lang::State& state, lang::ActionId action, const lang::State& next) const;
  const rl::DefaultPolicy& policy() const { return policy_; }

 private:
  const World& world_;
  const rl::ValueTables& tables_;
  rl::DefaultPolicy policy_;
};

rl::DefaultPolicy policy_for(Mode mode);
rl::ValueTables fresh_tables(const LoopConfig& config, const lang::GroundedDomain& domain);

/// R-learning update for one executed or refined transition.
void learn(const World& world, rl::ValueTables& tables, const TableEstimator& estimator,
           const planning::Transition& transition, double reward);

class NoPlanEver : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InnerResult {
  planning::Plan plan;
  int iterations = 0;  // planner calls
  /// The first planner call failed and the previous plan was returned.
  bool fallback = false;
  /// The iteration cap stopped the loop.
  bool capped = false;
  std::vector<double> planned_qualities;   // quality of each accepted plan when it was found
  std::vector<double> refined_qualities;   // the same plan after its motion updates
  std::vector<std::string> accepted_ids;   // canonical ids in acceptance order
  std::optional<planning::NoPlan::Reason> stop_reason;
  double solver_seconds = 0.0;
};

/// Plans under a tightening quality bound, learning motion costs of each plan's
/// navigation legs, until no plan beats the last one. `problem.quality_bound`
/// is q0. Throws NoPlanEver when the first call fails and `previous` is empty.
InnerResult inner_tmp(const planning::PlanningProblem& problem, const World& world, rl::ValueTables& tables,
                      const LoopConfig& config, const std::optional<planning::Plan>& previous);

struct StepOutcome {
  double reward = 0.0;
  double duration = 0.0;
  lang::State next;
};

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnvironmentInterface {
 public:
  virtual ~EnvironmentInterface() = default;
  /// Initial state of episode `episode`; draws within the episode are keyed on it.
  virtual lang::State reset(std::uint64_t episode) = 0;
  /// Throws ExecutionError when the action cannot be carried out.
  virtual StepOutcome execute(const lang::State& state, lang::ActionId action) = 0;
};

struct EpisodeRecord {
  int run = 0;
  int episode = 0;
  Mode mode = Mode::kTmpRl;
  std::string scenario;
  std::string plan_id;
  std::vector<std::string> actions;
  std::vector<double> rewards;
  double total_reward = 0.0;
  int inner_iterations = 0;
  double solver_seconds = 0.0;
  /// The bound from the previous execution was unbeatable and the previous plan was reused.
  bool reused_previous = false;
  bool capped = false;
  bool aborted = false;
};

struct EpisodeSpan {
  planning::PlanningProblem problem;  // initial state and goal; other fields come from LoopConfig
  std::string scenario;
  int episodes = 0;
};

/// Runs `span.episodes` episodes. TMP-RL and TP-RL keep learning in `tables`;
/// TMP starts every episode from fresh tables and never learns from execution.
/// `first_episode` offsets episode indices (and the environment's draws).
std::vector<EpisodeRecord> outer_tmprl(const EpisodeSpan& span, const World& world, rl::ValueTables& tables,
                                       EnvironmentInterface& env, const LoopConfig& config, int run,
                                       int first_episode = 0, std::uint64_t seed = 0);

std::vector<EpisodeRecord> run_baseline_tmp(const EpisodeSpan& span, const World& world, EnvironmentInterface& env,
                                            LoopConfig config, int run, int first_episode = 0);

}  // namespace tmprl::loops
