// Bounded-horizon symbolic planning under a plan-quality constraint.

#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tmprl/action_lang.hpp"

namespace tmprl::planning {

struct Transition {
  lang::State from;
  lang::ActionId action = 0;
  lang::State to;
};

struct Plan {
  std::vector<Transition> transitions;
  std::vector<std::string> actions;  // ground action names, one per transition
  std::string id;                    // canonical_id of `actions`

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
};

/// 16 hex digits of the 64-bit FNV-1a hash of the action names joined by ';'.
std::string canonical_id(const std::vector<std::string>& actions);

/// Builds the plan obtained by applying `actions` from `initial`; nullopt if
/// some action is not executable.
std::optional<Plan> make_plan(const lang::GroundedDomain& domain, const lang::State& initial,
                              const std::vector<lang::ActionId>& actions);
std::optional<Plan> make_plan(const lang::GroundedDomain& domain, const lang::State& initial,
                              const std::vector<std::string>& action_names);

inline constexpr int kDefaultMaxHorizon = 12;

/// Seconds; overridden by the TMPRL_SOLVER_TIMEOUT_SECS environment variable.
double default_time_budget();

struct PlanningProblem {
  lang::State initial;
  std::vector<lang::GroundLiteral> goal;
  double quality_bound = -std::numeric_limits<double>::infinity();  // plans must have quality > bound
  int max_horizon = kDefaultMaxHorizon;
  double time_budget = 5.0;  // seconds
  /// Order in which actions are tried; empty means ground-action order.
  std::vector<lang::ActionId> action_order;
};

/// rho estimates consumed by the planner.
class QualityEstimator {
 public:
  virtual ~QualityEstimator() = default;
  /// Estimated rho of taking `action` in `state`, reaching `next`. Finite.
  virtual double lookup(const lang::State& state, lang::ActionId action, const lang::State& next) const = 0;
  /// An upper bound on every value lookup() can return.
  virtual double upper_bound() const = 0;
};

struct NoPlan {
  enum class Reason { kExhausted, kTimeout };
  Reason reason = Reason::kExhausted;
};

using PlanResult = std::variant<Plan, NoPlan>;

struct SearchStats {
  std::uint64_t nodes = 0;
  int horizon = 0;  // horizon of the returned plan, or last horizon searched
};

/// Iterative deepening over horizons 0..max_horizon; within a horizon, depth-first in
/// action order with branch-and-bound on the quality bound. Returns the first plan
/// whose final state satisfies the goal and whose quality exceeds the bound, i.e.
/// the shallowest one and, among those, the least in action order.
PlanResult plan(const PlanningProblem& problem, const lang::GroundedDomain& domain, const QualityEstimator& estimator,
                SearchStats* stats = nullptr);

double plan_quality(const Plan& plan, const QualityEstimator& estimator);

/// Independent validator: initial state, chaining, every transition, goal.
bool check_plan(const Plan& plan, const lang::GroundedDomain& domain, const PlanningProblem& problem);

/// One start configuration of a problem file:
///
///   scenario start_1.
///   init in(r_open), near(lm_start1).
///   goal in(r_target).
///   label plan1 approach(top_door), open_door(top_door), go_through(top_door).
///
/// `label` names a reference action sequence for reporting.
struct Scenario {
  std::string name;
  std::vector<lang::Atom> init;
  std::vector<lang::Literal> goal;
  std::vector<std::pair<std::string, std::vector<std::string>>> labels;
};

/// Throws lang::SyntaxError.
std::vector<Scenario> parse_problems(std::string_view text);

}  // namespace tmprl::planning
