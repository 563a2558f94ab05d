#include "tmprl/planning_loops.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace tmprl::loops {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kTmp:
      return "tmp";
    case Mode::kTpRl:
      return "tp-rl";
    case Mode::kTmpRl:
      return "tmp-rl";
  }
  return "?";
}

std::optional<Mode> parse_mode(const std::string& text) {
  if (text == "tmp") return Mode::kTmp;
  if (text == "tp-rl") return Mode::kTpRl;
  if (text == "tmp-rl") return Mode::kTmpRl;
  return std::nullopt;
}

double TableEstimator::default_rho(const lang::State& state, lang::ActionId action, const lang::State& next) const {
  const std::string& schema = world_.domain.actions()[action].schema;
  std::optional<double> straight;
  if (schema == "approach" && policy_.euclidean_approach) {
    const auto from = world_.symbols.map_state(state);
    const auto to = world_.symbols.map_state(next);
    if (from && to) straight = motion::euclidean(*from, *to);
  }
  return policy_.rho(schema, straight);
}

double TableEstimator::lookup(const lang::State& state, lang::ActionId action, const lang::State& next) const {
  const auto stored = tables_.stored_rho(world_.abstraction.key(state), world_.domain.actions()[action].name);
  return stored ? *stored : default_rho(state, action, next);
}

double TableEstimator::upper_bound() const {
  double bound = std::max(policy_.open_door, policy_.fallback);
  if (policy_.euclidean_approach) bound = std::max(bound, 0.0);
  for (const auto& [state, row] : tables_.entries()) {
    for (const auto& [action, entry] : row) bound = std::max(bound, entry.rho);
  }
  return bound;
}

rl::DefaultPolicy policy_for(Mode mode) {
  rl::DefaultPolicy policy;
  policy.euclidean_approach = mode != Mode::kTpRl;
  return policy;
}

rl::ValueTables fresh_tables(const LoopConfig& config, const lang::GroundedDomain& domain) {
  return rl::ValueTables(config.alpha, config.beta, domain.actions().size());
}

void learn(const World& world, rl::ValueTables& tables, const TableEstimator& estimator,
           const planning::Transition& transition, double reward) {
  tables.update(world.abstraction.key(transition.from), world.domain.actions()[transition.action].name, reward,
                world.abstraction.key(transition.to),
                estimator.default_rho(transition.from, transition.action, transition.to));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::optional<double> motion_length(const World& world, const planning::Transition& t) {
  const auto from = world.symbols.map_state(t.from);
  const auto to = world.symbols.map_state(t.to);
  if (!from || !to) return std::nullopt;
  return world.paths.length(*from, *to);
}

planning::PlanningProblem configured(const planning::PlanningProblem& problem, const LoopConfig& config) {
  planning::PlanningProblem p = problem;
  p.max_horizon = config.max_horizon;
  p.time_budget = config.time_budget;
  return p;
}

}  // namespace

InnerResult inner_tmp(const planning::PlanningProblem& problem, const World& world, rl::ValueTables& tables,
                      const LoopConfig& config, const std::optional<planning::Plan>& previous) {
  const auto start = Clock::now();
  const TableEstimator estimator(world, tables, policy_for(config.mode));
  planning::PlanningProblem p = configured(problem, config);
  std::optional<planning::Plan> best = previous;
  InnerResult out;

  for (int iteration = 0; iteration < config.max_inner_iterations; ++iteration) {
    auto result = planning::plan(p, world.domain, estimator);
    ++out.iterations;
    if (auto* none = std::get_if<planning::NoPlan>(&result)) {
      out.stop_reason = none->reason;
      if (!best) throw NoPlanEver("no plan reaches the goal within the horizon");
      out.fallback = iteration == 0;
      out.plan = std::move(*best);
      out.solver_seconds = seconds_since(start);
      return out;
    }
    planning::Plan candidate = std::move(std::get<planning::Plan>(result));
    out.planned_qualities.push_back(planning::plan_quality(candidate, estimator));
    out.accepted_ids.push_back(candidate.id);
    for (const auto& t : candidate.transitions) {
      if (!world.symbols.is_navigation(t.action)) continue;
      learn(world, tables, estimator, t, rl::reward_from_motion(motion_length(world, t)));
    }
    const double refined = planning::plan_quality(candidate, estimator);
    out.refined_qualities.push_back(refined);
    p.quality_bound = refined;
    best = std::move(candidate);
  }
  out.capped = true;
  out.plan = std::move(*best);
  out.solver_seconds = seconds_since(start);
  return out;
}

std::vector<EpisodeRecord> outer_tmprl(const EpisodeSpan& span, const World& world, rl::ValueTables& tables,
                                       EnvironmentInterface& env, const LoopConfig& config, int run,
                                       int first_episode, std::uint64_t seed) {
  std::vector<EpisodeRecord> records;
  const auto n_actions = static_cast<lang::ActionId>(world.domain.actions().size());
  double bound = -INFINITY;
  std::optional<planning::Plan> previous;

  for (int e = 0; e < span.episodes; ++e) {
    const int episode = first_episode + e;
    EpisodeRecord record;
    record.run = run;
    record.episode = episode;
    record.mode = config.mode;
    record.scenario = span.scenario;

    planning::PlanningProblem problem = configured(span.problem, config);
    problem.quality_bound = bound;
    if (config.epsilon > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(episode), 0x65707331U};
      std::mt19937_64 rng(seq);
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.epsilon) {
        problem.action_order.resize(n_actions);
        std::iota(problem.action_order.begin(), problem.action_order.end(), lang::ActionId{0});
        std::shuffle(problem.action_order.begin(), problem.action_order.end(), rng);
      }
    }

    rl::ValueTables scratch = fresh_tables(config, world.domain);
    rl::ValueTables& active = config.mode == Mode::kTmp ? scratch : tables;
    const TableEstimator estimator(world, active, policy_for(config.mode));

    planning::Plan chosen;
    if (config.mode == Mode::kTpRl) {
      const auto start = Clock::now();
      auto result = planning::plan(problem, world.domain, estimator);
      record.solver_seconds = seconds_since(start);
      record.inner_iterations = 1;
      if (auto* found = std::get_if<planning::Plan>(&result)) {
        chosen = std::move(*found);
      } else if (previous) {
        chosen = *previous;
        record.reused_previous = true;
      } else {
        throw NoPlanEver("no plan reaches the goal within the horizon");
      }
    } else {
      const std::optional<planning::Plan> none;
      if (config.mode == Mode::kTmp) problem.quality_bound = -INFINITY;
      InnerResult inner = inner_tmp(problem, world, active, config, config.mode == Mode::kTmp ? none : previous);
      chosen = std::move(inner.plan);
      record.inner_iterations = inner.iterations;
      record.solver_seconds = inner.solver_seconds;
      record.reused_previous = inner.fallback;
      record.capped = inner.capped;
    }
    if (!planning::check_plan(chosen, world.domain, problem)) throw std::logic_error("planner produced an invalid plan");

    record.plan_id = chosen.id;
    record.actions = chosen.actions;
    lang::State state = env.reset(static_cast<std::uint64_t>(episode));
    if (!(state == problem.initial)) throw std::logic_error("environment reset disagrees with the planning problem");
    try {
      for (const auto& t : chosen.transitions) {
        StepOutcome outcome = env.execute(state, t.action);
        if (!(outcome.next == t.to)) throw ExecutionError("execution diverged from the plan at " + world.domain.actions()[t.action].name);
        record.rewards.push_back(outcome.reward);
        if (config.mode != Mode::kTmp) learn(world, active, estimator, t, outcome.reward);
        state = std::move(outcome.next);
      }
    } catch (const ExecutionError&) {
      record.aborted = true;
    }
    record.total_reward = std::accumulate(record.rewards.begin(), record.rewards.end(), 0.0);
    if (config.mode != Mode::kTmp) {
      bound = planning::plan_quality(chosen, estimator);
      previous = std::move(chosen);
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<EpisodeRecord> run_baseline_tmp(const EpisodeSpan& span, const World& world, EnvironmentInterface& env,
                                            LoopConfig config, int run, int first_episode) {
  config.mode = Mode::kTmp;
  rl::ValueTables unused = fresh_tables(config, world.domain);
  return outer_tmprl(span, world, unused, env, config, run, first_episode);
}

}  // namespace tmprl::loops
