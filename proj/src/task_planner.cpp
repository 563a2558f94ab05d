#include "tmprl/task_planner.hpp"

#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "lexer.hpp"

namespace tmprl::planning {

std::string canonical_id(const std::vector<std::string>& actions) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](char c) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i > 0) mix(';');
    for (char c : actions[i]) mix(c);
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

std::optional<Plan> make_plan(const lang::GroundedDomain& domain, const lang::State& initial,
                              const std::vector<lang::ActionId>& actions) {
  Plan plan;
  lang::State state = initial;
  for (lang::ActionId a : actions) {
    auto next = lang::apply(state, a, domain);
    if (!next) return std::nullopt;
    plan.transitions.push_back(Transition{state, a, *next});
    plan.actions.push_back(domain.actions()[a].name);
    state = std::move(*next);
  }
  plan.id = canonical_id(plan.actions);
  return plan;
}

std::optional<Plan> make_plan(const lang::GroundedDomain& domain, const lang::State& initial,
                              const std::vector<std::string>& action_names) {
  std::vector<lang::ActionId> ids;
  for (const auto& name : action_names) {
    auto id = domain.find_action(name);
    if (!id) return std::nullopt;
    ids.push_back(*id);
  }
  return make_plan(domain, initial, ids);
}

double default_time_budget() {
  if (const char* env = std::getenv("TMPRL_SOLVER_TIMEOUT_SECS")) {
    char* end = nullptr;
    const double value = std::strtod(env, &end);
    if (end != env && *end == '\0' && value > 0.0) return value;
  }
  return 5.0;
}

namespace {

using Clock = std::chrono::steady_clock;

class Search {
 public:
  Search(const PlanningProblem& problem, const lang::GroundedDomain& domain, const QualityEstimator& estimator)
      : problem_(problem), domain_(domain), estimator_(estimator), upper_(estimator.upper_bound()) {
    if (problem.action_order.empty()) {
      order_.resize(domain.actions().size());
      std::iota(order_.begin(), order_.end(), lang::ActionId{0});
    } else {
      order_ = problem.action_order;
    }
    deadline_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(problem.time_budget));
  }

  PlanResult run(SearchStats* stats) {
    const int root = intern(problem_.initial);
    PlanResult result = NoPlan{NoPlan::Reason::kExhausted};
    for (int h = 0; h <= problem_.max_horizon; ++h) {
      horizon_ = h;
      seen_.clear();
      path_.clear();
      if (dfs(root, 0, 0.0)) {
        result = build();
        break;
      }
      if (timed_out_) {
        result = NoPlan{NoPlan::Reason::kTimeout};
        break;
      }
    }
    if (stats) {
      stats->nodes = nodes_;
      stats->horizon = horizon_;
    }
    return result;
  }

 private:
  struct Edge {
    lang::ActionId action;
    int next;
  };

  int intern(const lang::State& state) {
    auto [it, inserted] = index_.emplace(state, static_cast<int>(states_.size()));
    if (inserted) {
      states_.push_back(state);
      edges_.emplace_back();
      goal_.push_back(domain_.holds_all(state, problem_.goal) ? 1 : 0);
    }
    return it->second;
  }

  const std::vector<Edge>& edges(int id) {
    if (!edges_[id]) {
      std::vector<Edge> out;
      for (lang::ActionId a : order_) {
        auto next = lang::apply(states_[id], a, domain_);
        if (next) out.push_back(Edge{a, intern(*next)});
      }
      edges_[id] = std::move(out);
    }
    return *edges_[id];
  }

  double rho(int from, const Edge& edge) {
    const std::uint64_t key = (static_cast<std::uint64_t>(from) << 32) | edge.action;
    auto it = rho_.find(key);
    if (it != rho_.end()) return it->second;
    const double value = estimator_.lookup(states_[from], edge.action, states_[edge.next]);
    rho_.emplace(key, value);
    return value;
  }

  bool dfs(int id, int depth, double quality) {
    if (depth == horizon_) return goal_[id] && quality > problem_.quality_bound;
    const int remaining = horizon_ - depth;
    if (quality + remaining * upper_ <= problem_.quality_bound) return false;
    // A state reached earlier at the same depth with at least this quality
    // had its subtree searched without success.
    const std::uint64_t key = (static_cast<std::uint64_t>(id) << 8) | static_cast<std::uint64_t>(depth);
    auto [it, inserted] = seen_.emplace(key, quality);
    if (!inserted) {
      if (it->second >= quality) return false;
      it->second = quality;
    }
    // Copy: edges() may grow edges_ while recursing.
    const std::vector<Edge> out = edges(id);
    for (const Edge& edge : out) {
      if ((++nodes_ & 1023) == 0 && Clock::now() > deadline_) timed_out_ = true;
      if (timed_out_) return false;
      path_.push_back(edge);
      if (dfs(edge.next, depth + 1, quality + rho(id, edge))) return true;
      path_.pop_back();
    }
    return false;
  }

  Plan build() const {
    Plan plan;
    int current = index_.at(problem_.initial);
    for (const Edge& edge : path_) {
      plan.transitions.push_back(Transition{states_[current], edge.action, states_[edge.next]});
      plan.actions.push_back(domain_.actions()[edge.action].name);
      current = edge.next;
    }
    plan.id = canonical_id(plan.actions);
    return plan;
  }

  const PlanningProblem& problem_;
  const lang::GroundedDomain& domain_;
  const QualityEstimator& estimator_;
  const double upper_;
  std::vector<lang::ActionId> order_;
  Clock::time_point deadline_;

  std::vector<lang::State> states_;
  std::unordered_map<lang::State, int, lang::StateHash> index_;
  std::vector<std::optional<std::vector<Edge>>> edges_;
  std::vector<char> goal_;
  std::unordered_map<std::uint64_t, double> rho_;

  int horizon_ = 0;
  std::unordered_map<std::uint64_t, double> seen_;
  std::vector<Edge> path_;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
};

}  // namespace

PlanResult plan(const PlanningProblem& problem, const lang::GroundedDomain& domain, const QualityEstimator& estimator,
                SearchStats* stats) {
  if (problem.max_horizon < 0 || problem.max_horizon > 255) throw std::invalid_argument("max_horizon must be in 0..255");
  Search search(problem, domain, estimator);
  return search.run(stats);
}

double plan_quality(const Plan& plan, const QualityEstimator& estimator) {
  double quality = 0.0;
  for (const auto& t : plan.transitions) quality += estimator.lookup(t.from, t.action, t.to);
  return quality;
}

bool check_plan(const Plan& plan, const lang::GroundedDomain& domain, const PlanningProblem& problem) {
  if (plan.actions.size() != plan.transitions.size()) return false;
  const lang::State* current = &problem.initial;
  for (std::size_t i = 0; i < plan.transitions.size(); ++i) {
    const Transition& t = plan.transitions[i];
    if (!(t.from == *current)) return false;
    if (t.action >= domain.actions().size() || domain.actions()[t.action].name != plan.actions[i]) return false;
    if (!lang::check_transition(t.from, t.action, t.to, domain)) return false;
    current = &t.to;
  }
  for (const auto& literal : problem.goal) {
    if (current->contains(literal.atom) == literal.negated) return false;
  }
  return true;
}

std::vector<Scenario> parse_problems(std::string_view text) {
  using lang::detail::TokenKind;
  lang::detail::TokenStream tokens(lang::detail::tokenize(text));
  std::vector<Scenario> scenarios;

  auto require_scenario = [&](const lang::detail::Token& at) -> Scenario& {
    if (scenarios.empty()) tokens.fail(at, "statement before the first `scenario`");
    return scenarios.back();
  };
  auto require_ground = [&](const lang::detail::Token& at, const lang::Atom& atom) {
    for (const auto& arg : atom.args) {
      if (lang::is_variable(arg)) tokens.fail(at, "variable " + arg + " in a problem file");
    }
  };

  while (!tokens.at_end()) {
    const lang::detail::Token start = tokens.peek();
    if (tokens.accept_word("scenario")) {
      const lang::detail::Token name_token = tokens.peek();
      Scenario scenario;
      scenario.name = tokens.expect_name("scenario name");
      for (const auto& other : scenarios) {
        if (other.name == scenario.name) tokens.fail(name_token, "duplicate scenario " + scenario.name);
      }
      scenarios.push_back(std::move(scenario));
    } else if (tokens.accept_word("init")) {
      Scenario& scenario = require_scenario(start);
      std::vector<lang::Literal> literals;
      tokens.parse_body(literals, nullptr);
      for (auto& literal : literals) {
        if (literal.negated) tokens.fail(start, "init lists true atoms only");
        require_ground(start, literal.atom);
        scenario.init.push_back(std::move(literal.atom));
      }
    } else if (tokens.accept_word("goal")) {
      Scenario& scenario = require_scenario(start);
      std::vector<lang::Literal> literals;
      tokens.parse_body(literals, nullptr);
      for (auto& literal : literals) {
        require_ground(start, literal.atom);
        scenario.goal.push_back(std::move(literal));
      }
    } else if (tokens.accept_word("label")) {
      Scenario& scenario = require_scenario(start);
      std::pair<std::string, std::vector<std::string>> label;
      label.first = tokens.expect_name("label name");
      if (tokens.peek().kind != TokenKind::kDot) {
        do {
          const lang::detail::Token at = tokens.peek();
          const lang::Atom action = tokens.parse_atom();
          require_ground(at, action);
          label.second.push_back(lang::to_string(action));
        } while (tokens.accept(TokenKind::kComma));
      }
      scenario.labels.push_back(std::move(label));
    } else {
      tokens.fail(start, "unexpected " + lang::detail::describe(start));
    }
    tokens.expect(TokenKind::kDot, "`.`");
  }
  return scenarios;
}

}  // namespace tmprl::planning
