// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "oracles.hpp"
#include "tmprl/harness.hpp"

using namespace tmprl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof buffer, format, args);
  va_end(args);
  return buffer;
}

const harness::Setup& setup() {
  static const auto instance = harness::Setup::load(harness::bundled_paths(TMPRL_DATA_DIR));
  return *instance;
}

// Labelled start_1 routes, in label order.
std::map<std::string, planning::Plan> labelled_plans() {
  std::map<std::string, planning::Plan> out;
  const auto problem = setup().problem("start_1");
  for (const auto& [label, actions] : setup().scenario("start_1").labels) {
    out.emplace(label, *planning::make_plan(setup().domain(), problem.initial, actions));
  }
  return out;
}

double motion_length(const planning::Plan& plan, motion::PathCache& paths) {
  double total = 0.0;
  for (const auto& t : plan.transitions) {
    if (!setup().symbols().is_navigation(t.action)) continue;
    total += *paths.length(*setup().symbols().map_state(t.from), *setup().symbols().map_state(t.to));
  }
  return total;
}

// E[max(0, X)] for X ~ N(m, s).
double truncated_mean(double m, double s) {
  if (s == 0.0) return std::max(0.0, m);
  const double z = m / s;
  return m * 0.5 * std::erfc(-z / std::sqrt(2.0)) + s * std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
}

double analytic_duration(const planning::Plan& plan, motion::PathCache& paths) {
  const auto& env = setup().env();
  double total = 0.0;
  for (const auto& t : plan.transitions) {
    const auto& action = setup().domain().actions()[t.action];
    if (action.schema == "approach") {
      const double length =
          *paths.length(*setup().symbols().map_state(t.from), *setup().symbols().map_state(t.to));
      total += length / env.nav_speed + env.nav_noise_std * std::sqrt(2 / M_PI);
    } else if (action.schema == "open_door") {
      total += truncated_mean(env.door_mean(action.args[0]), env.door_open_std);
    } else {
      total += env.go_through_duration;
    }
  }
  return total;
}

std::vector<loops::EpisodeRecord> comparison(loops::Mode mode) {
  harness::ExperimentSpec spec;
  spec.modes = {mode};
  spec.runs = 50;
  spec.episodes = 40;
  spec.seed = setup().env().seed;
  return harness::run_comparison(setup(), spec);
}

bool is_other(const loops::EpisodeRecord& r) { return harness::plan_label(setup(), r.scenario, r.plan_id) == "other"; }

Outcome cost_ordering() {
  motion::PathCache paths(setup().grid());
  const auto plans = labelled_plans();
  std::map<std::string, double> length, analytic, sampled;
  for (const auto& [label, plan] : plans) {
    length[label] = motion_length(plan, paths);
    analytic[label] = analytic_duration(plan, paths);
    sim::SimEnvironment env(setup().env(), setup().scenarios(), "start_1",
                            sim::Scene{setup().domain(), setup().symbols(), paths});
    const int n = 10000;
    double sum = 0.0;
    for (int e = 0; e < n; ++e) {
      auto state = env.reset(static_cast<std::uint64_t>(e));
      for (const auto& t : plan.transitions) state = env.execute(state, t.action).next;
      sum += env.world().clock;
    }
    sampled[label] = sum / n;
  }
  bool within = true;
  for (const auto& [label, value] : analytic) within &= std::abs(sampled[label] - value) <= 0.01 * value;
  const bool lengths = length["plan2"] < length["plan3"] && length["plan3"] < length["plan1"];
  const bool times = sampled["plan1"] < sampled["plan3"] && sampled["plan3"] < sampled["plan2"];
  return {lengths && times && within,
          fmt("lengths 2/3/1 = %.2f/%.2f/%.2f; sampled times 1/3/2 = %.2f/%.2f/%.2f vs analytic %.2f/%.2f/%.2f",
              length["plan2"], length["plan3"], length["plan1"], sampled["plan1"], sampled["plan3"], sampled["plan2"],
              analytic["plan1"], analytic["plan3"], analytic["plan2"])};
}

Outcome tmp_baseline() {
  const auto records = comparison(loops::Mode::kTmp);
  int plan2 = 0;
  for (const auto& r : records) plan2 += harness::plan_label(setup(), r.scenario, r.plan_id) == "plan2";
  return {plan2 == static_cast<int>(records.size()) && records.size() == 2000,
          fmt("plan2 in %d of %zu episodes", plan2, records.size())};
}

std::vector<loops::EpisodeRecord> tmprl_records;

Outcome tmprl_convergence() {
  tmprl_records = comparison(loops::Mode::kTmpRl);
  motion::PathCache paths(setup().grid());
  const double expected = -analytic_duration(labelled_plans().at("plan1"), paths);
  int late = 0, plan1 = 0;
  double reward = 0.0;
  for (const auto& r : tmprl_records) {
    if (r.episode < 30) continue;
    ++late;
    plan1 += harness::plan_label(setup(), r.scenario, r.plan_id) == "plan1";
    reward += r.total_reward;
  }
  const double share = static_cast<double>(plan1) / late;
  const double mean = reward / late;
  return {late == 500 && share >= 0.8 && std::abs(mean - expected) <= 0.1 * std::abs(expected),
          fmt("plan1 share in episodes 31-40 = %.3f; mean reward %.2f vs plan1 expectation %.2f", share, mean,
              expected)};
}

Outcome beats_tprl() {
  const auto tprl = comparison(loops::Mode::kTpRl);
  if (tmprl_records.empty()) tmprl_records = comparison(loops::Mode::kTmpRl);
  std::map<int, double> ours, theirs;
  int other_ours = 0, other_theirs = 0;
  for (const auto& r : tmprl_records) {
    ours[r.run] += r.total_reward;
    other_ours += is_other(r);
  }
  for (const auto& r : tprl) {
    theirs[r.run] += r.total_reward;
    other_theirs += is_other(r);
  }
  int wins = 0;
  for (const auto& [run, total] : ours) wins += total > theirs.at(run);
  return {wins >= 45 && other_theirs > other_ours,
          fmt("TMP-RL ahead in %d of 50 paired runs; other-plan episodes TP-RL %d vs TMP-RL %d", wins, other_theirs,
              other_ours)};
}

// One-sided sign test: P(at least `wins` successes of `n` fair coin flips).
double sign_test(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) - n * std::log(2.0));
  return p;
}

Outcome transfer() {
  harness::TransferSpec spec;
  spec.seed = setup().env().seed;
  const auto records = harness::run_transfer(setup(), spec);
  bool pass = records.size() == 2 * 40 * 45;
  std::string detail;
  for (int task = 1; task < 3; ++task) {
    const int first = 15 * task;
    std::map<std::pair<std::string, int>, double> mean;
    for (const auto& r : records) {
      if (r.episode.episode >= first && r.episode.episode < first + 5) {
        mean[{r.condition, r.episode.run}] += r.episode.total_reward / 5;
      }
    }
    int wins = 0, losses = 0;
    double continued = 0.0, scratch = 0.0;
    for (int run = 0; run < 40; ++run) {
      const double c = mean[{"continued", run}];
      const double s = mean[{"scratch", run}];
      continued += c / 40;
      scratch += s / 40;
      wins += c > s;
      losses += c < s;
    }
    const double p = sign_test(wins, wins + losses);
    pass &= continued > scratch && p < 0.05;
    detail += fmt("%stask %d: continued %.2f vs scratch %.2f, %d/%d wins, p = %.2g", task == 1 ? "" : "; ", task + 1,
                  continued, scratch, wins, wins + losses, p);
  }
  return {pass, detail};
}

Outcome learning_oracle() {
  std::mt19937_64 rng(20240601);
  const std::vector<std::string> states = {"s0", "s1", "s2", "s3", "s4"};
  const std::vector<std::string> actions = {"a0", "a1", "a2"};
  std::uniform_real_distribution<double> reward(-100.0, 0.0);
  std::uniform_real_distribution<double> rate(0.01, 1.0);
  int checked = 0;
  double worst = 0.0;
  while (checked < 1000) {
    const double alpha = rate(rng), beta = rate(rng);
    rl::ValueTables tables(alpha, beta, actions.size());
    oracles::Reference ref{alpha, beta, actions, {}, {}};
    for (int i = 0; i < 50 && checked < 1000; ++i, ++checked) {
      const auto& s = states[rng() % states.size()];
      const auto& a = actions[rng() % actions.size()];
      const auto& s2 = states[rng() % states.size()];
      const double r = reward(rng);
      const double d = -reward(rng) / 10.0;
      tables.update(s, a, r, s2, d);
      ref.step(s, a, r, s2, d);
      worst = std::max(worst, std::abs(tables.r_value(s, a) - ref.r.at({s, a})));
      worst = std::max(worst, std::abs(*tables.stored_rho(s, a) - ref.rho.at({s, a})));
    }
  }
  return {worst <= 1e-12, fmt("%d updates, largest difference %.3g", checked, worst)};
}

Outcome motion_oracle() {
  std::mt19937_64 rng(777);
  int queries = 0, feasible = 0, mismatches = 0, bound_violations = 0;
  for (int i = 0; i < 200; ++i) {
    const auto grid = oracles::random_grid(rng);
    for (int q = 0; q < 5; ++q) {
      const motion::Cell a{static_cast<int>(rng() % grid.width()), static_cast<int>(rng() % grid.height())};
      const motion::Cell b{static_cast<int>(rng() % grid.width()), static_cast<int>(rng() % grid.height())};
      const auto expected = oracles::oracle_length(grid, a, b);
      const auto result = motion::shortest_path(grid, grid.pose_of(a), grid.pose_of(b));
      const auto* t = std::get_if<motion::Trajectory>(&result);
      ++queries;
      if (expected.has_value() != (t != nullptr)) {
        ++mismatches;
        continue;
      }
      if (!t) continue;
      ++feasible;
      mismatches += t->length != *expected;
      bound_violations += t->length < motion::euclidean(grid.pose_of(a), grid.pose_of(b)) - 2 * grid.resolution();
    }
  }
  return {mismatches == 0 && bound_violations == 0,
          fmt("%d queries on 200 grids (%d feasible): %d mismatches, %d lower-bound violations", queries, feasible,
              mismatches, bound_violations)};
}

Outcome planner_oracle() {
  std::mt19937_64 rng(4242);
  int domains = 0, disagreements = 0, invalid = 0, solved = 0;
  while (domains < 100) {
    int fluents = 0;
    const auto domain = lang::ground(lang::parse_domain(oracles::random_domain(rng, fluents)));
    planning::PlanningProblem problem;
    std::vector<lang::Atom> init;
    for (int f = 0; f < fluents; ++f) {
      if (rng() % 2) init.push_back({"p" + std::to_string(f), {}});
    }
    std::vector<lang::Literal> goal;
    for (int g = 0, n = 1 + static_cast<int>(rng() % 2); g < n; ++g) {
      goal.push_back({{"p" + std::to_string(rng() % fluents), {}}, rng() % 2 == 0});
    }
    try {
      problem.initial = domain.make_state(init);
      problem.goal = domain.make_literals(goal);
    } catch (const lang::GroundingError&) {
      continue;  // a static law made the drawn initial state inconsistent
    }
    ++domains;
    problem.max_horizon = 1 + static_cast<int>(rng() % 6);
    const oracles::Hashed q(rng());
    const auto all = oracles::enumerate_plans(domain, problem, q);
    for (int b = 0; b < 3; ++b) {
      planning::PlanningProblem p = problem;
      if (b == 1) p.quality_bound = -0.25 * static_cast<double>(rng() % 30);
      if (b == 2 && !all.empty()) p.quality_bound = all[rng() % all.size()].quality;
      bool expected = false;
      for (const auto& e : all) expected |= e.quality > p.quality_bound;
      const auto result = planning::plan(p, domain, q);
      const auto* found = std::get_if<planning::Plan>(&result);
      disagreements += expected != (found != nullptr);
      if (found) {
        ++solved;
        invalid += !planning::check_plan(*found, domain, p) || planning::plan_quality(*found, q) <= p.quality_bound;
      }
    }
  }
  return {disagreements == 0 && invalid == 0,
          fmt("%d domains, 3 bounds each: %d solvable, %d disagreements, %d invalid plans", domains, solved,
              disagreements, invalid)};
}

// Best quality over all plans of exactly `steps` actions from `state`, by
// exhaustive recursion over applicable actions with memoization.
class BestQuality {
 public:
  BestQuality(const lang::GroundedDomain& domain, const planning::PlanningProblem& problem,
              const planning::QualityEstimator& q)
      : domain_(domain), problem_(problem), q_(q) {}

  double operator()(const lang::State& state, int steps) {
    if (steps == 0) return domain_.holds_all(state, problem_.goal) ? 0.0 : -INFINITY;
    const auto key = std::make_pair(domain_.to_string(state), steps);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double best = -INFINITY;
    for (lang::ActionId a = 0; a < domain_.actions().size(); ++a) {
      const auto next = lang::apply(state, a, domain_);
      if (!next) continue;
      best = std::max(best, q_.lookup(state, a, *next) + (*this)(*next, steps - 1));
    }
    return memo_[key] = best;
  }

 private:
  const lang::GroundedDomain& domain_;
  const planning::PlanningProblem& problem_;
  const planning::QualityEstimator& q_;
  std::map<std::pair<std::string, int>, double> memo_;
};

// Enumerated once with BestQuality over horizons 0..12 on the bundled map.
constexpr double kGoldenInnerQuality = -56.253723367877164;

Outcome inner_contract() {
  motion::PathCache paths(setup().grid());
  const loops::World world{setup().domain(), setup().symbols(), setup().abstraction(), paths};
  loops::LoopConfig config;
  config.mode = loops::Mode::kTmp;
  auto tables = loops::fresh_tables(config, setup().domain());
  const auto problem = setup().problem("start_1");
  const auto result = loops::inner_tmp(problem, world, tables, config, std::nullopt);

  bool increasing = true;
  for (std::size_t i = 1; i < result.planned_qualities.size(); ++i) {
    increasing &= result.planned_qualities[i] > result.planned_qualities[i - 1];
  }
  const loops::TableEstimator estimator(world, tables, loops::policy_for(config.mode));
  const double final_quality = planning::plan_quality(result.plan, estimator);
  BestQuality best(setup().domain(), problem, estimator);
  double maximum = -INFINITY;
  for (int h = 0; h <= config.max_horizon; ++h) maximum = std::max(maximum, best(problem.initial, h));

  const bool pass = !result.capped && result.iterations <= 50 && increasing &&
                    std::abs(final_quality - maximum) <= 1e-9 && std::abs(maximum - kGoldenInnerQuality) <= 1e-9;
  std::string sequence;
  for (double q : result.planned_qualities) sequence += fmt("%s%.3f", sequence.empty() ? "" : " < ", q);
  return {pass, fmt("%d planner calls, accepted qualities %s; final %.6f, enumerated maximum %.6f (golden %.6f)",
                    result.iterations, sequence.c_str(), final_quality, maximum, kGoldenInnerQuality)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / fmt("tmprl_acceptance_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);
  auto invoke = [&](const std::string& name, int threads) {
    const fs::path out = root / name;
    const std::string command = std::string(TMPRL_CLI) + " run --mode all --runs 8 --episodes 15 --epsilon 0.1" +
                                " --threads " + std::to_string(threads) + " --out " + out.string() + " > /dev/null";
    return std::system(command.c_str()) == 0 ? out : fs::path();
  };
  const auto a = invoke("a", 4), b = invoke("b", 4), c = invoke("c", 1);
  bool pass = !a.empty() && !b.empty() && !c.empty();
  int compared = 0;
  for (const char* file : {"episodes.csv", "summary.csv", "plans.csv"}) {
    if (!pass) break;
    const auto first = slurp(a / file);
    pass &= !first.empty() && first == slurp(b / file) && first == slurp(c / file);
    ++compared;
  }
  fs::remove_all(root);
  return {pass, fmt("%d CSV files byte-identical across two 4-thread runs and one serial run", pass ? compared : 0)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_seconds;  // 0 = no runtime limit
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "cost ordering", 10, cost_ordering},
      {2, "TMP baseline", 120, tmp_baseline},
      {3, "TMP-RL convergence", 300, tmprl_convergence},
      {4, "TMP-RL beats TP-RL", 0, beats_tprl},
      {5, "transfer", 600, transfer},
      {6, "R-learning oracle", 0, learning_oracle},
      {7, "motion oracle", 0, motion_oracle},
      {8, "planner oracle", 0, planner_oracle},
      {9, "inner-loop contract", 0, inner_contract},
      {10, "determinism", 0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.1fs", seconds);
    if (c.limit_seconds > 0) {
      timing += fmt(" of %.0fs", c.limit_seconds);
      outcome.pass &= seconds < c.limit_seconds;
    }
    failures += !outcome.pass;
    std::printf("%s %2d %s: %s [%s]\n", outcome.pass ? "PASS" : "FAIL", c.id, c.title, outcome.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
