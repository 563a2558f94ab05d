#include "tmprl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace tmprl::harness {

SetupPaths bundled_paths(const std::string& data_dir) {
  return SetupPaths{data_dir + "/office.domain", data_dir + "/office.map", data_dir + "/office.problem",
                    data_dir + "/office.env"};
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

template <typename F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const lang::SyntaxError& e) {
    throw std::runtime_error(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what());
  } catch (const lang::DomainError& e) {
    throw std::runtime_error(path + ":" + std::to_string(e.line()) + ": " + e.what());
  } catch (const std::exception& e) {
    const std::string message = e.what();
    if (message.find(path) != std::string::npos) throw;
    throw std::runtime_error(path + ": " + message);
  }
}

std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.10g", value);
  return buffer;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

// Runs task(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Setup::Setup(lang::GroundedDomain domain, motion::OccupancyGrid grid, std::vector<planning::Scenario> scenarios,
             sim::EnvConfig env)
    : domain_(std::move(domain)), grid_(std::move(grid)), scenarios_(std::move(scenarios)), env_(std::move(env)) {
  symbols_ = std::make_unique<motion::SymbolMap>(grid_, domain_);
  abstraction_ = std::make_unique<rl::StateAbstraction>(domain_);
}

std::unique_ptr<Setup> Setup::load(const SetupPaths& paths) {
  auto domain = with_path(paths.domain, [&] { return lang::ground(lang::parse_domain(read_text(paths.domain))); });
  auto grid = with_path(paths.map, [&] { return motion::parse_map(read_text(paths.map)); });
  auto scenarios = with_path(paths.problems, [&] { return planning::parse_problems(read_text(paths.problems)); });
  auto env = with_path(paths.env, [&] { return sim::parse_env(read_text(paths.env)); });
  auto setup = std::make_unique<Setup>(std::move(domain), std::move(grid), std::move(scenarios), std::move(env));
  with_path(paths.problems, [&] {
    for (const auto& scenario : setup->scenarios()) {
      const auto problem = setup->problem(scenario.name);
      if (!setup->symbols().map_state(problem.initial)) {
        throw std::runtime_error("scenario " + scenario.name + " starts in an unmapped state");
      }
      for (const auto& [label, actions] : scenario.labels) {
        if (!planning::make_plan(setup->domain(), problem.initial, actions)) {
          throw std::runtime_error("label " + label + " of " + scenario.name + " is not executable");
        }
      }
    }
    return 0;
  });
  return setup;
}

const planning::Scenario& Setup::scenario(const std::string& name) const {
  for (const auto& s : scenarios_) {
    if (s.name == name) return s;
  }
  throw sim::UnknownScenario("unknown scenario " + name);
}

planning::PlanningProblem Setup::problem(const std::string& name) const {
  const auto& s = scenario(name);
  planning::PlanningProblem problem;
  problem.initial = domain_.make_state(s.init);
  problem.goal = domain_.make_literals(s.goal);
  return problem;
}

std::vector<std::pair<std::string, std::string>> Setup::labelled_ids(const std::string& name) const {
  const auto& s = scenario(name);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [label, actions] : s.labels) out.emplace_back(planning::canonical_id(actions), label);
  return out;
}

std::string plan_label(const Setup& setup, const std::string& scenario, const std::string& plan_id) {
  for (const auto& [id, label] : setup.labelled_ids(scenario)) {
    if (id == plan_id) return label;
  }
  return "other";
}

namespace {

struct RunContext {
  RunContext(const Setup& setup, std::uint64_t seed, const std::string& scenario)
      : paths(setup.grid()),
        world{setup.domain(), setup.symbols(), setup.abstraction(), paths},
        env(env_config(setup, seed), setup.scenarios(), scenario,
            sim::Scene{setup.domain(), setup.symbols(), paths}) {}

  static sim::EnvConfig env_config(const Setup& setup, std::uint64_t seed) {
    sim::EnvConfig config = setup.env();
    config.seed = seed;
    return config;
  }

  motion::PathCache paths;
  loops::World world;
  sim::SimEnvironment env;
};

}  // namespace

std::vector<loops::EpisodeRecord> run_comparison(const Setup& setup, const ExperimentSpec& spec) {
  if (spec.runs < 1 || spec.episodes < 1) throw std::invalid_argument("runs and episodes must be positive");
  const auto problem = setup.problem(spec.scenario);
  const std::size_t units = spec.modes.size() * static_cast<std::size_t>(spec.runs);
  std::vector<std::vector<loops::EpisodeRecord>> results(units);
  parallel_for(units, spec.threads, [&](std::size_t unit) {
    const loops::Mode mode = spec.modes[unit / spec.runs];
    const int run = static_cast<int>(unit % spec.runs);
    const std::uint64_t seed = run_seed(spec.seed, run);
    RunContext context(setup, seed, spec.scenario);
    loops::LoopConfig config = spec.loop;
    config.mode = mode;
    rl::ValueTables tables = loops::fresh_tables(config, setup.domain());
    const loops::EpisodeSpan span{problem, spec.scenario, spec.episodes};
    results[unit] = loops::outer_tmprl(span, context.world, tables, context.env, config, run, 0, seed);
  });
  std::vector<loops::EpisodeRecord> out;
  for (auto& chunk : results) {
    for (auto& record : chunk) out.push_back(std::move(record));
  }
  return out;
}

std::vector<TransferRecord> run_transfer(const Setup& setup, const TransferSpec& spec) {
  if (spec.runs < 1 || spec.schedule.empty()) throw std::invalid_argument("transfer needs runs and a schedule");
  for (const auto& [scenario, episodes] : spec.schedule) {
    if (episodes < 1) throw std::invalid_argument("every scenario span needs at least one episode");
    setup.scenario(scenario);
  }
  const std::vector<std::string> conditions = {"continued", "scratch"};
  const std::size_t units = conditions.size() * static_cast<std::size_t>(spec.runs);
  std::vector<std::vector<TransferRecord>> results(units);
  parallel_for(units, spec.threads, [&](std::size_t unit) {
    const bool continued = unit / spec.runs == 0;
    const int run = static_cast<int>(unit % spec.runs);
    const std::uint64_t seed = run_seed(spec.seed, run);
    RunContext context(setup, seed, spec.schedule.front().first);
    loops::LoopConfig config = spec.loop;
    config.mode = loops::Mode::kTmpRl;
    rl::ValueTables tables = loops::fresh_tables(config, setup.domain());
    int first = 0;
    for (const auto& [scenario, episodes] : spec.schedule) {
      if (first > 0) {
        if (continued) {
          std::stringstream snapshot;
          rl::write_snapshot(tables, snapshot);
          tables = loops::fresh_tables(config, setup.domain());
          rl::read_snapshot(snapshot, tables);
        } else {
          tables = loops::fresh_tables(config, setup.domain());
        }
      }
      context.env.set_scenario(scenario);
      const loops::EpisodeSpan span{setup.problem(scenario), scenario, episodes};
      for (auto& record : loops::outer_tmprl(span, context.world, tables, context.env, config, run, first, seed)) {
        results[unit].push_back(TransferRecord{conditions[unit / spec.runs], std::move(record)});
      }
      first += episodes;
    }
  });
  std::vector<TransferRecord> out;
  for (auto& chunk : results) {
    for (auto& record : chunk) out.push_back(std::move(record));
  }
  return out;
}

void write_episodes_csv(std::ostream& out, const std::vector<loops::EpisodeRecord>& records, const CsvOptions& options,
                        const std::vector<std::string>* conditions) {
  if (conditions) out << "condition,";
  out << "run,episode,mode,plan_id,reward,solver_seconds,inner_iterations\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (conditions) out << quote((*conditions)[i]) << ',';
    out << r.run << ',' << r.episode << ',' << loops::to_string(r.mode) << ',' << r.plan_id << ','
        << format_number(r.total_reward) << ',' << (options.record_timing ? format_number(r.solver_seconds) : "NA")
        << ',' << r.inner_iterations << '\n';
  }
}

void write_summary_csv(std::ostream& out, const Setup& setup, const std::vector<loops::EpisodeRecord>& records,
                       const std::vector<std::string>* conditions) {
  std::vector<std::string> labels;
  std::set<std::string> scenarios;
  for (const auto& r : records) scenarios.insert(r.scenario);
  for (const auto& s : setup.scenarios()) {
    if (!scenarios.count(s.name)) continue;
    for (const auto& [label, actions] : s.labels) {
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    }
  }

  // Groups keep first-appearance order of (condition, mode) and ascending episodes.
  struct Group {
    std::vector<double> rewards;
    std::map<std::string, int> counts;
  };
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::map<int, Group>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::pair<std::string, std::string> key{conditions ? (*conditions)[i] : "", loops::to_string(r.mode)};
    if (!groups.count(key)) order.push_back(key);
    Group& g = groups[key][r.episode];
    g.rewards.push_back(r.total_reward);
    g.counts[plan_label(setup, r.scenario, r.plan_id)]++;
  }

  if (conditions) out << "condition,";
  out << "mode,episode,mean_reward,std_reward";
  for (const auto& label : labels) out << ",count_" << label;
  out << ",count_other\n";
  for (const auto& key : order) {
    for (const auto& [episode, g] : groups[key]) {
      double mean = 0.0;
      for (double v : g.rewards) mean += v;
      mean /= static_cast<double>(g.rewards.size());
      double var = 0.0;
      for (double v : g.rewards) var += (v - mean) * (v - mean);
      var /= static_cast<double>(g.rewards.size());
      if (conditions) out << quote(key.first) << ',';
      out << key.second << ',' << episode << ',' << format_number(mean) << ',' << format_number(std::sqrt(var));
      for (const auto& label : labels) {
        auto it = g.counts.find(label);
        out << ',' << (it == g.counts.end() ? 0 : it->second);
      }
      auto other = g.counts.find("other");
      out << ',' << (other == g.counts.end() ? 0 : other->second) << '\n';
    }
  }
}

void write_plans_csv(std::ostream& out, const std::vector<loops::EpisodeRecord>& records) {
  std::map<std::string, std::vector<std::string>> plans;
  for (const auto& r : records) plans.emplace(r.plan_id, r.actions);
  out << "plan_id,actions\n";
  for (const auto& [id, actions] : plans) out << id << ',' << quote(join(actions, " ")) << '\n';
}

}  // namespace tmprl::harness
