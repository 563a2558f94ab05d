// Experiment setup, parallel runs and CSV output.

#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "tmprl/action_lang.hpp"
#include "tmprl/motion_planner.hpp"
#include "tmprl/planning_loops.hpp"
#include "tmprl/rl_core.hpp"
#include "tmprl/sim_env.hpp"
#include "tmprl/task_planner.hpp"

namespace tmprl::harness {

struct SetupPaths {
  std::string domain;
  std::string map;
  std::string problems;
  std::string env;
};

/// Default paths of the bundled office files under `data_dir`.
SetupPaths bundled_paths(const std::string& data_dir);

/// Parsed and grounded inputs shared read-only by all runs.
class Setup {
 public:
  /// Throws on the first unreadable or invalid file; messages name the path.
  static std::unique_ptr<Setup> load(const SetupPaths& paths);

  const lang::GroundedDomain& domain() const { return domain_; }
  const motion::OccupancyGrid& grid() const { return grid_; }
  const motion::SymbolMap& symbols() const { return *symbols_; }
  const rl::StateAbstraction& abstraction() const { return *abstraction_; }
  const std::vector<planning::Scenario>& scenarios() const { return scenarios_; }
  const sim::EnvConfig& env() const { return env_; }

  const planning::Scenario& scenario(const std::string& name) const;
  planning::PlanningProblem problem(const std::string& scenario) const;
  /// Plan id -> label for the scenario's labelled routes.
  std::vector<std::pair<std::string, std::string>> labelled_ids(const std::string& scenario) const;

  Setup(lang::GroundedDomain domain, motion::OccupancyGrid grid, std::vector<planning::Scenario> scenarios,
        sim::EnvConfig env);

 private:
  lang::GroundedDomain domain_;
  motion::OccupancyGrid grid_;
  std::unique_ptr<motion::SymbolMap> symbols_;
  std::unique_ptr<rl::StateAbstraction> abstraction_;
  std::vector<planning::Scenario> scenarios_;
  sim::EnvConfig env_;
};

struct ExperimentSpec {
  std::vector<loops::Mode> modes = {loops::Mode::kTmp, loops::Mode::kTpRl, loops::Mode::kTmpRl};
  int runs = 50;
  int episodes = 40;
  std::uint64_t seed = 1;
  std::string scenario = "start_1";
  loops::LoopConfig loop;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Seed of run r.
inline std::uint64_t run_seed(std::uint64_t base, int run) { return base ^ static_cast<std::uint64_t>(run); }

/// All episodes of all modes, ordered by mode (as listed), run, episode.
std::vector<loops::EpisodeRecord> run_comparison(const Setup& setup, const ExperimentSpec& spec);

struct TransferSpec {
  std::vector<std::pair<std::string, int>> schedule = {{"start_1", 15}, {"start_2", 15}, {"start_3", 15}};
  int runs = 40;
  std::uint64_t seed = 1;
  loops::LoopConfig loop;
  unsigned threads = 0;
};

struct TransferRecord {
  std::string condition;  // "continued" or "scratch"
  loops::EpisodeRecord episode;
};

/// TMP-RL over the schedule. `continued` carries the tables across scenario
/// switches through a snapshot round trip; `scratch` starts each scenario
/// from fresh tables. Ordered by condition, run, episode.
std::vector<TransferRecord> run_transfer(const Setup& setup, const TransferSpec& spec);

struct CsvOptions {
  bool record_timing = false;  // otherwise solver_seconds is written as NA
};

void write_episodes_csv(std::ostream& out, const std::vector<loops::EpisodeRecord>& records, const CsvOptions& options,
                        const std::vector<std::string>* conditions = nullptr);
/// Per (condition, mode, episode): mean and population std of total reward and
/// counts of labelled plans ("other" for the rest).
void write_summary_csv(std::ostream& out, const Setup& setup, const std::vector<loops::EpisodeRecord>& records,
                       const std::vector<std::string>* conditions = nullptr);
void write_plans_csv(std::ostream& out, const std::vector<loops::EpisodeRecord>& records);

/// Label of a plan id in a scenario, or "other".
std::string plan_label(const Setup& setup, const std::string& scenario, const std::string& plan_id);

}  // namespace tmprl::harness
