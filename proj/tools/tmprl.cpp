// Command-line driver: comparison runs, transfer runs and input validation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tmprl/harness.hpp"

#ifndef TMPRL_DATA_DIR
#define TMPRL_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace tmprl;

namespace {

struct Common {
  harness::SetupPaths paths = harness::bundled_paths(TMPRL_DATA_DIR);
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool record_timing = false;
  loops::LoopConfig loop;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--domain", c.paths.domain, "action description file");
  app->add_option("--map", c.paths.map, "occupancy map file");
  app->add_option("--problems", c.paths.problems, "scenario file");
  app->add_option("--env", c.paths.env, "simulator settings file");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "base seed (default: the env file seed)");
  app->add_option("--threads", c.threads, "worker threads, 0 = all cores");
  app->add_flag("--record-timing", c.record_timing, "write measured solver time instead of NA");
  app->add_option("--epsilon", c.loop.epsilon, "probability of a shuffled action order per episode")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--max-horizon", c.loop.max_horizon, "longest plan considered")->check(CLI::Range(0, 255));
  app->add_option("--alpha", c.loop.alpha, "R learning rate")->check(CLI::Range(0.0, 1.0));
  app->add_option("--beta", c.loop.beta, "rho learning rate")->check(CLI::Range(0.0, 1.0));
}

// Writes every file to a temporary name first; nothing is left behind on failure.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  ~OutputSet() {
    for (const auto& p : pending_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  void add(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    const fs::path tmp = dir_ / (name + ".partial");
    pending_.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    names_.push_back(name);
  }

  void commit() {
    for (const auto& name : names_) fs::rename(dir_ / (name + ".partial"), dir_ / name);
    pending_.clear();
  }

 private:
  fs::path dir_;
  std::vector<fs::path> pending_;
  std::vector<std::string> names_;
};

int run_command(const Common& c, const std::string& mode_text, int runs, int episodes, const std::string& scenario) {
  auto setup = harness::Setup::load(c.paths);
  harness::ExperimentSpec spec;
  if (mode_text != "all") {
    const auto mode = loops::parse_mode(mode_text);
    if (!mode) throw std::runtime_error("unknown mode " + mode_text);
    spec.modes = {*mode};
  }
  spec.runs = runs;
  spec.episodes = episodes;
  spec.seed = c.seed.value_or(setup->env().seed);
  spec.scenario = scenario;
  spec.loop = c.loop;
  spec.threads = c.threads;
  setup->scenario(scenario);

  const auto records = harness::run_comparison(*setup, spec);
  std::ostringstream episodes_csv, summary_csv, plans_csv;
  harness::write_episodes_csv(episodes_csv, records, {c.record_timing});
  harness::write_summary_csv(summary_csv, *setup, records);
  harness::write_plans_csv(plans_csv, records);
  OutputSet out(c.out);
  out.add("episodes.csv", episodes_csv.str());
  out.add("summary.csv", summary_csv.str());
  out.add("plans.csv", plans_csv.str());
  out.commit();
  std::cout << "wrote " << records.size() << " episodes to " << c.out << "\n";
  return 0;
}

int transfer_command(const Common& c, int runs, const std::vector<std::string>& schedule) {
  auto setup = harness::Setup::load(c.paths);
  harness::TransferSpec spec;
  spec.runs = runs;
  spec.seed = c.seed.value_or(setup->env().seed);
  spec.loop = c.loop;
  spec.threads = c.threads;
  if (!schedule.empty()) {
    spec.schedule.clear();
    for (const auto& item : schedule) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw std::runtime_error("schedule items look like start_1:15, got " + item);
      spec.schedule.emplace_back(item.substr(0, colon), std::stoi(item.substr(colon + 1)));
    }
  }

  const auto transfer = harness::run_transfer(*setup, spec);
  std::vector<loops::EpisodeRecord> records;
  std::vector<std::string> conditions;
  for (const auto& t : transfer) {
    records.push_back(t.episode);
    conditions.push_back(t.condition);
  }
  std::ostringstream episodes_csv, summary_csv, plans_csv;
  harness::write_episodes_csv(episodes_csv, records, {c.record_timing}, &conditions);
  harness::write_summary_csv(summary_csv, *setup, records, &conditions);
  harness::write_plans_csv(plans_csv, records);
  OutputSet out(c.out);
  out.add("transfer_episodes.csv", episodes_csv.str());
  out.add("transfer_summary.csv", summary_csv.str());
  out.add("transfer_plans.csv", plans_csv.str());
  out.commit();
  std::cout << "wrote " << records.size() << " transfer episodes to " << c.out << "\n";
  return 0;
}

// Loads everything and runs one noise-free episode per mode and scenario.
int validate_command(const Common& c) {
  auto setup = harness::Setup::load(c.paths);
  std::cout << setup->domain().actions().size() << " ground actions, " << setup->scenarios().size()
            << " scenarios, " << setup->grid().doors.size() << " doors\n";
  sim::EnvConfig quiet = setup->env();
  quiet.nav_noise_std = 0.0;
  quiet.door_open_std = 0.0;
  harness::Setup noiseless(setup->domain(), setup->grid(), setup->scenarios(), quiet);
  for (const auto& scenario : noiseless.scenarios()) {
    harness::ExperimentSpec spec;
    spec.runs = 1;
    spec.episodes = 1;
    spec.scenario = scenario.name;
    spec.loop = c.loop;
    spec.threads = 1;
    for (const auto& r : harness::run_comparison(noiseless, spec)) {
      std::printf("%-8s %-7s %-6s reward %8.2f  %zu actions\n", scenario.name.c_str(), loops::to_string(r.mode).c_str(),
                  harness::plan_label(noiseless, scenario.name, r.plan_id).c_str(), r.total_reward, r.actions.size());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task and motion planning with learned action costs"};
  app.require_subcommand(1);

  Common run_opts;
  std::string mode = "all";
  int runs = 50, episodes = 40;
  std::string scenario = "start_1";
  auto* run = app.add_subcommand("run", "compare planning modes on one scenario");
  add_common(run, run_opts);
  run->add_option("--mode", mode, "tmp, tp-rl, tmp-rl or all")
      ->check(CLI::IsMember({"tmp", "tp-rl", "tmp-rl", "all"}));
  run->add_option("--runs", runs, "independent runs per mode")->check(CLI::PositiveNumber);
  run->add_option("--episodes", episodes, "episodes per run")->check(CLI::PositiveNumber);
  run->add_option("--scenario", scenario, "scenario name");

  Common transfer_opts;
  int transfer_runs = 40;
  std::vector<std::string> schedule;
  auto* transfer = app.add_subcommand("transfer", "switch start scenarios with and without carried tables");
  add_common(transfer, transfer_opts);
  transfer->add_option("--runs", transfer_runs, "independent runs per condition")->check(CLI::PositiveNumber);
  transfer->add_option("--schedule", schedule, "scenario:episodes items, in order");

  Common validate_opts;
  auto* validate = app.add_subcommand("validate", "check the input files");
  add_common(validate, validate_opts);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_command(run_opts, mode, runs, episodes, scenario);
    if (*transfer) return transfer_command(transfer_opts, transfer_runs, schedule);
    if (*validate) return validate_command(validate_opts);
  } catch (const std::exception& e) {
    std::cerr << "tmprl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
