#include "tmprl/sim_env.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace tmprl::sim {

double EnvConfig::door_mean(const std::string& door) const {
  auto it = door_open_mean.find(door);
  return it == door_open_mean.end() ? default_door_mean : it->second;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

[[noreturn]] void fail(int line_no, const std::string& message) {
  throw ConfigError("env line " + std::to_string(line_no) + ": " + message);
}

double number(const std::string& text, int line_no) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(line_no, "bad number `" + text + "`");
  }
  if (used != text.size() || !std::isfinite(value)) fail(line_no, "bad number `" + text + "`");
  if (value < 0.0) fail(line_no, "value must be nonnegative");
  return value;
}

}  // namespace

EnvConfig parse_env(std::string_view text) {
  EnvConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("%#");
    const std::string line = trim(raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.rfind("door_mean", 0) == 0 && line.find('=') == std::string::npos) {
      std::istringstream fields(line);
      std::string keyword, door, value, extra;
      fields >> keyword >> door >> value;
      if (keyword != "door_mean" || door.empty() || value.empty() || (fields >> extra)) {
        fail(line_no, "expected `door_mean <door> <seconds>`");
      }
      config.door_open_mean[door] = number(value, line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "seed") {
      try {
        std::size_t used = 0;
        config.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        fail(line_no, "bad seed `" + value + "`");
      }
    } else if (key == "nav_speed") {
      config.nav_speed = number(value, line_no);
      if (config.nav_speed == 0.0) fail(line_no, "nav_speed must be positive");
    } else if (key == "nav_noise_std") {
      config.nav_noise_std = number(value, line_no);
    } else if (key == "door_open_std") {
      config.door_open_std = number(value, line_no);
    } else if (key == "default_door_mean") {
      config.default_door_mean = number(value, line_no);
    } else if (key == "go_through_duration") {
      config.go_through_duration = number(value, line_no);
    } else {
      fail(line_no, "unknown key `" + key + "`");
    }
  }
  return config;
}

EnvConfig load_env(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open env file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_env(buffer.str());
}

WorldState env_reset(const EnvConfig&, const std::vector<planning::Scenario>& scenarios,
                     const std::string& scenario, const Scene& scene, std::uint64_t episode) {
  for (const auto& s : scenarios) {
    if (s.name != scenario) continue;
    WorldState world;
    world.state = scene.domain.make_state(s.init);
    const auto pose = scene.symbols.map_state(world.state);
    if (!pose) throw UnknownScenario("scenario " + scenario + " starts in an unmapped state");
    world.pose = *pose;
    world.episode = episode;
    return world;
  }
  throw UnknownScenario("unknown scenario " + scenario);
}

loops::StepOutcome env_execute(WorldState& world, lang::ActionId action, const EnvConfig& config, const Scene& scene) {
  const lang::GroundAction& ground = scene.domain.actions().at(action);
  auto next = lang::apply(world.state, action, scene.domain);
  if (!next) throw InapplicableAction(ground.name + " is not applicable in " + scene.domain.to_string(world.state));

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(world.episode), static_cast<std::uint32_t>(world.episode >> 32),
                    static_cast<std::uint32_t>(world.step)};
  std::mt19937_64 rng(seq);

  const auto target = scene.symbols.map_state(*next);
  double duration = 0.0;
  if (ground.schema == "approach") {
    if (!target) throw loops::ExecutionError(ground.name + " leads to an unmapped state");
    const auto length = scene.paths.length(world.pose, *target);
    if (!length) throw loops::ExecutionError("no path for " + ground.name);
    duration = *length / config.nav_speed;
    if (config.nav_noise_std > 0.0) duration += std::abs(std::normal_distribution<double>(0.0, config.nav_noise_std)(rng));
  } else if (ground.schema == "open_door") {
    const double mean = config.door_mean(ground.args.at(0));
    const double sample =
        config.door_open_std > 0.0 ? std::normal_distribution<double>(mean, config.door_open_std)(rng) : mean;
    duration = std::max(0.0, sample);
  } else {
    duration = config.go_through_duration;
  }

  world.state = std::move(*next);
  if (target) world.pose = *target;
  world.clock += duration;
  ++world.step;
  return loops::StepOutcome{-duration, duration, world.state};
}

lang::State SimEnvironment::reset(std::uint64_t episode) {
  world_ = env_reset(config_, scenarios_, scenario_, scene_, episode);
  return world_.state;
}

loops::StepOutcome SimEnvironment::execute(const lang::State& state, lang::ActionId action) {
  if (!(state == world_.state)) throw loops::ExecutionError("execute called from a state the simulator is not in");
  return env_execute(world_, action, config_, scene_);
}

}  // namespace tmprl::sim
