#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tmprl/rl_core.hpp"

using namespace tmprl;
using namespace tmprl::rl;

using namespace oracles;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("single updates by hand") {
  ValueTables t(0.1, 0.5, 4);
  t.update("s", "a", -10.0, "s2", 0.0);
  CHECK(t.r_value("s", "a") == doctest::Approx(-1.0));
  CHECK(*t.stored_rho("s", "a") == doctest::Approx(-5.0));

  ValueTables zero(0.1, 0.5, 4);
  zero.update("s", "a", 0.0, "s2", 0.0);
  CHECK(zero.r_value("s", "a") == 0.0);
  CHECK(*zero.stored_rho("s", "a") == 0.0);

  ValueTables full(1.0, 1.0, 4);
  full.update("s", "a", -7.0, "s2", 0.0);
  CHECK(full.r_value("s", "a") == -7.0);
  CHECK(*full.stored_rho("s", "a") == -7.0);
}

TEST_CASE("update uses the default rho and successor values") {
  ValueTables t(0.1, 0.5, 1);
  t.set("s2", "a", Entry{-2.0, -4.0});
  // s2 has all actions visited, so M(s2) = -2; s is unvisited, so M(s) = 0.
  t.update("s", "a", -6.0, "s2", -3.0);
  CHECK(t.r_value("s", "a") == doctest::Approx(0.1 * (-6.0 + 3.0 - 2.0)));
  CHECK(*t.stored_rho("s", "a") == doctest::Approx(0.5 * -3.0 + 0.5 * (-6.0 - 2.0 - 0.0)));
}

TEST_CASE("max over R counts unvisited actions at their default") {
  ValueTables t(0.1, 0.5, 2);
  CHECK(t.max_r("s") == 0.0);
  t.set("s", "a", Entry{-3.0, 0.0});
  CHECK(t.max_r("s") == 0.0);
  t.set("s", "b", Entry{-1.5, 0.0});
  CHECK(t.max_r("s") == -1.5);
  t.set("s", "a", Entry{2.0, 0.0});
  CHECK(t.max_r("s") == 2.0);
}

TEST_CASE("randomized updates match the reference evaluator") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> states = {"s0", "s1", "s2", "s3"};
  const std::vector<std::string> actions = {"a0", "a1", "a2"};
  std::uniform_real_distribution<double> reward(-100.0, 0.0);
  std::uniform_real_distribution<double> rate(0.01, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = rate(rng);
    const double beta = rate(rng);
    ValueTables t(alpha, beta, actions.size());
    Reference ref{alpha, beta, actions, {}, {}};
    for (int i = 0; i < 100; ++i) {
      const auto& s = states[rng() % states.size()];
      const auto& a = actions[rng() % actions.size()];
      const auto& s2 = states[rng() % states.size()];
      const double r = reward(rng);
      const double d = -reward(rng) / 10.0;
      t.update(s, a, r, s2, d);
      ref.step(s, a, r, s2, d);
      CHECK(std::abs(t.r_value(s, a) - ref.r.at({s, a})) <= 1e-12);
      CHECK(std::abs(*t.stored_rho(s, a) - ref.rho.at({s, a})) <= 1e-12);
    }
  }
}

TEST_CASE("updates touch only their own entry") {
  std::mt19937_64 rng(3);
  ValueTables t(0.1, 0.5, 3);
  for (int i = 0; i < 30; ++i) t.update("s" + std::to_string(i % 5), "a" + std::to_string(i % 3), -1.0 * i, "s0", -1.0);
  const auto before = t.entries();
  t.update("s1", "a2", -42.0, "s3", -1.0);
  for (const auto& [state, row] : before) {
    for (const auto& [action, entry] : row) {
      if (state == "s1" && action == "a2") continue;
      const Entry& now = t.entries().at(state).at(action);
      CHECK(std::memcmp(&now, &entry, sizeof(Entry)) == 0);
    }
  }
}

TEST_CASE("values stay finite under long random update sequences") {
  // Relative values drift upwards through the max in M(s) (roughly linearly
  // in the number of updates), so only finiteness and a loose magnitude cap
  // are asserted.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> reward(-50.0, 0.0);
  ValueTables t(0.1, 0.5, 4);
  for (int i = 0; i < 100000; ++i) {
    const std::string s = "s" + std::to_string(rng() % 6);
    const std::string s2 = "s" + std::to_string(rng() % 6);
    t.update(s, "a" + std::to_string(rng() % 4), reward(rng), s2, -static_cast<double>(rng() % 5));
  }
  for (const auto& [state, row] : t.entries()) {
    for (const auto& [action, entry] : row) {
      CHECK(std::isfinite(entry.r));
      CHECK(std::isfinite(entry.rho));
      CHECK(std::abs(entry.r) < 1e5);
      CHECK(std::abs(entry.rho) < 1e5);
    }
  }
}

TEST_CASE("episodic chains keep gains nonpositive and relative values bounded") {
  // The loops only ever update along plans that end in a goal state. R is a
  // relative value and fluctuates around zero.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> reward(-50.0, 0.0);
  ValueTables t(0.1, 0.5, 24);
  for (int episode = 0; episode < 2000; ++episode) {
    for (int k = 0; k < 3; ++k) {
      t.update("s" + std::to_string(k), "a" + std::to_string(k), reward(rng), "s" + std::to_string(k + 1), -1.0);
    }
  }
  for (const auto& [state, row] : t.entries()) {
    for (const auto& [action, entry] : row) {
      CHECK(std::abs(entry.r) <= 50.0);
      CHECK(entry.rho <= 0.0);
    }
  }
}

TEST_CASE("constant reward converges to the fixed point") {
  ValueTables t(0.1, 0.5, 1);
  t.set("s2", "a", Entry{-4.0, -1.0});
  for (int i = 0; i < 2000; ++i) t.update("s", "a", -9.0, "s2", -1.0);
  // rho* = r* + M(s2) - M(s) with M(s) = R(s,a); R* = r* - rho* + M(s2).
  const double r = t.r_value("s", "a");
  const double rho = *t.stored_rho("s", "a");
  CHECK(std::abs(r - (-9.0 - rho - 4.0)) < 1e-6);
  CHECK(std::abs(rho - (-9.0 - 4.0 - r)) < 1e-6);
}

TEST_CASE("reward mappings") {
  CHECK(reward_from_motion(45.5) == -45.5);
  CHECK(reward_from_motion(0.0) == 0.0);
  CHECK(reward_from_motion(std::nullopt) == -1e6);
  CHECK(reward_from_execution(80.6) == -80.6);
  CHECK(reward_from_execution(0.0) == 0.0);
  CHECK(reward_from_execution(126.9) == -126.9);
}

TEST_CASE("default rho") {
  DefaultPolicy policy;
  CHECK(policy.rho("approach", 20.3) == -20.3);
  CHECK(policy.rho("open_door", 20.3) == -3.0);
  CHECK(policy.rho("go_through", std::nullopt) == -1.0);
  CHECK(policy.rho("approach", std::nullopt) == kInfeasibleReward);
  DefaultPolicy plain;
  plain.euclidean_approach = false;
  CHECK(plain.rho("approach", 20.3) == -1.0);
  ValueTables t(0.1, 0.5, 3);
  CHECK(t.rho("s", "open_door(d)", policy.rho("open_door", std::nullopt)) == -3.0);
  t.set("s", "open_door(d)", Entry{0.0, -17.25});
  CHECK(t.rho("s", "open_door(d)", -3.0) == -17.25);
}

TEST_CASE("state abstraction keeps in and near") {
  const auto domain = lang::ground(lang::parse_domain(read_file(std::string(TMPRL_DATA_DIR) + "/office.domain")));
  const StateAbstraction abstraction(domain);
  const auto s = domain.make_state({{"in", {"r_top_side"}}, {"near", {"top_door"}}, {"facing", {"top_door"}},
                                    {"open", {"top_door"}}});
  CHECK(abstraction.key(s) == "in(r_top_side);near(top_door)");
  CHECK(abstraction.key(domain.empty_state()) == "");
}

TEST_CASE("snapshot round trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(-1000.0, 10.0);
  ValueTables t(0.1, 0.5, 24);
  t.set("in(r_open);near(lm_start1)", "approach(top_door)", Entry{-1.0 / 3.0, -20.3});
  t.set("a \"quoted\", key", "x,y", Entry{1e-300, -1e6});
  for (int i = 0; i < 200; ++i) t.set("s" + std::to_string(rng() % 40), "a" + std::to_string(i), Entry{value(rng), value(rng)});
  std::stringstream buffer;
  write_snapshot(t, buffer);
  ValueTables back(0.1, 0.5, 24);
  back.set("stale", "entry", Entry{});
  read_snapshot(buffer, back);
  CHECK(back == t);

  std::stringstream again;
  write_snapshot(back, again);
  std::stringstream first;
  write_snapshot(t, first);
  CHECK(again.str() == first.str());
}

TEST_CASE("malformed snapshots") {
  ValueTables t(0.1, 0.5, 1);
  std::stringstream no_header("s,a,1,2\n");
  CHECK_THROWS_AS(read_snapshot(no_header, t), SnapshotError);
  std::stringstream short_row("state_key,action,R,rho\ns,a,1\n");
  CHECK_THROWS_AS(read_snapshot(short_row, t), SnapshotError);
  std::stringstream bad_number("state_key,action,R,rho\ns,a,one,2\n");
  CHECK_THROWS_AS(read_snapshot(bad_number, t), SnapshotError);
  std::stringstream infinite("state_key,action,R,rho\ns,a,inf,2\n");
  CHECK_THROWS_AS(read_snapshot(infinite, t), SnapshotError);
}
