// Tabular R-learning over abstract symbolic states.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmprl/action_lang.hpp"

namespace tmprl::rl {

/// Projection of a state onto its in/near atoms, serialized canonically,
/// e.g. "in(r_open);near(lm_start1)".
class StateAbstraction {
 public:
  explicit StateAbstraction(const lang::GroundedDomain& domain,
                            const std::vector<std::string>& predicates = {"in", "near"});

  std::string key(const lang::State& state) const;

 private:
  const lang::GroundedDomain* domain_;
  lang::State mask_;
};

inline constexpr double kInfeasibleReward = -1e6;

struct DefaultPolicy {
  /// When false (the TP-RL baseline), approach falls back like other actions.
  bool euclidean_approach = true;
  double open_door = -3.0;
  double fallback = -1.0;
  double infeasible = kInfeasibleReward;

  /// Default rho for an action schema. `straight_line` is the distance between
  /// the mapped poses of the transition, when both are mapped.
  double rho(const std::string& schema, std::optional<double> straight_line) const;
};

struct Entry {
  double r = 0.0;
  double rho = 0.0;

  bool operator==(const Entry&) const = default;
};

class ValueTables {
 public:
  ValueTables(double alpha, double beta, std::size_t num_actions)
      : alpha_(alpha), beta_(beta), num_actions_(num_actions) {}

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  std::size_t num_actions() const { return num_actions_; }

  /// R(s, a), 0 when absent.
  double r_value(const std::string& state, const std::string& action) const;
  std::optional<double> stored_rho(const std::string& state, const std::string& action) const;
  double rho(const std::string& state, const std::string& action, double default_rho) const {
    return stored_rho(state, action).value_or(default_rho);
  }

  /// max over all actions of R(s, ·); unvisited actions contribute their default of 0.
  double max_r(const std::string& state) const;

  /// One step of
  ///   R(s,a)   <- (1 - alpha) R(s,a) + alpha (r - rho(s,a) + M(s'))
  ///   rho(s,a) <- (1 - beta) rho(s,a) + beta (r + M(s') - M(s))
  /// with all right-hand sides read before either write.
  void update(const std::string& state, const std::string& action, double reward, const std::string& next,
              double default_rho);

  const std::map<std::string, std::map<std::string, Entry>>& entries() const { return entries_; }
  void set(const std::string& state, const std::string& action, Entry entry) { entries_[state][action] = entry; }
  std::size_t size() const;
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  bool operator==(const ValueTables&) const = default;

 private:
  double alpha_;
  double beta_;
  std::size_t num_actions_;
  std::map<std::string, std::map<std::string, Entry>> entries_;
};

double reward_from_motion(std::optional<double> length);
inline double reward_from_execution(double duration) { return -duration; }

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV with header `state_key,action,R,rho`; values printed with 17
/// significant digits so reading back is exact.
void write_snapshot(const ValueTables& tables, std::ostream& out);
/// Replaces the entries of `tables` with the snapshot contents.
void read_snapshot(std::istream& in, ValueTables& tables);

}  // namespace tmprl::rl
