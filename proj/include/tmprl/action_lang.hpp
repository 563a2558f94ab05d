// Boolean-fluent action description language: parsing, grounding and the
// induced transition relation.
//
// A domain file declares types, objects, fluents, actions and static facts,
// followed by causal laws:
//
//   type door.
//   object top_door : door.
//   fluent near(location).
//   action approach(door).
//   fact has(r_target, top_door).
//   connected(R1, R2) if connected(R2, R1).            % static law
//   approach(D) causes near(D).                         % dynamic law
//   approach(D) causes -near(X) if near(X), X != D.
//   nonexecutable open_door(D) if -facing(D).
//   inertial near.
//
// Variables start with an uppercase letter; every other identifier is a
// constant. An object may be declared under several types.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tmprl::lang {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& message, int line, int column);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Well-formed syntax that references undeclared symbols, mismatches arity
/// or leaves a head variable unbound.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& message, int line);

  int line() const { return line_; }

 private:
  int line_;
};

class GroundingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_variable(std::string_view term);

struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

std::string to_string(const Atom& atom);

struct Literal {
  Atom atom;
  bool negated = false;

  auto operator<=>(const Literal&) const = default;
  bool operator==(const Literal&) const = default;
};

std::string to_string(const Literal& literal);

struct Inequality {
  std::string lhs;
  std::string rhs;

  bool operator==(const Inequality&) const = default;
};

enum class LawKind { kStatic, kDynamic, kNonexecutable, kInertial };

struct CausalLaw {
  LawKind kind = LawKind::kStatic;
  Atom action;   // dynamic and nonexecutable laws
  Literal head;  // static and dynamic laws; inertial laws store the fluent name in head.atom.predicate
  std::vector<Literal> body;
  std::vector<Inequality> inequalities;
  int line = 0;  // source position, not part of equality

  bool operator==(const CausalLaw& other) const {
    return kind == other.kind && action == other.action && head == other.head &&
           body == other.body && inequalities == other.inequalities;
  }
};

struct Signature {
  std::string name;
  std::vector<std::string> params;  // parameter types

  bool operator==(const Signature&) const = default;
};

struct ObjectDecl {
  std::string name;
  std::string type;

  bool operator==(const ObjectDecl&) const = default;
};

struct ActionDescription {
  std::vector<std::string> types;
  std::vector<ObjectDecl> objects;
  std::vector<Signature> fluents;
  std::vector<Signature> actions;
  std::vector<Atom> facts;
  std::vector<CausalLaw> laws;

  bool operator==(const ActionDescription&) const = default;
};

/// Parses and validates a domain file. Throws SyntaxError or DomainError.
ActionDescription parse_domain(std::string_view text);

/// Canonical printer; parse_domain(print_domain(d)) == d.
std::string print_domain(const ActionDescription& description);

namespace detail {
class Grounder;
}

using AtomId = std::uint32_t;
using ActionId = std::uint32_t;

/// Truth assignment over the ground fluent atoms of a GroundedDomain. Closed
/// world: atoms not in the set are false. Iteration order is the domain's
/// canonical atom order.
class State {
 public:
  State() = default;
  explicit State(std::size_t num_atoms) : bits_((num_atoms + 63) / 64, 0) {}

  bool contains(AtomId atom) const {
    const std::size_t word = atom / 64;
    return word < bits_.size() && ((bits_[word] >> (atom % 64)) & 1U) != 0;
  }
  void insert(AtomId atom) { bits_[atom / 64] |= std::uint64_t{1} << (atom % 64); }
  void erase(AtomId atom) { bits_[atom / 64] &= ~(std::uint64_t{1} << (atom % 64)); }

  std::vector<AtomId> atoms() const;
  std::size_t count() const;
  std::size_t hash() const;

  const std::vector<std::uint64_t>& words() const { return bits_; }
  std::vector<std::uint64_t>& words() { return bits_; }

  bool operator==(const State&) const = default;

 private:
  std::vector<std::uint64_t> bits_;
};

struct StateHash {
  std::size_t operator()(const State& state) const { return state.hash(); }
};

struct GroundLiteral {
  AtomId atom = 0;
  bool negated = false;

  auto operator<=>(const GroundLiteral&) const = default;
};

struct ConditionalEffect {
  std::vector<GroundLiteral> condition;
  GroundLiteral effect;
};

struct GroundAction {
  std::string name;  // printed form, e.g. "approach(top_door)"
  std::string schema;
  std::vector<std::string> args;
  std::vector<GroundLiteral> precondition;
  // The action is not executable in any state satisfying one of these.
  std::vector<std::vector<GroundLiteral>> nonexecutable;
  std::vector<ConditionalEffect> effects;
  bool never_executable = false;
};

/// Ground static law whose body mentions a non-static fluent.
struct DerivedRule {
  std::vector<GroundLiteral> condition;
  AtomId head = 0;
};

/// Explicit transition system of an action description. Fluents that no
/// dynamic law can change (directly or through static laws) are "rigid":
/// they are evaluated once during grounding and do not appear in states.
class GroundedDomain {
 public:
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<GroundAction>& actions() const { return actions_; }
  const std::vector<DerivedRule>& derived_rules() const { return derived_; }
  const std::set<Atom>& rigid_facts() const { return rigid_facts_; }

  std::optional<AtomId> find_atom(const Atom& atom) const;
  std::optional<ActionId> find_action(std::string_view name) const;
  bool is_rigid(const std::string& predicate) const { return rigid_predicates_.count(predicate) > 0; }
  bool is_inertial(AtomId atom) const { return inertial_.contains(atom); }
  const State& inertial_mask() const { return inertial_; }

  State empty_state() const { return State(atoms_.size()); }

  /// Builds a state from true atoms and closes it under static laws. Atoms of
  /// rigid fluents are accepted when they hold and rejected otherwise.
  State make_state(const std::vector<Atom>& true_atoms) const;

  /// Ground literals over non-rigid atoms. Throws GroundingError for unknown
  /// atoms or rigid literals that are false.
  std::vector<GroundLiteral> make_literals(const std::vector<Literal>& literals) const;

  State close(State state) const;
  bool holds(const State& state, const GroundLiteral& literal) const {
    return state.contains(literal.atom) != literal.negated;
  }
  bool holds_all(const State& state, const std::vector<GroundLiteral>& literals) const;

  std::string to_string(const State& state) const;
  std::string to_string(const GroundLiteral& literal) const;

 private:
  friend class detail::Grounder;

  std::vector<Atom> atoms_;
  std::map<Atom, AtomId> atom_index_;
  std::vector<GroundAction> actions_;
  std::unordered_map<std::string, ActionId> action_index_;
  std::vector<DerivedRule> derived_;
  std::set<Atom> rigid_facts_;
  std::set<std::string> rigid_predicates_;
  State inertial_;
};

inline constexpr std::size_t kDefaultGroundActionLimit = 100000;

/// Enumerates ground actions by type-correct substitution and closes the
/// static facts under static laws. Throws GroundingError when the number of
/// ground actions exceeds `max_ground_actions`.
GroundedDomain ground(const ActionDescription& description,
                      std::size_t max_ground_actions = kDefaultGroundActionLimit);

/// Successor of `state` under one ground action, or nullopt when the action
/// is not executable. Deletions are applied before additions, so an atom
/// that is both caused and retracted in the same step ends up true.
std::optional<State> apply(const State& state, ActionId action, const GroundedDomain& domain);

/// All (action, successor) pairs in ground-action order.
std::vector<std::pair<ActionId, State>> successors(const State& state, const GroundedDomain& domain);

/// True iff (action, next) is one of successors(state, domain). Evaluated
/// atom by atom, independently of apply().
bool check_transition(const State& state, ActionId action, const State& next,
                      const GroundedDomain& domain);

}  // namespace tmprl::lang
