#include "tmprl/action_lang.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <sstream>

#include "lexer.hpp"

namespace tmprl::lang {

SyntaxError::SyntaxError(const std::string& message, int line, int column)
    : std::runtime_error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
                         message),
      line_(line),
      column_(column) {}

DomainError::DomainError(const std::string& message, int line)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

bool is_variable(std::string_view term) {
  return !term.empty() && std::isupper(static_cast<unsigned char>(term.front())) != 0;
}

std::string to_string(const Atom& atom) {
  std::string out = atom.predicate;
  if (!atom.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (i > 0) out += ',';
      out += atom.args[i];
    }
    out += ')';
  }
  return out;
}

std::string to_string(const Literal& literal) {
  return (literal.negated ? "-" : "") + to_string(literal.atom);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

using detail::TokenKind;
using detail::TokenStream;

struct SourceLines {
  std::vector<int> types;
  std::vector<int> objects;
  std::vector<int> fluents;
  std::vector<int> actions;
  std::vector<int> facts;
};

Signature parse_signature(TokenStream& tokens) {
  Signature sig;
  sig.name = tokens.expect_name("name");
  if (tokens.accept(TokenKind::kLParen)) {
    do {
      sig.params.push_back(tokens.expect_name("type name"));
    } while (tokens.accept(TokenKind::kComma));
    tokens.expect(TokenKind::kRParen, "`)`");
  }
  return sig;
}

class Validator {
 public:
  Validator(const ActionDescription& desc, const SourceLines& lines) : desc_(desc), lines_(lines) {}

  void run() {
    std::set<std::string> types;
    for (std::size_t i = 0; i < desc_.types.size(); ++i) {
      if (!types.insert(desc_.types[i]).second) {
        throw DomainError("duplicate type `" + desc_.types[i] + "`", lines_.types[i]);
      }
    }
    std::set<std::pair<std::string, std::string>> seen_objects;
    for (std::size_t i = 0; i < desc_.objects.size(); ++i) {
      const auto& obj = desc_.objects[i];
      if (types.count(obj.type) == 0) {
        throw DomainError("undeclared type `" + obj.type + "`", lines_.objects[i]);
      }
      if (is_variable(obj.name)) {
        throw DomainError("object `" + obj.name + "` must start with a lowercase letter", lines_.objects[i]);
      }
      if (!seen_objects.insert({obj.name, obj.type}).second) {
        throw DomainError("duplicate object `" + obj.name + " : " + obj.type + "`", lines_.objects[i]);
      }
      object_types_[obj.name].insert(obj.type);
    }
    auto check_signatures = [&](const std::vector<Signature>& sigs, const std::vector<int>& sig_lines,
                                std::map<std::string, const Signature*>& out) {
      for (std::size_t i = 0; i < sigs.size(); ++i) {
        const auto& sig = sigs[i];
        if (fluents_.count(sig.name) > 0 || actions_.count(sig.name) > 0) {
          throw DomainError("duplicate declaration of `" + sig.name + "`", sig_lines[i]);
        }
        for (const auto& type : sig.params) {
          if (types.count(type) == 0) throw DomainError("undeclared type `" + type + "`", sig_lines[i]);
        }
        out[sig.name] = &sig;
      }
    };
    check_signatures(desc_.fluents, lines_.fluents, fluents_);
    check_signatures(desc_.actions, lines_.actions, actions_);

    for (std::size_t i = 0; i < desc_.facts.size(); ++i) {
      std::map<std::string, std::set<std::string>> unused;
      check_atom(desc_.facts[i], fluents_, "fluent", lines_.facts[i], unused);
      for (const auto& arg : desc_.facts[i].args) {
        if (is_variable(arg)) throw DomainError("facts must be ground, found variable `" + arg + "`", lines_.facts[i]);
      }
    }
    for (const auto& law : desc_.laws) check_law(law);
  }

 private:
  void check_atom(const Atom& atom, const std::map<std::string, const Signature*>& sigs, const char* kind,
                  int line, std::map<std::string, std::set<std::string>>& var_types) const {
    auto it = sigs.find(atom.predicate);
    if (it == sigs.end()) {
      throw DomainError(std::string("undeclared ") + kind + " `" + atom.predicate + "`", line);
    }
    const Signature& sig = *it->second;
    if (sig.params.size() != atom.args.size()) {
      throw DomainError("arity mismatch for `" + atom.predicate + "`: expected " + std::to_string(sig.params.size()) +
                            ", got " + std::to_string(atom.args.size()),
                        line);
    }
    for (std::size_t k = 0; k < atom.args.size(); ++k) {
      const auto& arg = atom.args[k];
      if (is_variable(arg)) {
        var_types[arg].insert(sig.params[k]);
        continue;
      }
      auto obj = object_types_.find(arg);
      if (obj == object_types_.end()) throw DomainError("undeclared object `" + arg + "`", line);
      if (obj->second.count(sig.params[k]) == 0) {
        throw DomainError("object `" + arg + "` is not of type `" + sig.params[k] + "`", line);
      }
    }
  }

  static void collect_vars(const Atom& atom, std::set<std::string>& out) {
    for (const auto& arg : atom.args) {
      if (is_variable(arg)) out.insert(arg);
    }
  }

  void check_law(const CausalLaw& law) const {
    std::map<std::string, std::set<std::string>> var_types;
    std::set<std::string> bound;
    if (law.kind == LawKind::kInertial) {
      if (fluents_.count(law.head.atom.predicate) == 0) {
        throw DomainError("undeclared fluent `" + law.head.atom.predicate + "`", law.line);
      }
      return;
    }
    if (law.kind == LawKind::kDynamic || law.kind == LawKind::kNonexecutable) {
      check_atom(law.action, actions_, "action", law.line, var_types);
      collect_vars(law.action, bound);
    }
    for (const auto& literal : law.body) {
      check_atom(literal.atom, fluents_, "fluent", law.line, var_types);
      collect_vars(literal.atom, bound);
    }
    for (const auto& neq : law.inequalities) {
      for (const auto* term : {&neq.lhs, &neq.rhs}) {
        if (is_variable(*term)) {
          if (bound.count(*term) == 0) throw DomainError("unbound variable `" + *term + "` in inequality", law.line);
        } else if (object_types_.count(*term) == 0) {
          throw DomainError("undeclared object `" + *term + "`", law.line);
        }
      }
    }
    if (law.kind == LawKind::kStatic || law.kind == LawKind::kDynamic) {
      check_atom(law.head.atom, fluents_, "fluent", law.line, var_types);
      for (const auto& arg : law.head.atom.args) {
        if (is_variable(arg) && bound.count(arg) == 0) {
          throw DomainError("unbound head variable `" + arg + "`", law.line);
        }
      }
    }
  }

  const ActionDescription& desc_;
  const SourceLines& lines_;
  std::map<std::string, std::set<std::string>> object_types_;
  std::map<std::string, const Signature*> fluents_;
  std::map<std::string, const Signature*> actions_;
};

}  // namespace

ActionDescription parse_domain(std::string_view text) {
  TokenStream tokens(detail::tokenize(text));
  ActionDescription desc;
  SourceLines lines;

  while (!tokens.at_end()) {
    const detail::Token& first = tokens.peek();
    const int line = first.line;
    if (tokens.accept_word("type")) {
      desc.types.push_back(tokens.expect_name("type name"));
      lines.types.push_back(line);
    } else if (tokens.accept_word("object")) {
      ObjectDecl obj;
      obj.name = tokens.expect_name("object name");
      tokens.expect(TokenKind::kColon, "`:`");
      obj.type = tokens.expect_name("type name");
      desc.objects.push_back(std::move(obj));
      lines.objects.push_back(line);
    } else if (tokens.accept_word("fluent")) {
      desc.fluents.push_back(parse_signature(tokens));
      lines.fluents.push_back(line);
    } else if (tokens.accept_word("action")) {
      desc.actions.push_back(parse_signature(tokens));
      lines.actions.push_back(line);
    } else if (tokens.accept_word("fact")) {
      desc.facts.push_back(tokens.parse_atom());
      lines.facts.push_back(line);
    } else if (tokens.accept_word("nonexecutable")) {
      CausalLaw law;
      law.kind = LawKind::kNonexecutable;
      law.line = line;
      law.action = tokens.parse_atom();
      if (!tokens.accept_word("if")) tokens.fail(tokens.peek(), "expected `if`, found " + describe(tokens.peek()));
      tokens.parse_body(law.body, &law.inequalities);
      desc.laws.push_back(std::move(law));
    } else if (tokens.accept_word("inertial")) {
      CausalLaw law;
      law.kind = LawKind::kInertial;
      law.line = line;
      law.head.atom.predicate = tokens.expect_name("fluent name");
      desc.laws.push_back(std::move(law));
    } else if (first.kind == TokenKind::kIdent && !detail::is_keyword(first.text)) {
      CausalLaw law;
      law.line = line;
      Atom lead = tokens.parse_atom();
      if (tokens.accept_word("causes")) {
        law.kind = LawKind::kDynamic;
        law.action = std::move(lead);
        law.head.negated = tokens.accept(TokenKind::kMinus);
        law.head.atom = tokens.parse_atom();
        if (tokens.accept_word("if")) tokens.parse_body(law.body, &law.inequalities);
      } else if (tokens.accept_word("if")) {
        law.kind = LawKind::kStatic;
        law.head.atom = std::move(lead);
        tokens.parse_body(law.body, &law.inequalities);
      } else {
        tokens.fail(tokens.peek(), "expected `causes` or `if`, found " + describe(tokens.peek()));
      }
      desc.laws.push_back(std::move(law));
    } else {
      tokens.fail(first, "unexpected " + describe(first));
    }
    tokens.expect(TokenKind::kDot, "`.`");
  }

  Validator(desc, lines).run();
  return desc;
}

namespace {

void print_body(std::ostream& out, const CausalLaw& law) {
  bool first = true;
  for (const auto& literal : law.body) {
    out << (first ? "" : ", ") << to_string(literal);
    first = false;
  }
  for (const auto& neq : law.inequalities) {
    out << (first ? "" : ", ") << neq.lhs << " != " << neq.rhs;
    first = false;
  }
}

void print_signature(std::ostream& out, const char* keyword, const Signature& sig) {
  out << keyword << ' ' << sig.name;
  if (!sig.params.empty()) {
    out << '(';
    for (std::size_t i = 0; i < sig.params.size(); ++i) out << (i > 0 ? ", " : "") << sig.params[i];
    out << ')';
  }
  out << ".\n";
}

}  // namespace

std::string print_domain(const ActionDescription& desc) {
  std::ostringstream out;
  for (const auto& type : desc.types) out << "type " << type << ".\n";
  for (const auto& obj : desc.objects) out << "object " << obj.name << " : " << obj.type << ".\n";
  for (const auto& sig : desc.fluents) print_signature(out, "fluent", sig);
  for (const auto& sig : desc.actions) print_signature(out, "action", sig);
  for (const auto& fact : desc.facts) out << "fact " << to_string(fact) << ".\n";
  for (const auto& law : desc.laws) {
    switch (law.kind) {
      case LawKind::kStatic:
        out << to_string(law.head.atom) << " if ";
        print_body(out, law);
        break;
      case LawKind::kDynamic:
        out << to_string(law.action) << " causes " << to_string(law.head);
        if (!law.body.empty() || !law.inequalities.empty()) {
          out << " if ";
          print_body(out, law);
        }
        break;
      case LawKind::kNonexecutable:
        out << "nonexecutable " << to_string(law.action) << " if ";
        print_body(out, law);
        break;
      case LawKind::kInertial:
        out << "inertial " << law.head.atom.predicate;
        break;
    }
    out << ".\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// State

std::vector<AtomId> State::atoms() const {
  std::vector<AtomId> out;
  for (std::size_t w = 0; w < bits_.size(); ++w) {
    std::uint64_t word = bits_[w];
    while (word != 0) {
      const int bit = std::countr_zero(word);
      out.push_back(static_cast<AtomId>(w * 64 + bit));
      word &= word - 1;
    }
  }
  return out;
}

std::size_t State::count() const {
  std::size_t n = 0;
  for (auto word : bits_) n += static_cast<std::size_t>(std::popcount(word));
  return n;
}

std::size_t State::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto word : bits_) {
    h ^= word + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------
// Grounding

namespace {

using Binding = std::map<std::string, std::string>;

std::string substitute(const std::string& term, const Binding& binding) {
  if (!is_variable(term)) return term;
  auto it = binding.find(term);
  if (it == binding.end()) throw GroundingError("unbound variable `" + term + "` during grounding");
  return it->second;
}

Atom substitute(const Atom& atom, const Binding& binding) {
  Atom out;
  out.predicate = atom.predicate;
  out.args.reserve(atom.args.size());
  for (const auto& arg : atom.args) out.args.push_back(substitute(arg, binding));
  return out;
}

bool unify(const Atom& pattern, const Atom& ground_atom, Binding& binding) {
  if (pattern.predicate != ground_atom.predicate || pattern.args.size() != ground_atom.args.size()) return false;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const auto& term = pattern.args[i];
    if (!is_variable(term)) {
      if (term != ground_atom.args[i]) return false;
      continue;
    }
    auto [it, inserted] = binding.emplace(term, ground_atom.args[i]);
    if (!inserted && it->second != ground_atom.args[i]) return false;
  }
  return true;
}

}  // namespace

namespace detail {

class Grounder {
 public:
  explicit Grounder(const ActionDescription& desc) : desc_(desc) {
    for (const auto& obj : desc.objects) {
      type_objects_[obj.type].push_back(obj.name);
      object_types_[obj.name].insert(obj.type);
    }
    for (auto& [type, objects] : type_objects_) {
      std::sort(objects.begin(), objects.end());
      objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
    }
    for (const auto& sig : desc.fluents) fluents_[sig.name] = &sig;
    for (const auto& sig : desc.actions) actions_[sig.name] = &sig;
  }

  GroundedDomain run(std::size_t max_ground_actions) {
    GroundedDomain out;
    find_rigid_predicates(out);
    close_rigid_facts(out);
    build_atom_table(out);
    build_actions(out, max_ground_actions);
    build_derived_rules(out);
    out.inertial_ = State(out.atoms_.size());
    std::set<std::string> inertial;
    for (const auto& law : desc_.laws) {
      if (law.kind == LawKind::kInertial) inertial.insert(law.head.atom.predicate);
    }
    for (AtomId id = 0; id < out.atoms_.size(); ++id) {
      if (inertial.count(out.atoms_[id].predicate) > 0) out.inertial_.insert(id);
    }
    return out;
  }

 private:
  using VarDomains = std::map<std::string, std::vector<std::string>>;

  std::vector<std::string> objects_of_all(const std::set<std::string>& types) const {
    std::vector<std::string> out;
    if (types.empty()) return out;
    auto first = type_objects_.find(*types.begin());
    if (first == type_objects_.end()) return out;
    for (const auto& obj : first->second) {
      const auto& have = object_types_.at(obj);
      if (std::all_of(types.begin(), types.end(), [&](const std::string& t) { return have.count(t) > 0; })) {
        out.push_back(obj);
      }
    }
    return out;
  }

  VarDomains var_domains(const CausalLaw& law) const {
    std::map<std::string, std::set<std::string>> types;
    auto add = [&](const Atom& atom, const Signature& sig) {
      for (std::size_t i = 0; i < atom.args.size(); ++i) {
        if (is_variable(atom.args[i])) types[atom.args[i]].insert(sig.params[i]);
      }
    };
    if (law.kind == LawKind::kDynamic || law.kind == LawKind::kNonexecutable) add(law.action, *actions_.at(law.action.predicate));
    if (law.kind == LawKind::kDynamic || law.kind == LawKind::kStatic) add(law.head.atom, *fluents_.at(law.head.atom.predicate));
    for (const auto& literal : law.body) add(literal.atom, *fluents_.at(literal.atom.predicate));
    VarDomains out;
    for (const auto& [var, required] : types) out[var] = objects_of_all(required);
    return out;
  }

  void find_rigid_predicates(GroundedDomain& out) {
    for (const auto& law : desc_.laws) {
      if (law.kind == LawKind::kDynamic) affected_.insert(law.head.atom.predicate);
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& law : desc_.laws) {
        if (law.kind != LawKind::kStatic || affected_.count(law.head.atom.predicate) > 0) continue;
        for (const auto& literal : law.body) {
          if (affected_.count(literal.atom.predicate) > 0) {
            affected_.insert(law.head.atom.predicate);
            changed = true;
            break;
          }
        }
      }
    }
    for (const auto& sig : desc_.fluents) {
      if (affected_.count(sig.name) == 0) out.rigid_predicates_.insert(sig.name);
    }
  }

  bool is_rigid(const std::string& predicate) const { return affected_.count(predicate) == 0; }

  // Enumerates bindings of `law`'s body extending `binding`: rigid positive
  // literals are joined against the current rigid facts, remaining variables
  // range over their typed domains, rigid negative literals and inequalities
  // are checked last. Non-rigid literals are left to the caller.
  template <typename Callback>
  void match(const CausalLaw& law, const VarDomains& domains, Binding binding, const Callback& callback) const {
    std::vector<const Literal*> positive;
    for (const auto& literal : law.body) {
      if (is_rigid(literal.atom.predicate) && !literal.negated) positive.push_back(&literal);
    }
    std::vector<std::string> free_vars;
    for (const auto& [var, values] : domains) free_vars.push_back(var);
    join(law, positive, 0, domains, free_vars, binding, callback);
  }

  template <typename Callback>
  void join(const CausalLaw& law, const std::vector<const Literal*>& positive, std::size_t index,
            const VarDomains& domains, const std::vector<std::string>& free_vars, Binding& binding,
            const Callback& callback) const {
    if (index < positive.size()) {
      const Atom& pattern = positive[index]->atom;
      auto it = facts_by_predicate_.find(pattern.predicate);
      if (it == facts_by_predicate_.end()) return;
      for (const Atom* fact : it->second) {
        Binding extended = binding;
        if (!unify(pattern, *fact, extended)) continue;
        join(law, positive, index + 1, domains, free_vars, extended, callback);
      }
      return;
    }
    enumerate(law, domains, free_vars, 0, binding, callback);
  }

  template <typename Callback>
  void enumerate(const CausalLaw& law, const VarDomains& domains, const std::vector<std::string>& free_vars,
                 std::size_t index, Binding& binding, const Callback& callback) const {
    while (index < free_vars.size() && binding.count(free_vars[index]) > 0) ++index;
    if (index < free_vars.size()) {
      const auto& var = free_vars[index];
      for (const auto& value : domains.at(var)) {
        binding[var] = value;
        enumerate(law, domains, free_vars, index + 1, binding, callback);
      }
      binding.erase(var);
      return;
    }
    for (const auto& [var, values] : domains) {
      if (!std::binary_search(values.begin(), values.end(), binding.at(var))) return;
    }
    for (const auto& neq : law.inequalities) {
      if (substitute(neq.lhs, binding) == substitute(neq.rhs, binding)) return;
    }
    for (const auto& literal : law.body) {
      if (!is_rigid(literal.atom.predicate)) continue;
      const bool present = rigid_facts_.count(substitute(literal.atom, binding)) > 0;
      if (present == literal.negated) return;
    }
    callback(static_cast<const Binding&>(binding));
  }

  void index_facts() {
    facts_by_predicate_.clear();
    for (const auto& fact : rigid_facts_) facts_by_predicate_[fact.predicate].push_back(&fact);
  }

  void close_rigid_facts(GroundedDomain& out) {
    for (const auto& fact : desc_.facts) {
      if (!is_rigid(fact.predicate)) {
        throw GroundingError("fact " + to_string(fact) + " names a fluent that actions can change");
      }
      rigid_facts_.insert(fact);
    }
    std::vector<std::pair<const CausalLaw*, VarDomains>> laws;
    for (const auto& law : desc_.laws) {
      if (law.kind == LawKind::kStatic && is_rigid(law.head.atom.predicate)) laws.emplace_back(&law, var_domains(law));
    }
    bool changed = true;
    while (changed) {
      changed = false;
      index_facts();
      std::vector<Atom> derived;
      for (const auto& [law, domains] : laws) {
        match(*law, domains, {}, [&](const Binding& b) {
          Atom head = substitute(law->head.atom, b);
          if (rigid_facts_.count(head) == 0) derived.push_back(std::move(head));
        });
      }
      for (auto& atom : derived) changed |= rigid_facts_.insert(std::move(atom)).second;
    }
    index_facts();
    out.rigid_facts_ = rigid_facts_;
  }

  void build_atom_table(GroundedDomain& out) {
    for (const auto& sig : desc_.fluents) {
      if (is_rigid(sig.name)) continue;
      std::vector<std::vector<std::string>> domains;
      for (const auto& type : sig.params) domains.push_back(objects_of_all({type}));
      std::vector<std::string> args(sig.params.size());
      cartesian(domains, 0, args, [&](const std::vector<std::string>& tuple) {
        out.atoms_.push_back(Atom{sig.name, tuple});
      });
    }
    std::sort(out.atoms_.begin(), out.atoms_.end());
    for (AtomId id = 0; id < out.atoms_.size(); ++id) out.atom_index_[out.atoms_[id]] = id;
  }

  template <typename Callback>
  static void cartesian(const std::vector<std::vector<std::string>>& domains, std::size_t index,
                        std::vector<std::string>& tuple, const Callback& callback) {
    if (index == domains.size()) {
      callback(static_cast<const std::vector<std::string>&>(tuple));
      return;
    }
    for (const auto& value : domains[index]) {
      tuple[index] = value;
      cartesian(domains, index + 1, tuple, callback);
    }
  }

  GroundLiteral ground_literal(const GroundedDomain& out, const Literal& literal, const Binding& binding) const {
    const Atom atom = substitute(literal.atom, binding);
    auto it = out.atom_index_.find(atom);
    if (it == out.atom_index_.end()) throw GroundingError("no ground atom " + to_string(atom));
    return GroundLiteral{it->second, literal.negated};
  }

  std::vector<GroundLiteral> fluent_condition(const GroundedDomain& out, const CausalLaw& law,
                                              const Binding& binding) const {
    std::vector<GroundLiteral> condition;
    for (const auto& literal : law.body) {
      if (!is_rigid(literal.atom.predicate)) condition.push_back(ground_literal(out, literal, binding));
    }
    std::sort(condition.begin(), condition.end());
    condition.erase(std::unique(condition.begin(), condition.end()), condition.end());
    return condition;
  }

  void build_actions(GroundedDomain& out, std::size_t limit) {
    std::size_t total = 0;
    for (const auto& sig : desc_.actions) {
      std::size_t count = 1;
      for (const auto& type : sig.params) count *= objects_of_all({type}).size();
      total += count;
      if (total > limit) {
        throw GroundingError("grounding produces more than " + std::to_string(limit) + " ground actions");
      }
    }

    std::map<std::string, std::vector<std::pair<const CausalLaw*, VarDomains>>> laws_by_action;
    for (const auto& law : desc_.laws) {
      if (law.kind == LawKind::kDynamic || law.kind == LawKind::kNonexecutable) {
        laws_by_action[law.action.predicate].emplace_back(&law, var_domains(law));
      }
    }

    for (const auto& sig : desc_.actions) {
      std::vector<std::vector<std::string>> domains;
      for (const auto& type : sig.params) domains.push_back(objects_of_all({type}));
      std::vector<std::string> args(sig.params.size());
      cartesian(domains, 0, args, [&](const std::vector<std::string>& tuple) {
        GroundAction action;
        action.schema = sig.name;
        action.args = tuple;
        action.name = to_string(Atom{sig.name, tuple});
        std::set<std::vector<GroundLiteral>> blocked;
        for (const auto& [law, var_dom] : laws_by_action[sig.name]) {
          Binding binding;
          if (!unify(law->action, Atom{sig.name, tuple}, binding)) continue;
          match(*law, var_dom, binding, [&](const Binding& b) {
            auto condition = fluent_condition(out, *law, b);
            if (law->kind == LawKind::kNonexecutable) {
              blocked.insert(std::move(condition));
              return;
            }
            const Atom head = substitute(law->head.atom, b);
            auto it = out.atom_index_.find(head);
            if (it == out.atom_index_.end()) throw GroundingError("no ground atom " + to_string(head));
            action.effects.push_back(ConditionalEffect{std::move(condition), GroundLiteral{it->second, law->head.negated}});
          });
        }
        for (const auto& condition : blocked) {
          if (condition.empty()) {
            action.never_executable = true;
          } else if (condition.size() == 1) {
            action.precondition.push_back(GroundLiteral{condition[0].atom, !condition[0].negated});
          } else {
            action.nonexecutable.push_back(condition);
          }
        }
        std::sort(action.precondition.begin(), action.precondition.end());
        out.actions_.push_back(std::move(action));
      });
    }
    std::stable_sort(out.actions_.begin(), out.actions_.end(), [](const GroundAction& a, const GroundAction& b) {
      return std::tie(a.schema, a.args) < std::tie(b.schema, b.args);
    });
    for (ActionId id = 0; id < out.actions_.size(); ++id) out.action_index_[out.actions_[id].name] = id;
  }

  void build_derived_rules(GroundedDomain& out) {
    for (const auto& law : desc_.laws) {
      if (law.kind != LawKind::kStatic || is_rigid(law.head.atom.predicate)) continue;
      const VarDomains domains = var_domains(law);
      match(law, domains, {}, [&](const Binding& b) {
        const Atom head = substitute(law.head.atom, b);
        auto it = out.atom_index_.find(head);
        if (it == out.atom_index_.end()) throw GroundingError("no ground atom " + to_string(head));
        out.derived_.push_back(DerivedRule{fluent_condition(out, law, b), it->second});
      });
    }
  }

  const ActionDescription& desc_;
  std::map<std::string, std::vector<std::string>> type_objects_;
  std::map<std::string, std::set<std::string>> object_types_;
  std::map<std::string, const Signature*> fluents_;
  std::map<std::string, const Signature*> actions_;
  std::set<std::string> affected_;
  std::set<Atom> rigid_facts_;
  std::map<std::string, std::vector<const Atom*>> facts_by_predicate_;
};

}  // namespace detail

GroundedDomain ground(const ActionDescription& description, std::size_t max_ground_actions) {
  return detail::Grounder(description).run(max_ground_actions);
}

// ---------------------------------------------------------------------------
// GroundedDomain

std::optional<AtomId> GroundedDomain::find_atom(const Atom& atom) const {
  auto it = atom_index_.find(atom);
  if (it == atom_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<ActionId> GroundedDomain::find_action(std::string_view name) const {
  auto it = action_index_.find(std::string(name));
  if (it == action_index_.end()) return std::nullopt;
  return it->second;
}

State GroundedDomain::make_state(const std::vector<Atom>& true_atoms) const {
  State state = empty_state();
  for (const auto& atom : true_atoms) {
    if (is_rigid(atom.predicate)) {
      if (rigid_facts_.count(atom) == 0) throw GroundingError("static atom " + lang::to_string(atom) + " is false");
      continue;
    }
    auto id = find_atom(atom);
    if (!id) throw GroundingError("unknown atom " + lang::to_string(atom));
    state.insert(*id);
  }
  return close(std::move(state));
}

std::vector<GroundLiteral> GroundedDomain::make_literals(const std::vector<Literal>& literals) const {
  std::vector<GroundLiteral> out;
  for (const auto& literal : literals) {
    if (is_rigid(literal.atom.predicate)) {
      const bool present = rigid_facts_.count(literal.atom) > 0;
      if (present == literal.negated) throw GroundingError("static literal " + lang::to_string(literal) + " is false");
      continue;
    }
    auto id = find_atom(literal.atom);
    if (!id) throw GroundingError("unknown atom " + lang::to_string(literal.atom));
    out.push_back(GroundLiteral{*id, literal.negated});
  }
  return out;
}

bool GroundedDomain::holds_all(const State& state, const std::vector<GroundLiteral>& literals) const {
  return std::all_of(literals.begin(), literals.end(), [&](const GroundLiteral& l) { return holds(state, l); });
}

State GroundedDomain::close(State state) const {
  bool changed = !derived_.empty();
  while (changed) {
    changed = false;
    for (const auto& rule : derived_) {
      if (!state.contains(rule.head) && holds_all(state, rule.condition)) {
        state.insert(rule.head);
        changed = true;
      }
    }
  }
  return state;
}

std::string GroundedDomain::to_string(const State& state) const {
  std::string out = "{";
  bool first = true;
  for (AtomId id : state.atoms()) {
    if (!first) out += ", ";
    out += lang::to_string(atoms_.at(id));
    first = false;
  }
  return out + "}";
}

std::string GroundedDomain::to_string(const GroundLiteral& literal) const {
  return (literal.negated ? "-" : "") + lang::to_string(atoms_.at(literal.atom));
}

// ---------------------------------------------------------------------------
// Transitions

namespace {

bool executable(const State& state, const GroundAction& action, const GroundedDomain& domain) {
  if (action.never_executable || !domain.holds_all(state, action.precondition)) return false;
  for (const auto& condition : action.nonexecutable) {
    if (domain.holds_all(state, condition)) return false;
  }
  return true;
}

}  // namespace

std::optional<State> apply(const State& state, ActionId action_id, const GroundedDomain& domain) {
  const GroundAction& action = domain.actions().at(action_id);
  if (!executable(state, action, domain)) return std::nullopt;

  State next = state;
  const auto& mask = domain.inertial_mask().words();
  for (std::size_t w = 0; w < next.words().size(); ++w) next.words()[w] &= mask[w];

  std::vector<AtomId> added;
  for (const auto& effect : action.effects) {
    if (!domain.holds_all(state, effect.condition)) continue;
    if (effect.effect.negated) {
      next.erase(effect.effect.atom);
    } else {
      added.push_back(effect.effect.atom);
    }
  }
  for (AtomId atom : added) next.insert(atom);
  return domain.close(std::move(next));
}

std::vector<std::pair<ActionId, State>> successors(const State& state, const GroundedDomain& domain) {
  std::vector<std::pair<ActionId, State>> out;
  for (ActionId id = 0; id < domain.actions().size(); ++id) {
    if (auto next = apply(state, id, domain)) out.emplace_back(id, std::move(*next));
  }
  return out;
}

bool check_transition(const State& state, ActionId action_id, const State& next, const GroundedDomain& domain) {
  if (action_id >= domain.actions().size()) return false;
  const GroundAction& action = domain.actions()[action_id];
  if (action.never_executable) return false;
  for (const auto& literal : action.precondition) {
    if (state.contains(literal.atom) == literal.negated) return false;
  }
  for (const auto& condition : action.nonexecutable) {
    bool all = true;
    for (const auto& literal : condition) all = all && state.contains(literal.atom) != literal.negated;
    if (all) return false;
  }

  const std::size_t n = domain.atoms().size();
  State expected(n);
  for (AtomId atom = 0; atom < n; ++atom) {
    bool caused_true = false;
    bool caused_false = false;
    for (const auto& effect : action.effects) {
      if (effect.effect.atom != atom) continue;
      bool fires = true;
      for (const auto& literal : effect.condition) fires = fires && state.contains(literal.atom) != literal.negated;
      if (!fires) continue;
      (effect.effect.negated ? caused_false : caused_true) = true;
    }
    const bool value = caused_true || (!caused_false && domain.is_inertial(atom) && state.contains(atom));
    if (value) expected.insert(atom);
  }
  return domain.close(std::move(expected)) == next;
}

}  // namespace tmprl::lang
