#include "tmprl/rl_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace tmprl::rl {

StateAbstraction::StateAbstraction(const lang::GroundedDomain& domain, const std::vector<std::string>& predicates)
    : domain_(&domain), mask_(domain.empty_state()) {
  const auto& atoms = domain.atoms();
  for (lang::AtomId id = 0; id < atoms.size(); ++id) {
    if (std::find(predicates.begin(), predicates.end(), atoms[id].predicate) != predicates.end()) mask_.insert(id);
  }
}

std::string StateAbstraction::key(const lang::State& state) const {
  std::string out;
  for (lang::AtomId id : state.atoms()) {
    if (!mask_.contains(id)) continue;
    if (!out.empty()) out += ';';
    out += lang::to_string(domain_->atoms()[id]);
  }
  return out;
}

double DefaultPolicy::rho(const std::string& schema, std::optional<double> straight_line) const {
  if (schema == "approach" && euclidean_approach) return straight_line ? -*straight_line : infeasible;
  if (schema == "open_door") return open_door;
  return fallback;
}

double ValueTables::r_value(const std::string& state, const std::string& action) const {
  auto it = entries_.find(state);
  if (it == entries_.end()) return 0.0;
  auto jt = it->second.find(action);
  return jt == it->second.end() ? 0.0 : jt->second.r;
}

std::optional<double> ValueTables::stored_rho(const std::string& state, const std::string& action) const {
  auto it = entries_.find(state);
  if (it == entries_.end()) return std::nullopt;
  auto jt = it->second.find(action);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second.rho;
}

double ValueTables::max_r(const std::string& state) const {
  auto it = entries_.find(state);
  if (it == entries_.end()) return 0.0;
  double best = it->second.size() < num_actions_ ? 0.0 : -INFINITY;
  for (const auto& [action, entry] : it->second) best = std::max(best, entry.r);
  return best;
}

void ValueTables::update(const std::string& state, const std::string& action, double reward,
                         const std::string& next, double default_rho) {
  const double r_old = r_value(state, action);
  const double rho_old = rho(state, action, default_rho);
  const double m_next = max_r(next);
  const double m_here = max_r(state);
  Entry& entry = entries_[state][action];
  entry.r = (1.0 - alpha_) * r_old + alpha_ * (reward - rho_old + m_next);
  entry.rho = (1.0 - beta_) * rho_old + beta_ * (reward + m_next - m_here);
}

std::size_t ValueTables::size() const {
  std::size_t n = 0;
  for (const auto& [state, row] : entries_) n += row.size();
  return n;
}

double reward_from_motion(std::optional<double> length) { return length ? -*length : kInfeasibleReward; }

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

// Splits one CSV record; quoted fields may not span lines.
std::vector<std::string> split_record(const std::string& line, int line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw SnapshotError("snapshot line " + std::to_string(line_no) + ": unterminated quote");
  return fields;
}

double parse_value(const std::string& text, int line_no) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw SnapshotError("snapshot line " + std::to_string(line_no) + ": bad number `" + text + "`");
  }
  return value;
}

}  // namespace

void write_snapshot(const ValueTables& tables, std::ostream& out) {
  out << "state_key,action,R,rho\n";
  for (const auto& [state, row] : tables.entries()) {
    for (const auto& [action, entry] : row) {
      out << quote(state) << ',' << quote(action) << ',' << format_double(entry.r) << ','
          << format_double(entry.rho) << '\n';
    }
  }
}

void read_snapshot(std::istream& in, ValueTables& tables) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || split_record(line, 1) != std::vector<std::string>{"state_key", "action", "R", "rho"}) {
    throw SnapshotError("snapshot must start with the header state_key,action,R,rho");
  }
  tables.clear();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_record(line, line_no);
    if (fields.size() != 4) throw SnapshotError("snapshot line " + std::to_string(line_no) + ": expected 4 fields");
    tables.set(fields[0], fields[1], Entry{parse_value(fields[2], line_no), parse_value(fields[3], line_no)});
  }
}

}  // namespace tmprl::rl
