// Independent reference implementations shared by the unit tests and the
// acceptance checks.

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tmprl/motion_planner.hpp"
#include "tmprl/task_planner.hpp"

namespace oracles {

using namespace tmprl;
using motion::Cell;
using motion::OccupancyGrid;
using planning::PlanningProblem;
using planning::QualityEstimator;

// Uniform-cost oracle: relax every cell against every neighbour until nothing
// changes, keeping straight/diagonal step counts.
inline std::optional<double> oracle_length(const OccupancyGrid& grid, Cell from, Cell to) {
  const int w = grid.width();
  const int h = grid.height();
  auto free = [&](int c, int r) { return c >= 0 && r >= 0 && c < w && r < h && grid.cells()(r, c) == OccupancyGrid::kFree; };
  if (!free(from.col, from.row) || !free(to.col, to.row)) return std::nullopt;
  struct Counts {
    long straight = -1;
    long diagonal = 0;
  };
  auto cost = [](const Counts& c) { return c.straight + c.diagonal * std::sqrt(2.0); };
  std::vector<Counts> best(static_cast<std::size_t>(w * h));
  best[from.row * w + from.col] = Counts{0, 0};
  for (bool changed = true; changed;) {
    changed = false;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (!free(c, r)) continue;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if ((dr == 0 && dc == 0) || !free(c + dc, r + dr)) continue;
            const Counts& src = best[r * w + c];
            if (src.straight < 0) continue;
            const bool diag = dr != 0 && dc != 0;
            if (diag && !free(c + dc, r) && !free(c, r + dr)) continue;
            Counts cand{src.straight + (diag ? 0 : 1), src.diagonal + (diag ? 1 : 0)};
            Counts& dst = best[(r + dr) * w + (c + dc)];
            if (dst.straight < 0 || cost(cand) < cost(dst) - 1e-12) {
              dst = cand;
              changed = true;
            }
          }
        }
      }
    }
  }
  const Counts& goal = best[to.row * w + to.col];
  if (goal.straight < 0) return std::nullopt;
  return grid.resolution() * cost(goal);
}

inline OccupancyGrid random_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 20);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int w = dim(rng);
  const int h = dim(rng);
  const double density = unit(rng) * 0.45;
  const double res = std::vector<double>{0.5, 1.0, 0.25}[rng() % 3];
  OccupancyGrid grid(w, h, res);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (unit(rng) < density) grid.set(Cell{c, r}, OccupancyGrid::kObstacle);
    }
  }
  return grid;
}

// Reference evaluator with flat tables; the action set is explicit so M(s)
// is a literal max over every action.
struct Reference {
  double alpha;
  double beta;
  std::vector<std::string> actions;
  std::map<std::pair<std::string, std::string>, double> r;
  std::map<std::pair<std::string, std::string>, double> rho;

  double r_at(const std::string& s, const std::string& a) const {
    auto it = r.find({s, a});
    return it == r.end() ? 0.0 : it->second;
  }
  double m(const std::string& s) const {
    double best = r_at(s, actions[0]);
    for (const auto& a : actions) best = std::max(best, r_at(s, a));
    return best;
  }
  void step(const std::string& s, const std::string& a, double reward, const std::string& s2, double rho_default) {
    auto it = rho.find({s, a});
    const double rho0 = it == rho.end() ? rho_default : it->second;
    const double r0 = r_at(s, a);
    const double ms2 = m(s2);
    const double ms = m(s);
    r[{s, a}] = (1 - alpha) * r0 + alpha * (reward - rho0 + ms2);
    rho[{s, a}] = (1 - beta) * rho0 + beta * (reward + ms2 - ms);
  }
};

// Pseudo-random rho per (state, action) in {-5, -4.75, ..., 0}, so ties are common.
class Hashed : public QualityEstimator {
 public:
  explicit Hashed(std::uint64_t salt) : salt_(salt) {}
  double lookup(const lang::State& s, lang::ActionId a, const lang::State&) const override {
    std::uint64_t h = salt_ ^ (s.hash() * 0x9e3779b97f4a7c15ULL) ^ (a + 1) * 0xc2b2ae3d27d4eb4fULL;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 32;
    return -0.25 * static_cast<double>(h % 21);
  }
  double upper_bound() const override { return 0.0; }

 private:
  std::uint64_t salt_;
};

struct Enumerated {
  std::vector<lang::ActionId> actions;
  double quality = 0.0;
};

// Every executable sequence of length <= horizon that ends in a goal state,
// ordered by length and then by action order.
inline std::vector<Enumerated> enumerate_plans(const lang::GroundedDomain& domain, const PlanningProblem& problem,
                                        const QualityEstimator& q) {
  std::vector<Enumerated> out;
  for (int h = 0; h <= problem.max_horizon; ++h) {
    std::vector<lang::ActionId> seq;
    std::function<void(const lang::State&, double)> rec = [&](const lang::State& s, double quality) {
      if (static_cast<int>(seq.size()) == h) {
        if (domain.holds_all(s, problem.goal)) out.push_back({seq, quality});
        return;
      }
      for (lang::ActionId a = 0; a < domain.actions().size(); ++a) {
        auto next = lang::apply(s, a, domain);
        if (!next) continue;
        seq.push_back(a);
        rec(*next, quality + q.lookup(s, a, *next));
        seq.pop_back();
      }
    };
    rec(problem.initial, 0.0);
  }
  return out;
}

inline std::string random_domain(std::mt19937_64& rng, int& fluents_out) {
  const int fluents = 2 + static_cast<int>(rng() % 5);
  const int actions = 1 + static_cast<int>(rng() % 5);
  fluents_out = fluents;
  auto lit = [&](int f) { return std::string(rng() % 2 ? "-" : "") + "p" + std::to_string(f); };
  std::ostringstream out;
  for (int f = 0; f < fluents; ++f) out << "fluent p" << f << ".\n";
  for (int a = 0; a < actions; ++a) out << "action a" << a << ".\n";
  for (int a = 0; a < actions; ++a) {
    const int effects = 1 + static_cast<int>(rng() % 2);
    for (int e = 0; e < effects; ++e) {
      out << "a" << a << " causes " << lit(static_cast<int>(rng() % fluents));
      if (rng() % 2) out << " if " << lit(static_cast<int>(rng() % fluents));
      out << ".\n";
    }
    if (rng() % 2) out << "nonexecutable a" << a << " if " << lit(static_cast<int>(rng() % fluents)) << ".\n";
  }
  if (rng() % 3 == 0) {
    out << "p" << (fluents - 1) << " if " << lit(static_cast<int>(rng() % (fluents - 1))) << ".\n";
  }
  for (int f = 0; f < fluents; ++f) {
    if (rng() % 5 != 0) out << "inertial p" << f << ".\n";
  }
  return out.str();
}

}  // namespace oracles
