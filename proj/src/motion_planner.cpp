#include "tmprl/motion_planner.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace tmprl::motion {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool is_grid_row(const std::string& line) {
  return !line.empty() && std::all_of(line.begin(), line.end(), [](char c) {
    return c == '.' || c == '#' || (c >= '0' && c <= '9');
  });
}

[[noreturn]] void fail(int line_no, const std::string& message) {
  throw MapError("map line " + std::to_string(line_no) + ": " + message);
}

double read_number(std::istringstream& in, int line_no, const char* what) {
  double value = 0.0;
  if (!(in >> value)) fail(line_no, std::string("expected ") + what);
  return value;
}

}  // namespace

OccupancyGrid::OccupancyGrid(int width, int height, double resolution)
    : cells_(CellMatrix::Constant(height, width, kFree)), resolution_(resolution) {
  if (width <= 0 || height <= 0) throw MapError("grid dimensions must be positive");
  if (!(resolution > 0.0)) throw MapError("resolution must be positive");
}

Cell OccupancyGrid::cell_of(const Pose& pose) const {
  return Cell{static_cast<int>(std::lround(pose.x() / resolution_)),
              static_cast<int>(std::lround(pose.y() / resolution_))};
}

Pose OccupancyGrid::pose_of(Cell cell) const { return Pose(cell.col * resolution_, cell.row * resolution_); }

const Door* OccupancyGrid::find_door(std::string_view id) const {
  for (const auto& door : doors) {
    if (door.id == id) return &door;
  }
  return nullptr;
}

OccupancyGrid parse_map(std::string_view text) {
  double resolution = 0.0;
  std::map<std::string, Pose> landmarks;
  std::vector<Door> doors;
  std::vector<std::string> rows;
  int first_row_line = 0;

  std::istringstream stream{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (!rows.empty()) {
      if (line.empty()) continue;
      if (!is_grid_row(line)) fail(line_no, "unexpected content after grid");
      rows.push_back(line);
      continue;
    }
    if (line.empty() || line[0] == '%') continue;
    if (is_grid_row(line)) {
      rows.push_back(line);
      first_row_line = line_no;
      continue;
    }
    std::istringstream in(line);
    std::string keyword;
    in >> keyword;
    if (keyword == "resolution") {
      resolution = read_number(in, line_no, "resolution");
    } else if (keyword == "landmark") {
      std::string name;
      if (!(in >> name)) fail(line_no, "expected landmark name");
      const double x = read_number(in, line_no, "x");
      const double y = read_number(in, line_no, "y");
      if (!landmarks.emplace(name, Pose(x, y)).second) fail(line_no, "duplicate landmark " + name);
    } else if (keyword == "door") {
      Door door;
      if (!(in >> door.id >> door.region_a >> door.region_b)) fail(line_no, "expected door id and regions");
      const double x1 = read_number(in, line_no, "x1");
      const double y1 = read_number(in, line_no, "y1");
      const double x2 = read_number(in, line_no, "x2");
      const double y2 = read_number(in, line_no, "y2");
      door.pose_a = Pose(x1, y1);
      door.pose_b = Pose(x2, y2);
      doors.push_back(std::move(door));
    } else {
      fail(line_no, "unknown keyword `" + keyword + "`");
    }
    std::string extra;
    if (in >> extra) fail(line_no, "trailing token `" + extra + "`");
  }

  if (rows.empty()) throw MapError("map has no grid");
  if (doors.size() > 10) throw MapError("at most 10 doors can be referenced from the grid");
  const int width = static_cast<int>(rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != width) {
      fail(first_row_line + static_cast<int>(r), "grid rows must have equal width");
    }
  }

  OccupancyGrid grid(width, static_cast<int>(rows.size()), resolution);
  for (int row = 0; row < grid.height(); ++row) {
    for (int col = 0; col < width; ++col) {
      const char c = rows[row][col];
      std::int16_t value = OccupancyGrid::kFree;
      if (c == '#') {
        value = OccupancyGrid::kObstacle;
      } else if (c != '.') {
        value = static_cast<std::int16_t>(c - '0');
        if (value >= static_cast<int>(doors.size())) {
          throw MapError("grid references undeclared door index " + std::string(1, c));
        }
      }
      grid.set(Cell{col, row}, value);
    }
  }
  grid.landmarks = std::move(landmarks);
  grid.doors = std::move(doors);

  auto require_free = [&](const Pose& pose, const std::string& what) {
    if (!grid.is_free(grid.cell_of(pose))) throw MapError(what + " is not on a free cell");
  };
  for (const auto& [name, pose] : grid.landmarks) require_free(pose, "landmark " + name);
  for (const auto& door : grid.doors) {
    require_free(door.pose_a, "approach pose of " + door.id + " (" + door.region_a + " side)");
    require_free(door.pose_b, "approach pose of " + door.id + " (" + door.region_b + " side)");
  }
  return grid;
}

OccupancyGrid load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MapError("cannot open map file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_map(buffer.str());
}

PathResult shortest_path(const OccupancyGrid& grid, const Pose& from, const Pose& to) {
  const Cell start = grid.cell_of(from);
  const Cell goal = grid.cell_of(to);
  if (!grid.in_bounds(start) || !grid.in_bounds(goal)) throw std::out_of_range("path endpoint outside the grid");
  if (!grid.is_free(start) || !grid.is_free(goal)) return Infeasible{Infeasible::Reason::kEndpointBlocked};

  const int width = grid.width();
  const int n = width * grid.height();
  auto index = [width](Cell c) { return c.row * width + c.col; };

  // Costs are tracked as step counts so that the final length is formed from
  // integers the same way regardless of the path's step order.
  struct Label {
    int straight = 0;
    int diagonal = 0;
    double cost() const { return straight + diagonal * kSqrt2; }
  };
  std::vector<Label> best(n);
  std::vector<bool> reached(n, false);
  std::vector<bool> done(n, false);
  std::vector<int> parent(n, -1);

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  reached[index(start)] = true;
  open.emplace(0.0, index(start));

  static constexpr std::array<std::array<int, 2>, 8> kSteps = {{
      {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

  while (!open.empty()) {
    const auto [cost, current] = open.top();
    open.pop();
    if (done[current]) continue;
    done[current] = true;
    if (current == index(goal)) break;
    const Cell c{current % width, current / width};
    for (const auto& step : kSteps) {
      const Cell next{c.col + step[0], c.row + step[1]};
      if (!grid.is_free(next)) continue;
      const bool diagonal = step[0] != 0 && step[1] != 0;
      if (diagonal && !grid.is_free(Cell{c.col + step[0], c.row}) && !grid.is_free(Cell{c.col, c.row + step[1]})) {
        continue;
      }
      const int k = index(next);
      if (done[k]) continue;
      Label label = best[current];
      (diagonal ? label.diagonal : label.straight) += 1;
      if (!reached[k] || label.cost() < best[k].cost()) {
        reached[k] = true;
        best[k] = label;
        parent[k] = current;
        open.emplace(label.cost(), k);
      }
    }
  }

  const int target = index(goal);
  if (!done[target]) return Infeasible{Infeasible::Reason::kNoPath};

  Trajectory trajectory;
  for (int k = target; k != -1; k = parent[k]) trajectory.waypoints.push_back(grid.pose_of(Cell{k % width, k / width}));
  std::reverse(trajectory.waypoints.begin(), trajectory.waypoints.end());
  trajectory.length = grid.resolution() * best[target].cost();
  return trajectory;
}

SymbolMap::SymbolMap(const OccupancyGrid& grid, const lang::GroundedDomain& domain)
    : grid_(&grid), domain_(&domain) {
  const auto& atoms = domain.atoms();
  for (lang::AtomId id = 0; id < atoms.size(); ++id) {
    if (atoms[id].args.size() != 1) continue;
    if (atoms[id].predicate == "in") region_of_in_.emplace(id, atoms[id].args[0]);
    if (atoms[id].predicate == "near") location_of_near_.emplace(id, atoms[id].args[0]);
  }
  for (const auto& [name, pose] : grid.landmarks) entries_.emplace(std::pair{name, std::string()}, pose);
  for (const auto& door : grid.doors) {
    entries_.emplace(std::pair{door.region_a, door.id}, door.pose_a);
    entries_.emplace(std::pair{door.region_b, door.id}, door.pose_b);
  }
  navigation_.reserve(domain.actions().size());
  for (const auto& action : domain.actions()) navigation_.push_back(action.schema == "approach");
}

std::optional<Pose> SymbolMap::map_state(const lang::State& state) const {
  const std::string* region = nullptr;
  const std::string* location = nullptr;
  for (lang::AtomId id : state.atoms()) {
    if (auto it = region_of_in_.find(id); it != region_of_in_.end()) {
      if (region) return std::nullopt;
      region = &it->second;
    } else if (auto jt = location_of_near_.find(id); jt != location_of_near_.end()) {
      if (location) return std::nullopt;
      location = &jt->second;
    }
  }
  if (!region) return std::nullopt;
  if (!location) {
    auto it = entries_.find({*region, std::string()});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  if (auto it = entries_.find({*region, *location}); it != entries_.end()) return it->second;
  // Near a landmark rather than a door.
  if (auto it = grid_->landmarks.find(*location); it != grid_->landmarks.end()) return it->second;
  return std::nullopt;
}

bool SymbolMap::is_navigation(lang::ActionId action) const {
  return action < navigation_.size() && navigation_[action];
}

std::vector<Pose> SymbolMap::poses() const {
  std::vector<Pose> out;
  for (const auto& [key, pose] : entries_) out.push_back(pose);
  return out;
}

RefineResult refine_action(const SymbolMap& map, const lang::State& state, lang::ActionId action,
                           const lang::State& next) {
  if (!map.is_navigation(action)) return NotRefinable{};
  const auto from = map.map_state(state);
  const auto to = map.map_state(next);
  if (!from || !to) return Infeasible{Infeasible::Reason::kUnmapped};
  auto result = shortest_path(map.grid(), *from, *to);
  if (auto* t = std::get_if<Trajectory>(&result)) return std::move(*t);
  return std::get<Infeasible>(result);
}

std::optional<double> PathCache::length(const Pose& from, const Pose& to) {
  const Cell a = grid_->cell_of(from);
  const Cell b = grid_->cell_of(to);
  const auto pack = [](Cell c) { return (static_cast<std::uint64_t>(c.col & 0xffff) << 16) | (c.row & 0xffff); };
  const std::uint64_t key = (pack(a) << 32) | pack(b);
  if (auto it = lengths_.find(key); it != lengths_.end()) return it->second;
  auto result = shortest_path(*grid_, from, to);
  std::optional<double> value;
  if (auto* t = std::get_if<Trajectory>(&result)) value = t->length;
  lengths_.emplace(key, value);
  return value;
}

}  // namespace tmprl::motion
