// Occupancy-grid path planning and the mapping from symbolic states to poses.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "tmprl/action_lang.hpp"

namespace tmprl::motion {

/// Planar pose in meters. Orientation is carried along but never costed.
struct Pose {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double theta = 0.0;

  Pose() = default;
  Pose(double x, double y, double heading = 0.0) : position(x, y), theta(heading) {}

  double x() const { return position.x(); }
  double y() const { return position.y(); }

  bool operator==(const Pose& other) const { return position == other.position && theta == other.theta; }
};

/// Straight-line distance between the positions of two points.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm();
}

inline double euclidean(const Pose& a, const Pose& b) { return euclidean(a.position, b.position); }

/// Door approach poses, one per side.
struct Door {
  std::string id;
  std::string region_a;
  std::string region_b;
  Pose pose_a;
  Pose pose_b;
};

class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid cell (column, row). Pose (x, y) lies in cell (round(x / res), round(y / res)).
struct Cell {
  int col = 0;
  int row = 0;

  bool operator==(const Cell&) const = default;
};

class OccupancyGrid {
 public:
  static constexpr std::int16_t kFree = -1;
  static constexpr std::int16_t kObstacle = -2;

  using CellMatrix = Eigen::Matrix<std::int16_t, Eigen::Dynamic, Eigen::Dynamic>;

  OccupancyGrid(int width, int height, double resolution);

  int width() const { return static_cast<int>(cells_.cols()); }
  int height() const { return static_cast<int>(cells_.rows()); }
  double resolution() const { return resolution_; }

  /// kFree, kObstacle, or the index of a door in doors().
  std::int16_t at(Cell cell) const { return cells_(cell.row, cell.col); }
  void set(Cell cell, std::int16_t value) { cells_(cell.row, cell.col) = value; }
  /// Door cells are obstacles for motion queries.
  bool is_free(Cell cell) const { return in_bounds(cell) && at(cell) == kFree; }
  bool in_bounds(Cell cell) const { return cell.col >= 0 && cell.row >= 0 && cell.col < width() && cell.row < height(); }

  Cell cell_of(const Pose& pose) const;
  Pose pose_of(Cell cell) const;

  const CellMatrix& cells() const { return cells_; }

  std::map<std::string, Pose> landmarks;
  std::vector<Door> doors;

  const Door* find_door(std::string_view id) const;

 private:
  CellMatrix cells_;
  double resolution_;
};

/// Parses the map format: `resolution`, `landmark` and `door` header lines,
/// then an ASCII block (`.` free, `#` obstacle, digit k = cell of the k-th
/// declared door). Validates that landmarks and approach poses are free.
OccupancyGrid parse_map(std::string_view text);
OccupancyGrid load_map(const std::string& path);

struct Trajectory {
  std::vector<Pose> waypoints;
  double length = 0.0;
};

struct Infeasible {
  enum class Reason { kNoPath, kEndpointBlocked, kUnmapped };
  Reason reason = Reason::kNoPath;
};

using PathResult = std::variant<Trajectory, Infeasible>;

/// Minimum-length path over the 8-connected free cells. Diagonal steps are
/// allowed unless both orthogonal neighbours are blocked. Lengths are
/// res * (straight + sqrt(2) * diagonal), so equal step counts give
/// bit-identical lengths. Throws std::out_of_range for out-of-bounds
/// endpoints.
PathResult shortest_path(const OccupancyGrid& grid, const Pose& from, const Pose& to);

/// Symbolic-to-metric mapping. A state holding in(R) and near(X) maps to the
/// approach pose of door X on region R's side, or to landmark X when X is a
/// landmark; a state with in(R) alone maps to the landmark named R.
class SymbolMap {
 public:
  SymbolMap(const OccupancyGrid& grid, const lang::GroundedDomain& domain);

  /// nullopt when the state has no unique in(R) atom or no entry exists.
  std::optional<Pose> map_state(const lang::State& state) const;

  /// Actions refined by the motion planner (instances of `approach`).
  bool is_navigation(lang::ActionId action) const;

  const lang::GroundedDomain& domain() const { return *domain_; }
  const OccupancyGrid& grid() const { return *grid_; }

  /// All poses the mapping can produce.
  std::vector<Pose> poses() const;

 private:
  const OccupancyGrid* grid_;
  const lang::GroundedDomain* domain_;
  std::unordered_map<lang::AtomId, std::string> region_of_in_;
  std::unordered_map<lang::AtomId, std::string> location_of_near_;
  std::map<std::pair<std::string, std::string>, Pose> entries_;  // (region, location) -> pose; location "" = region alone
  std::vector<bool> navigation_;
};

struct NotRefinable {};

using RefineResult = std::variant<Trajectory, NotRefinable, Infeasible>;

/// Motion refinement of one symbolic transition: NotRefinable for actions
/// other than `approach`, otherwise the shortest path between the mapped
/// poses of the two states.
RefineResult refine_action(const SymbolMap& map, const lang::State& state, lang::ActionId action,
                           const lang::State& next);

/// Memoized shortest-path lengths keyed by endpoint cells. Not thread-safe;
/// each experiment run owns one.
class PathCache {
 public:
  explicit PathCache(const OccupancyGrid& grid) : grid_(&grid) {}

  /// Path length, or nullopt when infeasible.
  std::optional<double> length(const Pose& from, const Pose& to);

 private:
  const OccupancyGrid* grid_;
  std::unordered_map<std::uint64_t, std::optional<double>> lengths_;
};

}  // namespace tmprl::motion
