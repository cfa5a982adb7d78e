#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "grasp/geometry.hpp"
#include "grasp/reachgraph.hpp"

namespace grasp {

struct Cell {
  int col = 0;
  int row = 0;
  friend bool operator==(Cell, Cell) = default;
};

/// Occupancy-grid maze. Cell (col, row) spans
/// [col * cell_size, (col + 1) * cell_size) x [row * cell_size, (row + 1) * cell_size),
/// so row indices grow with y. Border cells must be walls and the free cells
/// must form one 4-connected component.
class MazeWorld {
 public:
  /// `rows[r][c]` is '#' for a wall and '.' for free space.
  MazeWorld(std::vector<std::string> rows, double cell_size = 1.0, double max_speed = 0.5);

  static MazeWorld parse(const std::string& text, double cell_size = 1.0, double max_speed = 0.5);
  static MazeWorld load(const std::string& path, double cell_size = 1.0, double max_speed = 0.5);
  /// Built-in 20x20 nine-room maze.
  static MazeWorld desk();

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  double max_speed() const { return max_speed_; }

  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
  bool wall(Cell c) const { return !in_bounds(c) || walls_[index(c)]; }
  bool is_free(Vec2 p) const { return !wall(cell_of(p)); }
  Cell cell_of(Vec2 p) const;
  Vec2 center_of(Cell c) const;
  int index(Cell c) const { return c.row * width_ + c.col; }
  Cell cell_at(int index) const { return {index % width_, index / width_}; }
  const std::vector<Cell>& free_cells() const { return free_cells_; }

  /// True when every cell the closed segment touches is free. A segment
  /// through a cell corner requires both side cells to be free.
  bool segment_free(Vec2 a, Vec2 b) const;

  std::string to_text() const;

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 1.0;
  double max_speed_ = 0.5;
  std::vector<bool> walls_;
  std::vector<Cell> free_cells_;
};

/// Point-mass dynamics: the action is clipped to max_speed; a blocked move is
/// resolved per axis (x, then y) so the agent slides along walls.
Vec2 step(const MazeWorld& world, Vec2 s, Vec2 a);

struct Transition {
  Vec2 x;
  Vec2 a;
  Vec2 next;
};

struct OfflineDataset {
  std::vector<std::vector<Transition>> trajectories;

  std::size_t transition_count() const;
  /// Every visited state (x of each transition plus each trajectory's last next).
  std::vector<Vec2> states() const;
};

struct DatasetConfig {
  int n_traj = 500;
  int traj_len = 200;
  std::uint64_t seed = 0;
  double turn_sigma = 0.35;  // radians per step
};

/// Momentum random walk at max_speed from uniformly random free positions.
/// The heading is re-drawn uniformly whenever a move is blocked.
OfflineDataset generate_dataset(const MazeWorld& world, const DatasetConfig& config);

/// Fraction of free cells containing at least one dataset state.
double coverage(const MazeWorld& world, const OfflineDataset& data);

/// JSON lines, one transition per line:
/// {"traj":i,"t":j,"x":[x,y],"a":[ax,ay],"next":[x,y]}
void save_dataset(const OfflineDataset& data, std::ostream& out);
OfflineDataset load_dataset(std::istream& in);

/// Exact reachability oracle: 8-connected shortest free-cell path (diagonals
/// cost sqrt(2) * cell_size and may not cut wall corners) divided by speed.
/// Distance fields are computed lazily per goal cell and cached.
class BfsOracle : public ReachabilityOracle {
 public:
  using Field = std::vector<double>;  // world-unit distance to the goal, per cell index

  explicit BfsOracle(const MazeWorld& world);
  BfsOracle(const MazeWorld& world, double speed);

  double distance(Vec2 from, Vec2 to) const override;
  std::shared_ptr<const Field> field(Cell goal) const;
  double speed() const { return speed_; }
  const MazeWorld& world() const { return world_; }

 private:
  std::shared_ptr<const Field> compute(Cell goal) const;

  const MazeWorld& world_;
  double speed_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<int, std::shared_ptr<const Field>> cache_;
};

/// Straight at g when the segment is free (landing on g if within reach);
/// otherwise toward the farthest visible cell centre on the descent chain of
/// the distance field to g.
Vec2 greedy_controller(const MazeWorld& world, const BfsOracle& oracle, Vec2 s, Vec2 g);

/// Starts at x0 and, for each waypoint w_i with i >= 1, runs the controller
/// toward w_i for exactly k control steps. Returns N * k + 1 states, where
/// N = waypoints.size() - 1.
std::vector<Vec2> execute_plan(const MazeWorld& world, const BfsOracle& oracle, Vec2 x0,
                               std::span<const Vec2> waypoints, int k);

/// s_i = x_{min(i k, T)} for i = 0..ceil(T / k), where T = trajectory.size() - 1.
std::vector<Vec2> subsample_signal(std::span<const Vec2> trajectory, int k);

}  // namespace grasp
