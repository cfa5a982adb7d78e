#include "grasp/mazesim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace grasp {

namespace {

constexpr const char* kDeskMaze =
    "####################\n"
    "#.....#......#.....#\n"
    "#............#.....#\n"
    "#............#.....#\n"
    "#.....#......#.....#\n"
    "#.....#......#.....#\n"
    "##..#####..####..###\n"
    "#.....#......#.....#\n"
    "#.....#............#\n"
    "#..................#\n"
    "#..................#\n"
    "#.....#......#.....#\n"
    "#.....#......#.....#\n"
    "###..####..#########\n"
    "#.....#......#.....#\n"
    "#.....#............#\n"
    "#.....#............#\n"
    "#.....#......#.....#\n"
    "#.....#......#.....#\n"
    "####################\n";

Vec2 clip(Vec2 a, double max_norm) {
  const double n = norm(a);
  return n > max_norm ? (max_norm / n) * a : a;
}

constexpr int kDirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};

// Diagonal moves may not squeeze between two wall cells sharing a corner.
bool can_move(const MazeWorld& world, Cell from, int dc, int dr) {
  const Cell to{from.col + dc, from.row + dr};
  if (world.wall(to)) return false;
  if (dc != 0 && dr != 0) {
    return !world.wall({from.col + dc, from.row}) && !world.wall({from.col, from.row + dr});
  }
  return true;
}

}  // namespace

MazeWorld::MazeWorld(std::vector<std::string> rows, double cell_size, double max_speed)
    : cell_size_(cell_size), max_speed_(max_speed) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell_size must be positive");
  if (!(max_speed > 0.0)) throw std::invalid_argument("max_speed must be positive");
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.empty()) throw std::invalid_argument("maze has no rows");
  height_ = static_cast<int>(rows.size());
  width_ = static_cast<int>(rows.front().size());
  if (width_ == 0) throw std::invalid_argument("maze has empty rows");
  walls_.assign(static_cast<std::size_t>(width_ * height_), true);
  for (int r = 0; r < height_; ++r) {
    const std::string& line = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(line.size()) != width_) {
      throw std::invalid_argument("maze row " + std::to_string(r) + " has inconsistent width");
    }
    for (int c = 0; c < width_; ++c) {
      const char ch = line[static_cast<std::size_t>(c)];
      if (ch != '#' && ch != '.') {
        throw std::invalid_argument(std::string("unexpected maze character '") + ch + "'");
      }
      const bool is_wall = ch == '#';
      const bool border = r == 0 || c == 0 || r == height_ - 1 || c == width_ - 1;
      if (border && !is_wall) throw std::invalid_argument("maze border must be walls");
      walls_[static_cast<std::size_t>(index({c, r}))] = is_wall;
      if (!is_wall) free_cells_.push_back({c, r});
    }
  }
  if (free_cells_.empty()) throw std::invalid_argument("maze has no free cells");

  // Free space must be a single 4-connected component.
  std::vector<bool> seen(walls_.size(), false);
  std::vector<Cell> stack{free_cells_.front()};
  seen[static_cast<std::size_t>(index(free_cells_.front()))] = true;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    ++reached;
    for (int d = 0; d < 4; ++d) {
      const Cell n{c.col + kDirs[d][0], c.row + kDirs[d][1]};
      if (wall(n) || seen[static_cast<std::size_t>(index(n))]) continue;
      seen[static_cast<std::size_t>(index(n))] = true;
      stack.push_back(n);
    }
  }
  if (reached != free_cells_.size()) throw std::invalid_argument("maze free space is not connected");
}

MazeWorld MazeWorld::parse(const std::string& text, double cell_size, double max_speed) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    rows.push_back(line);
  }
  return MazeWorld(std::move(rows), cell_size, max_speed);
}

MazeWorld MazeWorld::load(const std::string& path, double cell_size, double max_speed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open maze file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), cell_size, max_speed);
}

MazeWorld MazeWorld::desk() { return parse(kDeskMaze); }

Cell MazeWorld::cell_of(Vec2 p) const {
  return {static_cast<int>(std::floor(p.x / cell_size_)), static_cast<int>(std::floor(p.y / cell_size_))};
}

Vec2 MazeWorld::center_of(Cell c) const {
  return {(c.col + 0.5) * cell_size_, (c.row + 0.5) * cell_size_};
}

bool MazeWorld::segment_free(Vec2 a, Vec2 b) const {
  Cell c = cell_of(a);
  const Cell end = cell_of(b);
  if (wall(c) || wall(end)) return false;

  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double tmax_x = inf, tdelta_x = inf, tmax_y = inf, tdelta_y = inf;
  if (sx != 0) {
    const double edge = (sx > 0 ? c.col + 1 : c.col) * cell_size_;
    tmax_x = (edge - a.x) / dx;
    tdelta_x = cell_size_ / std::abs(dx);
  }
  if (sy != 0) {
    const double edge = (sy > 0 ? c.row + 1 : c.row) * cell_size_;
    tmax_y = (edge - a.y) / dy;
    tdelta_y = cell_size_ / std::abs(dy);
  }

  while (c != end) {
    if (tmax_x > 1.0 && tmax_y > 1.0) break;
    if (std::abs(tmax_x - tmax_y) <= 1e-12) {
      if (wall({c.col + sx, c.row}) || wall({c.col, c.row + sy})) return false;
      c = {c.col + sx, c.row + sy};
      tmax_x += tdelta_x;
      tmax_y += tdelta_y;
    } else if (tmax_x < tmax_y) {
      c.col += sx;
      tmax_x += tdelta_x;
    } else {
      c.row += sy;
      tmax_y += tdelta_y;
    }
    if (wall(c)) return false;
  }
  return true;
}

std::string MazeWorld::to_text() const {
  std::string out;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) out += wall({c, r}) ? '#' : '.';
    out += '\n';
  }
  return out;
}

Vec2 step(const MazeWorld& world, Vec2 s, Vec2 a) {
  a = clip(a, world.max_speed());
  const Vec2 target = s + a;
  if (world.segment_free(s, target)) return target;
  Vec2 p = s;
  if (a.x != 0.0) {
    const Vec2 px{p.x + a.x, p.y};
    if (world.segment_free(p, px)) p = px;
  }
  if (a.y != 0.0) {
    const Vec2 py{p.x, p.y + a.y};
    if (world.segment_free(p, py)) p = py;
  }
  return p;
}

std::size_t OfflineDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& traj : trajectories) n += traj.size();
  return n;
}

std::vector<Vec2> OfflineDataset::states() const {
  std::vector<Vec2> out;
  out.reserve(transition_count() + trajectories.size());
  for (const auto& traj : trajectories) {
    for (const auto& tr : traj) out.push_back(tr.x);
    if (!traj.empty()) out.push_back(traj.back().next);
  }
  return out;
}

OfflineDataset generate_dataset(const MazeWorld& world, const DatasetConfig& config) {
  if (config.n_traj < 1 || config.traj_len < 1) {
    throw std::invalid_argument("n_traj and traj_len must be at least 1");
  }
  if (!(config.turn_sigma >= 0.0)) throw std::invalid_argument("turn_sigma must be non-negative");
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_cell(0, world.free_cells().size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> turn(0.0, config.turn_sigma);

  OfflineDataset data;
  data.trajectories.resize(static_cast<std::size_t>(config.n_traj));
  const double cs = world.cell_size();
  for (auto& traj : data.trajectories) {
    const Cell c = world.free_cells()[pick_cell(rng)];
    Vec2 x{(c.col + unit(rng)) * cs, (c.row + unit(rng)) * cs};
    double heading = angle(rng);
    traj.reserve(static_cast<std::size_t>(config.traj_len));
    for (int t = 0; t < config.traj_len; ++t) {
      if (config.turn_sigma > 0.0) heading += turn(rng);
      const Vec2 a{world.max_speed() * std::cos(heading), world.max_speed() * std::sin(heading)};
      const Vec2 next = step(world, x, a);
      traj.push_back({x, a, next});
      if (next != x + a) heading = angle(rng);
      x = next;
    }
  }
  return data;
}

double coverage(const MazeWorld& world, const OfflineDataset& data) {
  std::vector<bool> hit(static_cast<std::size_t>(world.width() * world.height()), false);
  for (const Vec2& s : data.states()) {
    const Cell c = world.cell_of(s);
    if (!world.wall(c)) hit[static_cast<std::size_t>(world.index(c))] = true;
  }
  std::size_t n = 0;
  for (const Cell& c : world.free_cells()) n += hit[static_cast<std::size_t>(world.index(c))] ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(world.free_cells().size());
}

void save_dataset(const OfflineDataset& data, std::ostream& out) {
  for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
    const auto& traj = data.trajectories[i];
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto& tr = traj[t];
      nlohmann::json line = {{"traj", i},
                             {"t", t},
                             {"x", {tr.x.x, tr.x.y}},
                             {"a", {tr.a.x, tr.a.y}},
                             {"next", {tr.next.x, tr.next.y}}};
      out << line.dump() << '\n';
    }
  }
}

OfflineDataset load_dataset(std::istream& in) {
  OfflineDataset data;
  std::string line;
  std::size_t lineno = 0;
  auto vec = [](const nlohmann::json& j) { return Vec2{j.at(0).get<double>(), j.at(1).get<double>()}; };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto traj = j.at("traj").get<std::size_t>();
      const auto t = j.at("t").get<std::size_t>();
      if (traj >= data.trajectories.size()) data.trajectories.resize(traj + 1);
      auto& dst = data.trajectories[traj];
      if (t != dst.size()) throw std::runtime_error("transitions out of order");
      Transition tr{vec(j.at("x")), vec(j.at("a")), vec(j.at("next"))};
      if (!dst.empty() && dst.back().next != tr.x) throw std::runtime_error("transitions do not chain");
      dst.push_back(tr);
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return data;
}

BfsOracle::BfsOracle(const MazeWorld& world) : BfsOracle(world, world.max_speed()) {}

BfsOracle::BfsOracle(const MazeWorld& world, double speed) : world_(world), speed_(speed) {
  if (!(speed > 0.0)) throw std::invalid_argument("oracle speed must be positive");
}

double BfsOracle::distance(Vec2 from, Vec2 to) const {
  const Cell a = world_.cell_of(from);
  const Cell b = world_.cell_of(to);
  if (world_.wall(a) || world_.wall(b)) return kUnreachable;
  return (*field(b))[static_cast<std::size_t>(world_.index(a))] / speed_;
}

std::shared_ptr<const BfsOracle::Field> BfsOracle::field(Cell goal) const {
  const int key = world_.index(goal);
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto computed = compute(goal);
  std::unique_lock lock(mutex_);
  return cache_.try_emplace(key, std::move(computed)).first->second;
}

std::shared_ptr<const BfsOracle::Field> BfsOracle::compute(Cell goal) const {
  auto out = std::make_shared<Field>(static_cast<std::size_t>(world_.width() * world_.height()), kUnreachable);
  if (world_.wall(goal)) return out;
  Field& dist = *out;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(world_.index(goal))] = 0.0;
  queue.push({0.0, world_.index(goal)});
  const double cs = world_.cell_size();
  while (!queue.empty()) {
    const auto [d, idx] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(idx)]) continue;
    const Cell c = world_.cell_at(idx);
    for (const auto& dir : kDirs) {
      if (!can_move(world_, c, dir[0], dir[1])) continue;
      const double w = (dir[0] != 0 && dir[1] != 0) ? std::numbers::sqrt2 * cs : cs;
      const int n = world_.index({c.col + dir[0], c.row + dir[1]});
      if (d + w < dist[static_cast<std::size_t>(n)]) {
        dist[static_cast<std::size_t>(n)] = d + w;
        queue.push({d + w, n});
      }
    }
  }
  return out;
}

Vec2 greedy_controller(const MazeWorld& world, const BfsOracle& oracle, Vec2 s, Vec2 g) {
  const Vec2 to_goal = g - s;
  if (squared_norm(to_goal) == 0.0) return {0.0, 0.0};
  if (world.segment_free(s, g)) return clip(to_goal, world.max_speed());

  const Cell goal = world.cell_of(g);
  const auto field = oracle.field(goal);
  auto value = [&](Cell c) { return (*field)[static_cast<std::size_t>(world.index(c))]; };
  Cell c = world.cell_of(s);
  if (world.wall(c) || !std::isfinite(value(c))) return {0.0, 0.0};

  std::vector<Cell> chain;
  while (c != goal) {
    Cell best = c;
    for (const auto& dir : kDirs) {
      if (!can_move(world, c, dir[0], dir[1])) continue;
      const Cell n{c.col + dir[0], c.row + dir[1]};
      if (value(n) < value(best)) best = n;
    }
    if (best == c) break;
    chain.push_back(best);
    c = best;
  }
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const Vec2 target = world.center_of(*it);
    if (world.segment_free(s, target)) return clip(target - s, world.max_speed());
  }
  return {0.0, 0.0};
}

std::vector<Vec2> execute_plan(const MazeWorld& world, const BfsOracle& oracle, Vec2 x0,
                               std::span<const Vec2> waypoints, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  std::vector<Vec2> trajectory{x0};
  if (waypoints.size() > 1) trajectory.reserve((waypoints.size() - 1) * static_cast<std::size_t>(k) + 1);
  Vec2 x = x0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    for (int j = 0; j < k; ++j) {
      x = step(world, x, greedy_controller(world, oracle, x, waypoints[i]));
      trajectory.push_back(x);
    }
  }
  return trajectory;
}

std::vector<Vec2> subsample_signal(std::span<const Vec2> trajectory, int k) {
  if (trajectory.empty()) throw std::invalid_argument("trajectory is empty");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::size_t T = trajectory.size() - 1;
  const std::size_t uk = static_cast<std::size_t>(k);
  const std::size_t n = (T + uk - 1) / uk;
  std::vector<Vec2> signal;
  signal.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) signal.push_back(trajectory[std::min(i * uk, T)]);
  return signal;
}

}  // namespace grasp
