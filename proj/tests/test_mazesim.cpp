#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "grasp/mazesim.hpp"

using namespace grasp;
using doctest::Approx;

namespace {

MazeWorld open_room(int n = 10) {
  std::string text;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) text += (r == 0 || c == 0 || r == n - 1 || c == n - 1) ? '#' : '.';
    text += '\n';
  }
  return MazeWorld::parse(text);
}

// 5x5 interior with an L-shaped wall.
const char* kLMaze =
    "#######\n"
    "#.....#\n"
    "#.###.#\n"
    "#...#.#\n"
    "#...#.#\n"
    "#.....#\n"
    "#######\n";

// Shortest 8-connected path by exhaustive enumeration of simple paths.
double enumerate_shortest(const std::vector<std::string>& rows, int c0, int r0, int c1, int r1) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows[0].size());
  auto wall = [&](int c, int r) { return c < 0 || r < 0 || c >= w || r >= h || rows[r][c] == '#'; };
  std::vector<std::vector<bool>> on_path(h, std::vector<bool>(w, false));
  double best = INFINITY;
  std::function<void(int, int, double)> dfs = [&](int c, int r, double len) {
    if (len >= best) return;
    if (c == c1 && r == r1) {
      best = len;
      return;
    }
    for (int dc = -1; dc <= 1; ++dc) {
      for (int dr = -1; dr <= 1; ++dr) {
        if (dc == 0 && dr == 0) continue;
        const int nc = c + dc, nr = r + dr;
        if (wall(nc, nr) || on_path[nr][nc]) continue;
        if (dc != 0 && dr != 0 && (wall(c + dc, r) || wall(c, r + dr))) continue;
        on_path[nr][nc] = true;
        dfs(nc, nr, len + ((dc != 0 && dr != 0) ? std::sqrt(2.0) : 1.0));
        on_path[nr][nc] = false;
      }
    }
  };
  on_path[r0][c0] = true;
  dfs(c0, r0, 0.0);
  return best;
}

std::vector<Vec2> direct_subsample(const std::vector<Vec2>& x, int k) {
  const int T = static_cast<int>(x.size()) - 1;
  const int n = (T + k - 1) / k;
  std::vector<Vec2> s;
  for (int i = 0; i <= n; ++i) s.push_back(i * k <= T ? x[i * k] : x[T]);
  return s;
}

}  // namespace

TEST_CASE("maze parsing and validation") {
  const auto desk = MazeWorld::desk();
  CHECK(desk.width() == 20);
  CHECK(desk.height() == 20);
  CHECK(desk.free_cells().size() == 275);
  CHECK(MazeWorld::parse(desk.to_text()).to_text() == desk.to_text());
  CHECK_THROWS(MazeWorld::parse("###\n#.#\n#..\n###\n"));        // open border
  CHECK_THROWS(MazeWorld::parse("#####\n#.#.#\n#####\n"));       // disconnected
  CHECK_THROWS(MazeWorld::parse("####\n#x.#\n####\n"));          // bad character
  CHECK_THROWS(MazeWorld::parse("####\n#..#\n###\n"));           // ragged
  CHECK(desk.cell_of({3.2, 7.9}) == Cell{3, 7});
  CHECK(desk.center_of({3, 7}) == Vec2{3.5, 7.5});
}

TEST_CASE("segment checks") {
  const auto w = MazeWorld::parse(kLMaze);
  CHECK(w.segment_free({1.5, 1.5}, {5.5, 1.5}));
  CHECK_FALSE(w.segment_free({1.5, 1.5}, {3.5, 3.5}));  // crosses the wall row
  CHECK_FALSE(w.segment_free({1.5, 2.5}, {2.5, 2.5}));
  // Passing exactly through a corner next to a wall cell is blocked.
  CHECK_FALSE(w.segment_free({1.5, 3.5}, {2.5, 2.5}));
  CHECK(w.segment_free({1.5, 3.5}, {1.5, 3.5}));
}

TEST_CASE("step dynamics") {
  const auto w = MazeWorld::parse(kLMaze);
  const Vec2 s{1.5, 1.5};
  CHECK(step(w, s, {0.0, 0.0}) == s);
  const Vec2 moved = step(w, s, {0.3, 0.4});
  CHECK(moved.x == Approx(1.8));
  CHECK(moved.y == Approx(1.9));
  // Clipped to max_speed.
  CHECK(norm(step(w, s, {3.0, 0.0}) - s) == Approx(0.5));
  // Moving down-right from (2.5,1.8): y-motion would enter the wall at row 2.
  const Vec2 slide = step(w, {2.5, 1.8}, {0.3, 0.4});
  CHECK(slide.x == Approx(2.8));
  CHECK(slide.y == Approx(1.8));
}

TEST_CASE("property: step never enters a wall") {
  const auto w = MazeWorld::desk();
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> cell(0, w.free_cells().size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> act(-1.2, 1.2);
  Vec2 x = w.center_of(w.free_cells()[0]);
  long violations = 0;
  for (int i = 0; i < 1000000; ++i) {
    if (i % 1000 == 0) {
      const Cell c = w.free_cells()[cell(rng)];
      x = {c.col + unit(rng), c.row + unit(rng)};
    }
    const Vec2 next = step(w, x, {act(rng), act(rng)});
    if (!w.is_free(next) || norm(next - x) > w.max_speed() + 1e-12) ++violations;
    x = next;
  }
  CHECK(violations == 0);
}

TEST_CASE("oracle distances") {
  const auto open = open_room(6);
  BfsOracle unit_speed(open, 1.0);
  CHECK(unit_speed.distance({1.5, 1.5}, {1.5, 1.5}) == 0.0);
  CHECK(unit_speed.distance({1.5, 1.5}, {2.5, 1.5}) == Approx(1.0));
  CHECK(unit_speed.distance({1.5, 1.5}, {2.5, 2.5}) == Approx(std::sqrt(2.0)));
  CHECK(unit_speed.distance({0.5, 0.5}, {2.5, 2.5}) == kUnreachable);
  BfsOracle slow(open);
  CHECK(slow.distance({1.5, 1.5}, {2.5, 1.5}) == Approx(2.0));

  const auto w = MazeWorld::parse(kLMaze);
  std::vector<std::string> rows;
  std::istringstream in(kLMaze);
  for (std::string line; std::getline(in, line);) rows.push_back(line);
  BfsOracle oracle(w, 1.0);
  for (const Cell& a : w.free_cells()) {
    for (const Cell& b : w.free_cells()) {
      const double brute = enumerate_shortest(rows, a.col, a.row, b.col, b.row);
      CHECK(oracle.distance(w.center_of(a), w.center_of(b)) == Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("greedy controller") {
  const auto w = MazeWorld::parse(kLMaze);
  BfsOracle oracle(w);
  const Vec2 s{1.5, 1.5};
  CHECK(greedy_controller(w, oracle, s, s) == Vec2{0.0, 0.0});
  const Vec2 g{1.8, 1.9};
  CHECK(norm(step(w, s, greedy_controller(w, oracle, s, g)) - g) <= 1e-12);

  // Around the L: each step lowers the field value or stays in a cell whose
  // centre is on the descent chain, and the goal is reached.
  const Vec2 start{3.5, 3.5};
  const Vec2 goal{5.5, 4.5};
  REQUIRE_FALSE(w.segment_free(start, goal));
  const auto field = oracle.field(w.cell_of(goal));
  Vec2 x = start;
  double prev = (*field)[w.index(w.cell_of(x))];
  const Vec2 first = step(w, x, greedy_controller(w, oracle, x, goal));
  CHECK(norm(first - x) == Approx(w.max_speed()));
  int steps = 0;
  while (norm(x - goal) > 1e-9 && steps < 100) {
    x = step(w, x, greedy_controller(w, oracle, x, goal));
    const double now = (*field)[w.index(w.cell_of(x))];
    CHECK(now <= prev + 1e-12);
    prev = now;
    ++steps;
  }
  CHECK(norm(x - goal) <= 1e-9);
  CHECK(steps <= static_cast<int>(std::ceil(oracle.distance(start, goal))) + 2);
}

TEST_CASE("execute_plan") {
  const auto w = open_room(10);
  BfsOracle oracle(w);
  const Vec2 x0{2.5, 2.5};
  const std::vector<Vec2> hold{x0, x0};
  const auto still = execute_plan(w, oracle, x0, hold, 5);
  REQUIRE(still.size() == 6);
  for (const Vec2& s : still) CHECK(s == x0);

  const std::vector<Vec2> wps{x0, {5.0, 4.0}, {7.5, 7.5}};
  const auto traj = execute_plan(w, oracle, x0, wps, 10);
  REQUIRE(traj.size() == 21);
  CHECK(norm(traj[10] - wps[1]) <= 1e-6);
  CHECK(norm(traj[20] - wps[2]) <= 1e-6);
  const auto signal = subsample_signal(traj, 10);
  REQUIRE(signal.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(norm(signal[i] - wps[i]) <= 1e-6);
}

TEST_CASE("subsample_signal") {
  std::vector<Vec2> x;
  for (int i = 0; i <= 10; ++i) x.push_back({static_cast<double>(i), 0.0});
  auto s = subsample_signal(x, 5);
  REQUIRE(s.size() == 3);
  CHECK(s[1].x == 5.0);
  CHECK(s[2].x == 10.0);

  x.resize(8);  // T = 7
  s = subsample_signal(x, 3);
  REQUIRE(s.size() == 4);
  CHECK(s[0].x == 0.0);
  CHECK(s[1].x == 3.0);
  CHECK(s[2].x == 6.0);
  CHECK(s[3].x == 7.0);
  CHECK(subsample_signal(x, 1) == x);
  CHECK_THROWS(subsample_signal(std::vector<Vec2>{}, 2));

  for (int T = 0; T <= 50; ++T) {
    std::vector<Vec2> traj;
    for (int i = 0; i <= T; ++i) traj.push_back({static_cast<double>(i), -1.0 * i});
    for (int k = 1; k <= 10; ++k) {
      const auto got = subsample_signal(traj, k);
      CHECK(got.size() == static_cast<std::size_t>((T + k - 1) / k + 1));
      CHECK(got == direct_subsample(traj, k));
    }
  }
}

TEST_CASE("dataset generation") {
  const auto w = MazeWorld::desk();
  const auto tiny = generate_dataset(w, {1, 5, 3});
  REQUIRE(tiny.trajectories.size() == 1);
  REQUIRE(tiny.trajectories[0].size() == 5);
  for (std::size_t t = 1; t < 5; ++t) CHECK(tiny.trajectories[0][t].x == tiny.trajectories[0][t - 1].next);
  CHECK_THROWS(generate_dataset(w, {0, 5, 3}));

  const auto data = generate_dataset(w, DatasetConfig{});
  CHECK(data.transition_count() == 100000);
  for (const Vec2& s : data.states()) {
    if (!w.is_free(s)) FAIL("state in wall");
  }
  const double cov = coverage(w, data);
  MESSAGE("desk coverage " << cov);
  CHECK(cov >= 0.95);

  const auto again = generate_dataset(w, DatasetConfig{});
  CHECK(again.states() == data.states());

  std::stringstream buf;
  save_dataset(tiny, buf);
  const auto loaded = load_dataset(buf);
  REQUIRE(loaded.trajectories.size() == 1);
  CHECK(loaded.states() == tiny.states());
  std::stringstream broken("{\"traj\":0,\"t\":1,\"x\":[1,1],\"a\":[0,0],\"next\":[1,1]}\n");
  CHECK_THROWS(load_dataset(broken));
}
