#include <doctest.h>

#include <set>

#include "grasp/bench.hpp"
#include "oracles.hpp"

using namespace grasp;
using namespace grasp::bench;
using doctest::Approx;

namespace {

struct Desk {
  MazeWorld world = MazeWorld::desk();
  BfsOracle oracle{world};
  ReachGraph graph;

  Desk() {
    const auto data = generate_dataset(world, DatasetConfig{});
    graph = build_graph(data.states(), oracle, GraphConfig{});
  }
};

const Desk& desk() {
  static const Desk d;
  return d;
}

bool same(const stl::FormulaPtr& f, const std::string& text) { return stl::equal(*f, *stl::parse_formula(text)); }

const std::vector<std::string> kMu{"mu1", "mu2", "mu3", "mu4"};

TaskRecord record(int id, bool plan_ok, bool exec_ok, double pt) {
  TaskRecord r;
  r.task.template_id = id;
  r.plan_ok = plan_ok;
  r.exec_ok = exec_ok;
  r.plan_time_s = pt;
  return r;
}

}  // namespace

TEST_CASE("template ids and groups") {
  CHECK(parse_template_id("T1") == 1);
  CHECK(parse_template_id("T12") == 12);
  CHECK_THROWS_AS(parse_template_id("T13"), std::invalid_argument);
  CHECK_THROWS_AS(parse_template_id("T0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_template_id("x1"), std::invalid_argument);
  CHECK(template_group(3) == "Basic");
  CHECK(template_group(4) == "Intermediate");
  CHECK(template_group(7) == "Intermediate");
  CHECK(template_group(8) == "Advanced");
  CHECK(template_group(12) == "Advanced");
  for (int id = 1; id <= kTemplateCount; ++id) CHECK(parse_template_id(template_name(id)) == id);
}

TEST_CASE("template formulas") {
  const std::vector<int> t{3, 7, 11, 15};
  CHECK(same(build_template(1, kMu, t), "F[0,3] mu1 & F[3,7] mu2"));
  CHECK(same(build_template(2, kMu, t), "F[0,3] mu1 | F[0,3] mu2"));
  CHECK(same(build_template(3, kMu, t), "F[0,3] mu1 & F[0,3] mu2 & F[0,3] mu3"));
  CHECK(same(build_template(4, kMu, t), "F[0,3] mu1 & F[3,7] mu2 & F[7,11] mu3"));
  CHECK(same(build_template(5, kMu, t), "F[0,3] mu1 & F[3,7] mu2 & F[7,11] mu3 & G[0,11] (!mu4)"));
  CHECK(same(build_template(6, kMu, t), "F[0,3] mu1 & F[3,7] mu2 & F[7,11] mu3 & F[11,15] mu4"));
  CHECK(same(build_template(7, kMu, t), "F[0,3] mu1 & F[0,3] mu2 & F[0,3] mu3 & F[0,3] mu4"));
  CHECK(same(build_template(8, kMu, t), "F[0,3] mu1 & G[3,11] mu1"));
  CHECK(same(build_template(9, kMu, t), "G[3,7] mu1 & G[11,15] mu2"));
  CHECK(same(build_template(10, kMu, t), "(F[0,3] mu1 & F[3,7] mu2) | F[0,7] mu3"));
  CHECK(same(build_template(11, kMu, t),
             "(F[0,3] mu1 & F[0,3] mu2) | (F[0,3] mu1 & F[0,3] mu3) | (F[0,3] mu2 & F[0,3] mu3)"));
  CHECK(same(build_template(12, kMu, {4, 3, 6}), "G[0,4] (F[0,3] mu1 & F[3,6] mu2)"));
  CHECK(stl::horizon(*build_template(12, kMu, {4, 3, 6})) == 10);
  CHECK_THROWS_AS(build_template(4, {"mu1", "mu2"}, t), std::invalid_argument);
  CHECK_THROWS_AS(build_template(6, kMu, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("instantiated tasks respect region and bound invariants") {
  const auto& d = desk();
  const TaskConfig config;
  for (int id = 1; id <= kTemplateCount; ++id) {
    for (int i = 0; i < 20; ++i) {
      const auto task = instantiate_template(id, d.world, d.graph, config, task_seed(7, id, i, 0));
      CAPTURE(id);
      CAPTURE(i);
      REQUIRE(static_cast<int>(task.predicates.size()) == region_count(id));
      REQUIRE(static_cast<int>(task.time_bounds.size()) == bound_count(id));
      CHECK(stl::horizon(*task.formula) <= config.max_horizon);
      CHECK(task.time_bounds.front() >= 1);
      for (std::size_t b = 1; b < task.time_bounds.size(); ++b) {
        if (id == 12 && b == 1) continue;  // the G window is drawn independently of t2
        CHECK(task.time_bounds[b] > task.time_bounds[b - 1]);
      }
      if (id == 12) CHECK(task.time_bounds[2] > task.time_bounds[1]);

      CHECK(d.world.is_free(task.x0));
      std::set<std::string> ids;
      for (std::size_t a = 0; a < task.predicates.size(); ++a) {
        const auto& p = task.predicates[a];
        ids.insert(p.id);
        CHECK(p.radius >= config.radius_min);
        CHECK(p.radius <= config.radius_max);
        CHECK(distance(p.center, task.x0) > p.radius);
        // Disk inside free space: sample its boundary and interior.
        for (int s = 0; s < 32; ++s) {
          const double ang = 2.0 * M_PI * s / 32.0;
          for (double f : {0.5, 0.999}) {
            CHECK(d.world.is_free({p.center.x + f * p.radius * std::cos(ang), p.center.y + f * p.radius * std::sin(ang)}));
          }
        }
        bool holds_node = false;
        for (Vec2 v : d.graph.nodes) holds_node = holds_node || distance(v, p.center) < p.radius;
        CHECK(holds_node);
        for (std::size_t b = a + 1; b < task.predicates.size(); ++b) {
          CHECK(distance(p.center, task.predicates[b].center) >= p.radius + task.predicates[b].radius);
        }
      }
      CHECK(ids.size() == task.predicates.size());
    }
  }
}

TEST_CASE("instantiation is deterministic per seed") {
  const auto& d = desk();
  for (int id : {1, 9, 12}) {
    const auto a = instantiate_template(id, d.world, d.graph, TaskConfig{}, 42);
    const auto b = instantiate_template(id, d.world, d.graph, TaskConfig{}, 42);
    CHECK(stl::equal(*a.formula, *b.formula));
    CHECK(a.x0.x == b.x0.x);
    CHECK(a.x0.y == b.x0.y);
    CHECK(a.time_bounds == b.time_bounds);
  }
}

TEST_CASE("tight horizon limit raises a sampling error") {
  const auto& d = desk();
  TaskConfig config;
  config.max_horizon = 1;
  CHECK_THROWS_AS(instantiate_template(6, d.world, d.graph, config, 1), SamplingError);
  config = TaskConfig{};
  config.radius_min = config.radius_max = 30.0;  // no disk this large fits
  config.max_rejections = 50;
  CHECK_THROWS_AS(instantiate_template(1, d.world, d.graph, config, 1), SamplingError);
}

TEST_CASE("aggregate arithmetic") {
  std::vector<TaskRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(record(2, i < 9, i < 8, i < 9 ? 1.0 + i : 100.0));
  const auto rep = aggregate(rs);
  REQUIRE(rep.templates.size() == 1);
  const auto& row = rep.templates[0];
  CHECK(row.name == "T2");
  CHECK(row.psr == Approx(90.0));
  CHECK(row.esr == Approx(80.0));
  CHECK(row.pt_mean == Approx(5.0));  // mean of 1..9; the unplanned 100 s is ignored
  CHECK(row.pt_std == Approx(std::sqrt(60.0 / 9.0)));
  REQUIRE(rep.groups.size() == 1);
  CHECK(rep.groups[0].name == "Basic Subtotal");
  CHECK(rep.overall.tasks == 10);

  const auto single = aggregate({record(5, true, true, 3.0)});
  CHECK(single.overall.pt_std == 0.0);
  CHECK(single.overall.pt_mean == Approx(3.0));
  CHECK(single.groups[0].name == "Intermediate Subtotal");
  CHECK_THROWS(aggregate({}));

  const auto none = aggregate({record(9, false, false, 2.0)});
  CHECK(none.overall.psr == 0.0);
  CHECK(none.overall.pt_mean == 0.0);
}

TEST_CASE("report layout") {
  const auto rep = aggregate({record(1, true, true, 0.5), record(4, true, false, 0.25), record(12, false, false, 1)});
  const auto text = render_report(rep);
  for (const char* s : {"PSR", "ESR", "PT", "Basic", "Intermediate", "Advanced", "Overall", "T12"}) {
    CHECK(text.find(s) != std::string::npos);
  }
  const auto csv = render_report_csv(rep);
  CHECK(csv.rfind("name,tasks,planned,executed,psr,esr,pt_mean_s,pt_std_s\n", 0) == 0);
  CHECK(csv.find("Overall,3,2,1,66.67,33.33,") != std::string::npos);
  const auto rows = render_records_csv({record(3, false, false, 0.0)});
  CHECK(rows == "template,seed,plan_ok,exec_ok,pt_s,expanded,pruned_upper,pruned_dominance,robustness\n"
                "T3,0,0,0,0.000000,0,0,0,\n");
}

TEST_CASE("infeasible and trivial tasks") {
  const auto& d = desk();
  const PlannerConfig planner;

  SUBCASE("region unreachable in the window") {
    TaskSpec task;
    task.template_id = 2;
    const Vec2 far = d.graph.nodes[static_cast<std::size_t>(nearest_node(d.graph, {17.5, 17.5}))];
    task.predicates = {{"mu1", far, 0.9}, {"mu2", far, 0.9}};
    task.x0 = {1.5, 1.5};
    task.formula = build_template(2, kMu, {1});
    const auto r = run_task(task, d.graph, d.world, d.oracle, planner, 10);
    CHECK_FALSE(r.plan_ok);
    CHECK_FALSE(r.exec_ok);
    CHECK_FALSE(r.executed_robustness.has_value());
  }
  SUBCASE("x0 already inside the region") {
    TaskSpec task;
    task.template_id = 2;
    const Vec2 v = d.graph.nodes[0];
    task.x0 = v;
    task.predicates = {{"mu1", v, 1.5}, {"mu2", {v.x + 50, v.y}, 0.5}};
    task.formula = build_template(2, kMu, {2});
    const auto r = run_task(task, d.graph, d.world, d.oracle, planner, 10);
    CHECK(r.plan_ok);
    CHECK(r.exec_ok);
    CHECK(*r.executed_robustness > 0.0);
    CHECK(r.plan_time_s < 0.5);
  }
}

TEST_CASE("bench config validation") {
  BenchConfig c;
  CHECK_NOTHROW(c.validate());
  c.templates = {13};
  CHECK_THROWS(c.validate());
  c = BenchConfig{};
  c.configs_per_template = 0;
  CHECK_THROWS(c.validate());
  c = BenchConfig{};
  c.workers = 0;
  CHECK_THROWS(c.validate());
  c = BenchConfig{};
  c.task.bounds[8].pop_back();
  CHECK_THROWS(c.validate());
}

TEST_CASE("small bench is deterministic and ESR never exceeds PSR") {
  const auto& d = desk();
  BenchConfig c;
  c.configs_per_template = 5;
  c.seed = 3;
  const auto a = run_bench(c, d.world, d.graph, d.oracle);
  c.workers = 2;
  const auto b = run_bench(c, d.world, d.graph, d.oracle);
  REQUIRE(a.size() == 60);
  REQUIRE(b.size() == 60);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].task.seed == b[i].task.seed);
    CHECK(a[i].plan_ok == b[i].plan_ok);
    CHECK(a[i].exec_ok == b[i].exec_ok);
    CHECK(a[i].plan_stats.expanded == b[i].plan_stats.expanded);
    CHECK(a[i].executed_robustness == b[i].executed_robustness);
    if (a[i].exec_ok) CHECK(a[i].plan_ok);
  }
  // Everything but wall-clock time must match byte for byte.
  auto masked = [](std::vector<TaskRecord> rs) {
    for (auto& r : rs) r.plan_time_s = r.plan_stats.elapsed_s = 0.0;
    return render_report(aggregate(rs)) + render_records_csv(rs);
  };
  CHECK(masked(a) == masked(b));
  for (const auto& row : aggregate(a).templates) CHECK(row.esr <= row.psr);

  c.templates = {2};
  c.workers = 1;
  const auto only = run_bench(c, d.world, d.graph, d.oracle);
  CHECK(only.size() == 5);
  for (const auto& r : only) CHECK(r.task.template_id == 2);
}
