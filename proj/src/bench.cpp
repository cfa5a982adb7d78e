#include "grasp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace grasp::bench {

namespace {

using stl::FormulaPtr;

constexpr const char* kGroups[] = {"Basic", "Intermediate", "Advanced"};

void check_id(int id) {
  if (id < 1 || id > kTemplateCount) throw std::invalid_argument("template id out of range: " + std::to_string(id));
}

FormulaPtr F(int a, int b, const std::string& mu) { return stl::make_eventually(a, b, stl::make_predicate(mu)); }
FormulaPtr G(int a, int b, FormulaPtr child) { return stl::make_always(a, b, std::move(child)); }
FormulaPtr G(int a, int b, const std::string& mu) { return G(a, b, stl::make_predicate(mu)); }
FormulaPtr And(std::vector<FormulaPtr> xs) { return stl::make_and(std::move(xs)); }
FormulaPtr Or(std::vector<FormulaPtr> xs) { return stl::make_or(std::move(xs)); }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Smallest distance from p to the closed square of cell c.
double distance_to_cell(const MazeWorld& world, Vec2 p, Cell c) {
  const double cs = world.cell_size();
  const double dx = std::max({c.col * cs - p.x, 0.0, p.x - (c.col + 1) * cs});
  const double dy = std::max({c.row * cs - p.y, 0.0, p.y - (c.row + 1) * cs});
  return std::hypot(dx, dy);
}

bool disk_in_free_space(const MazeWorld& world, Vec2 center, double r) {
  const Cell lo = world.cell_of({center.x - r, center.y - r});
  const Cell hi = world.cell_of({center.x + r, center.y + r});
  for (int row = lo.row; row <= hi.row; ++row) {
    for (int col = lo.col; col <= hi.col; ++col) {
      const Cell c{col, row};
      if (world.wall(c) && distance_to_cell(world, center, c) < r) return false;
    }
  }
  return true;
}

Vec2 uniform_free(const MazeWorld& world, std::mt19937_64& rng) {
  const auto& cells = world.free_cells();
  const Cell c = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {(c.col + u(rng)) * world.cell_size(), (c.row + u(rng)) * world.cell_size()};
}

MetricRow summarize(std::string name, const std::vector<const TaskRecord*>& records) {
  MetricRow row;
  row.name = std::move(name);
  row.tasks = records.size();
  std::vector<double> times;
  for (const TaskRecord* r : records) {
    if (r->plan_ok) {
      ++row.planned;
      times.push_back(r->plan_time_s);
    }
    if (r->exec_ok) ++row.executed;
  }
  if (row.tasks > 0) {
    row.psr = 100.0 * static_cast<double>(row.planned) / static_cast<double>(row.tasks);
    row.esr = 100.0 * static_cast<double>(row.executed) / static_cast<double>(row.tasks);
  }
  if (!times.empty()) {
    double sum = 0.0;
    for (double t : times) sum += t;
    row.pt_mean = sum / static_cast<double>(times.size());
    double var = 0.0;
    for (double t : times) var += (t - row.pt_mean) * (t - row.pt_mean);
    row.pt_std = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size())) : 0.0;
  }
  return row;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

int parse_template_id(const std::string& name) {
  if (name.size() >= 2 && (name[0] == 'T' || name[0] == 't')) {
    const std::string digits = name.substr(1);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        digits.size() <= 2) {
      const int id = std::stoi(digits);
      if (id >= 1 && id <= kTemplateCount) return id;
    }
  }
  throw std::invalid_argument("unknown template: " + name);
}

std::string template_name(int id) {
  check_id(id);
  return "T" + std::to_string(id);
}

std::string template_group(int id) {
  check_id(id);
  return kGroups[id <= 3 ? 0 : (id <= 7 ? 1 : 2)];
}

int region_count(int id) {
  static constexpr int counts[] = {2, 2, 3, 3, 4, 4, 4, 1, 2, 3, 3, 2};
  check_id(id);
  return counts[id - 1];
}

int bound_count(int id) {
  // T8 uses t1 and t3; t2 is drawn to keep the ordering t1 < t2 < t3.
  static constexpr int counts[] = {2, 1, 1, 3, 3, 4, 1, 3, 4, 2, 1, 3};
  check_id(id);
  return counts[id - 1];
}

FormulaPtr build_template(int id, const std::vector<std::string>& mu, const std::vector<int>& t) {
  check_id(id);
  if (static_cast<int>(mu.size()) < region_count(id)) throw std::invalid_argument("too few predicates for template");
  if (static_cast<int>(t.size()) < bound_count(id)) throw std::invalid_argument("too few time bounds for template");
  switch (id) {
    case 1: return And({F(0, t[0], mu[0]), F(t[0], t[1], mu[1])});
    case 2: return Or({F(0, t[0], mu[0]), F(0, t[0], mu[1])});
    case 3: return And({F(0, t[0], mu[0]), F(0, t[0], mu[1]), F(0, t[0], mu[2])});
    case 4: return And({F(0, t[0], mu[0]), F(t[0], t[1], mu[1]), F(t[1], t[2], mu[2])});
    case 5:
      return And({F(0, t[0], mu[0]), F(t[0], t[1], mu[1]), F(t[1], t[2], mu[2]),
                  G(0, t[2], stl::make_not(stl::make_predicate(mu[3])))});
    case 6: return And({F(0, t[0], mu[0]), F(t[0], t[1], mu[1]), F(t[1], t[2], mu[2]), F(t[2], t[3], mu[3])});
    case 7: return And({F(0, t[0], mu[0]), F(0, t[0], mu[1]), F(0, t[0], mu[2]), F(0, t[0], mu[3])});
    case 8: return And({F(0, t[0], mu[0]), G(t[0], t[2], mu[0])});
    case 9: return And({G(t[0], t[1], mu[0]), G(t[2], t[3], mu[1])});
    case 10: return Or({And({F(0, t[0], mu[0]), F(t[0], t[1], mu[1])}), F(0, t[1], mu[2])});
    case 11:
      return Or({And({F(0, t[0], mu[0]), F(0, t[0], mu[1])}), And({F(0, t[0], mu[0]), F(0, t[0], mu[2])}),
                 And({F(0, t[0], mu[1]), F(0, t[0], mu[2])})});
    case 12: return G(0, t[0], And({F(0, t[1], mu[0]), F(t[1], t[2], mu[1])}));
  }
  throw std::invalid_argument("template id out of range");
}

std::vector<std::vector<BoundRule>> TaskConfig::default_bounds() {
  const BoundRule hop{1.0, 1.5};
  return {
      {hop, hop},                                      // T1
      {hop},                                           // T2
      {{2.0, 3.0}},                                    // T3
      {hop, hop, hop},                                 // T4
      {hop, hop, hop},                                 // T5
      {hop, hop, hop, hop},                            // T6
      {{3.0, 4.0}},                                    // T7
      {hop, {0.25, 0.5}, {0.25, 0.5}},                 // T8
      {hop, {0.25, 0.5}, {0.4, 0.6}, {0.25, 0.5}},     // T9
      {hop, hop},                                      // T10
      {{2.0, 3.0}},                                    // T11
      {{0.875, 1.125}, {0.75, 1.0, true}, {1.0, 1.25}},  // T12: t1 is the G window, unordered against t2
  };
}

void TaskConfig::validate() const {
  if (!(radius_min > 0.0) || !(radius_max >= radius_min)) throw std::invalid_argument("need 0 < radius_min <= radius_max");
  if (max_rejections < 1) throw std::invalid_argument("max_rejections must be at least 1");
  if (max_horizon < 1) throw std::invalid_argument("max_horizon must be at least 1");
  if (bounds.size() != static_cast<std::size_t>(kTemplateCount)) throw std::invalid_argument("need bound rules for 12 templates");
  for (int id = 1; id <= kTemplateCount; ++id) {
    const auto& rules = bounds[static_cast<std::size_t>(id - 1)];
    if (static_cast<int>(rules.size()) != bound_count(id)) {
      throw std::invalid_argument("wrong number of bound rules for " + template_name(id));
    }
    for (const auto& r : rules) {
      if (!(r.lo >= 0.0) || !(r.hi >= r.lo)) throw std::invalid_argument("bad bound rule for " + template_name(id));
    }
  }
}

TaskSpec instantiate_template(int id, const MazeWorld& world, const ReachGraph& graph, const TaskConfig& config,
                              std::uint64_t seed) {
  check_id(id);
  config.validate();
  if (graph.nodes.empty()) throw std::invalid_argument("instantiate_template: empty graph");
  const int diameter = std::max(1, hop_diameter(graph));
  std::mt19937_64 rng(seed);
  TaskSpec task;
  task.template_id = id;
  task.seed = seed;

  int prev = 0;
  for (const BoundRule& rule : config.bounds[static_cast<std::size_t>(id - 1)]) {
    const int lo = std::max(1, static_cast<int>(std::lround(rule.lo * diameter)));
    const int hi = std::max(lo, static_cast<int>(std::lround(rule.hi * diameter)));
    if (rule.restart) prev = 0;
    prev += std::uniform_int_distribution<int>(lo, hi)(rng);
    task.time_bounds.push_back(prev);
  }

  std::uniform_real_distribution<double> radius(config.radius_min, config.radius_max);
  int rejections = 0;
  auto reject = [&] {
    if (++rejections > config.max_rejections) throw SamplingError("rejection budget exhausted for " + template_name(id));
  };
  const int n = region_count(id);
  while (static_cast<int>(task.predicates.size()) < n) {
    const Vec2 c = uniform_free(world, rng);
    const double r = radius(rng);
    bool ok = disk_in_free_space(world, c, r);
    for (const auto& p : task.predicates) ok = ok && distance(p.center, c) >= p.radius + r;
    ok = ok && std::any_of(graph.nodes.begin(), graph.nodes.end(), [&](Vec2 v) { return distance(v, c) < r; });
    if (!ok) {
      reject();
      continue;
    }
    task.predicates.push_back({"mu" + std::to_string(task.predicates.size() + 1), c, r});
  }
  for (;;) {
    const Vec2 x = uniform_free(world, rng);
    if (std::none_of(task.predicates.begin(), task.predicates.end(),
                     [&](const PredicateDef& p) { return distance(p.center, x) <= p.radius; })) {
      task.x0 = x;
      break;
    }
    reject();
  }

  std::vector<std::string> ids;
  for (const auto& p : task.predicates) ids.push_back(p.id);
  task.formula = build_template(id, ids, task.time_bounds);
  if (stl::horizon(*task.formula) > config.max_horizon) {
    throw SamplingError(template_name(id) + " horizon exceeds the configured maximum");
  }
  return task;
}

TaskRecord run_task(const TaskSpec& task, const ReachGraph& graph, const MazeWorld& world, const BfsOracle& oracle,
                    const PlannerConfig& planner, int k) {
  TaskRecord record;
  record.task = task;
  const PredicateTable preds = task.table();
  const PlanResult plan = stl_graph_search(task.x0, graph, task.formula, preds, planner);
  record.plan_stats = plan.stats;
  record.plan_time_s = plan.stats.elapsed_s;
  record.plan_ok = plan.success;
  if (!plan.success) return record;
  const auto trajectory = execute_plan(world, oracle, task.x0, plan.waypoints, k);
  const auto signal = subsample_signal(trajectory, k);
  const double rho = agm_robustness(*task.formula, preds, signal);
  record.executed_robustness = rho;
  record.exec_ok = rho > 0.0;
  return record;
}

Report aggregate(const std::vector<TaskRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  Report report;
  std::vector<const TaskRecord*> all;
  for (const auto& r : records) all.push_back(&r);
  for (int id = 1; id <= kTemplateCount; ++id) {
    std::vector<const TaskRecord*> mine;
    for (const auto* r : all) {
      if (r->task.template_id == id) mine.push_back(r);
    }
    if (!mine.empty()) report.templates.push_back(summarize(template_name(id), mine));
  }
  for (const char* group : kGroups) {
    std::vector<const TaskRecord*> mine;
    for (const auto* r : all) {
      if (template_group(r->task.template_id) == group) mine.push_back(r);
    }
    if (!mine.empty()) report.groups.push_back(summarize(std::string(group) + " Subtotal", mine));
  }
  report.overall = summarize("Overall", all);
  return report;
}

std::string render_report(const Report& report) {
  std::ostringstream out;
  auto line = [&](const MetricRow& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %5zu %9.2f %9.2f %10.4f +- %.4f\n", r.name.c_str(), r.tasks, r.psr, r.esr,
                  r.pt_mean, r.pt_std);
    out << buf;
  };
  char header[160];
  std::snprintf(header, sizeof header, "%-24s %5s %9s %9s %10s\n", "Template", "N", "PSR(%)", "ESR(%)", "PT(s)");
  out << header;
  for (const char* group : kGroups) {
    bool any = false;
    for (const auto& r : report.templates) {
      if (template_group(parse_template_id(r.name)) != group) continue;
      if (!any) out << group << '\n';
      any = true;
      line(r);
    }
    for (const auto& g : report.groups) {
      if (g.name == std::string(group) + " Subtotal") line(g);
    }
  }
  line(report.overall);
  return out.str();
}

std::string render_report_csv(const Report& report) {
  std::ostringstream out;
  out << "name,tasks,planned,executed,psr,esr,pt_mean_s,pt_std_s\n";
  auto row = [&](const MetricRow& r) {
    out << r.name << ',' << r.tasks << ',' << r.planned << ',' << r.executed << ',' << fmt("%.2f", r.psr) << ','
        << fmt("%.2f", r.esr) << ',' << fmt("%.6f", r.pt_mean) << ',' << fmt("%.6f", r.pt_std) << '\n';
  };
  for (const auto& r : report.templates) row(r);
  for (const auto& r : report.groups) row(r);
  row(report.overall);
  return out.str();
}

std::string render_records_csv(const std::vector<TaskRecord>& records) {
  std::ostringstream out;
  out << "template,seed,plan_ok,exec_ok,pt_s,expanded,pruned_upper,pruned_dominance,robustness\n";
  for (const auto& r : records) {
    out << template_name(r.task.template_id) << ',' << r.task.seed << ',' << (r.plan_ok ? 1 : 0) << ','
        << (r.exec_ok ? 1 : 0) << ',' << fmt("%.6f", r.plan_time_s) << ',' << r.plan_stats.expanded << ','
        << r.plan_stats.pruned_upper << ',' << r.plan_stats.pruned_dominance << ',';
    if (r.executed_robustness) out << fmt("%.9g", *r.executed_robustness);
    out << '\n';
  }
  return out.str();
}

void BenchConfig::validate() const {
  if (templates.empty()) throw std::invalid_argument("no templates selected");
  for (int id : templates) check_id(id);
  if (configs_per_template < 1) throw std::invalid_argument("configs_per_template must be at least 1");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  task.validate();
  planner.validate();
}

std::uint64_t task_seed(std::uint64_t base, int template_id, int index, int attempt) {
  std::uint64_t h = splitmix(base);
  h = splitmix(h ^ static_cast<std::uint64_t>(template_id));
  h = splitmix(h ^ static_cast<std::uint64_t>(index));
  return splitmix(h ^ static_cast<std::uint64_t>(attempt));
}

std::vector<TaskRecord> run_bench(const BenchConfig& config, const MazeWorld& world, const ReachGraph& graph,
                                  const BfsOracle& oracle) {
  config.validate();
  std::vector<TaskSpec> tasks;
  for (int id : config.templates) {
    for (int i = 0; i < config.configs_per_template; ++i) {
      for (int attempt = 0;; ++attempt) {
        try {
          tasks.push_back(instantiate_template(id, world, graph, config.task, task_seed(config.seed, id, i, attempt)));
          break;
        } catch (const SamplingError&) {
          if (attempt >= 100) throw;
        }
      }
    }
  }

  std::vector<TaskRecord> records(tasks.size());
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::pair<std::size_t, TaskRecord>> channel;
  std::size_t next = 0;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        std::lock_guard lock(mutex);
        if (next >= tasks.size() || failure) return;
        i = next++;
      }
      try {
        TaskRecord r = run_task(tasks[i], graph, world, oracle, config.planner, config.k);
        std::lock_guard lock(mutex);
        channel.emplace_back(i, std::move(r));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
      }
      ready.notify_one();
    }
  };
  const int n_workers = std::min<int>(config.workers, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  // Single consumer: move finished records into their slots.
  std::size_t received = 0;
  {
    std::unique_lock lock(mutex);
    while (received < tasks.size() && !failure) {
      ready.wait(lock, [&] { return !channel.empty() || failure; });
      while (!channel.empty()) {
        records[channel.front().first] = std::move(channel.front().second);
        channel.pop_front();
        ++received;
      }
    }
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace grasp::bench
