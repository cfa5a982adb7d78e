#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grasp/mazesim.hpp"
#include "grasp/planner.hpp"
#include "grasp/reachgraph.hpp"
#include "grasp/robustness.hpp"
#include "grasp/stl.hpp"

namespace grasp::bench {

inline constexpr int kTemplateCount = 12;

/// "T1".."T12" <-> 1..12. Throws std::invalid_argument on anything else.
int parse_template_id(const std::string& name);
std::string template_name(int id);
/// "Basic", "Intermediate" or "Advanced".
std::string template_group(int id);
int region_count(int id);
int bound_count(int id);

/// The benchmark formula for template `id` over predicates mu1..muN and time
/// bounds t1 < t2 < ... (t[0] is t1).
stl::FormulaPtr build_template(int id, const std::vector<std::string>& mu, const std::vector<int>& t);

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Each bound is the previous one (0 for t1, or 0 again when `restart`) plus
/// a uniform integer in [lo * D, hi * D] rounded, at least 1, where D is the
/// graph's hop diameter.
struct BoundRule {
  double lo = 1.0;
  double hi = 1.5;
  bool restart = false;
};

struct TaskConfig {
  double radius_min = 1.0;
  double radius_max = 1.5;
  int max_rejections = 20000;
  int max_horizon = 64;
  /// Per template (index id - 1), one rule per time bound.
  std::vector<std::vector<BoundRule>> bounds = default_bounds();

  static std::vector<std::vector<BoundRule>> default_bounds();
  void validate() const;
};

struct TaskSpec {
  int template_id = 1;
  std::vector<PredicateDef> predicates;  // mu1, mu2, ...
  std::vector<int> time_bounds;          // t1, t2, ...
  Vec2 x0;
  stl::FormulaPtr formula;
  std::uint64_t seed = 0;

  PredicateTable table() const { return PredicateTable(predicates); }
};

/// Regions are disks fully inside free space, pairwise disjoint, each holding
/// at least one graph node strictly inside; x0 is uniform in free space and
/// outside every region. Throws SamplingError when the rejection budget runs
/// out or the horizon exceeds the configured maximum.
TaskSpec instantiate_template(int id, const MazeWorld& world, const ReachGraph& graph, const TaskConfig& config,
                              std::uint64_t seed);

struct TaskRecord {
  TaskSpec task;
  bool plan_ok = false;
  bool exec_ok = false;
  double plan_time_s = 0.0;
  PlanStats plan_stats;
  std::optional<double> executed_robustness;
};

/// Plans (timed), then executes the plan with k control steps per waypoint
/// and scores the subsampled signal with full AGM robustness at t = 0.
TaskRecord run_task(const TaskSpec& task, const ReachGraph& graph, const MazeWorld& world, const BfsOracle& oracle,
                    const PlannerConfig& planner, int k);

struct MetricRow {
  std::string name;
  std::size_t tasks = 0;
  std::size_t planned = 0;
  std::size_t executed = 0;
  double psr = 0.0;      // percent
  double esr = 0.0;      // percent
  double pt_mean = 0.0;  // seconds, over planned tasks only
  double pt_std = 0.0;   // population std; 0 for fewer than two planned tasks
};

struct Report {
  std::vector<MetricRow> templates;
  std::vector<MetricRow> groups;
  MetricRow overall;
};

Report aggregate(const std::vector<TaskRecord>& records);

/// Text table mirroring the PSR / ESR / PT layout, grouped by difficulty.
std::string render_report(const Report& report);
std::string render_report_csv(const Report& report);
/// One row per record.
std::string render_records_csv(const std::vector<TaskRecord>& records);

struct BenchConfig {
  std::vector<int> templates{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  int configs_per_template = 50;
  std::uint64_t seed = 0;
  int workers = 1;
  int k = 10;
  TaskConfig task;
  PlannerConfig planner;

  void validate() const;
};

/// Deterministic per-task seed.
std::uint64_t task_seed(std::uint64_t base, int template_id, int index, int attempt);

/// Instantiates every (template, index) task, reseeding on sampling errors,
/// and runs them on a pool of `workers` threads. Records come back in
/// (template order, index) order regardless of scheduling.
std::vector<TaskRecord> run_bench(const BenchConfig& config, const MazeWorld& world, const ReachGraph& graph,
                                  const BfsOracle& oracle);

}  // namespace grasp::bench
