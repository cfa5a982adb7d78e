// grasp_stl: dataset generation, graph construction, planning, benchmarking
// and standalone monitoring on the point-mass maze.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grasp/bench.hpp"
#include "grasp/mazesim.hpp"
#include "grasp/monitor.hpp"
#include "grasp/planner.hpp"
#include "grasp/reachgraph.hpp"
#include "grasp/robustness.hpp"
#include "grasp/stl.hpp"

namespace fs = std::filesystem;
using namespace grasp;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNoPlan = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string maze;
  double cell_size = 1.0;
  double max_speed = 0.5;

  std::string dataset;
  int n_traj = 500;
  int traj_len = 200;
  double turn_sigma = 0.35;
  std::uint64_t seed = 0;

  std::string graph;
  double grid_cell = 1.0;
  std::size_t budget = 600;
  double threshold = 0.0;  // 0 selects k / 2
  double k = 10.0;
  double delta = 1.0;
  int n_bins = 8;
  int target_degree = 5;

  std::string formula;
  std::string task;
  std::vector<std::string> preds;
  std::string x0;
  double lambda0 = 10.0;
  double lambda1 = 0.1;
  double lambda2 = 0.01;
  double eps = 0.05;
  int top_k = 3;
  std::uint64_t max_expansions = 200000;
  std::string frontier = "score";

  std::string templates;
  int configs_per_template = 50;
  int workers = 1;

  std::string signal;
  std::string out_dir = "out";
};

MazeWorld load_world(const Options& o) {
  if (o.maze.empty()) {
    if (o.cell_size != 1.0 || o.max_speed != 0.5) {
      return MazeWorld::parse(MazeWorld::desk().to_text(), o.cell_size, o.max_speed);
    }
    return MazeWorld::desk();
  }
  return MazeWorld::load(o.maze, o.cell_size, o.max_speed);
}

fs::path out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

std::string or_default(const std::string& value, const Options& o, const std::string& name) {
  return value.empty() ? (fs::path(o.out_dir) / name).string() : value;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return in;
}

Vec2 parse_point(const std::string& text) {
  std::istringstream in(text);
  Vec2 p;
  char comma = 0;
  if (!(in >> p.x >> comma >> p.y) || comma != ',' || !(in >> std::ws).eof()) {
    throw UsageError("expected x,y but got '" + text + "'");
  }
  return p;
}

// id:x,y,r
PredicateDef parse_pred(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("expected id:x,y,r but got '" + text + "'");
  std::istringstream in(text.substr(colon + 1));
  PredicateDef p;
  p.id = text.substr(0, colon);
  char c1 = 0, c2 = 0;
  if (!(in >> p.center.x >> c1 >> p.center.y >> c2 >> p.radius) || c1 != ',' || c2 != ',') {
    throw UsageError("expected id:x,y,r but got '" + text + "'");
  }
  return p;
}

GraphConfig graph_config(const Options& o) {
  GraphConfig c;
  c.cell_size = o.grid_cell;
  c.budget = o.budget;
  if (o.threshold > 0.0) c.threshold = o.threshold;
  c.k = o.k;
  c.delta = o.delta;
  c.n_bins = o.n_bins;
  c.target_degree = o.target_degree;
  c.seed = o.seed;
  c.validate();
  return c;
}

PlannerConfig planner_config(const Options& o) {
  PlannerConfig c;
  c.lambdas = {o.lambda0, o.lambda1, o.lambda2};
  c.eps = o.eps;
  c.top_k = o.top_k;
  c.max_expansions = o.max_expansions;
  c.frontier = parse_frontier_policy(o.frontier);
  c.validate();
  return c;
}

int steps_per_waypoint(const ReachGraph& g) {
  const long k = std::lround(g.k);
  if (k < 1) throw UsageError("graph k must be a positive integer");
  return static_cast<int>(k);
}

ReachGraph obtain_graph(const Options& o, const MazeWorld& world, const BfsOracle& oracle) {
  if (!o.graph.empty()) {
    auto in = open_in(o.graph);
    return load_graph(in);
  }
  OfflineDataset data;
  if (!o.dataset.empty()) {
    auto in = open_in(o.dataset);
    data = load_dataset(in);
  } else {
    data = generate_dataset(world, {o.n_traj, o.traj_len, o.seed, o.turn_sigma});
  }
  return build_graph(data.states(), oracle, graph_config(o));
}

int cmd_gen_data(const Options& o) {
  const auto world = load_world(o);
  const auto data = generate_dataset(world, {o.n_traj, o.traj_len, o.seed, o.turn_sigma});
  const auto path = o.dataset.empty() ? out_path(o, "dataset.jsonl") : fs::path(o.dataset);
  std::ofstream out(path);
  save_dataset(data, out);
  std::cout << "wrote " << data.transition_count() << " transitions in " << data.trajectories.size()
            << " trajectories to " << path.string() << "\n";
  std::cout << "coverage " << coverage(world, data) * 100.0 << "% of free cells\n";
  return 0;
}

int cmd_build_graph(const Options& o) {
  const auto world = load_world(o);
  BfsOracle oracle(world);
  auto in = open_in(or_default(o.dataset, o, "dataset.jsonl"));
  const auto data = load_dataset(in);
  if (data.transition_count() == 0) throw UsageError("dataset is empty");
  const auto g = build_graph(data.states(), oracle, graph_config(o));
  const auto path = o.graph.empty() ? out_path(o, "graph.json") : fs::path(o.graph);
  std::ofstream out(path);
  save_graph(g, out);
  std::cout << "nodes " << g.stats.nodes << "\nedges " << g.stats.edges << "\nmean_degree " << g.stats.mean_degree
            << "\nmean_edge_length " << g.stats.mean_edge_length << "\nwrote " << path.string() << "\n";
  return 0;
}

struct Problem {
  stl::FormulaPtr formula;
  PredicateTable preds;
  std::optional<Vec2> x0;
};

Problem load_problem(const Options& o) {
  Problem p;
  std::string text = o.formula;
  if (!o.task.empty()) {
    auto in = open_in(o.task);
    const auto j = nlohmann::json::parse(in);
    if (text.empty()) text = j.at("formula").get<std::string>();
    for (const auto& pd : j.value("predicates", nlohmann::json::array())) {
      p.preds.add({pd.at("id").get<std::string>(),
                   {pd.at("center").at(0).get<double>(), pd.at("center").at(1).get<double>()},
                   pd.at("radius").get<double>()});
    }
    if (j.contains("x0")) p.x0 = Vec2{j["x0"].at(0).get<double>(), j["x0"].at(1).get<double>()};
  }
  for (const auto& spec : o.preds) p.preds.add(parse_pred(spec));
  if (!o.x0.empty()) p.x0 = parse_point(o.x0);
  if (text.empty()) throw UsageError("a formula is required (--formula or --task)");
  p.formula = stl::parse_formula(text);
  for (const auto& id : stl::predicate_ids(*p.formula)) {
    if (!p.preds.find(id)) throw UsageError("predicate '" + id + "' is not defined (use --pred id:x,y,r)");
  }
  return p;
}

void write_interval_trace(const fs::path& path, const IntervalMonitor& monitor, const std::vector<Vec2>& signal) {
  std::ofstream out(path);
  out << "step,lower,upper,width\n";
  out.precision(12);
  MonitorState state;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    state = i == 0 ? monitor.init(signal[0]) : monitor.append(state, signal[i]);
    const Interval r = state.root();
    out << i << ',' << r.lower << ',' << r.upper << ',' << r.width() << '\n';
  }
}

int cmd_plan(const Options& o) {
  const auto world = load_world(o);
  BfsOracle oracle(world);
  const auto problem = load_problem(o);
  if (!problem.x0) throw UsageError("an initial state is required (--x0 x,y)");
  const Vec2 x0 = *problem.x0;
  if (!world.is_free(x0)) throw UsageError("x0 is not in free space");
  auto gin = open_in(or_default(o.graph, o, "graph.json"));
  const auto graph = load_graph(gin);

  PlannerConfig config = planner_config(o);
  std::ostringstream search_trace;
  search_trace << "expanded,generated,pruned_upper,pruned_dominance,t,lower,upper\n";
  search_trace.precision(12);
  config.on_expand = [&](const ExpandEvent& ev) {
    search_trace << ev.stats.expanded << ',' << ev.stats.generated << ',' << ev.stats.pruned_upper << ','
                 << ev.stats.pruned_dominance << ',' << ev.node.t << ',' << ev.node.interval.lower << ','
                 << ev.node.interval.upper << '\n';
  };
  const auto plan = stl_graph_search(x0, graph, problem.formula, problem.preds, config);
  std::ofstream(out_path(o, "search_trace.csv")) << search_trace.str();

  nlohmann::json j;
  j["formula"] = stl::to_string(*problem.formula);
  j["success"] = plan.success;
  j["stats"] = {{"expanded", plan.stats.expanded},
                {"generated", plan.stats.generated},
                {"pruned_upper", plan.stats.pruned_upper},
                {"pruned_dominance", plan.stats.pruned_dominance},
                {"elapsed_s", plan.stats.elapsed_s}};
  if (!plan.success) {
    std::ofstream(out_path(o, "plan.json")) << j.dump(1) << '\n';
    std::cerr << "no plan found (expanded " << plan.stats.expanded << ", pruned_upper " << plan.stats.pruned_upper
              << ", pruned_dominance " << plan.stats.pruned_dominance << ")\n";
    return kExitNoPlan;
  }

  const int k = steps_per_waypoint(graph);
  const auto trajectory = execute_plan(world, oracle, x0, plan.waypoints, k);
  const auto signal = subsample_signal(trajectory, k);
  const double executed = agm_robustness(*problem.formula, problem.preds, signal);

  j["waypoints"] = nlohmann::json::array();
  for (const Vec2& w : plan.waypoints) j["waypoints"].push_back({w.x, w.y});
  j["nodes"] = plan.nodes;
  j["interval"] = {plan.final_interval.lower, plan.final_interval.upper};
  j["executed_signal"] = nlohmann::json::array();
  for (const Vec2& s : signal) j["executed_signal"].push_back({s.x, s.y});
  j["executed_robustness"] = executed;
  std::ofstream(out_path(o, "plan.json")) << j.dump(1) << '\n';

  const IntervalMonitor monitor(problem.formula, problem.preds);
  write_interval_trace(out_path(o, "interval_trace.csv"), monitor, signal);

  std::ofstream pt(out_path(o, "predicate_trace.csv"));
  pt.precision(12);
  pt << "step";
  for (const auto& d : problem.preds.defs()) pt << ',' << d.id;
  pt << '\n';
  for (std::size_t i = 0; i < signal.size(); ++i) {
    pt << i;
    for (const auto& d : problem.preds.defs()) pt << ',' << eval_predicate_normalized(d, signal[i]);
    pt << '\n';
  }

  std::cout << "plan found: " << plan.waypoints.size() - 1 << " steps, interval [" << plan.final_interval.lower
            << ", " << plan.final_interval.upper << "], executed robustness " << executed << ", "
            << plan.stats.expanded << " expansions in " << plan.stats.elapsed_s << " s\n";
  return 0;
}

int cmd_bench(const Options& o) {
  const auto world = load_world(o);
  BfsOracle oracle(world);
  const auto graph = obtain_graph(o, world, oracle);

  bench::BenchConfig config;
  if (!o.templates.empty()) {
    config.templates.clear();
    std::istringstream in(o.templates);
    for (std::string item; std::getline(in, item, ',');) {
      if (!item.empty()) config.templates.push_back(bench::parse_template_id(item));
    }
  }
  config.configs_per_template = o.configs_per_template;
  config.seed = o.seed;
  config.workers = o.workers;
  config.k = steps_per_waypoint(graph);
  config.planner = planner_config(o);
  config.validate();

  const auto started = std::chrono::steady_clock::now();
  const auto records = bench::run_bench(config, world, graph, oracle);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const auto report = bench::aggregate(records);
  std::ofstream(out_path(o, "results.csv")) << bench::render_records_csv(records);
  std::ofstream(out_path(o, "report.csv")) << bench::render_report_csv(report);
  const std::string text = bench::render_report(report);
  std::ofstream(out_path(o, "report.txt")) << text;
  std::cout << text << "total " << total << " s over " << records.size() << " tasks\n";
  return 0;
}

std::vector<Vec2> read_signal(const std::string& path) {
  auto in = open_in(path);
  std::vector<Vec2> signal;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    Vec2 p;
    char comma = 0;
    if (!(row >> p.x >> comma >> p.y) || comma != ',') {
      if (signal.empty()) continue;  // header
      throw UsageError("bad signal row: " + line);
    }
    signal.push_back(p);
  }
  return signal;
}

int cmd_monitor(const Options& o) {
  const auto problem = load_problem(o);
  if (o.signal.empty()) throw UsageError("--signal is required");
  const auto signal = read_signal(o.signal);
  if (signal.empty()) throw UsageError("signal is empty");
  const IntervalMonitor monitor(problem.formula, problem.preds);
  const auto path = out_path(o, "monitor.csv");
  write_interval_trace(path, monitor, signal);
  std::ifstream back(path);
  std::cout << back.rdbuf();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STL task planning on a point-mass maze"};
  app.set_config("--config", "", "Key-value configuration file (flags override it)");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  app.add_option("--maze", o.maze, "Maze text file (# wall, . free); built-in desk maze if omitted");
  app.add_option("--cell-size", o.cell_size, "Maze cell size")->check(CLI::PositiveNumber);
  app.add_option("--max-speed", o.max_speed, "Agent speed per control step")->check(CLI::PositiveNumber);
  app.add_option("--dataset", o.dataset, "Dataset file (JSON lines)");
  app.add_option("--n-traj", o.n_traj, "Trajectories to generate");
  app.add_option("--traj-len", o.traj_len, "Transitions per trajectory");
  app.add_option("--turn-sigma", o.turn_sigma, "Random-walk heading noise (radians)");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--graph", o.graph, "Graph file (JSON)");
  app.add_option("--grid-cell", o.grid_cell, "Subsampling grid cell size");
  app.add_option("--budget", o.budget, "States kept by the subsampler");
  app.add_option("--threshold", o.threshold, "Clustering threshold in steps (default k/2)");
  app.add_option("--k", o.k, "Control steps per signal step");
  app.add_option("--delta", o.delta, "Edge feasibility margin");
  app.add_option("--n-bins", o.n_bins, "Angular bins per node");
  app.add_option("--target-degree", o.target_degree, "Out-degree target for the top-up phase");
  app.add_option("--formula", o.formula, "STL formula text");
  app.add_option("--task", o.task, "Task JSON file: {formula, predicates:[{id,center,radius}], x0}");
  app.add_option("--pred", o.preds, "Circular predicate id:x,y,r (repeatable)");
  app.add_option("--x0", o.x0, "Initial state x,y");
  app.add_option("--lambda0", o.lambda0, "Score weight on the heuristic lower bound");
  app.add_option("--lambda1", o.lambda1, "Score weight on depth");
  app.add_option("--lambda2", o.lambda2, "Score weight on path length");
  app.add_option("--eps", o.eps, "Dominance tolerance");
  app.add_option("--top-k", o.top_k, "Nodes kept per (node, time) bucket; 0 = unlimited");
  app.add_option("--max-expansions", o.max_expansions, "Expansion budget");
  app.add_option("--frontier", o.frontier, "Frontier policy")->check(CLI::IsMember({"score", "fifo", "lifo"}));
  app.add_option("--templates", o.templates, "Comma-separated template ids, e.g. T1,T9");
  app.add_option("--configs-per-template", o.configs_per_template, "Tasks per template");
  app.add_option("--workers", o.workers, "Benchmark worker threads");
  app.add_option("--signal", o.signal, "Signal CSV (x,y per row)");
  app.add_option("--out-dir", o.out_dir, "Output directory");

  auto* gen = app.add_subcommand("gen-data", "Generate the offline random-walk dataset");
  auto* build = app.add_subcommand("build-graph", "Build the reachability graph from a dataset");
  auto* plan = app.add_subcommand("plan", "Plan and execute one task; writes plan.json and trace CSVs");
  auto* bench_cmd = app.add_subcommand("bench", "Run the template benchmark");
  auto* monitor = app.add_subcommand("monitor", "Per-step robustness intervals of a signal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o);
    if (build->parsed()) return cmd_build_graph(o);
    if (plan->parsed()) return cmd_plan(o);
    if (bench_cmd->parsed()) return cmd_bench(o);
    if (monitor->parsed()) return cmd_monitor(o);
  } catch (const stl::ParseError& e) {
    std::cerr << "formula error at offset " << e.offset() << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
