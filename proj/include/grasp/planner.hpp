#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grasp/monitor.hpp"
#include "grasp/reachgraph.hpp"
#include "grasp/robustness.hpp"
#include "grasp/stl.hpp"

namespace grasp {

enum class FrontierPolicy { Score, Fifo, Lifo };

FrontierPolicy parse_frontier_policy(const std::string& name);
std::string to_string(FrontierPolicy policy);

struct Lambdas {
  double l0 = 10.0;
  double l1 = 0.1;
  double l2 = 0.01;
};

struct PlanStats {
  std::uint64_t expanded = 0;
  std::uint64_t generated = 0;
  std::uint64_t pruned_upper = 0;
  std::uint64_t pruned_dominance = 0;
  double elapsed_s = 0.0;
};

/// One node of the augmented search space. The monitor states live beside
/// the node arena inside the search and are dropped once a node is expanded
/// or evicted. Node 0 of every search is the root holding x0 (v = -1, t = 0).
struct SearchNode {
  int v = -1;
  int parent = -1;  // arena index
  int t = 0;
  Vec2 pos;
  Interval interval;   // sound
  Interval heuristic;  // (lower_h, upper_h)
  double path_len = 0.0;
};

struct ExpandEvent {
  const SearchNode& node;
  std::span<const SearchNode> arena;
  const PlanStats& stats;
  int candidates = 0;  // children evaluated before pruning
};

struct PlannerConfig {
  Lambdas lambdas;
  double eps = 0.05;
  int top_k = 3;  // 0 disables dominance pruning
  std::uint64_t max_expansions = 200000;
  FrontierPolicy frontier = FrontierPolicy::Score;
  std::function<void(const ExpandEvent&)> on_expand;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

struct PlanResult {
  bool success = false;
  std::vector<Vec2> waypoints;  // w_0 = x0, then one graph state per step
  std::vector<int> nodes;       // graph id per waypoint, -1 for w_0
  Interval final_interval;
  PlanStats stats;
};

/// Nearest node by Euclidean distance, lowest id on ties.
int nearest_anchor(const ReachGraph& graph, Vec2 x0);

double score(const SearchNode& node, const Lambdas& lambdas);

/// z1 dominates z2 if lower1 >= lower2, or |lower1 - lower2| <= eps and
/// l1 <= l2. Throws if the nodes differ in graph node or time step.
bool dominates(const SearchNode& z1, const SearchNode& z2, double eps);

/// Waypoints along the parent chain ending at `goal`, root first.
std::vector<Vec2> reconstruct_waypoints(std::span<const SearchNode> arena, int goal);

/// Best-first search over (graph node, time) with interval pruning, wait
/// successors and top-K dominance buckets. Seeds are the anchor's neighbours
/// plus the anchor itself (a wait). `success` is false when the frontier
/// empties or the expansion budget runs out.
PlanResult stl_graph_search(Vec2 x0, const ReachGraph& graph, const stl::FormulaPtr& phi,
                            const PredicateTable& preds, const PlannerConfig& config = {});

}  // namespace grasp
