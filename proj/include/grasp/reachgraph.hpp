#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grasp/geometry.hpp"

namespace grasp {

/// Estimated number of control steps to move from one state to another.
/// Implementations must tolerate concurrent const calls and need not be
/// symmetric. Unreachable pairs report infinity.
class ReachabilityOracle {
 public:
  virtual ~ReachabilityOracle() = default;
  virtual double distance(Vec2 from, Vec2 to) const = 0;
};

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct Edge {
  int to = 0;
  double dhat = 0.0;
};

using Adjacency = std::vector<std::vector<Edge>>;

struct GraphStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double mean_degree = 0.0;
  double mean_edge_length = 0.0;  // world units
};

GraphStats compute_stats(std::span<const Vec2> nodes, const Adjacency& adjacency);

struct GraphConfig {
  double cell_size = 1.0;        // grid used for uniform subsampling
  std::size_t budget = 600;      // states kept by the subsampler
  std::optional<double> threshold;  // clustering threshold in steps; k / 2 when unset
  double k = 10.0;
  double delta = 1.0;
  int n_bins = 8;
  int target_degree = 5;
  std::uint64_t seed = 0;

  double cluster_threshold() const { return threshold.value_or(k / 2.0); }
  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
  /// Stable fingerprint of every parameter, stored with the graph.
  std::string hash() const;
};

/// Directed abstraction over representative states. Every edge satisfies
/// dhat < k - delta, there are no self-edges, and after build_graph the graph
/// is strongly connected.
struct ReachGraph {
  std::vector<Vec2> nodes;
  Adjacency adjacency;
  double k = 0.0;
  double delta = 0.0;
  std::string config_hash;
  GraphStats stats;

  std::size_t size() const { return nodes.size(); }
  const std::vector<Edge>& neighbors(int v) const { return adjacency.at(static_cast<std::size_t>(v)); }
  std::size_t edge_count() const;
};

/// Buckets states into square cells and draws round-robin across occupied
/// cells (uniformly at random within a cell) until `budget` states are taken
/// or every state is used. Deterministic for a given seed.
std::vector<Vec2> grid_subsample(std::span<const Vec2> states, double cell_size,
                                 std::size_t budget, std::uint64_t seed);

/// Greedy leader clustering under the symmetrized oracle distance: each state
/// joins the first cluster whose founding state is closer than `threshold`,
/// else founds a new cluster. Returns one medoid per cluster (the member
/// with the least total intra-cluster distance, lowest index on ties), in
/// cluster-creation order.
std::vector<Vec2> cluster_medoids(std::span<const Vec2> states, const ReachabilityOracle& oracle,
                                  double threshold);

struct EdgeSelection {
  double k = 10.0;
  double delta = 1.0;
  int n_bins = 8;
  int target_degree = 5;
  bool top_up = true;         // fill up to target_degree after the per-bin pass
  bool bidirectional = true;  // add feasible reverse edges afterwards
};

/// Per node: feasible candidates (dhat < k - delta, no self-loops), best
/// distance-efficiency candidate per angular bin, then top-up by angular
/// novelty and efficiency, then feasible reverse edges.
Adjacency build_edges(std::span<const Vec2> nodes, const ReachabilityOracle& oracle,
                      const EdgeSelection& selection);

/// Strongly connected components in discovery order of their smallest member.
std::vector<std::vector<int>> strongly_connected_components(const Adjacency& adjacency);

/// Subgraph induced by the largest SCC (ties: the one holding the smallest
/// node index), with node ids remapped densely in increasing original order.
ReachGraph largest_scc(std::span<const Vec2> nodes, const Adjacency& adjacency);

/// grid_subsample -> cluster_medoids -> build_edges -> largest_scc.
ReachGraph build_graph(std::span<const Vec2> states, const ReachabilityOracle& oracle,
                       const GraphConfig& config);

/// Node nearest to `pos` in Euclidean distance, lowest id on ties.
int nearest_node(const ReachGraph& graph, Vec2 pos);

/// Hop-count diameter over ordered pairs; -1 if some pair is unreachable.
int hop_diameter(const ReachGraph& graph);

void save_graph(const ReachGraph& graph, std::ostream& out);
ReachGraph load_graph(std::istream& in);

}  // namespace grasp
