#pragma once

// Exhaustive enumeration of waypoint sequences over a small graph, used as
// the reference for the planner's completeness checks.

#include <functional>
#include <vector>

#include "grasp/reachgraph.hpp"
#include "oracles.hpp"

namespace oracle {

inline int nearest_by_scan(const grasp::ReachGraph& g, Vec2 p) {
  int best = 0;
  for (std::size_t i = 1; i < g.nodes.size(); ++i) {
    const double di = std::hypot(g.nodes[i].x - p.x, g.nodes[i].y - p.y);
    const double db = std::hypot(g.nodes[best].x - p.x, g.nodes[best].y - p.y);
    if (di < db) best = static_cast<int>(i);
  }
  return best;
}

/// True if some (x0, w1, ..., wH) with w1 in N(anchor) + {anchor} and
/// w_{i+1} in N(w_i) + {w_i} has robustness > 0. H = horizon(f).
inline bool exists_satisfying_sequence(const grasp::ReachGraph& g, Vec2 x0, const Formula& f,
                                       const PredicateTable& preds, int horizon) {
  std::vector<Vec2> signal{x0};
  std::function<bool(int)> extend = [&](int v) -> bool {
    if (static_cast<int>(signal.size()) == horizon + 1) {
      return brute_force_agm(f, preds, signal, 0) > 0.0;
    }
    std::vector<int> next{v};
    for (const auto& e : g.adjacency[static_cast<std::size_t>(v)]) next.push_back(e.to);
    for (int u : next) {
      signal.push_back(g.nodes[static_cast<std::size_t>(u)]);
      const bool found = extend(u);
      signal.pop_back();
      if (found) return true;
    }
    return false;
  };
  // With horizon 0 only x0 matters.
  if (horizon == 0) return brute_force_agm(f, preds, signal, 0) > 0.0;
  const int anchor = nearest_by_scan(g, x0);
  return extend(anchor);
}

}  // namespace oracle
