#include "grasp/planner.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace grasp {

FrontierPolicy parse_frontier_policy(const std::string& name) {
  if (name == "score") return FrontierPolicy::Score;
  if (name == "fifo") return FrontierPolicy::Fifo;
  if (name == "lifo") return FrontierPolicy::Lifo;
  throw std::invalid_argument("unknown frontier policy: " + name);
}

std::string to_string(FrontierPolicy policy) {
  switch (policy) {
    case FrontierPolicy::Score: return "score";
    case FrontierPolicy::Fifo: return "fifo";
    case FrontierPolicy::Lifo: return "lifo";
  }
  return "score";
}

void PlannerConfig::validate() const {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  if (top_k < 0) throw std::invalid_argument("top_k must be >= 1, or 0 for unlimited");
  if (max_expansions < 1) throw std::invalid_argument("max_expansions must be at least 1");
}

int nearest_anchor(const ReachGraph& graph, Vec2 x0) { return nearest_node(graph, x0); }

double score(const SearchNode& node, const Lambdas& lambdas) {
  return lambdas.l0 * node.heuristic.lower + lambdas.l1 * node.t - lambdas.l2 * node.path_len;
}

bool dominates(const SearchNode& z1, const SearchNode& z2, double eps) {
  if (z1.v != z2.v || z1.t != z2.t) throw std::invalid_argument("dominates: nodes differ in (v, t)");
  const double a = z1.interval.lower;
  const double b = z2.interval.lower;
  return a >= b || (std::abs(a - b) <= eps && z1.path_len <= z2.path_len);
}

std::vector<Vec2> reconstruct_waypoints(std::span<const SearchNode> arena, int goal) {
  std::vector<Vec2> out;
  for (int i = goal; i >= 0; i = arena[static_cast<std::size_t>(i)].parent) {
    out.push_back(arena[static_cast<std::size_t>(i)].pos);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

class Frontier {
 public:
  explicit Frontier(FrontierPolicy policy) : policy_(policy) {}

  void push(int node, double priority) {
    switch (policy_) {
      case FrontierPolicy::Score: heap_.push({priority, seq_++, node}); break;
      case FrontierPolicy::Fifo:
      case FrontierPolicy::Lifo: list_.push_back(node); break;
    }
  }

  bool empty() const { return policy_ == FrontierPolicy::Score ? heap_.empty() : list_.empty(); }

  int pop() {
    int node = 0;
    switch (policy_) {
      case FrontierPolicy::Score:
        node = heap_.top().node;
        heap_.pop();
        break;
      case FrontierPolicy::Fifo:
        node = list_.front();
        list_.pop_front();
        break;
      case FrontierPolicy::Lifo:
        node = list_.back();
        list_.pop_back();
        break;
    }
    return node;
  }

 private:
  struct Entry {
    double priority;
    std::uint64_t seq;
    int node;
    // Highest priority first; earlier insertion wins ties.
    bool operator<(const Entry& o) const {
      if (priority != o.priority) return priority < o.priority;
      return seq > o.seq;
    }
  };

  FrontierPolicy policy_;
  std::priority_queue<Entry> heap_;
  std::deque<int> list_;
  std::uint64_t seq_ = 0;
};

struct Monitors {
  MonitorState sound;
  MonitorState heuristic;
};

}  // namespace

PlanResult stl_graph_search(Vec2 x0, const ReachGraph& graph, const stl::FormulaPtr& phi,
                            const PredicateTable& preds, const PlannerConfig& config) {
  config.validate();
  if (graph.nodes.empty()) throw std::invalid_argument("stl_graph_search: empty graph");
  const auto started = std::chrono::steady_clock::now();

  const IntervalMonitor sound(phi, preds, MonitorMode::Sound);
  const IntervalMonitor heuristic(phi, preds, MonitorMode::Heuristic);
  const int H = stl::horizon(*phi);
  const auto K = static_cast<std::size_t>(config.top_k);

  PlanResult result;
  PlanStats& stats = result.stats;
  std::vector<SearchNode> arena;
  std::vector<std::optional<Monitors>> monitors;
  std::vector<char> alive;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  Frontier frontier(config.frontier);

  auto bucket_key = [](const SearchNode& z) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(z.v)) << 32) | static_cast<std::uint32_t>(z.t);
  };
  auto drop = [&](int idx) {
    alive[static_cast<std::size_t>(idx)] = 0;
    monitors[static_cast<std::size_t>(idx)].reset();
  };
  auto leave_bucket = [&](int idx) {
    if (K == 0) return;
    auto it = buckets.find(bucket_key(arena[static_cast<std::size_t>(idx)]));
    if (it == buckets.end()) return;
    auto& members = it->second;
    members.erase(std::remove(members.begin(), members.end(), idx), members.end());
  };
  // Keeps the node if its bucket has room or it dominates the bucket's worst member.
  auto admit = [&](int idx) {
    if (K == 0) return true;
    auto& members = buckets[bucket_key(arena[static_cast<std::size_t>(idx)])];
    if (members.size() < K) {
      members.push_back(idx);
      return true;
    }
    auto worst = members.begin();
    for (auto it = members.begin(); it != members.end(); ++it) {
      const SearchNode& a = arena[static_cast<std::size_t>(*it)];
      const SearchNode& w = arena[static_cast<std::size_t>(*worst)];
      if (a.interval.lower < w.interval.lower ||
          (a.interval.lower == w.interval.lower && a.path_len > w.path_len)) {
        worst = it;
      }
    }
    ++stats.pruned_dominance;
    if (!dominates(arena[static_cast<std::size_t>(idx)], arena[static_cast<std::size_t>(*worst)], config.eps)) {
      return false;
    }
    drop(*worst);
    *worst = idx;
    return true;
  };
  auto make_child = [&](int parent, int v, bool seed) {
    ++stats.generated;
    const Vec2 pos = graph.nodes[static_cast<std::size_t>(v)];
    const Monitors& from = *monitors[static_cast<std::size_t>(parent)];
    auto [iv, next_sound] = sound.eval_interval(pos, from.sound);
    if (seed ? !(iv.upper >= 0.0) : !(iv.upper > 0.0)) {
      ++stats.pruned_upper;
      return;
    }
    auto next_heuristic = heuristic.append(from.heuristic, pos);
    const SearchNode& p = arena[static_cast<std::size_t>(parent)];
    SearchNode child{v, parent, p.t + 1, pos, iv, next_heuristic.root(), p.path_len + distance(p.pos, pos)};
    const int idx = static_cast<int>(arena.size());
    arena.push_back(child);
    monitors.emplace_back(Monitors{std::move(next_sound), std::move(next_heuristic)});
    alive.push_back(1);
    if (!seed && !admit(idx)) {
      drop(idx);
      return;
    }
    frontier.push(idx, score(child, config.lambdas));
  };

  {
    auto s0 = sound.init(x0);
    auto h0 = heuristic.init(x0);
    arena.push_back({-1, -1, 0, x0, s0.root(), h0.root(), 0.0});
    monitors.emplace_back(Monitors{std::move(s0), std::move(h0)});
    alive.push_back(0);
    const int anchor = nearest_anchor(graph, x0);
    for (const Edge& e : graph.neighbors(anchor)) make_child(0, e.to, true);
    make_child(0, anchor, true);
    monitors[0].reset();
  }

  int goal = -1;
  while (!frontier.empty()) {
    const int idx = frontier.pop();
    if (!alive[static_cast<std::size_t>(idx)]) continue;
    alive[static_cast<std::size_t>(idx)] = 0;
    const SearchNode z = arena[static_cast<std::size_t>(idx)];
    if (z.t >= H && z.interval.lower > 0.0) {
      goal = idx;
      break;
    }
    if (z.t >= H || z.interval.upper <= 0.0) {
      if (z.interval.upper <= 0.0) ++stats.pruned_upper;
      leave_bucket(idx);
      monitors[static_cast<std::size_t>(idx)].reset();
      continue;
    }
    if (stats.expanded >= config.max_expansions) break;
    ++stats.expanded;
    const auto& nbrs = graph.neighbors(z.v);
    for (const Edge& e : nbrs) make_child(idx, e.to, false);
    make_child(idx, z.v, false);
    monitors[static_cast<std::size_t>(idx)].reset();
    if (config.on_expand) {
      config.on_expand(ExpandEvent{arena[static_cast<std::size_t>(idx)], arena, stats,
                                   static_cast<int>(nbrs.size()) + 1});
    }
  }

  if (goal >= 0) {
    result.success = true;
    result.waypoints = reconstruct_waypoints(arena, goal);
    for (int i = goal; i >= 0; i = arena[static_cast<std::size_t>(i)].parent) {
      result.nodes.push_back(arena[static_cast<std::size_t>(i)].v);
    }
    std::reverse(result.nodes.begin(), result.nodes.end());
    result.final_interval = arena[static_cast<std::size_t>(goal)].interval;
  }
  stats.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace grasp
