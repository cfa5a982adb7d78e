#include "grasp/reachgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace grasp {

namespace {

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

struct Candidate {
  int j = 0;
  double dhat = 0.0;
  double angle = 0.0;
  double efficiency = 0.0;
};

// Higher efficiency first, then lower index.
bool more_efficient(const Candidate& a, const Candidate& b) {
  if (a.efficiency != b.efficiency) return a.efficiency > b.efficiency;
  return a.j < b.j;
}

void check_edges(std::size_t n, const Adjacency& adjacency) {
  if (adjacency.size() != n) throw std::invalid_argument("adjacency size does not match node count");
  for (const auto& list : adjacency) {
    for (const Edge& e : list) {
      if (e.to < 0 || static_cast<std::size_t>(e.to) >= n) throw std::invalid_argument("edge target out of range");
    }
  }
}

}  // namespace

GraphStats compute_stats(std::span<const Vec2> nodes, const Adjacency& adjacency) {
  GraphStats s;
  s.nodes = nodes.size();
  double length = 0.0;
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    for (const Edge& e : adjacency[i]) {
      ++s.edges;
      length += distance(nodes[i], nodes[static_cast<std::size_t>(e.to)]);
    }
  }
  if (s.nodes > 0) s.mean_degree = static_cast<double>(s.edges) / static_cast<double>(s.nodes);
  if (s.edges > 0) s.mean_edge_length = length / static_cast<double>(s.edges);
  return s;
}

void GraphConfig::validate() const {
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell_size must be positive");
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
  if (!(cluster_threshold() > 0.0)) throw std::invalid_argument("threshold must be positive");
  if (!(delta >= 0.0) || !(k > delta)) throw std::invalid_argument("need k > delta >= 0");
  if (n_bins < 1) throw std::invalid_argument("n_bins must be at least 1");
  if (target_degree < 1) throw std::invalid_argument("target_degree must be at least 1");
}

std::string GraphConfig::hash() const {
  std::ostringstream text;
  text.precision(17);
  text << cell_size << '|' << budget << '|' << cluster_threshold() << '|' << k << '|' << delta << '|'
       << n_bins << '|' << target_degree << '|' << seed;
  // FNV-1a
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t ReachGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& list : adjacency) n += list.size();
  return n;
}

std::vector<Vec2> grid_subsample(std::span<const Vec2> states, double cell_size, std::size_t budget,
                                 std::uint64_t seed) {
  if (states.empty()) throw std::invalid_argument("grid_subsample: no states");
  if (!(cell_size > 0.0)) throw std::invalid_argument("grid_subsample: cell_size must be positive");
  std::map<std::pair<long long, long long>, std::vector<Vec2>> cells;
  for (const Vec2& s : states) {
    cells[{static_cast<long long>(std::floor(s.x / cell_size)), static_cast<long long>(std::floor(s.y / cell_size))}]
        .push_back(s);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<Vec2>*> order;
  for (auto& [key, bucket] : cells) {
    std::shuffle(bucket.begin(), bucket.end(), rng);
    order.push_back(&bucket);
  }
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t limit = std::min(budget, states.size());
  std::vector<Vec2> out;
  out.reserve(limit);
  for (std::size_t round = 0; out.size() < limit; ++round) {
    for (auto* bucket : order) {
      if (round < bucket->size()) out.push_back((*bucket)[round]);
      if (out.size() == limit) break;
    }
  }
  return out;
}

std::vector<Vec2> cluster_medoids(std::span<const Vec2> states, const ReachabilityOracle& oracle,
                                  double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("cluster_medoids: threshold must be positive");
  auto sym = [&](std::size_t a, std::size_t b) {
    return 0.5 * (oracle.distance(states[a], states[b]) + oracle.distance(states[b], states[a]));
  };
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < states.size(); ++i) {
    bool placed = false;
    for (auto& members : clusters) {
      if (sym(members.front(), i) < threshold) {
        members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({i});
  }

  std::vector<Vec2> medoids;
  medoids.reserve(clusters.size());
  for (const auto& members : clusters) {
    std::size_t best = members.front();
    double best_total = kUnreachable;
    for (std::size_t a : members) {
      double total = 0.0;
      for (std::size_t b : members) {
        if (a != b) total += sym(a, b);
      }
      if (total < best_total) {
        best_total = total;
        best = a;
      }
    }
    medoids.push_back(states[best]);
  }
  return medoids;
}

Adjacency build_edges(std::span<const Vec2> nodes, const ReachabilityOracle& oracle,
                      const EdgeSelection& sel) {
  if (!(sel.delta >= 0.0) || !(sel.k > sel.delta)) throw std::invalid_argument("build_edges: need k > delta >= 0");
  if (sel.n_bins < 1 || sel.target_degree < 1) throw std::invalid_argument("build_edges: bad bin or degree count");
  const std::size_t n = nodes.size();
  const double limit = sel.k - sel.delta;
  const double sector = 2.0 * std::numbers::pi / sel.n_bins;

  std::vector<std::vector<double>> dhat(n, std::vector<double>(n, kUnreachable));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) dhat[i][j] = oracle.distance(nodes[i], nodes[j]);
    }
  }

  Adjacency adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Candidate> candidates;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(dhat[i][j] < limit)) continue;
      const Vec2 d = nodes[j] - nodes[i];
      const double eff = dhat[i][j] > 0.0 ? norm(d) / dhat[i][j] : kUnreachable;
      candidates.push_back({static_cast<int>(j), dhat[i][j], std::atan2(d.y, d.x), eff});
    }

    std::vector<int> best_in_bin(static_cast<std::size_t>(sel.n_bins), -1);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      int bin = static_cast<int>(std::floor((candidates[c].angle + std::numbers::pi) / sector));
      bin = std::clamp(bin, 0, sel.n_bins - 1);
      int& slot = best_in_bin[static_cast<std::size_t>(bin)];
      if (slot < 0 || more_efficient(candidates[c], candidates[static_cast<std::size_t>(slot)])) {
        slot = static_cast<int>(c);
      }
    }
    std::vector<bool> taken(candidates.size(), false);
    std::vector<double> directions;
    for (int slot : best_in_bin) {
      if (slot < 0) continue;
      taken[static_cast<std::size_t>(slot)] = true;
      directions.push_back(candidates[static_cast<std::size_t>(slot)].angle);
    }

    if (sel.top_up) {
      while (static_cast<int>(directions.size()) < sel.target_degree) {
        int pick = -1;
        double pick_novelty = -1.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          if (taken[c]) continue;
          double novelty = std::numbers::pi;
          for (double dir : directions) novelty = std::min(novelty, angle_gap(candidates[c].angle, dir));
          const bool better =
              pick < 0 || novelty > pick_novelty ||
              (novelty == pick_novelty && more_efficient(candidates[c], candidates[static_cast<std::size_t>(pick)]));
          if (better) {
            pick = static_cast<int>(c);
            pick_novelty = novelty;
          }
        }
        if (pick < 0) break;
        taken[static_cast<std::size_t>(pick)] = true;
        directions.push_back(candidates[static_cast<std::size_t>(pick)].angle);
      }
    }
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (taken[c]) adjacency[i].push_back({candidates[c].j, candidates[c].dhat});
    }
  }

  if (sel.bidirectional) {
    std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
      for (const Edge& e : adjacency[i]) present[i][static_cast<std::size_t>(e.to)] = true;
    }
    Adjacency reverse(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const Edge& e : adjacency[i]) {
        const auto j = static_cast<std::size_t>(e.to);
        if (!present[j][i] && dhat[j][i] < limit) {
          present[j][i] = true;
          reverse[j].push_back({static_cast<int>(i), dhat[j][i]});
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      adjacency[j].insert(adjacency[j].end(), reverse[j].begin(), reverse[j].end());
    }
  }
  for (auto& list : adjacency) {
    std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
  }
  return adjacency;
}

std::vector<std::vector<int>> strongly_connected_components(const Adjacency& adjacency) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int counter = 0;

  // Iterative Tarjan: (node, next edge position) frames.
  std::vector<std::pair<int, std::size_t>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] >= 0) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      const auto uv = static_cast<std::size_t>(v);
      if (pos == 0 && index[uv] < 0) {
        index[uv] = low[uv] = counter++;
        stack.push_back(v);
        on_stack[uv] = true;
      }
      if (pos < adjacency[uv].size()) {
        const int w = adjacency[uv][pos++].to;
        const auto uw = static_cast<std::size_t>(w);
        if (index[uw] < 0) {
          frames.push_back({w, 0});
        } else if (on_stack[uw]) {
          low[uv] = std::min(low[uv], index[uw]);
        }
        continue;
      }
      if (low[uv] == index[uv]) {
        std::vector<int> comp;
        int w = -1;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      const int finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        const auto parent = static_cast<std::size_t>(frames.back().first);
        low[parent] = std::min(low[parent], low[static_cast<std::size_t>(finished)]);
      }
    }
  }
  std::sort(components.begin(), components.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) { return a.front() < b.front(); });
  return components;
}

ReachGraph largest_scc(std::span<const Vec2> nodes, const Adjacency& adjacency) {
  check_edges(nodes.size(), adjacency);
  ReachGraph g;
  if (nodes.empty()) return g;
  const auto components = strongly_connected_components(adjacency);
  const std::vector<int>* best = &components.front();
  for (const auto& comp : components) {
    if (comp.size() > best->size()) best = &comp;
  }
  std::vector<int> remap(nodes.size(), -1);
  for (std::size_t i = 0; i < best->size(); ++i) remap[static_cast<std::size_t>((*best)[i])] = static_cast<int>(i);
  g.nodes.reserve(best->size());
  g.adjacency.resize(best->size());
  for (std::size_t i = 0; i < best->size(); ++i) {
    const auto old = static_cast<std::size_t>((*best)[i]);
    g.nodes.push_back(nodes[old]);
    for (const Edge& e : adjacency[old]) {
      const int to = remap[static_cast<std::size_t>(e.to)];
      if (to >= 0) g.adjacency[i].push_back({to, e.dhat});
    }
  }
  g.stats = compute_stats(g.nodes, g.adjacency);
  return g;
}

ReachGraph build_graph(std::span<const Vec2> states, const ReachabilityOracle& oracle, const GraphConfig& config) {
  config.validate();
  const auto sampled = grid_subsample(states, config.cell_size, config.budget, config.seed);
  const auto medoids = cluster_medoids(sampled, oracle, config.cluster_threshold());
  const EdgeSelection sel{config.k, config.delta, config.n_bins, config.target_degree, true, true};
  const auto adjacency = build_edges(medoids, oracle, sel);
  ReachGraph g = largest_scc(medoids, adjacency);
  g.k = config.k;
  g.delta = config.delta;
  g.config_hash = config.hash();
  return g;
}

int nearest_node(const ReachGraph& graph, Vec2 pos) {
  if (graph.nodes.empty()) throw std::invalid_argument("nearest_node: empty graph");
  int best = 0;
  double best_d = squared_norm(graph.nodes[0] - pos);
  for (std::size_t i = 1; i < graph.nodes.size(); ++i) {
    const double d = squared_norm(graph.nodes[i] - pos);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

int hop_diameter(const ReachGraph& graph) {
  const std::size_t n = graph.size();
  int diameter = 0;
  std::vector<int> dist;
  std::queue<int> queue;
  for (std::size_t s = 0; s < n; ++s) {
    dist.assign(n, -1);
    dist[s] = 0;
    queue.push(static_cast<int>(s));
    std::size_t reached = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      for (const Edge& e : graph.neighbors(v)) {
        auto& d = dist[static_cast<std::size_t>(e.to)];
        if (d >= 0) continue;
        d = dist[static_cast<std::size_t>(v)] + 1;
        diameter = std::max(diameter, d);
        ++reached;
        queue.push(e.to);
      }
    }
    if (reached != n) return -1;
  }
  return diameter;
}

void save_graph(const ReachGraph& graph, std::ostream& out) {
  nlohmann::json j;
  j["k"] = graph.k;
  j["delta"] = graph.delta;
  j["config_hash"] = graph.config_hash;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const Vec2 p = graph.nodes[i];
    nodes.push_back({{"id", i}, {"pos", {p.x, p.y}}, {"state", {p.x, p.y}}});
  }
  auto& edges = j["edges"] = nlohmann::json::array();
  for (std::size_t i = 0; i < graph.adjacency.size(); ++i) {
    for (const Edge& e : graph.adjacency[i]) edges.push_back({{"from", i}, {"to", e.to}, {"dhat", e.dhat}});
  }
  j["stats"] = {{"nodes", graph.stats.nodes},
                {"edges", graph.stats.edges},
                {"mean_degree", graph.stats.mean_degree},
                {"mean_edge_length", graph.stats.mean_edge_length}};
  out << j.dump(1) << '\n';
}

ReachGraph load_graph(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  ReachGraph g;
  g.k = j.at("k").get<double>();
  g.delta = j.at("delta").get<double>();
  g.config_hash = j.value("config_hash", std::string());
  const auto& nodes = j.at("nodes");
  g.nodes.resize(nodes.size());
  for (const auto& node : nodes) {
    const auto id = node.at("id").get<std::size_t>();
    if (id >= g.nodes.size()) throw std::runtime_error("graph: node id out of range");
    g.nodes[id] = {node.at("pos").at(0).get<double>(), node.at("pos").at(1).get<double>()};
  }
  g.adjacency.resize(g.nodes.size());
  for (const auto& e : j.at("edges")) {
    const auto from = e.at("from").get<std::size_t>();
    const int to = e.at("to").get<int>();
    const double dhat = e.at("dhat").get<double>();
    if (from >= g.nodes.size() || to < 0 || static_cast<std::size_t>(to) >= g.nodes.size()) {
      throw std::runtime_error("graph: edge endpoint out of range");
    }
    if (static_cast<std::size_t>(to) == from) throw std::runtime_error("graph: self-edge");
    if (!(dhat < g.k - g.delta)) throw std::runtime_error("graph: edge violates dhat < k - delta");
    g.adjacency[from].push_back({to, dhat});
  }
  if (!g.nodes.empty() && hop_diameter(g) < 0) throw std::runtime_error("graph: not strongly connected");
  g.stats = compute_stats(g.nodes, g.adjacency);
  return g;
}

}  // namespace grasp
