#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dyngossip/core.hpp"
#include "dyngossip/engine.hpp"

namespace dyngossip {

/// Stand-in for an unbounded buffer capacity; attach_supersource lowers it to
/// the token count, which no s-t flow can exceed anyway.
inline constexpr int kUnboundedCapacity = std::numeric_limits<int>::max() / 4;

/// A copy of a network node at one level of the time-expanded graph.
/// Level 2i-1 is the start of round i, level 2i its end, level 0 the initial
/// state; level -1 is the optional super-source.
struct EvoVertex {
  NodeId node = 0;
  int level = 0;

  bool operator==(const EvoVertex&) const = default;
  auto operator<=>(const EvoVertex&) const = default;
};

inline constexpr int kSuperSourceLevel = -1;

enum class EdgeKind { broadcast, buffer, selection, source };

inline std::string edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::broadcast: return "broadcast";
    case EdgeKind::buffer: return "buffer";
    case EdgeKind::selection: return "selection";
    case EdgeKind::source: return "source";
  }
  throw std::invalid_argument("edge_kind_name: unknown kind");
}

struct EvoEdge {
  int from = 0;  // vertex ids
  int to = 0;
  EdgeKind kind = EdgeKind::buffer;
  int capacity = 0;
};

/// The leveled capacitated DAG encoding l rounds of a dynamic network:
/// broadcast edges (unit, one per topology edge direction), buffer edges
/// (unbounded, token storage across rounds) and selection edges (unit, one
/// broadcast per node per round). Every edge strictly increases level.
class EvolutionGraph {
public:
  EvolutionGraph(int nodes, int rounds) : n_(nodes), l_(rounds) {
    if (nodes < 0 || rounds < 0)
      throw std::invalid_argument("EvolutionGraph: negative dimensions");
    out_.resize(static_cast<std::size_t>(vertex_count()));
  }

  int node_count() const { return n_; }
  int rounds() const { return l_; }
  int levels() const { return 2 * l_ + 1; }

  int vertex_count() const { return n_ * levels() + (has_source_ ? 1 : 0); }

  bool has_supersource() const { return has_source_; }

  int supersource_id() const {
    if (!has_source_) throw std::logic_error("no super-source attached");
    return n_ * levels();
  }

  int id_of(EvoVertex v) const {
    if (v.level == kSuperSourceLevel) return supersource_id();
    if (v.level < 0 || v.level >= levels() || v.node < 0 || v.node >= n_)
      throw std::out_of_range("EvolutionGraph: vertex out of range");
    return v.level * n_ + v.node;
  }

  EvoVertex vertex_of(int id) const {
    if (has_source_ && id == supersource_id()) return {-1, kSuperSourceLevel};
    if (id < 0 || id >= n_ * levels())
      throw std::out_of_range("EvolutionGraph: vertex id out of range");
    return {id % n_, id / n_};
  }

  const std::vector<EvoEdge>& edges() const { return edges_; }
  const std::vector<int>& out_edges(int vertex_id) const {
    return out_.at(static_cast<std::size_t>(vertex_id));
  }

  std::optional<int> find_edge(int from_id, int to_id) const {
    const auto it = index_.find(key(from_id, to_id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// (node, token) pairs feeding the super-source, sorted by (node, token).
  const std::vector<std::pair<NodeId, TokenId>>& sources() const {
    return sources_;
  }

  int add_edge(EvoVertex from, EvoVertex to, EdgeKind kind, int capacity) {
    const int from_id = id_of(from);
    const int to_id = id_of(to);
    if (to.level <= from.level && from.level != kSuperSourceLevel)
      throw std::invalid_argument("EvolutionGraph: edge must increase level");
    const int edge_id = static_cast<int>(edges_.size());
    edges_.push_back({from_id, to_id, kind, capacity});
    out_[static_cast<std::size_t>(from_id)].push_back(edge_id);
    index_.emplace(key(from_id, to_id), edge_id);
    return edge_id;
  }

  void set_supersource(std::vector<std::pair<NodeId, TokenId>> sources) {
    has_source_ = true;
    out_.resize(static_cast<std::size_t>(vertex_count()));
    sources_ = std::move(sources);
  }

  void set_capacity(int edge_id, int capacity) {
    edges_.at(static_cast<std::size_t>(edge_id)).capacity = capacity;
  }

private:
  static std::uint64_t key(int from_id, int to_id) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(from_id))
            << 32) |
           static_cast<std::uint32_t>(to_id);
  }

  int n_;
  int l_;
  bool has_source_ = false;
  std::vector<EvoEdge> edges_;
  std::vector<std::vector<int>> out_;
  std::unordered_map<std::uint64_t, int> index_;
  std::vector<std::pair<NodeId, TokenId>> sources_;
};

/// Expands rounds [start_round, start_round + l) of a sequence into the
/// 2l+1-level graph. Per round the selection edges come first so that flow
/// search prefers broadcasting over buffering, which keeps extracted
/// schedules short.
inline EvolutionGraph build_evolution_graph(const GraphSequence& seq, int l,
                                            long start_round = 0) {
  const int n = seq.node_count();
  EvolutionGraph evo(n, l);
  for (int i = 1; i <= l; ++i) {
    const CommGraph g = seq.graph_at(start_round + i - 1);
    for (NodeId v = 0; v < n; ++v)
      evo.add_edge({v, 2 * (i - 1)}, {v, 2 * i - 1}, EdgeKind::selection, 1);
    for (const auto& [u, v] : g.edges()) {
      evo.add_edge({u, 2 * i - 1}, {v, 2 * i}, EdgeKind::broadcast, 1);
      evo.add_edge({v, 2 * i - 1}, {u, 2 * i}, EdgeKind::broadcast, 1);
    }
    for (NodeId v = 0; v < n; ++v)
      evo.add_edge({v, 2 * (i - 1)}, {v, 2 * i}, EdgeKind::buffer,
                   kUnboundedCapacity);
  }
  return evo;
}

/// Adds the super-source with one edge per distinct source node, capacity
/// equal to the node's token multiplicity (edges to a shared source fuse).
/// Every token must appear exactly once. Buffer capacities drop to k, which
/// leaves all realizable flows unchanged.
inline EvolutionGraph attach_supersource(
    const EvolutionGraph& evo,
    const std::vector<std::pair<NodeId, TokenId>>& sources) {
  if (evo.has_supersource())
    throw std::invalid_argument("attach_supersource: already attached");
  std::vector<std::pair<NodeId, TokenId>> sorted = sources;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& [node, token] = sorted[i];
    if (node < 0 || node >= evo.node_count() || token < 0)
      throw std::invalid_argument("attach_supersource: source out of range");
  }
  {
    std::vector<TokenId> tokens;
    for (const auto& [node, token] : sorted) tokens.push_back(token);
    std::sort(tokens.begin(), tokens.end());
    if (std::adjacent_find(tokens.begin(), tokens.end()) != tokens.end())
      throw std::invalid_argument("attach_supersource: duplicate token");
  }

  EvolutionGraph result = evo;
  result.set_supersource(sorted);
  const int k = static_cast<int>(sorted.size());
  if (k > 0) {
    for (std::size_t e = 0; e < result.edges().size(); ++e)
      if (result.edges()[e].kind == EdgeKind::buffer)
        result.set_capacity(static_cast<int>(e), k);
  }
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) ++j;
    result.add_edge({-1, kSuperSourceLevel}, {sorted[i].first, 0},
                    EdgeKind::source, static_cast<int>(j - i));
    i = j;
  }
  return result;
}

struct FlowResult {
  int source_id = 0;
  int sink_id = 0;
  long value = 0;
  std::vector<int> edge_flow;  // aligned with EvolutionGraph::edges()
};

/// Exact integral maximum flow (Dinic's blocking-flow method; the graph is a
/// DAG so phases are short).
inline FlowResult max_flow(const EvolutionGraph& evo, EvoVertex source,
                           EvoVertex sink) {
  const int s = evo.id_of(source);
  const int t = evo.id_of(sink);
  const int vertex_count = evo.vertex_count();

  struct Arc {
    int to;
    int cap;
  };
  std::vector<Arc> arcs;
  arcs.reserve(evo.edges().size() * 2);
  std::vector<std::vector<int>> head(static_cast<std::size_t>(vertex_count));
  for (const EvoEdge& e : evo.edges()) {
    head[static_cast<std::size_t>(e.from)].push_back(
        static_cast<int>(arcs.size()));
    arcs.push_back({e.to, e.capacity});
    head[static_cast<std::size_t>(e.to)].push_back(
        static_cast<int>(arcs.size()));
    arcs.push_back({e.from, 0});
  }

  std::vector<int> level(static_cast<std::size_t>(vertex_count));
  std::vector<std::size_t> iter(static_cast<std::size_t>(vertex_count));
  std::vector<int> queue(static_cast<std::size_t>(vertex_count));

  auto bfs = [&]() {
    std::fill(level.begin(), level.end(), -1);
    int head_idx = 0, tail = 0;
    level[static_cast<std::size_t>(s)] = 0;
    queue[tail++] = s;
    while (head_idx < tail) {
      const int u = queue[head_idx++];
      for (const int a : head[static_cast<std::size_t>(u)]) {
        if (arcs[static_cast<std::size_t>(a)].cap > 0 &&
            level[static_cast<std::size_t>(
                arcs[static_cast<std::size_t>(a)].to)] < 0) {
          level[static_cast<std::size_t>(arcs[static_cast<std::size_t>(a)].to)] =
              level[static_cast<std::size_t>(u)] + 1;
          queue[tail++] = arcs[static_cast<std::size_t>(a)].to;
        }
      }
    }
    return level[static_cast<std::size_t>(t)] >= 0;
  };

  auto dfs = [&](auto&& self, int u, int limit) -> int {
    if (u == t) return limit;
    for (auto& i = iter[static_cast<std::size_t>(u)];
         i < head[static_cast<std::size_t>(u)].size(); ++i) {
      const int a = head[static_cast<std::size_t>(u)][i];
      Arc& arc = arcs[static_cast<std::size_t>(a)];
      if (arc.cap <= 0 ||
          level[static_cast<std::size_t>(arc.to)] !=
              level[static_cast<std::size_t>(u)] + 1)
        continue;
      const int pushed = self(self, arc.to, std::min(limit, arc.cap));
      if (pushed > 0) {
        arc.cap -= pushed;
        arcs[static_cast<std::size_t>(a ^ 1)].cap += pushed;
        return pushed;
      }
    }
    return 0;
  };

  long value = 0;
  while (bfs()) {
    std::fill(iter.begin(), iter.end(), 0);
    while (true) {
      const int pushed = dfs(dfs, s, std::numeric_limits<int>::max());
      if (pushed == 0) break;
      value += pushed;
    }
  }

  FlowResult result;
  result.source_id = s;
  result.sink_id = t;
  result.value = value;
  result.edge_flow.resize(evo.edges().size());
  for (std::size_t e = 0; e < evo.edges().size(); ++e)
    result.edge_flow[e] =
        evo.edges()[e].capacity - arcs[2 * e].cap;
  return result;
}

/// Peels the flow into exactly flow.value unit source-to-sink paths (edge-id
/// sequences). The graph is acyclic, so following positive-flow edges always
/// terminates and consumes the flow completely.
inline std::vector<std::vector<int>> decompose_paths(const EvolutionGraph& evo,
                                                     const FlowResult& flow) {
  std::vector<int> remaining = flow.edge_flow;
  std::vector<std::vector<int>> paths;
  for (long p = 0; p < flow.value; ++p) {
    std::vector<int> path;
    int cur = flow.source_id;
    while (cur != flow.sink_id) {
      int chosen = -1;
      for (const int e : evo.out_edges(cur)) {
        if (remaining[static_cast<std::size_t>(e)] > 0) {
          chosen = e;
          break;
        }
      }
      if (chosen < 0)
        throw std::logic_error("decompose_paths: stuck before the sink");
      --remaining[static_cast<std::size_t>(chosen)];
      path.push_back(chosen);
      cur = evo.edges()[static_cast<std::size_t>(chosen)].to;
    }
    paths.push_back(std::move(path));
  }
  for (const int r : remaining)
    if (r != 0) throw std::logic_error("decompose_paths: leftover flow");
  return paths;
}

/// Out-arborescence for one token inside an evolution graph: root at level 0,
/// terminals at the top level, every edge one of the leveled templates.
struct SteinerTree {
  struct Edge {
    EvoVertex from;
    EvoVertex to;
    EdgeKind kind = EdgeKind::buffer;

    bool operator==(const Edge&) const = default;
    auto operator<=>(const Edge&) const = default;
  };

  TokenId token = 0;
  int node_count = 0;
  int rounds = 0;
  EvoVertex root;
  std::vector<EvoVertex> terminals;
  std::vector<Edge> edges;

  bool uses(const Edge& e) const {
    return std::find(edges.begin(), edges.end(), e) != edges.end();
  }
};

/// Converts a feasible schedule into one packed Steiner tree per token by
/// backward induction from the destinations: a node that already held the
/// token continues through its buffer edge; otherwise the lowest-id sender
/// that broadcast the token over an adjacent edge supplies a selection plus
/// broadcast pair. Requires each token to start at exactly one node and every
/// destination to actually receive its token under the schedule.
inline std::vector<SteinerTree> schedule_to_trees(
    const TokenMatrix& init, const GraphSequence& seq, const Schedule& sched,
    const std::vector<std::vector<NodeId>>& dests) {
  const int n = init.node_count();
  const int k = init.token_count();
  const int l = static_cast<int>(sched.rounds.size());
  if (static_cast<int>(dests.size()) != k)
    throw std::invalid_argument("schedule_to_trees: need one dest set per token");

  // Round-start/round-end states and the round graphs actually used.
  std::vector<TokenMatrix> states{init};
  std::vector<CommGraph> graphs;
  for (int j = 0; j < l; ++j) {
    graphs.push_back(seq.graph_at(j));
    states.push_back(
        execute_round(states.back(), sched.rounds[static_cast<std::size_t>(j)],
                      graphs.back())
            .first);
  }

  std::vector<SteinerTree> trees;
  for (TokenId token = 0; token < k; ++token) {
    const std::vector<NodeId> holders = init.holders(token);
    if (holders.size() != 1)
      throw std::invalid_argument(
          "schedule_to_trees: token " + std::to_string(token) +
          " must start at exactly one node");

    SteinerTree tree;
    tree.token = token;
    tree.node_count = n;
    tree.rounds = l;
    tree.root = {holders.front(), 0};

    std::set<NodeId> frontier;
    for (const NodeId d : dests[static_cast<std::size_t>(token)]) {
      if (d < 0 || d >= n)
        throw std::invalid_argument("schedule_to_trees: destination out of range");
      if (!states.back().has(d, token))
        throw ContractViolation("schedule_to_trees: destination " +
                                std::to_string(d) + " never receives token " +
                                std::to_string(token));
      tree.terminals.push_back({d, 2 * l});
      frontier.insert(d);
    }
    std::sort(tree.terminals.begin(), tree.terminals.end());
    tree.terminals.erase(
        std::unique(tree.terminals.begin(), tree.terminals.end()),
        tree.terminals.end());

    std::set<SteinerTree::Edge> edge_set;
    for (int j = l - 1; j >= 0; --j) {
      std::set<NodeId> next_frontier;
      for (const NodeId v : frontier) {
        if (states[static_cast<std::size_t>(j)].has(v, token)) {
          edge_set.insert({{v, 2 * j}, {v, 2 * (j + 1)}, EdgeKind::buffer});
          next_frontier.insert(v);
          continue;
        }
        NodeId sender = -1;
        for (const NodeId u : graphs[static_cast<std::size_t>(j)].neighbors(v)) {
          if (sched.rounds[static_cast<std::size_t>(j)].at(u) == token &&
              (sender < 0 || u < sender))
            sender = u;
        }
        if (sender < 0)
          throw std::logic_error(
              "schedule_to_trees: no sender found for a reached destination");
        edge_set.insert(
            {{sender, 2 * j}, {sender, 2 * j + 1}, EdgeKind::selection});
        edge_set.insert(
            {{sender, 2 * j + 1}, {v, 2 * (j + 1)}, EdgeKind::broadcast});
        next_frontier.insert(sender);
      }
      frontier = std::move(next_frontier);
    }
    tree.edges.assign(edge_set.begin(), edge_set.end());
    trees.push_back(std::move(tree));
  }
  return trees;
}

/// The reverse direction: node u broadcasts token i in round j exactly when
/// tree i uses a broadcast edge out of (u, 2j-1). Two trees claiming the same
/// selection or broadcast edge is a packing violation.
inline Schedule trees_to_schedule(const std::vector<SteinerTree>& trees) {
  Schedule sched;
  if (trees.empty()) return sched;
  const int n = trees.front().node_count;
  const int l = trees.front().rounds;
  for (const SteinerTree& tree : trees)
    if (tree.node_count != n || tree.rounds != l)
      throw std::invalid_argument("trees_to_schedule: mismatched dimensions");

  sched.rounds.assign(static_cast<std::size_t>(l), BroadcastVector::all_empty(n));
  std::map<std::pair<NodeId, int>, TokenId> selection_claims;
  std::set<SteinerTree::Edge> broadcast_claims;
  for (const SteinerTree& tree : trees) {
    for (const SteinerTree::Edge& e : tree.edges) {
      if (e.kind == EdgeKind::selection) {
        const std::pair<NodeId, int> key{e.from.node, e.to.level};
        const auto [it, inserted] = selection_claims.emplace(key, tree.token);
        if (!inserted && it->second != tree.token)
          throw ContractViolation(
              "trees_to_schedule: two trees claim one selection edge");
      } else if (e.kind == EdgeKind::broadcast) {
        if (!broadcast_claims.insert(e).second)
          throw ContractViolation(
              "trees_to_schedule: two trees claim one broadcast edge");
        const int round = (e.from.level + 1) / 2;  // from level 2j-1
        sched.rounds[static_cast<std::size_t>(round - 1)].set(e.from.node,
                                                              tree.token);
      }
    }
  }
  return sched;
}

/// True iff every tree is a valid out-arborescence over existing edges of the
/// evolution graph, reaches all its terminals, and the per-edge usage summed
/// over trees respects capacity.
inline bool verify_packing(const std::vector<SteinerTree>& trees,
                           const EvolutionGraph& evo) {
  std::unordered_map<int, int> usage;
  for (const SteinerTree& tree : trees) {
    if (tree.node_count != evo.node_count() || tree.rounds != evo.rounds())
      return false;
    if (tree.root.level != 0) return false;

    std::map<EvoVertex, std::vector<EvoVertex>> children;
    std::map<EvoVertex, int> indegree;
    for (const SteinerTree::Edge& e : tree.edges) {
      const auto edge_id = evo.find_edge(evo.id_of(e.from), evo.id_of(e.to));
      if (!edge_id) return false;
      if (evo.edges()[static_cast<std::size_t>(*edge_id)].kind != e.kind)
        return false;
      ++usage[*edge_id];
      children[e.from].push_back(e.to);
      if (++indegree[e.to] > 1) return false;  // two parents
    }
    if (indegree.count(tree.root)) return false;

    std::set<EvoVertex> reached{tree.root};
    std::vector<EvoVertex> stack{tree.root};
    while (!stack.empty()) {
      const EvoVertex v = stack.back();
      stack.pop_back();
      const auto it = children.find(v);
      if (it == children.end()) continue;
      for (const EvoVertex& w : it->second)
        if (reached.insert(w).second) stack.push_back(w);
    }
    for (const SteinerTree::Edge& e : tree.edges)
      if (!reached.count(e.from)) return false;  // disconnected from root
    for (const EvoVertex& terminal : tree.terminals) {
      if (terminal.level != 2 * evo.rounds()) return false;
      if (!reached.count(terminal)) return false;
    }
  }
  for (const auto& [edge_id, count] : usage)
    if (count > evo.edges()[static_cast<std::size_t>(edge_id)].capacity)
      return false;
  return true;
}

}  // namespace dyngossip
