#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dyngossip/core.hpp"
#include "dyngossip/engine.hpp"
#include "dyngossip/strategies.hpp"

namespace dyngossip {

/// Connected components of the free-edge graph for one committed round.
/// Blocks are ordered by their minimum node id; the representative of each
/// block is that minimum. Deterministic so adversarial runs replay exactly.
struct ComponentPartition {
  std::vector<std::vector<NodeId>> blocks;
  std::vector<NodeId> representatives;

  std::size_t block_count() const { return blocks.size(); }
};

namespace detail {

class DisjointSets {
public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      parent_[static_cast<std::size_t>(x)] =
          parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
      x = parent_[static_cast<std::size_t>(x)];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }

private:
  std::vector<int> parent_;
};

// Free-pair scan restricted to a node subset (ascending ids).
inline std::vector<CommGraph::Edge> free_pairs(const TokenMatrix& state,
                                               const BroadcastVector& bcast,
                                               const std::vector<NodeId>& nodes) {
  std::vector<CommGraph::Edge> pairs;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (is_free_edge(state, bcast, nodes[i], nodes[j]))
        pairs.emplace_back(nodes[i], nodes[j]);
  return pairs;
}

inline ComponentPartition components_of(int n,
                                        const std::vector<NodeId>& nodes,
                                        const std::vector<CommGraph::Edge>& pairs) {
  DisjointSets dsu(n);
  for (const auto& [u, v] : pairs) dsu.unite(u, v);
  ComponentPartition part;
  std::vector<int> block_of(static_cast<std::size_t>(n), -1);
  for (const NodeId u : nodes) {
    const int root = dsu.find(u);
    if (block_of[static_cast<std::size_t>(root)] < 0) {
      block_of[static_cast<std::size_t>(root)] =
          static_cast<int>(part.blocks.size());
      part.blocks.emplace_back();
      part.representatives.push_back(u);  // first-seen = minimum id
    }
    part.blocks[static_cast<std::size_t>(block_of[static_cast<std::size_t>(root)])]
        .push_back(u);
  }
  return part;
}

}  // namespace detail

/// Components of the graph on V whose edges are exactly the free pairs under
/// the committed broadcasts.
inline ComponentPartition free_components(const TokenMatrix& state,
                                          const BroadcastVector& bcast) {
  check_feasible(state, bcast);
  std::vector<NodeId> all(static_cast<std::size_t>(state.node_count()));
  std::iota(all.begin(), all.end(), 0);
  return detail::components_of(state.node_count(), all,
                               detail::free_pairs(state, bcast, all));
}

/// The strong adversary's round graph: every free edge, plus the block
/// representatives joined consecutively into a line. The result is connected
/// and has exactly (block count - 1) non-free edges, each of which can yield
/// at most two useful exchanges.
inline CommGraph adversary_graph(const TokenMatrix& state,
                                 const BroadcastVector& bcast) {
  check_feasible(state, bcast);
  const int n = state.node_count();
  std::vector<NodeId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::vector<CommGraph::Edge> edges = detail::free_pairs(state, bcast, all);
  const ComponentPartition part = detail::components_of(n, all, edges);
  for (std::size_t i = 1; i < part.representatives.size(); ++i)
    edges.emplace_back(part.representatives[i - 1], part.representatives[i]);
  return CommGraph(n, std::move(edges));
}

/// Variant that treats `supernode` as one contracted node: its members form a
/// clique, free edges are placed only among the remaining nodes, and a single
/// edge joins the contracted set (as one line endpoint) to the rest. Useful
/// exchanges through the contracted set are therefore capped at one per round.
inline CommGraph adversary_graph_supernode(const TokenMatrix& state,
                                           const BroadcastVector& bcast,
                                           const std::vector<NodeId>& supernode) {
  check_feasible(state, bcast);
  const int n = state.node_count();
  std::vector<char> inside(static_cast<std::size_t>(n), 0);
  for (const NodeId u : supernode) {
    if (u < 0 || u >= n)
      throw std::invalid_argument("supernode member out of range");
    if (inside[static_cast<std::size_t>(u)])
      throw std::invalid_argument("duplicate supernode member");
    inside[static_cast<std::size_t>(u)] = 1;
  }
  if (supernode.empty()) return adversary_graph(state, bcast);

  std::vector<NodeId> rest;
  for (NodeId u = 0; u < n; ++u)
    if (!inside[static_cast<std::size_t>(u)]) rest.push_back(u);

  std::vector<NodeId> members = supernode;
  std::sort(members.begin(), members.end());

  std::vector<CommGraph::Edge> edges;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      edges.emplace_back(members[i], members[j]);

  if (!rest.empty()) {
    std::vector<CommGraph::Edge> free = detail::free_pairs(state, bcast, rest);
    const ComponentPartition part = detail::components_of(n, rest, free);
    edges.insert(edges.end(), free.begin(), free.end());
    for (std::size_t i = 1; i < part.representatives.size(); ++i)
      edges.emplace_back(part.representatives[i - 1], part.representatives[i]);
    edges.emplace_back(part.representatives.back(), members.front());
  }
  return CommGraph(n, std::move(edges));
}

inline AdversaryPolicy make_strong_adversary() {
  return [](const TokenMatrix& state, const BroadcastVector& bcast) {
    return adversary_graph(state, bcast);
  };
}

inline AdversaryPolicy make_supernode_adversary(std::vector<NodeId> supernode) {
  return [supernode = std::move(supernode)](const TokenMatrix& state,
                                            const BroadcastVector& bcast) {
    return adversary_graph_supernode(state, bcast, supernode);
  };
}

/// A sequence of distinct nodes paired with tokens (at most one empty, the
/// rest distinct) such that for every i != j, node i misses token j or node j
/// misses token i. Its maximum size caps the progress any round can make.
struct HalfEmptyConfig {
  std::vector<NodeId> nodes;
  std::vector<TokenId> tokens;

  std::size_t size() const { return nodes.size(); }

  /// Shape constraints plus the pairwise condition, evaluated against a
  /// token distribution. The empty token counts as held by everyone, so a
  /// pair involving it reduces to the other side's missing condition.
  bool valid_for(const TokenMatrix& state) const {
    if (nodes.size() != tokens.size()) return false;
    const int n = state.node_count();
    const int k = state.token_count();
    int empties = 0;
    std::vector<char> node_seen(static_cast<std::size_t>(n), 0);
    std::vector<char> token_seen(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const NodeId v = nodes[i];
      const TokenId t = tokens[i];
      if (v < 0 || v >= n || node_seen[static_cast<std::size_t>(v)]) return false;
      node_seen[static_cast<std::size_t>(v)] = 1;
      if (t == kEmptyToken) {
        if (++empties > 1) return false;
      } else {
        if (t < 0 || t >= k || token_seen[static_cast<std::size_t>(t)])
          return false;
        token_seen[static_cast<std::size_t>(t)] = 1;
      }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        const bool i_misses_j =
            tokens[j] != kEmptyToken && !state.has(nodes[i], tokens[j]);
        const bool j_misses_i =
            tokens[i] != kEmptyToken && !state.has(nodes[j], tokens[i]);
        if (!i_misses_j && !j_misses_i) return false;
      }
    return true;
  }
};

/// Builds the half-empty configuration (representative, its broadcast) per
/// free component and checks it against the round-start state: with m useful
/// exchanges in the adversary's round, the configuration has size l with
/// 2(l - 1) >= m, i.e. l >= m/2 + 1.
inline HalfEmptyConfig verify_lemma1(const TokenMatrix& state,
                                     const BroadcastVector& bcast) {
  const ComponentPartition part = free_components(state, bcast);
  HalfEmptyConfig config;
  for (const NodeId rep : part.representatives) {
    config.nodes.push_back(rep);
    config.tokens.push_back(bcast.at(rep));
  }
  if (!config.valid_for(state))
    throw std::logic_error("verify_lemma1: representatives are not half-empty");
  const auto [next, metrics] =
      execute_round(state, bcast, adversary_graph(state, bcast));
  if (2 * (static_cast<long>(config.size()) - 1) < metrics.useful_exchanges)
    throw std::logic_error("verify_lemma1: size below useful-exchange bound");
  return config;
}

/// Maximum-size half-empty configuration by backtracking, capped at
/// size_limit. Nodes are tried most-missing first with an upper-bound prune;
/// exponential worst case, intended for desk-scale instances. By default only
/// real tokens are paired; allow_empty_token additionally lets one entry use
/// the empty token, matching everything a feasible broadcast round can emit.
inline HalfEmptyConfig max_half_empty(const TokenMatrix& state,
                                      std::size_t size_limit,
                                      bool allow_empty_token = false) {
  const int n = state.node_count();
  const int k = state.token_count();
  std::vector<NodeId> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return state.node_missing(a) > state.node_missing(b);
  });

  HalfEmptyConfig best;
  HalfEmptyConfig cur;
  std::vector<char> token_used(static_cast<std::size_t>(k), 0);
  bool empty_used = false;

  auto compatible = [&](NodeId v, TokenId t) {
    for (std::size_t i = 0; i < cur.nodes.size(); ++i) {
      const bool new_missing_old =
          cur.tokens[i] != kEmptyToken && !state.has(v, cur.tokens[i]);
      const bool old_missing_new = t != kEmptyToken && !state.has(cur.nodes[i], t);
      if (!new_missing_old && !old_missing_new) return false;
    }
    return true;
  };

  // Returns true once a configuration of size_limit is found.
  auto search = [&](auto&& self, std::size_t idx) -> bool {
    if (cur.size() > best.size()) best = cur;
    if (best.size() >= size_limit) return true;
    if (idx == order.size()) return false;
    if (cur.size() + (order.size() - idx) <= best.size()) return false;
    const NodeId v = order[idx];
    for (TokenId t = 0; t < k; ++t) {
      if (token_used[static_cast<std::size_t>(t)] || !compatible(v, t)) continue;
      token_used[static_cast<std::size_t>(t)] = 1;
      cur.nodes.push_back(v);
      cur.tokens.push_back(t);
      const bool done = self(self, idx + 1);
      cur.nodes.pop_back();
      cur.tokens.pop_back();
      token_used[static_cast<std::size_t>(t)] = 0;
      if (done) return true;
    }
    if (allow_empty_token && !empty_used && compatible(v, kEmptyToken)) {
      empty_used = true;
      cur.nodes.push_back(v);
      cur.tokens.push_back(kEmptyToken);
      const bool done = self(self, idx + 1);
      cur.nodes.pop_back();
      cur.tokens.pop_back();
      empty_used = false;
      if (done) return true;
    }
    return self(self, idx + 1);
  };
  search(search, 0);
  return best;
}

/// Bipartite reduction between an initial distribution with at most one token
/// per node (each token at exactly one node) and a richer distribution: node
/// v can be simulated by node u when u's tokens are a superset of v's.
/// Returns a perfect matching (entry v -> u) or nullopt if none exists.
inline std::optional<std::vector<NodeId>> matching_reduction(
    const TokenMatrix& single, const TokenMatrix& rich) {
  if (single.node_count() != rich.node_count() ||
      single.token_count() != rich.token_count())
    throw std::invalid_argument("matching_reduction: dimension mismatch");
  const int n = single.node_count();
  const int k = single.token_count();
  for (NodeId u = 0; u < n; ++u)
    if (k - single.node_missing(u) > 1)
      throw std::invalid_argument(
          "matching_reduction: a node holds more than one token");
  for (TokenId t = 0; t < k; ++t)
    if (single.holder_count(t) != 1)
      throw std::invalid_argument(
          "matching_reduction: token not at exactly one node");

  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) {
    const std::vector<TokenId> mine = single.tokens_of(v);
    for (NodeId u = 0; u < n; ++u)
      if (mine.empty() || rich.has(u, mine.front()))
        adj[static_cast<std::size_t>(v)].push_back(u);
  }

  // Hopcroft-Karp.
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> match_left(static_cast<std::size_t>(n), -1);
  std::vector<int> match_right(static_cast<std::size_t>(n), -1);
  std::vector<int> dist(static_cast<std::size_t>(n), 0);
  std::vector<int> queue(static_cast<std::size_t>(n), 0);

  auto bfs = [&]() {
    int head = 0, tail = 0;
    for (int v = 0; v < n; ++v) {
      if (match_left[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = 0;
        queue[tail++] = v;
      } else {
        dist[static_cast<std::size_t>(v)] = kInf;
      }
    }
    bool reachable_free = false;
    while (head < tail) {
      const int v = queue[head++];
      for (const NodeId u : adj[static_cast<std::size_t>(v)]) {
        const int w = match_right[static_cast<std::size_t>(u)];
        if (w < 0) {
          reachable_free = true;
        } else if (dist[static_cast<std::size_t>(w)] == kInf) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
          queue[tail++] = w;
        }
      }
    }
    return reachable_free;
  };

  auto dfs = [&](auto&& self, int v) -> bool {
    for (const NodeId u : adj[static_cast<std::size_t>(v)]) {
      const int w = match_right[static_cast<std::size_t>(u)];
      if (w < 0 || (dist[static_cast<std::size_t>(w)] ==
                        dist[static_cast<std::size_t>(v)] + 1 &&
                    self(self, w))) {
        match_left[static_cast<std::size_t>(v)] = u;
        match_right[static_cast<std::size_t>(u)] = v;
        return true;
      }
    }
    dist[static_cast<std::size_t>(v)] = kInf;
    return false;
  };

  int matched = 0;
  while (bfs()) {
    for (int v = 0; v < n; ++v)
      if (match_left[static_cast<std::size_t>(v)] < 0 && dfs(dfs, v)) ++matched;
  }
  if (matched != n) return std::nullopt;
  return std::vector<NodeId>(match_left.begin(), match_left.end());
}

/// One adversarial run and the quantities the round lower bound is read from.
struct ExperimentRecord {
  int n = 0;
  int k = 0;
  std::uint64_t seed = 0;
  std::string strategy;
  long max_rounds = 0;
  long rounds_used = 0;
  bool completed = false;
  long initial_missing = 0;
  long final_missing = 0;
  long max_useful = 0;
  /// rounds needed by any run that starts this far behind and progresses this
  /// fast: initial_missing / max(1, max_useful).
  double round_bound = 0.0;
  std::vector<RoundMetrics> per_round;
};

/// Runs an online strategy against the strong adversary from a bernoulli(3/4)
/// start and records per-round metrics. max_rounds < 0 defaults to n*k.
inline ExperimentRecord lower_bound_experiment(int n, int k, StrategyKind kind,
                                               std::uint64_t seed,
                                               long max_rounds = -1) {
  if (max_rounds < 0) max_rounds = static_cast<long>(n) * k;
  const TokenMatrix init = new_distribution(n, k, BernoulliInit{0.75}, seed);
  const Transcript tr = run_online(make_strategy(kind, seed),
                                   make_strong_adversary(), init, max_rounds);
  ExperimentRecord rec;
  rec.n = n;
  rec.k = k;
  rec.seed = seed;
  rec.strategy = strategy_name(kind);
  rec.max_rounds = max_rounds;
  rec.rounds_used = static_cast<long>(tr.rounds.size());
  rec.completed = tr.final_state.complete();
  rec.initial_missing = tr.initial.missing_count();
  rec.final_missing = tr.final_state.missing_count();
  for (const auto& round : tr.rounds) {
    rec.max_useful = std::max(rec.max_useful, round.metrics.useful_exchanges);
    rec.per_round.push_back(round.metrics);
  }
  rec.round_bound = static_cast<double>(rec.initial_missing) /
                    static_cast<double>(std::max<long>(1, rec.max_useful));
  return rec;
}

}  // namespace dyngossip
