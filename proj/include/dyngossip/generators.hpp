#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "dyngossip/core.hpp"
#include "dyngossip/rng.hpp"

namespace dyngossip {

inline CommGraph path_graph(int n) {
  std::vector<CommGraph::Edge> edges;
  for (NodeId u = 0; u + 1 < n; ++u) edges.emplace_back(u, u + 1);
  return CommGraph(n, std::move(edges));
}

inline CommGraph star_graph(int n, NodeId hub) {
  if (hub < 0 || hub >= n) throw std::invalid_argument("star_graph: bad hub");
  std::vector<CommGraph::Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    if (u != hub) edges.emplace_back(u, hub);
  return CommGraph(n, std::move(edges));
}

/// Uniformly random labeled tree (random sequence decoded the standard way);
/// for n <= 2 the unique tree.
inline std::vector<CommGraph::Edge> random_tree_edges(int n, Rng& rng) {
  std::vector<CommGraph::Edge> edges;
  if (n <= 1) return edges;
  if (n == 2) return {{0, 1}};
  std::vector<int> prufer(static_cast<std::size_t>(n - 2));
  for (int& x : prufer) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

  std::vector<int> degree(static_cast<std::size_t>(n), 1);
  for (const int x : prufer) ++degree[static_cast<std::size_t>(x)];
  std::set<int> leaves;
  for (int u = 0; u < n; ++u)
    if (degree[static_cast<std::size_t>(u)] == 1) leaves.insert(u);
  for (const int x : prufer) {
    const int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(leaf, x);
    if (--degree[static_cast<std::size_t>(x)] == 1) leaves.insert(x);
  }
  const int a = *leaves.begin();
  const int b = *std::next(leaves.begin());
  edges.emplace_back(a, b);
  return edges;
}

/// G(n, p) with a uniformly random spanning tree unioned in, so every round
/// is connected. Pure in (seed, round): re-querying a round regenerates the
/// same graph.
inline CommGraph gnp_repair_graph(int n, double p, std::uint64_t seed,
                                  long round) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("gnp_repair_graph: p outside [0,1]");
  Rng rng = Rng::substream(seed, "generator", static_cast<std::uint64_t>(round));
  std::set<CommGraph::Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) edges.emplace(u, v);
  for (auto [u, v] : random_tree_edges(n, rng)) {
    if (u > v) std::swap(u, v);
    edges.emplace(u, v);
  }
  return CommGraph(n, {edges.begin(), edges.end()});
}

/// Inputs the sequence generators understand. `recorded` wraps an existing
/// graph list (cyclically when re-materialized longer than it is).
struct GeneratorSpec {
  enum class Model { gnp_repair, static_graph, path, star_rotating, recorded };

  Model model = Model::path;
  int n = 0;
  std::uint64_t seed = 0;
  double p = 0.0;                       // gnp_repair
  std::optional<CommGraph> base;        // static_graph
  std::vector<CommGraph> recorded_rounds;  // recorded
};

namespace detail {

inline CommGraph generate_round(const GeneratorSpec& spec, long round) {
  switch (spec.model) {
    case GeneratorSpec::Model::gnp_repair:
      return gnp_repair_graph(spec.n, spec.p, spec.seed, round);
    case GeneratorSpec::Model::static_graph:
      if (!spec.base)
        throw std::invalid_argument("generator: static model needs a base graph");
      if (spec.base->node_count() != spec.n)
        throw std::invalid_argument("generator: base graph size mismatch");
      return *spec.base;
    case GeneratorSpec::Model::path:
      return path_graph(spec.n);
    case GeneratorSpec::Model::star_rotating:
      return star_graph(spec.n, static_cast<NodeId>(round % spec.n));
    case GeneratorSpec::Model::recorded: {
      if (spec.recorded_rounds.empty())
        throw std::invalid_argument("generator: recorded model needs rounds");
      const auto size = static_cast<long>(spec.recorded_rounds.size());
      return spec.recorded_rounds[static_cast<std::size_t>(round % size)];
    }
  }
  throw std::invalid_argument("generator: unknown model");
}

}  // namespace detail

/// Materializes `rounds` graphs into a recorded sequence.
inline GraphSequence generate_sequence(
    const GeneratorSpec& spec, long rounds,
    GraphSequence::Extend extend = GraphSequence::Extend::cycle) {
  if (rounds < 0) throw std::invalid_argument("generate_sequence: negative rounds");
  std::vector<CommGraph> list;
  list.reserve(static_cast<std::size_t>(rounds));
  for (long r = 0; r < rounds; ++r) list.push_back(detail::generate_round(spec, r));
  return GraphSequence(spec.n, std::move(list), extend);
}

/// Unbounded sequence backed by the generator itself; round r always yields
/// the same graph.
inline GraphSequence lazy_sequence(const GeneratorSpec& spec) {
  return GraphSequence::generated(
      spec.n, [spec](long round) { return detail::generate_round(spec, round); });
}

}  // namespace dyngossip
