#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dyngossip {

using NodeId = std::int32_t;
using TokenId = std::int32_t;

/// Broadcast sentinel: a token every node implicitly holds. It may appear in
/// a BroadcastVector but is never stored in a TokenMatrix.
inline constexpr TokenId kEmptyToken = -1;

/// Thrown when a component breaks a cross-module contract at run time: a node
/// broadcasts a token it does not hold, an adversary returns a disconnected
/// graph, a schedule never delivers a promised token, trees overbook an edge.
/// Plain precondition misuse throws std::invalid_argument instead.
class ContractViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Who holds which token. Bits only ever get set by the engine: tokens are
/// stored and forwarded, never dropped.
class TokenMatrix {
public:
  TokenMatrix() : TokenMatrix(0, 0) {}

  TokenMatrix(int nodes, int tokens) : n_(nodes), k_(tokens) {
    if (nodes < 0 || tokens < 0)
      throw std::invalid_argument("TokenMatrix: negative dimensions");
    words_ = (static_cast<std::size_t>(tokens) + 63) / 64;
    bits_.assign(static_cast<std::size_t>(nodes) * words_, 0);
  }

  int node_count() const { return n_; }
  int token_count() const { return k_; }

  bool has(NodeId node, TokenId token) const {
    check(node, token);
    return (bits_[row(node) + static_cast<std::size_t>(token) / 64] >>
            (static_cast<unsigned>(token) % 64)) &
           1u;
  }

  void grant(NodeId node, TokenId token) {
    check(node, token);
    bits_[row(node) + static_cast<std::size_t>(token) / 64] |=
        std::uint64_t{1} << (static_cast<unsigned>(token) % 64);
  }

  long missing_count() const {
    long held = 0;
    for (const std::uint64_t w : bits_) held += std::popcount(w);
    return static_cast<long>(n_) * k_ - held;
  }

  int node_missing(NodeId node) const {
    check_node(node);
    int held = 0;
    for (std::size_t w = 0; w < words_; ++w)
      held += std::popcount(bits_[row(node) + w]);
    return k_ - held;
  }

  int holder_count(TokenId token) const {
    int count = 0;
    for (NodeId u = 0; u < n_; ++u) count += has(u, token) ? 1 : 0;
    return count;
  }

  std::vector<NodeId> holders(TokenId token) const {
    std::vector<NodeId> out;
    for (NodeId u = 0; u < n_; ++u)
      if (has(u, token)) out.push_back(u);
    return out;
  }

  std::optional<NodeId> first_holder(TokenId token) const {
    for (NodeId u = 0; u < n_; ++u)
      if (has(u, token)) return u;
    return std::nullopt;
  }

  std::vector<TokenId> tokens_of(NodeId node) const {
    std::vector<TokenId> out;
    for (TokenId t = 0; t < k_; ++t)
      if (has(node, t)) out.push_back(t);
    return out;
  }

  bool complete() const { return missing_count() == 0; }

  bool operator==(const TokenMatrix&) const = default;

private:
  std::size_t row(NodeId node) const {
    return static_cast<std::size_t>(node) * words_;
  }

  void check_node(NodeId node) const {
    if (node < 0 || node >= n_)
      throw std::out_of_range("TokenMatrix: node out of range");
  }

  void check(NodeId node, TokenId token) const {
    check_node(node);
    if (token < 0 || token >= k_)
      throw std::out_of_range("TokenMatrix: token out of range");
  }

  int n_;
  int k_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// One round's choice per node: a held token or kEmptyToken. Feasibility
/// against a TokenMatrix is the engine's job, not the type's.
struct BroadcastVector {
  std::vector<TokenId> choice;

  static BroadcastVector all_empty(int nodes) {
    BroadcastVector b;
    b.choice.assign(static_cast<std::size_t>(nodes), kEmptyToken);
    return b;
  }

  int node_count() const { return static_cast<int>(choice.size()); }

  TokenId at(NodeId node) const {
    return choice.at(static_cast<std::size_t>(node));
  }

  void set(NodeId node, TokenId token) {
    choice.at(static_cast<std::size_t>(node)) = token;
  }

  bool operator==(const BroadcastVector&) const = default;
};

/// One round's communication topology: simple undirected graph, connected.
/// Construction normalizes edges to (low, high) sorted order and rejects
/// self-loops, duplicates and out-of-range endpoints; a disconnected edge set
/// is a contract violation unless allow_disconnected() is used.
class CommGraph {
public:
  using Edge = std::pair<NodeId, NodeId>;

  CommGraph(int nodes, std::vector<Edge> edge_list)
      : CommGraph(nodes, std::move(edge_list), true) {}

  static CommGraph allow_disconnected(int nodes, std::vector<Edge> edge_list) {
    return CommGraph(nodes, std::move(edge_list), false);
  }

  int node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  const std::vector<NodeId>& neighbors(NodeId node) const {
    return adj_.at(static_cast<std::size_t>(node));
  }

  bool has_edge(NodeId u, NodeId v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges_.begin(), edges_.end(), Edge{u, v});
  }

  bool is_connected() const {
    if (n_ <= 1) return true;
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    std::vector<NodeId> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (const NodeId v : adj_[static_cast<std::size_t>(u)]) {
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          ++reached;
          stack.push_back(v);
        }
      }
    }
    return reached == n_;
  }

  bool operator==(const CommGraph& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

private:
  CommGraph(int nodes, std::vector<Edge> edge_list, bool require_connected)
      : n_(nodes) {
    if (nodes < 0) throw std::invalid_argument("CommGraph: negative size");
    for (auto& [u, v] : edge_list) {
      if (u > v) std::swap(u, v);
      if (u < 0 || v >= nodes)
        throw std::invalid_argument("CommGraph: endpoint out of range");
      if (u == v) throw std::invalid_argument("CommGraph: self-loop");
    }
    std::sort(edge_list.begin(), edge_list.end());
    if (std::adjacent_find(edge_list.begin(), edge_list.end()) !=
        edge_list.end())
      throw std::invalid_argument("CommGraph: duplicate edge");
    edges_ = std::move(edge_list);
    adj_.assign(static_cast<std::size_t>(nodes), {});
    for (const auto& [u, v] : edges_) {
      adj_[static_cast<std::size_t>(u)].push_back(v);
      adj_[static_cast<std::size_t>(v)].push_back(u);
    }
    if (require_connected && !is_connected())
      throw ContractViolation("CommGraph: disconnected round graph");
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adj_;
};

/// Lazy round-indexed supply of connected graphs on a fixed node set. Either
/// a recorded list (optionally extended cyclically) or a generator function;
/// generated graphs are validated on production.
class GraphSequence {
public:
  enum class Extend { cycle, error };

  GraphSequence(int nodes, std::vector<CommGraph> rounds,
                Extend extend = Extend::error)
      : n_(nodes), recorded_(std::move(rounds)), extend_(extend) {
    for (const CommGraph& g : recorded_) validate(g, nodes);
  }

  static GraphSequence generated(int nodes,
                                 std::function<CommGraph(long)> generator) {
    GraphSequence seq(nodes, {}, Extend::error);
    seq.generator_ = std::move(generator);
    return seq;
  }

  int node_count() const { return n_; }
  bool is_generated() const { return static_cast<bool>(generator_); }
  Extend extend_policy() const { return extend_; }

  /// Recorded length, or nullopt for generator-backed sequences.
  std::optional<long> recorded_rounds() const {
    if (is_generated()) return std::nullopt;
    return static_cast<long>(recorded_.size());
  }

  const std::vector<CommGraph>& recorded() const { return recorded_; }

  CommGraph graph_at(long round) const {
    if (round < 0) throw std::invalid_argument("GraphSequence: negative round");
    if (generator_) {
      CommGraph g = generator_(round);
      validate(g, n_);
      return g;
    }
    const auto size = static_cast<long>(recorded_.size());
    if (round < size) return recorded_[static_cast<std::size_t>(round)];
    if (extend_ == Extend::cycle && size > 0)
      return recorded_[static_cast<std::size_t>(round % size)];
    throw ContractViolation("GraphSequence: exhausted at round " +
                            std::to_string(round));
  }

private:
  static void validate(const CommGraph& g, int nodes) {
    if (g.node_count() != nodes)
      throw ContractViolation("GraphSequence: node count mismatch");
    if (!g.is_connected())
      throw ContractViolation("GraphSequence: disconnected graph");
  }

  int n_;
  std::vector<CommGraph> recorded_;
  Extend extend_;
  std::function<CommGraph(long)> generator_;
};

/// Per-round accounting against the round-start state.
struct RoundMetrics {
  /// (edge, direction) pairs whose receiver lacked the delivered token.
  long useful_exchanges = 0;
  /// Distinct (node, token) acquisitions this round.
  long token_gains = 0;
  /// Missing (node, token) pairs after the round.
  long missing_total = 0;
  /// Missing tokens per node after the round.
  std::vector<int> per_node_missing;

  bool operator==(const RoundMetrics&) const = default;
};

/// The only output channel of any algorithm here: one BroadcastVector per
/// round.
struct Schedule {
  std::vector<BroadcastVector> rounds;

  long round_count() const { return static_cast<long>(rounds.size()); }

  bool operator==(const Schedule&) const = default;
};

/// Full record of an online run; replaying it through the engine reproduces
/// final_state exactly.
struct Transcript {
  struct Round {
    BroadcastVector bcast;
    CommGraph graph;
    RoundMetrics metrics;
  };

  TokenMatrix initial;
  std::vector<Round> rounds;
  TokenMatrix final_state;
};

}  // namespace dyngossip
