#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dyngossip/core.hpp"
#include "dyngossip/rng.hpp"

namespace dyngossip {

// ---------------------------------------------------------------------------
// Initial distributions

struct BernoulliInit {
  double p = 0.0;  // probability a node holds a token, independently per pair
};

struct OneTokenPerNodeInit {};

struct ExplicitInit {
  std::vector<std::vector<TokenId>> holders;  // token list per node
};

using DistributionSpec =
    std::variant<BernoulliInit, OneTokenPerNodeInit, ExplicitInit>;

/// Builds an initial token distribution. Bernoulli draws are independent per
/// (node, token) in row-major order from the "distribution" substream;
/// one-token-per-node places token i at the i-th element of a seeded node
/// permutation.
inline TokenMatrix new_distribution(int n, int k, const DistributionSpec& spec,
                                    std::uint64_t seed) {
  TokenMatrix m(n, k);
  if (const auto* bern = std::get_if<BernoulliInit>(&spec)) {
    if (bern->p < 0.0 || bern->p > 1.0)
      throw std::invalid_argument("new_distribution: p outside [0,1]");
    Rng rng = Rng::substream(seed, "distribution");
    for (NodeId u = 0; u < n; ++u)
      for (TokenId t = 0; t < k; ++t)
        if (rng.bernoulli(bern->p)) m.grant(u, t);
  } else if (std::holds_alternative<OneTokenPerNodeInit>(spec)) {
    if (k > n)
      throw std::invalid_argument(
          "new_distribution: one_token_per_node needs k <= n");
    std::vector<NodeId> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = Rng::substream(seed, "distribution");
    rng.shuffle(perm);
    for (TokenId t = 0; t < k; ++t) m.grant(perm[static_cast<std::size_t>(t)], t);
  } else {
    const auto& holders = std::get<ExplicitInit>(spec).holders;
    if (static_cast<int>(holders.size()) != n)
      throw std::invalid_argument("new_distribution: holders size != n");
    for (NodeId u = 0; u < n; ++u)
      for (const TokenId t : holders[static_cast<std::size_t>(u)]) {
        if (t < 0 || t >= k)
          throw std::invalid_argument(
              "new_distribution: explicit holder references token out of range");
        m.grant(u, t);
      }
  }
  return m;
}

/// Total number of missing (node, token) pairs.
inline long missing_count(const TokenMatrix& state) {
  return state.missing_count();
}

/// An edge is free when each endpoint already holds what the other broadcasts
/// this round; the empty token counts as held by everyone. Free edges carry
/// no new information in either direction.
inline bool is_free_edge(const TokenMatrix& state, const BroadcastVector& bcast,
                         NodeId u, NodeId v) {
  if (u == v) throw std::invalid_argument("is_free_edge: u == v");
  const TokenId tu = bcast.at(u);
  const TokenId tv = bcast.at(v);
  const bool u_has_tv = tv == kEmptyToken || state.has(u, tv);
  const bool v_has_tu = tu == kEmptyToken || state.has(v, tu);
  return u_has_tv && v_has_tu;
}

inline void check_feasible(const TokenMatrix& state,
                           const BroadcastVector& bcast) {
  if (bcast.node_count() != state.node_count())
    throw std::invalid_argument("broadcast vector size mismatch");
  for (NodeId u = 0; u < state.node_count(); ++u) {
    const TokenId t = bcast.at(u);
    if (t == kEmptyToken) continue;
    if (t < 0 || t >= state.token_count() || !state.has(u, t))
      throw ContractViolation("token-forwarding violation: node " +
                              std::to_string(u) + " broadcasts unheld token " +
                              std::to_string(t));
  }
}

/// Delivers one synchronous round: every node receives its neighbors'
/// broadcasts. A node that gets the same new token from several neighbors
/// gains it once, but every delivering (edge, direction) whose receiver
/// lacked the token counts as a useful exchange.
inline std::pair<TokenMatrix, RoundMetrics> execute_round(
    const TokenMatrix& state, const BroadcastVector& bcast,
    const CommGraph& g) {
  if (g.node_count() != state.node_count())
    throw std::invalid_argument("execute_round: graph size mismatch");
  check_feasible(state, bcast);

  TokenMatrix next = state;
  RoundMetrics metrics;
  for (const auto& [u, v] : g.edges()) {
    const TokenId tu = bcast.at(u);
    const TokenId tv = bcast.at(v);
    if (tv != kEmptyToken) {
      if (!state.has(u, tv)) ++metrics.useful_exchanges;
      next.grant(u, tv);
    }
    if (tu != kEmptyToken) {
      if (!state.has(v, tu)) ++metrics.useful_exchanges;
      next.grant(v, tu);
    }
  }
  metrics.missing_total = next.missing_count();
  metrics.token_gains = state.missing_count() - metrics.missing_total;
  metrics.per_node_missing.resize(static_cast<std::size_t>(next.node_count()));
  for (NodeId u = 0; u < next.node_count(); ++u)
    metrics.per_node_missing[static_cast<std::size_t>(u)] = next.node_missing(u);
  return {std::move(next), std::move(metrics)};
}

/// Folds execute_round over the schedule using the sequence's graphs.
/// Fails fast on an infeasible broadcast, reporting the offending round.
inline std::pair<TokenMatrix, std::vector<RoundMetrics>> run_schedule(
    const TokenMatrix& init, const GraphSequence& seq, const Schedule& sched) {
  if (seq.node_count() != init.node_count())
    throw std::invalid_argument("run_schedule: sequence size mismatch");
  TokenMatrix state = init;
  std::vector<RoundMetrics> metrics;
  metrics.reserve(sched.rounds.size());
  for (std::size_t r = 0; r < sched.rounds.size(); ++r) {
    try {
      auto [next, m] =
          execute_round(state, sched.rounds[r], seq.graph_at(static_cast<long>(r)));
      state = std::move(next);
      metrics.push_back(std::move(m));
    } catch (const ContractViolation& e) {
      throw ContractViolation("round " + std::to_string(r) + ": " + e.what());
    }
  }
  return {std::move(state), std::move(metrics)};
}

/// Commits broadcasts from state and history only; never sees the round graph.
using OnlineStrategy =
    std::function<BroadcastVector(const TokenMatrix& state, long round)>;

/// Picks the round's connected graph after seeing the committed broadcasts.
using AdversaryPolicy = std::function<CommGraph(const TokenMatrix& state,
                                                const BroadcastVector& bcast)>;

/// Runs strategy vs. adversary until full dissemination or max_rounds.
/// The termination check precedes round 1, so complete inputs cost 0 rounds.
inline Transcript run_online(const OnlineStrategy& strategy,
                             const AdversaryPolicy& adversary,
                             const TokenMatrix& init, long max_rounds) {
  if (max_rounds < 0)
    throw std::invalid_argument("run_online: negative max_rounds");
  Transcript tr;
  tr.initial = init;
  TokenMatrix state = init;
  for (long round = 0; round < max_rounds && !state.complete(); ++round) {
    BroadcastVector bcast = strategy(state, round);
    CommGraph g = adversary(state, bcast);
    if (g.node_count() != state.node_count() || !g.is_connected())
      throw ContractViolation("adversary returned an invalid round graph");
    auto [next, metrics] = execute_round(state, bcast, g);
    tr.rounds.push_back(
        {std::move(bcast), std::move(g), std::move(metrics)});
    state = std::move(next);
  }
  tr.final_state = std::move(state);
  return tr;
}

/// Round-start states of a transcript: entry r is the state before round r,
/// entry rounds.size() is the final state.
inline std::vector<TokenMatrix> round_start_states(const Transcript& tr) {
  std::vector<TokenMatrix> states;
  states.reserve(tr.rounds.size() + 1);
  states.push_back(tr.initial);
  for (const auto& round : tr.rounds) {
    states.push_back(
        execute_round(states.back(), round.bcast, round.graph).first);
  }
  return states;
}

/// True when replaying the transcript reproduces its recorded metrics and
/// final state bit for bit.
inline bool transcript_consistent(const Transcript& tr) {
  TokenMatrix state = tr.initial;
  for (const auto& round : tr.rounds) {
    auto [next, metrics] = execute_round(state, round.bcast, round.graph);
    if (!(metrics == round.metrics)) return false;
    state = std::move(next);
  }
  return state == tr.final_state;
}

}  // namespace dyngossip
