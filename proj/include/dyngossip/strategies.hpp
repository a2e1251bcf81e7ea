#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>

#include "dyngossip/core.hpp"
#include "dyngossip/engine.hpp"
#include "dyngossip/rng.hpp"

namespace dyngossip {

/// Online token-forwarding baselines. rarest_first_global is deliberately
/// centralized (it reads global holder counts); it is the strongest baseline
/// the adversary still has to defeat.
enum class StrategyKind { uniform_random, round_robin, rarest_first_global };

inline std::string strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::uniform_random: return "uniform";
    case StrategyKind::round_robin: return "rr";
    case StrategyKind::rarest_first_global: return "rarest";
  }
  throw std::invalid_argument("strategy_name: unknown kind");
}

inline StrategyKind parse_strategy(std::string_view name) {
  if (name == "uniform") return StrategyKind::uniform_random;
  if (name == "rr") return StrategyKind::round_robin;
  if (name == "rarest") return StrategyKind::rarest_first_global;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

/// Per-node memory carried across rounds. Updated only from delivered tokens
/// and the node's own history, never from the upcoming graph.
struct StrategyState {
  long round = 0;
  std::vector<long> rr_cursor;  // per-node round-robin position
};

/// One round of choices. Nodes holding nothing emit the empty token; a node
/// holding a single token is forced to it under every strategy. Randomness
/// for uniform_random comes from the (seed, round, node) substream so a
/// strong adversary can be handed the realized choices.
inline BroadcastVector choose_broadcasts(StrategyKind kind,
                                         const TokenMatrix& state,
                                         StrategyState& mem,
                                         std::uint64_t seed) {
  const int n = state.node_count();
  const int k = state.token_count();
  if (static_cast<int>(mem.rr_cursor.size()) != n)
    mem.rr_cursor.assign(static_cast<std::size_t>(n), 0);

  std::vector<int> holder_counts;
  if (kind == StrategyKind::rarest_first_global) {
    holder_counts.resize(static_cast<std::size_t>(k));
    for (TokenId t = 0; t < k; ++t)
      holder_counts[static_cast<std::size_t>(t)] = state.holder_count(t);
  }

  BroadcastVector bcast = BroadcastVector::all_empty(n);
  for (NodeId u = 0; u < n; ++u) {
    const std::vector<TokenId> held = state.tokens_of(u);
    if (held.empty()) continue;
    switch (kind) {
      case StrategyKind::uniform_random: {
        Rng rng = Rng::substream(seed, "strategy",
                                 static_cast<std::uint64_t>(mem.round),
                                 static_cast<std::uint64_t>(u));
        bcast.set(u, held[rng.below(held.size())]);
        break;
      }
      case StrategyKind::round_robin: {
        auto& cursor = mem.rr_cursor[static_cast<std::size_t>(u)];
        bcast.set(u, held[static_cast<std::size_t>(
                      cursor % static_cast<long>(held.size()))]);
        ++cursor;
        break;
      }
      case StrategyKind::rarest_first_global: {
        TokenId best = held.front();
        int best_count = std::numeric_limits<int>::max();
        for (const TokenId t : held) {
          const int c = holder_counts[static_cast<std::size_t>(t)];
          if (c < best_count) {
            best_count = c;
            best = t;
          }
        }
        bcast.set(u, best);
        break;
      }
    }
  }
  ++mem.round;
  return bcast;
}

/// Wraps choose_broadcasts into an OnlineStrategy; the engine's round index
/// drives the per-round randomness stream.
inline OnlineStrategy make_strategy(StrategyKind kind, std::uint64_t seed) {
  auto mem = std::make_shared<StrategyState>();
  return [mem, kind, seed](const TokenMatrix& state, long round) {
    mem->round = round;
    return choose_broadcasts(kind, state, *mem, seed);
  };
}

}  // namespace dyngossip
