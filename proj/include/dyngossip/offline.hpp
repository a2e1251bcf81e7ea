#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dyngossip/core.hpp"
#include "dyngossip/engine.hpp"
#include "dyngossip/evolution.hpp"
#include "dyngossip/rng.hpp"

namespace dyngossip {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Sizes for the two-phase offline algorithm. Logarithms are base 2 and the
/// real-valued expressions are ceilinged: s = 2*ceil(sqrt(k log2 n)) seed
/// nodes, flood windows of ceil(2n sqrt(log2 n / k)) rounds, and n + k rounds
/// of graphs per gather.
struct Alg1Params {
  enum class Mode { random, derandomized };

  int seed_count = 1;       // s
  long flood_window = 1;    // per-token flood budget
  long gather_window = 0;   // rounds of graphs consumed per seed node
  bool trivial_branch = false;  // k <= sqrt(log2 n): flood tokens one by one
  Mode mode = Mode::random;
};

inline Alg1Params make_alg1_params(int n, int k,
                                   Alg1Params::Mode mode = Alg1Params::Mode::random) {
  if (n < 1 || k < 1)
    throw std::invalid_argument("make_alg1_params: need n >= 1 and k >= 1");
  const double log2n = std::log2(static_cast<double>(n));
  Alg1Params params;
  params.mode = mode;
  params.trivial_branch = static_cast<double>(k) <= std::sqrt(log2n);
  params.seed_count = std::max(
      1, 2 * static_cast<int>(std::ceil(std::sqrt(k * log2n))));
  params.flood_window = std::max<long>(
      1, static_cast<long>(std::ceil(2.0 * n * std::sqrt(log2n / k))));
  params.gather_window = static_cast<long>(n) + k;
  return params;
}

/// A token's flood slot in the second phase, rounds inclusive.
struct TokenWindow {
  TokenId token = 0;
  long first_round = 0;
  long last_round = 0;

  long length() const { return last_round - first_round + 1; }
};

/// The maximal flood slots implied by the parameters: consecutive, disjoint,
/// each of the full window length, starting right after the s gather slots.
/// The executed schedule may finish each slot early; these nominal windows are
/// what the derandomized seed selection reasons about.
inline std::vector<TokenWindow> nominal_token_windows(const Alg1Params& params,
                                                      int k) {
  std::vector<TokenWindow> windows;
  const long phase2_start =
      static_cast<long>(params.seed_count) * params.gather_window;
  for (TokenId t = 0; t < k; ++t) {
    const long first = phase2_start + t * params.flood_window;
    windows.push_back({t, first, first + params.flood_window - 1});
  }
  return windows;
}

/// Nodes from which flooding started at window.first_round reaches `target`
/// by the end of window.last_round. Computed by walking the window's graphs
/// backwards; always contains the target itself.
inline std::vector<NodeId> backward_reach_set(const GraphSequence& seq,
                                              const TokenWindow& window,
                                              NodeId target) {
  const int n = seq.node_count();
  if (target < 0 || target >= n)
    throw std::invalid_argument("backward_reach_set: target out of range");
  std::vector<char> reach(static_cast<std::size_t>(n), 0);
  reach[static_cast<std::size_t>(target)] = 1;
  for (long r = window.last_round; r >= window.first_round; --r) {
    const CommGraph g = seq.graph_at(r);
    std::vector<NodeId> added;
    for (NodeId u = 0; u < n; ++u) {
      if (reach[static_cast<std::size_t>(u)]) continue;
      for (const NodeId v : g.neighbors(u)) {
        if (reach[static_cast<std::size_t>(v)]) {
          added.push_back(u);
          break;
        }
      }
    }
    for (const NodeId u : added) reach[static_cast<std::size_t>(u)] = 1;
  }
  std::vector<NodeId> out;
  for (NodeId u = 0; u < n; ++u)
    if (reach[static_cast<std::size_t>(u)]) out.push_back(u);
  return out;
}

namespace detail {

inline BigInt binomial(long n, long r) {
  if (r < 0 || r > n) return 0;
  r = std::min(r, n - r);
  BigInt result = 1;
  for (long i = 1; i <= r; ++i) {
    result *= n - r + i;
    result /= i;
  }
  return result;
}

inline std::vector<char> node_mask(int n, const std::vector<NodeId>& nodes,
                                   const char* what) {
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  for (const NodeId u : nodes) {
    if (u < 0 || u >= n)
      throw std::invalid_argument(std::string(what) + ": node out of range");
    mask[static_cast<std::size_t>(u)] = 1;
  }
  return mask;
}

/// Probability that completing S with (seed_size - |S|) uniform picks from
/// V \ T leaves B untouched.
inline Rational failure_prob_masks(int n, const std::vector<char>& in_s,
                                   const std::vector<char>& in_t,
                                   const std::vector<char>& in_b,
                                   int seed_size, int s_size) {
  const long r = seed_size - s_size;
  if (r < 0) throw std::invalid_argument("failure_prob: seed size exceeded");
  long outside = 0;     // |V \ T|
  long b_outside = 0;   // |B \ T|
  for (int u = 0; u < n; ++u) {
    if (in_s[static_cast<std::size_t>(u)] && in_b[static_cast<std::size_t>(u)])
      return 0;
    if (!in_t[static_cast<std::size_t>(u)]) {
      ++outside;
      if (in_b[static_cast<std::size_t>(u)]) ++b_outside;
    }
  }
  if (r > outside) return 1;            // picks unavailable, failure certain
  if (outside - b_outside < r) return 0;  // every completion hits B
  return Rational(detail::binomial(outside - b_outside, r),
                  detail::binomial(outside, r));
}

}  // namespace detail

/// Exact probability that a partially fixed seed set misses the reach set B:
/// 0 when S already intersects B, otherwise the hypergeometric ratio
/// C(|U|-|B cap U|, r) / C(|U|, r) over the unconsidered nodes U = V \ T with
/// r = seed_size - |S| picks left (1 when more picks are needed than nodes
/// remain). Exact rationals keep the scan comparisons sound.
inline Rational failure_prob(int n, const std::vector<NodeId>& S,
                             const std::vector<NodeId>& T,
                             const std::vector<NodeId>& B, int seed_size) {
  const std::vector<char> in_s = detail::node_mask(n, S, "failure_prob S");
  const std::vector<char> in_t = detail::node_mask(n, T, "failure_prob T");
  const std::vector<char> in_b = detail::node_mask(n, B, "failure_prob B");
  for (int u = 0; u < n; ++u)
    if (in_s[static_cast<std::size_t>(u)] && !in_t[static_cast<std::size_t>(u)])
      throw std::invalid_argument("failure_prob: S must be a subset of T");
  return detail::failure_prob_masks(n, in_s, in_t, in_b, seed_size,
                                    static_cast<int>(S.size()));
}

struct DerandResult {
  std::vector<NodeId> selected;
  Rational initial_phi;               // potential before any node is scanned
  std::vector<Rational> phi_trace;    // potential after each scan step
  /// Initial potential < 1: the scan then certifies that `selected`
  /// intersects every (node, token) reach set. Otherwise the set is returned
  /// without that guarantee.
  bool guaranteed = false;
};

/// Replaces the random seed-set pick by a scan over nodes in id order that
/// keeps the summed failure probability from rising: node v joins S exactly
/// when including it does not increase the potential. The potential sums
/// failure_prob over all (node, token) pairs with per-token flood windows.
/// If fewer than seed_size nodes get picked, the lowest-id unchosen nodes pad
/// the set (extra nodes never increase any failure probability).
inline DerandResult derandomize_S(const GraphSequence& seq,
                                  const std::vector<TokenWindow>& windows,
                                  int seed_size) {
  if (seed_size < 0)
    throw std::invalid_argument("derandomize_S: negative seed size");
  const int n = seq.node_count();
  const int k = static_cast<int>(windows.size());

  // reach[u][t] = B_{u,t} as a mask.
  std::vector<std::vector<std::vector<char>>> reach(
      static_cast<std::size_t>(n));
  for (NodeId u = 0; u < n; ++u) {
    reach[static_cast<std::size_t>(u)].resize(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) {
      std::vector<char> mask(static_cast<std::size_t>(n), 0);
      for (const NodeId w :
           backward_reach_set(seq, windows[static_cast<std::size_t>(t)], u))
        mask[static_cast<std::size_t>(w)] = 1;
      reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(t)] =
          std::move(mask);
    }
  }

  std::vector<char> in_s(static_cast<std::size_t>(n), 0);
  std::vector<char> in_t(static_cast<std::size_t>(n), 0);
  int s_size = 0;

  auto phi = [&](const std::vector<char>& s_mask, int size,
                 const std::vector<char>& t_mask) {
    Rational total = 0;
    for (NodeId u = 0; u < n; ++u)
      for (int t = 0; t < k; ++t)
        total += detail::failure_prob_masks(
            n, s_mask, t_mask,
            reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(t)],
            seed_size, size);
    return total;
  };

  DerandResult result;
  result.initial_phi = phi(in_s, 0, in_t);
  result.guaranteed = result.initial_phi < 1;

  for (NodeId v = 0; v < n; ++v) {
    in_t[static_cast<std::size_t>(v)] = 1;
    if (s_size < seed_size) {
      in_s[static_cast<std::size_t>(v)] = 1;
      const Rational with_v = phi(in_s, s_size + 1, in_t);
      in_s[static_cast<std::size_t>(v)] = 0;
      const Rational without_v = phi(in_s, s_size, in_t);
      if (with_v <= without_v) {
        in_s[static_cast<std::size_t>(v)] = 1;
        ++s_size;
        result.phi_trace.push_back(with_v);
      } else {
        result.phi_trace.push_back(without_v);
      }
    } else {
      result.phi_trace.push_back(phi(in_s, s_size, in_t));
    }
  }

  for (NodeId u = 0; u < n; ++u)
    if (in_s[static_cast<std::size_t>(u)]) result.selected.push_back(u);
  for (NodeId u = 0; u < n && static_cast<int>(result.selected.size()) <
                                  std::min(seed_size, n);
       ++u) {
    if (!in_s[static_cast<std::size_t>(u)]) {
      result.selected.push_back(u);
      in_s[static_cast<std::size_t>(u)] = 1;
    }
  }
  std::sort(result.selected.begin(), result.selected.end());
  return result;
}

/// Routes every token to `target` with one max-flow over the (n+k)-round
/// evolution graph starting at start_round: super-source from each token's
/// lowest-id holder, unit-path decomposition, paths become broadcasts.
/// Trailing idle rounds are trimmed, so running the result delivers all k
/// tokens to the target within n + k rounds.
inline Schedule gather_all(const GraphSequence& seq, const TokenMatrix& init,
                           NodeId target, long start_round) {
  const int n = init.node_count();
  const int k = init.token_count();
  if (target < 0 || target >= n)
    throw std::invalid_argument("gather_all: target out of range");
  if (seq.node_count() != n)
    throw std::invalid_argument("gather_all: sequence size mismatch");

  std::vector<std::pair<NodeId, TokenId>> sources;
  for (TokenId t = 0; t < k; ++t) {
    const auto holder = init.first_holder(t);
    if (!holder)
      throw ContractViolation("gather_all: token " + std::to_string(t) +
                              " is held by no node");
    sources.emplace_back(*holder, t);
  }

  const int l = n + k;
  const EvolutionGraph evo = attach_supersource(
      build_evolution_graph(seq, l, start_round), sources);
  const FlowResult flow =
      max_flow(evo, {-1, kSuperSourceLevel}, {target, 2 * l});
  if (flow.value < k)
    throw ContractViolation(
        "gather_all: flow below token count; connected-sequence contract "
        "violated");

  const std::vector<std::vector<int>> paths = decompose_paths(evo, flow);

  // Paths leaving a fused source edge carry that node's tokens in id order.
  std::vector<std::vector<TokenId>> tokens_at(static_cast<std::size_t>(n));
  for (const auto& [node, token] : evo.sources())
    tokens_at[static_cast<std::size_t>(node)].push_back(token);
  std::vector<std::size_t> next_token(static_cast<std::size_t>(n), 0);

  Schedule sched;
  sched.rounds.assign(static_cast<std::size_t>(l), BroadcastVector::all_empty(n));
  for (const std::vector<int>& path : paths) {
    const EvoEdge& source_edge = evo.edges()[static_cast<std::size_t>(path.front())];
    const NodeId origin = evo.vertex_of(source_edge.to).node;
    const TokenId token = tokens_at[static_cast<std::size_t>(origin)].at(
        next_token[static_cast<std::size_t>(origin)]++);
    for (const int e : path) {
      const EvoEdge& edge = evo.edges()[static_cast<std::size_t>(e)];
      if (edge.kind != EdgeKind::broadcast) continue;
      const EvoVertex from = evo.vertex_of(edge.from);
      const int round = (from.level + 1) / 2;  // broadcast leaves level 2j-1
      sched.rounds[static_cast<std::size_t>(round - 1)].set(from.node, token);
    }
  }
  while (!sched.rounds.empty() &&
         sched.rounds.back() == BroadcastVector::all_empty(n))
    sched.rounds.pop_back();
  return sched;
}

/// What the offline scheduler did with its round budget.
struct Alg1PhaseLog {
  struct Span {
    long first = 0;
    long last = -1;  // inclusive; first > last means the span is empty

    long length() const { return last - first + 1; }
  };

  Alg1Params params;
  std::vector<NodeId> seed_nodes;
  std::vector<std::pair<NodeId, Span>> gather_spans;
  std::vector<std::pair<TokenId, Span>> flood_spans;
  Span fallback;
  bool fallback_used = false;
  bool derand_guaranteed = false;
  long total_rounds = 0;
};

struct Alg1Result {
  Schedule schedule;
  Alg1PhaseLog log;
};

namespace detail {

/// Appends flood rounds for one token (all current holders broadcast it)
/// until the token is everywhere or the budget runs out; returns rounds used.
inline long flood_token(const GraphSequence& seq, TokenMatrix& state,
                        Schedule& sched, TokenId token, long budget) {
  const int n = state.node_count();
  long used = 0;
  while (used < budget && state.holder_count(token) < n) {
    BroadcastVector bcast = BroadcastVector::all_empty(n);
    for (const NodeId u : state.holders(token)) bcast.set(u, token);
    const CommGraph g = seq.graph_at(sched.round_count());
    state = execute_round(state, bcast, g).first;
    sched.rounds.push_back(std::move(bcast));
    ++used;
  }
  return used;
}

}  // namespace detail

/// The full offline scheduler. For k <= sqrt(log2 n) it floods tokens one at
/// a time (at most n rounds each). Otherwise it picks a seed set S (randomly
/// or via derandomize_S), gathers all tokens to each seed node in turn, then
/// floods each token for up to its window; a verification pass floods any
/// token that is still incomplete, so the schedule always disseminates fully.
/// Gather slots and flood windows end early once their goal is met, which is
/// what keeps the total below the nk flooding budget in practice.
inline Alg1Result algorithm1(const GraphSequence& seq, const TokenMatrix& init,
                             const Alg1Params& params, std::uint64_t seed) {
  const int n = init.node_count();
  const int k = init.token_count();
  if (seq.node_count() != n)
    throw std::invalid_argument("algorithm1: sequence size mismatch");

  Alg1Result result;
  result.log.params = params;
  if (init.complete()) return result;

  for (TokenId t = 0; t < k; ++t)
    if (!init.first_holder(t))
      throw ContractViolation("algorithm1: token " + std::to_string(t) +
                              " is held by no node");

  TokenMatrix state = init;
  Schedule& sched = result.schedule;

  if (params.trivial_branch) {
    for (TokenId t = 0; t < k; ++t) {
      const long first = sched.round_count();
      const long used = detail::flood_token(seq, state, sched, t, n);
      result.log.flood_spans.push_back({t, {first, first + used - 1}});
    }
  } else {
    if (params.mode == Alg1Params::Mode::derandomized) {
      const DerandResult derand =
          derandomize_S(seq, nominal_token_windows(params, k), params.seed_count);
      result.log.seed_nodes = derand.selected;
      result.log.derand_guaranteed = derand.guaranteed;
    } else {
      Rng rng = Rng::substream(seed, "alg1-S");
      result.log.seed_nodes =
          [&] {
            std::vector<int> picks =
                rng.sample_without_replacement(n, std::min(params.seed_count, n));
            return std::vector<NodeId>(picks.begin(), picks.end());
          }();
    }

    for (const NodeId v : result.log.seed_nodes) {
      const long first = sched.round_count();
      const Schedule gather = gather_all(seq, state, v, first);
      for (const BroadcastVector& bcast : gather.rounds) {
        state = execute_round(state, bcast, seq.graph_at(sched.round_count()))
                    .first;
        sched.rounds.push_back(bcast);
      }
      result.log.gather_spans.push_back(
          {v, {first, sched.round_count() - 1}});
    }

    for (TokenId t = 0; t < k; ++t) {
      const long first = sched.round_count();
      const long used =
          detail::flood_token(seq, state, sched, t, params.flood_window);
      result.log.flood_spans.push_back({t, {first, first + used - 1}});
    }
  }

  // Verification pass: anything still missing gets flooded to completion.
  result.log.fallback.first = sched.round_count();
  for (TokenId t = 0; t < k; ++t) {
    if (state.holder_count(t) == n) continue;
    result.log.fallback_used = true;
    detail::flood_token(seq, state, sched, t, n);
    if (state.holder_count(t) < n)
      throw std::logic_error("algorithm1: flooding failed to complete a token");
  }
  result.log.fallback.last = sched.round_count() - 1;
  if (!result.log.fallback_used) {
    result.log.fallback = {sched.round_count(), sched.round_count() - 1};
  }

  if (!state.complete())
    throw std::logic_error("algorithm1: schedule did not disseminate fully");
  result.log.total_rounds = sched.round_count();
  return result;
}

}  // namespace dyngossip
