#include <catch2/catch_amalgamated.hpp>

#include "dyngossip/generators.hpp"
#include "dyngossip/offline.hpp"
#include "test_util.hpp"

using namespace dyngossip;

namespace {

// Forward flood from a single start over a round window; oracle counterpart
// of backward_reach_set.
bool forward_flood_reaches(const GraphSequence& seq, const TokenWindow& window,
                           NodeId start, NodeId target) {
  std::vector<char> holds(static_cast<std::size_t>(seq.node_count()), 0);
  holds[static_cast<std::size_t>(start)] = 1;
  for (long r = window.first_round; r <= window.last_round; ++r) {
    const CommGraph g = seq.graph_at(r);
    std::vector<NodeId> added;
    for (NodeId u = 0; u < seq.node_count(); ++u) {
      if (holds[static_cast<std::size_t>(u)]) continue;
      for (const NodeId v : g.neighbors(u))
        if (holds[static_cast<std::size_t>(v)]) {
          added.push_back(u);
          break;
        }
    }
    for (const NodeId u : added) holds[static_cast<std::size_t>(u)] = 1;
  }
  return holds[static_cast<std::size_t>(target)];
}

Rational brute_failure_prob(int n, const std::vector<NodeId>& S,
                            const std::vector<NodeId>& T,
                            const std::vector<NodeId>& B, int seed_size) {
  const std::set<NodeId> s_set(S.begin(), S.end());
  const std::set<NodeId> t_set(T.begin(), T.end());
  const std::set<NodeId> b_set(B.begin(), B.end());
  for (const NodeId u : S)
    if (b_set.count(u)) return 0;
  std::vector<NodeId> pool;
  for (NodeId u = 0; u < n; ++u)
    if (!t_set.count(u)) pool.push_back(u);
  const long r = seed_size - static_cast<long>(S.size());
  if (r > static_cast<long>(pool.size())) return 1;

  // Enumerate all r-subsets of the unconsidered pool; count those avoiding B.
  long total = 0;
  long misses = 0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(r));
  auto recurse = [&](auto&& self, std::size_t from, long left) -> void {
    if (left == 0) {
      ++total;
      for (std::size_t i = 0; i < idx.size(); ++i)
        if (b_set.count(pool[idx[i]])) return;
      ++misses;
      return;
    }
    for (std::size_t i = from; i + left <= pool.size() + 1 && i < pool.size();
         ++i) {
      idx[static_cast<std::size_t>(r - left)] = i;
      self(self, i + 1, left - 1);
    }
  };
  recurse(recurse, 0, r);
  return Rational(misses, total);
}

}  // namespace

TEST_CASE("parameter sizes follow the ceilinged formulas") {
  const Alg1Params params = make_alg1_params(64, 16);
  REQUIRE(params.seed_count == 20);     // 2 * ceil(sqrt(16 * 6))
  REQUIRE(params.flood_window == 79);   // ceil(128 * sqrt(6/16))
  REQUIRE(params.gather_window == 80);
  REQUIRE_FALSE(params.trivial_branch);

  const Alg1Params small = make_alg1_params(8, 1);
  REQUIRE(small.trivial_branch);  // 1 <= sqrt(log2 8)

  REQUIRE(make_alg1_params(1, 1).seed_count >= 1);
  REQUIRE(make_alg1_params(1, 1).flood_window >= 1);
}

TEST_CASE("nominal token windows tile the phase-2 span") {
  const Alg1Params params = make_alg1_params(64, 16);
  const std::vector<TokenWindow> windows = nominal_token_windows(params, 16);
  REQUIRE(windows.size() == 16);
  REQUIRE(windows.front().first_round == params.seed_count * params.gather_window);
  for (std::size_t t = 0; t < windows.size(); ++t) {
    REQUIRE(windows[t].length() == params.flood_window);
    if (t > 0)
      REQUIRE(windows[t].first_round == windows[t - 1].last_round + 1);
  }
}

TEST_CASE("backward reach set basics") {
  const GeneratorSpec spec{GeneratorSpec::Model::path, 7, 0, 0.0, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);

  SECTION("always contains the target") {
    const TokenWindow w{0, 0, 0};
    for (NodeId u = 0; u < 7; ++u) {
      const std::vector<NodeId> reach = backward_reach_set(seq, w, u);
      REQUIRE(std::find(reach.begin(), reach.end(), u) != reach.end());
    }
  }
  SECTION("a window of n-1 rounds reaches from everywhere") {
    const TokenWindow w{0, 0, 5};
    for (NodeId u = 0; u < 7; ++u)
      REQUIRE(backward_reach_set(seq, w, u).size() == 7);
  }
  SECTION("on a static path the reach is the hop ball") {
    const TokenWindow w{0, 0, 2};  // 3 rounds
    const std::vector<NodeId> reach = backward_reach_set(seq, w, 3);
    REQUIRE(reach == std::vector<NodeId>{0, 1, 2, 3, 4, 5, 6});
    const TokenWindow w1{0, 0, 0};  // 1 round
    REQUIRE(backward_reach_set(seq, w1, 3) == std::vector<NodeId>{2, 3, 4});
  }
  SECTION("matches the forward flooding oracle") {
    const GeneratorSpec dyn{GeneratorSpec::Model::gnp_repair, 8, 9, 0.25, {}, {}};
    const GraphSequence dseq = lazy_sequence(dyn);
    const TokenWindow w{0, 2, 4};
    for (NodeId u = 0; u < 8; ++u) {
      const std::vector<NodeId> reach = backward_reach_set(dseq, w, u);
      for (NodeId start = 0; start < 8; ++start) {
        const bool reaches = forward_flood_reaches(dseq, w, start, u);
        const bool listed =
            std::find(reach.begin(), reach.end(), start) != reach.end();
        REQUIRE(reaches == listed);
      }
    }
  }
}

TEST_CASE("failure probability formula cases") {
  SECTION("an already covered set never fails") {
    REQUIRE(failure_prob(6, {0}, {0, 1}, {0, 5}, 3) == 0);
  }
  SECTION("no picks left and no coverage fails for sure") {
    REQUIRE(failure_prob(6, {0}, {0}, {5}, 1) == 1);
  }
  SECTION("hypergeometric ratio") {
    // U = {2,3,4,5}, B cap U = {4,5}, one pick: C(2,1)/C(4,1) = 1/2.
    REQUIRE(failure_prob(6, {0}, {0, 1}, {4, 5}, 2) == Rational(1, 2));
  }
  SECTION("more picks than candidates is certain failure") {
    REQUIRE(failure_prob(4, {}, {0, 1, 2}, {3}, 2) == 1);
  }
  SECTION("picks forced to hit the reach set") {
    // U = {1,2}, B cap U = {1,2}, two picks must hit B.
    REQUIRE(failure_prob(3, {}, {0}, {1, 2}, 2) == 0);
  }
  SECTION("seed size below |S| is a precondition error") {
    REQUIRE_THROWS_AS(failure_prob(4, {0, 1}, {0, 1}, {2}, 1),
                      std::invalid_argument);
  }
  SECTION("S must be inside T") {
    REQUIRE_THROWS_AS(failure_prob(4, {0}, {1}, {2}, 2), std::invalid_argument);
  }
}

TEST_CASE("failure probability equals exhaustive subset enumeration") {
  Rng rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(6));
    std::vector<NodeId> t_set, s_set, b_set;
    for (NodeId u = 0; u < n; ++u) {
      if (rng.below(3) == 0) {
        t_set.push_back(u);
        if (rng.below(3) == 0) s_set.push_back(u);
      }
      if (rng.below(3) == 0) b_set.push_back(u);
    }
    const int seed_size =
        static_cast<int>(s_set.size()) + static_cast<int>(rng.below(4));
    const Rational expected = brute_failure_prob(n, s_set, t_set, b_set, seed_size);
    REQUIRE(failure_prob(n, s_set, t_set, b_set, seed_size) == expected);
  }
}

TEST_CASE("derandomized seed set under universal coverage") {
  // Long windows on a connected sequence make every reach set the whole
  // vertex set, so failure is impossible and the scan keeps adding nodes.
  const GeneratorSpec spec{GeneratorSpec::Model::gnp_repair, 8, 3, 0.3, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  const Alg1Params params = make_alg1_params(8, 2);
  const std::vector<TokenWindow> windows = nominal_token_windows(params, 2);
  REQUIRE(windows.front().length() >= 7);  // covers the whole graph

  const DerandResult result = derandomize_S(seq, windows, params.seed_count);
  REQUIRE(result.initial_phi == 0);
  REQUIRE(result.guaranteed);
  REQUIRE(static_cast<int>(result.selected.size()) ==
          std::min(params.seed_count, 8));
  for (std::size_t i = 0; i + 1 < result.phi_trace.size(); ++i)
    REQUIRE(result.phi_trace[i + 1] <= result.phi_trace[i]);
}

TEST_CASE("derandomized seed set with short windows still covers when it can") {
  // Short windows on a static path make reach sets proper hop balls.
  const GeneratorSpec spec{GeneratorSpec::Model::path, 10, 0, 0.0, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  std::vector<TokenWindow> windows{{0, 0, 2}, {1, 3, 5}};  // 3-round slots
  const int seed_size = 4;
  const DerandResult result = derandomize_S(seq, windows, seed_size);

  REQUIRE(result.phi_trace.size() == 10);
  Rational prev = result.initial_phi;
  for (const Rational& phi : result.phi_trace) {
    REQUIRE(phi <= prev);
    prev = phi;
  }
  REQUIRE(static_cast<int>(result.selected.size()) == seed_size);

  if (result.guaranteed) {
    for (NodeId u = 0; u < 10; ++u)
      for (const TokenWindow& w : windows) {
        const std::vector<NodeId> reach = backward_reach_set(seq, w, u);
        bool hit = false;
        for (const NodeId s : result.selected)
          hit = hit || std::find(reach.begin(), reach.end(), s) != reach.end();
        REQUIRE(hit);
      }
  }
}

TEST_CASE("derandomization reports when no guarantee exists") {
  // A 2-round window on a long path cannot cover remote nodes no matter the
  // seed set size 1, so the initial potential is at least 1.
  const GeneratorSpec spec{GeneratorSpec::Model::path, 12, 0, 0.0, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  std::vector<TokenWindow> windows{{0, 0, 1}};
  const DerandResult result = derandomize_S(seq, windows, 1);
  REQUIRE(result.initial_phi >= 1);
  REQUIRE_FALSE(result.guaranteed);
  REQUIRE(result.selected.size() == 1);
}

TEST_CASE("gather_all on the three-node path sends both endpoints in round 1") {
  TokenMatrix init(3, 2);
  init.grant(0, 0);
  init.grant(2, 1);
  const GeneratorSpec spec{GeneratorSpec::Model::path, 3, 0, 0.0, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  const Schedule sched = gather_all(seq, init, 1, 0);
  REQUIRE(sched.round_count() == 1);
  REQUIRE(sched.rounds[0].at(0) == 0);
  REQUIRE(sched.rounds[0].at(2) == 1);
  REQUIRE(sched.rounds[0].at(1) == kEmptyToken);

  const auto [final_state, metrics] = run_schedule(init, seq, sched);
  REQUIRE(final_state.node_missing(1) == 0);
}

TEST_CASE("gather_all with everything already at the target is empty") {
  TokenMatrix init(4, 3);
  init.grant(2, 0);
  init.grant(2, 1);
  init.grant(2, 2);
  const GeneratorSpec spec{GeneratorSpec::Model::star_rotating, 4, 0, 0.0, {}, {}};
  const Schedule sched = gather_all(lazy_sequence(spec), init, 2, 0);
  REQUIRE(sched.round_count() == 0);
}

TEST_CASE("gather_all rejects unsourced tokens") {
  const TokenMatrix init(3, 1);
  const GeneratorSpec spec{GeneratorSpec::Model::path, 3, 0, 0.0, {}, {}};
  REQUIRE_THROWS_AS(gather_all(lazy_sequence(spec), init, 0, 0),
                    ContractViolation);
}

TEST_CASE("gather_all delivers everything within n+k rounds") {
  Rng rng(83);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(12));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const TokenMatrix init =
        new_distribution(n, k, OneTokenPerNodeInit{}, rng.next_u64());
    const GeneratorSpec spec{GeneratorSpec::Model::gnp_repair, n,
                             rng.next_u64(), 0.15, {}, {}};
    const GraphSequence seq = lazy_sequence(spec);
    const NodeId target = static_cast<NodeId>(rng.below(n));
    const long start = rng.below(3);
    const Schedule sched = gather_all(seq, init, target, start);
    REQUIRE(sched.round_count() <= n + k);

    TokenMatrix state = init;
    for (long r = 0; r < sched.round_count(); ++r)
      state = execute_round(state, sched.rounds[static_cast<std::size_t>(r)],
                            seq.graph_at(start + r))
                  .first;
    REQUIRE(state.node_missing(target) == 0);
  }
}

TEST_CASE("algorithm1 trivial branch floods one token within n rounds") {
  const int n = 8;
  TokenMatrix init(n, 1);
  init.grant(3, 0);
  const GeneratorSpec spec{GeneratorSpec::Model::gnp_repair, n, 5, 0.2, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  const Alg1Params params = make_alg1_params(n, 1);
  REQUIRE(params.trivial_branch);
  const Alg1Result result = algorithm1(seq, init, params, 5);
  REQUIRE(result.schedule.round_count() <= n);
  const auto [final_state, metrics] = run_schedule(init, seq, result.schedule);
  REQUIRE(final_state.complete());
}

TEST_CASE("algorithm1 on a complete start returns the empty schedule") {
  const TokenMatrix init = new_distribution(8, 4, BernoulliInit{1.0}, 0);
  const GeneratorSpec spec{GeneratorSpec::Model::path, 8, 0, 0.0, {}, {}};
  const Alg1Result result =
      algorithm1(lazy_sequence(spec), init, make_alg1_params(8, 4), 0);
  REQUIRE(result.schedule.round_count() == 0);
}

TEST_CASE("algorithm1 main branch disseminates fully within its budget") {
  const int n = 16;
  const int k = 6;
  const TokenMatrix init = new_distribution(n, k, OneTokenPerNodeInit{}, 12);
  const GeneratorSpec spec{GeneratorSpec::Model::gnp_repair, n, 12, 0.2, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  const Alg1Params params = make_alg1_params(n, k);
  REQUIRE_FALSE(params.trivial_branch);

  const Alg1Result result = algorithm1(seq, init, params, 12);
  const auto [final_state, metrics] = run_schedule(init, seq, result.schedule);
  REQUIRE(final_state.complete());
  REQUIRE(result.log.total_rounds <=
          params.seed_count * params.gather_window +
              static_cast<long>(k) * params.flood_window);
  REQUIRE(result.log.seed_nodes.size() ==
          static_cast<std::size_t>(std::min(params.seed_count, n)));
  REQUIRE(result.log.gather_spans.size() == result.log.seed_nodes.size());
  REQUIRE(result.log.flood_spans.size() == static_cast<std::size_t>(k));
}

TEST_CASE("algorithm1 derandomized mode also completes") {
  const int n = 12;
  const int k = 4;
  const TokenMatrix init = new_distribution(n, k, OneTokenPerNodeInit{}, 3);
  const GeneratorSpec spec{GeneratorSpec::Model::gnp_repair, n, 3, 0.25, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  const Alg1Params params =
      make_alg1_params(n, k, Alg1Params::Mode::derandomized);
  const Alg1Result result = algorithm1(seq, init, params, 3);
  const auto [final_state, metrics] = run_schedule(init, seq, result.schedule);
  REQUIRE(final_state.complete());
  REQUIRE(result.log.derand_guaranteed);
}

TEST_CASE("algorithm1 rejects unsourced tokens") {
  const TokenMatrix init(6, 2);  // nothing held anywhere
  const GeneratorSpec spec{GeneratorSpec::Model::path, 6, 0, 0.0, {}, {}};
  REQUIRE_THROWS_AS(
      algorithm1(lazy_sequence(spec), init, make_alg1_params(6, 2), 0),
      ContractViolation);
}
