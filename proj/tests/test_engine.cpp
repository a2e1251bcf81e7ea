#include <catch2/catch_amalgamated.hpp>

#include "dyngossip/adversary.hpp"
#include "dyngossip/engine.hpp"
#include "dyngossip/generators.hpp"
#include "test_util.hpp"

using namespace dyngossip;

TEST_CASE("new_distribution bernoulli extremes") {
  const TokenMatrix full = new_distribution(4, 2, BernoulliInit{1.0}, 3);
  REQUIRE(full.missing_count() == 0);
  const TokenMatrix empty = new_distribution(4, 2, BernoulliInit{0.0}, 3);
  REQUIRE(empty.missing_count() == 8);
  REQUIRE_THROWS_AS(new_distribution(2, 2, BernoulliInit{1.5}, 0),
                    std::invalid_argument);
}

TEST_CASE("new_distribution one token per node is a permutation matrix") {
  const TokenMatrix m = new_distribution(4, 4, OneTokenPerNodeInit{}, 11);
  for (TokenId t = 0; t < 4; ++t) REQUIRE(m.holder_count(t) == 1);
  for (NodeId u = 0; u < 4; ++u) REQUIRE(m.node_missing(u) == 3);
  REQUIRE(m.missing_count() == 12);

  REQUIRE_THROWS_AS(new_distribution(3, 4, OneTokenPerNodeInit{}, 0),
                    std::invalid_argument);
}

TEST_CASE("new_distribution bernoulli(3/4) missing mass near nk/4") {
  const TokenMatrix m = new_distribution(64, 64, BernoulliInit{0.75}, 7);
  const long missing = m.missing_count();
  REQUIRE(missing >= 1024 * 0.9);
  REQUIRE(missing <= 1024 * 1.1);
  // Same seed, same matrix.
  REQUIRE(new_distribution(64, 64, BernoulliInit{0.75}, 7) == m);
  REQUIRE_FALSE(new_distribution(64, 64, BernoulliInit{0.75}, 8) == m);
}

TEST_CASE("new_distribution explicit holders") {
  const TokenMatrix m =
      new_distribution(3, 2, ExplicitInit{{{0, 1}, {}, {1}}}, 0);
  REQUIRE(m.has(0, 0));
  REQUIRE(m.has(0, 1));
  REQUIRE(m.node_missing(1) == 2);
  REQUIRE(m.has(2, 1));
  REQUIRE_THROWS_AS(new_distribution(3, 2, ExplicitInit{{{2}, {}, {}}}, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(new_distribution(3, 2, ExplicitInit{{{0}}}, 0),
                    std::invalid_argument);
}

TEST_CASE("free edge definition") {
  TokenMatrix state(2, 1);
  BroadcastVector bcast = BroadcastVector::all_empty(2);
  SECTION("both empty broadcasts are free") {
    REQUIRE(is_free_edge(state, bcast, 0, 1));
  }
  SECTION("receiver missing the broadcast token makes the edge non-free") {
    state.grant(0, 0);
    bcast.set(0, 0);
    REQUIRE_FALSE(is_free_edge(state, bcast, 0, 1));
  }
  SECTION("mutually held broadcasts are free") {
    state.grant(0, 0);
    state.grant(1, 0);
    bcast.set(0, 0);
    bcast.set(1, 0);
    REQUIRE(is_free_edge(state, bcast, 0, 1));
  }
  REQUIRE_THROWS_AS(is_free_edge(state, bcast, 1, 1), std::invalid_argument);
}

TEST_CASE("execute_round delivers to all neighbors") {
  // Only node 1 holds the token and broadcasts it on the path 0-1-2.
  TokenMatrix state(3, 1);
  state.grant(1, 0);
  BroadcastVector bcast = BroadcastVector::all_empty(3);
  bcast.set(1, 0);
  const CommGraph g(3, {{0, 1}, {1, 2}});
  const auto [next, metrics] = execute_round(state, bcast, g);
  REQUIRE(next.has(0, 0));
  REQUIRE(next.has(2, 0));
  REQUIRE(metrics.useful_exchanges == 2);
  REQUIRE(metrics.token_gains == 2);
  REQUIRE(metrics.missing_total == 0);
  REQUIRE(metrics.per_node_missing == std::vector<int>{0, 0, 0});
}

TEST_CASE("execute_round with all-empty broadcast changes nothing") {
  const TokenMatrix state = new_distribution(5, 3, BernoulliInit{0.5}, 2);
  const auto [next, metrics] =
      execute_round(state, BroadcastVector::all_empty(5), path_graph(5));
  REQUIRE(next == state);
  REQUIRE(metrics.useful_exchanges == 0);
  REQUIRE(metrics.token_gains == 0);
}

TEST_CASE("execute_round rejects infeasible broadcasts") {
  TokenMatrix state(2, 1);
  BroadcastVector bcast = BroadcastVector::all_empty(2);
  bcast.set(0, 0);
  REQUIRE_THROWS_AS(execute_round(state, bcast, CommGraph(2, {{0, 1}})),
                    ContractViolation);
}

TEST_CASE("gain accounting over random rounds") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const int k = 1 + static_cast<int>(rng.below(4));
    const TokenMatrix state =
        new_distribution(n, k, BernoulliInit{0.4}, rng.next_u64());
    const BroadcastVector bcast = testutil::random_feasible_broadcast(state, rng);
    const CommGraph g = gnp_repair_graph(n, 0.3, rng.next_u64(), 0);
    const auto [next, metrics] = execute_round(state, bcast, g);

    REQUIRE(state.missing_count() - metrics.missing_total == metrics.token_gains);
    REQUIRE(metrics.token_gains <= metrics.useful_exchanges);
    REQUIRE(metrics.useful_exchanges <= 2 * static_cast<long>(g.edge_count()));
    // Monotonicity: holder sets only grow.
    for (NodeId u = 0; u < n; ++u)
      for (TokenId t = 0; t < k; ++t)
        if (state.has(u, t)) REQUIRE(next.has(u, t));
  }
}

TEST_CASE("run_schedule replays the line-star fixture to full dissemination") {
  const testutil::LineStarFixture fix;
  const auto [final_state, metrics] = run_schedule(fix.init, fix.seq, fix.sched);
  REQUIRE(final_state.complete());
  REQUIRE(metrics.size() == 2);
  REQUIRE(metrics[0].token_gains == 2);   // nodes 0 and 2 learn the token
  REQUIRE(metrics[1].token_gains == 2);   // nodes 3 and 4 learn the token
  REQUIRE(metrics[1].missing_total == 0);
}

TEST_CASE("run_schedule empty schedule returns the initial state") {
  const testutil::LineStarFixture fix;
  const auto [final_state, metrics] = run_schedule(fix.init, fix.seq, Schedule{});
  REQUIRE(final_state == fix.init);
  REQUIRE(metrics.empty());
}

TEST_CASE("run_schedule reports the offending round") {
  const testutil::LineStarFixture fix;
  Schedule bad = fix.sched;
  bad.rounds[1].set(4, 0);  // node 4 does not hold the token yet
  try {
    run_schedule(fix.init, fix.seq, bad);
    FAIL("expected a contract violation");
  } catch (const ContractViolation& e) {
    REQUIRE(std::string(e.what()).find("round 1") != std::string::npos);
    REQUIRE(std::string(e.what()).find("node 4") != std::string::npos);
  }
}

TEST_CASE("run_online terminates immediately on complete input") {
  const TokenMatrix full = new_distribution(4, 2, BernoulliInit{1.0}, 0);
  const Transcript tr = run_online(make_strategy(StrategyKind::round_robin, 0),
                                   make_strong_adversary(), full, 100);
  REQUIRE(tr.rounds.empty());
  REQUIRE(tr.final_state == full);
}

TEST_CASE("run_online two nodes one token completes in one round") {
  TokenMatrix init(2, 1);
  init.grant(0, 0);
  const Transcript tr = run_online(make_strategy(StrategyKind::round_robin, 5),
                                   make_strong_adversary(), init, 10);
  REQUIRE(tr.rounds.size() == 1);
  REQUIRE(tr.final_state.complete());
}

TEST_CASE("run_online rejects a disconnected adversary graph") {
  TokenMatrix init(3, 1);
  init.grant(0, 0);
  const AdversaryPolicy broken = [](const TokenMatrix& state,
                                    const BroadcastVector&) {
    return CommGraph::allow_disconnected(state.node_count(), {{0, 1}});
  };
  REQUIRE_THROWS_AS(run_online(make_strategy(StrategyKind::round_robin, 0),
                               broken, init, 10),
                    ContractViolation);
}

TEST_CASE("identical seed and config give bit-identical transcripts") {
  const TokenMatrix init = new_distribution(16, 8, BernoulliInit{0.6}, 21);
  auto run = [&] {
    return run_online(make_strategy(StrategyKind::uniform_random, 21),
                      make_strong_adversary(), init, 200);
  };
  const Transcript a = run();
  const Transcript b = run();
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t r = 0; r < a.rounds.size(); ++r) {
    REQUIRE(a.rounds[r].bcast == b.rounds[r].bcast);
    REQUIRE(a.rounds[r].graph == b.rounds[r].graph);
    REQUIRE(a.rounds[r].metrics == b.rounds[r].metrics);
  }
  REQUIRE(a.final_state == b.final_state);
  REQUIRE(transcript_consistent(a));
}

TEST_CASE("flooding one token strictly grows holders until complete") {
  const int n = 9;
  TokenMatrix state(n, 1);
  state.grant(4, 0);
  const GeneratorSpec spec{GeneratorSpec::Model::star_rotating, n, 0, 0.0, {}, {}};
  const GraphSequence seq = lazy_sequence(spec);
  long round = 0;
  while (!state.complete()) {
    REQUIRE(round < n - 1);
    BroadcastVector bcast = BroadcastVector::all_empty(n);
    for (const NodeId u : state.holders(0)) bcast.set(u, 0);
    const int before = state.holder_count(0);
    state = execute_round(state, bcast, seq.graph_at(round)).first;
    REQUIRE(state.holder_count(0) > before);
    ++round;
  }
}

TEST_CASE("round_start_states replays a transcript") {
  TokenMatrix init = new_distribution(8, 4, BernoulliInit{0.5}, 3);
  const Transcript tr = run_online(make_strategy(StrategyKind::rarest_first_global, 3),
                                   make_strong_adversary(), init, 50);
  const std::vector<TokenMatrix> states = round_start_states(tr);
  REQUIRE(states.size() == tr.rounds.size() + 1);
  REQUIRE(states.front() == tr.initial);
  REQUIRE(states.back() == tr.final_state);
  for (std::size_t r = 0; r < tr.rounds.size(); ++r)
    REQUIRE(states[r].missing_count() >= states[r + 1].missing_count());
}
