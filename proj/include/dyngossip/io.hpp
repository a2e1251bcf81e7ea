#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dyngossip/adversary.hpp"
#include "dyngossip/core.hpp"
#include "dyngossip/evolution.hpp"
#include "dyngossip/offline.hpp"

namespace dyngossip {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Token distributions: {"n":, "k":, "holders": [[token,...], ...]}

inline Json token_matrix_to_json(const TokenMatrix& m) {
  Json holders = Json::array();
  for (NodeId u = 0; u < m.node_count(); ++u) holders.push_back(m.tokens_of(u));
  return Json{{"n", m.node_count()}, {"k", m.token_count()}, {"holders", holders}};
}

inline TokenMatrix token_matrix_from_json(const Json& j) {
  const int n = j.at("n").get<int>();
  const int k = j.at("k").get<int>();
  TokenMatrix m(n, k);
  const Json& holders = j.at("holders");
  if (static_cast<int>(holders.size()) != n)
    throw std::invalid_argument("token matrix: holders size != n");
  for (NodeId u = 0; u < n; ++u)
    for (const auto& t : holders.at(static_cast<std::size_t>(u)))
      m.grant(u, t.get<TokenId>());
  return m;
}

// ---------------------------------------------------------------------------
// Graph sequences: {"n":, "extend": "cycle"|"error", "rounds": [[[u,v],...]]}

inline Json sequence_to_json(const GraphSequence& seq) {
  if (seq.is_generated())
    throw std::invalid_argument("sequence_to_json: generator-backed sequence");
  Json rounds = Json::array();
  for (const CommGraph& g : seq.recorded()) {
    Json edges = Json::array();
    for (const auto& [u, v] : g.edges()) edges.push_back(Json::array({u, v}));
    rounds.push_back(edges);
  }
  return Json{{"n", seq.node_count()},
              {"extend",
               seq.extend_policy() == GraphSequence::Extend::cycle ? "cycle"
                                                                   : "error"},
              {"rounds", rounds}};
}

inline GraphSequence sequence_from_json(const Json& j) {
  const int n = j.at("n").get<int>();
  const std::string extend = j.at("extend").get<std::string>();
  if (extend != "cycle" && extend != "error")
    throw std::invalid_argument("sequence: extend must be cycle or error");
  std::vector<CommGraph> rounds;
  for (const auto& round : j.at("rounds")) {
    std::vector<CommGraph::Edge> edges;
    for (const auto& e : round) {
      if (e.size() != 2) throw std::invalid_argument("sequence: bad edge");
      edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
    }
    rounds.emplace_back(n, std::move(edges));
  }
  return GraphSequence(n, std::move(rounds),
                       extend == "cycle" ? GraphSequence::Extend::cycle
                                         : GraphSequence::Extend::error);
}

// ---------------------------------------------------------------------------
// Schedules: {"rounds": [{"0": token|null, ...}, ...]}; null is the empty
// broadcast.

inline Json schedule_to_json(const Schedule& sched) {
  Json rounds = Json::array();
  for (const BroadcastVector& bcast : sched.rounds) {
    Json round = Json::object();
    for (NodeId u = 0; u < bcast.node_count(); ++u) {
      const TokenId t = bcast.at(u);
      round[std::to_string(u)] = t == kEmptyToken ? Json() : Json(t);
    }
    rounds.push_back(round);
  }
  return Json{{"rounds", rounds}};
}

inline Schedule schedule_from_json(const Json& j) {
  Schedule sched;
  for (const auto& round : j.at("rounds")) {
    const int n = static_cast<int>(round.size());
    BroadcastVector bcast = BroadcastVector::all_empty(n);
    for (const auto& [key, value] : round.items()) {
      const int u = std::stoi(key);
      if (u < 0 || u >= n)
        throw std::invalid_argument("schedule: node key out of range");
      if (!value.is_null()) bcast.set(u, value.get<TokenId>());
    }
    sched.rounds.push_back(std::move(bcast));
  }
  return sched;
}

// ---------------------------------------------------------------------------
// Metrics CSV (rounds numbered from 1).

inline std::string metrics_csv(const std::vector<RoundMetrics>& metrics) {
  std::ostringstream out;
  out << "round,useful_exchanges,token_gains,missing_total\n";
  for (std::size_t r = 0; r < metrics.size(); ++r)
    out << (r + 1) << ',' << metrics[r].useful_exchanges << ','
        << metrics[r].token_gains << ',' << metrics[r].missing_total << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Experiment records.

inline Json experiment_to_json(const ExperimentRecord& rec) {
  Json per_round = Json::array();
  for (std::size_t r = 0; r < rec.per_round.size(); ++r) {
    per_round.push_back(Json{{"round", r + 1},
                             {"useful_exchanges", rec.per_round[r].useful_exchanges},
                             {"token_gains", rec.per_round[r].token_gains},
                             {"missing_total", rec.per_round[r].missing_total}});
  }
  return Json{{"config", Json{{"n", rec.n},
                              {"k", rec.k},
                              {"seed", rec.seed},
                              {"strategy", rec.strategy},
                              {"max_rounds", rec.max_rounds}}},
              {"rounds_used", rec.rounds_used},
              {"completed", rec.completed},
              {"initial_missing", rec.initial_missing},
              {"final_missing", rec.final_missing},
              {"max_useful_exchanges", rec.max_useful},
              {"round_bound", rec.round_bound},
              {"per_round", per_round}};
}

inline std::string experiment_csv_header() {
  return "n,k,seed,rounds_used,init_missing,max_useful,bound\n";
}

inline std::string experiment_csv_row(const ExperimentRecord& rec) {
  std::ostringstream out;
  out << rec.n << ',' << rec.k << ',' << rec.seed << ',' << rec.rounds_used
      << ',' << rec.initial_missing << ',' << rec.max_useful << ','
      << rec.round_bound << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Debug exports.

inline Json evolution_to_json(const EvolutionGraph& evo) {
  Json vertices = Json::array();
  for (int id = 0; id < evo.node_count() * evo.levels(); ++id) {
    const EvoVertex v = evo.vertex_of(id);
    vertices.push_back(Json::array({v.node, v.level}));
  }
  if (evo.has_supersource()) vertices.push_back(Json::array({-1, kSuperSourceLevel}));
  Json edges = Json::array();
  for (const EvoEdge& e : evo.edges()) {
    const EvoVertex from = evo.vertex_of(e.from);
    const EvoVertex to = evo.vertex_of(e.to);
    edges.push_back(Json{{"from", Json::array({from.node, from.level})},
                         {"to", Json::array({to.node, to.level})},
                         {"kind", edge_kind_name(e.kind)},
                         {"capacity", e.capacity}});
  }
  return Json{{"n", evo.node_count()},
              {"rounds", evo.rounds()},
              {"vertices", vertices},
              {"edges", edges}};
}

inline Json trees_to_json(const std::vector<SteinerTree>& trees) {
  Json out = Json::array();
  for (const SteinerTree& tree : trees) {
    Json edges = Json::array();
    for (const auto& e : tree.edges)
      edges.push_back(Json{{"from", Json::array({e.from.node, e.from.level})},
                           {"to", Json::array({e.to.node, e.to.level})},
                           {"kind", edge_kind_name(e.kind)}});
    Json terminals = Json::array();
    for (const auto& t : tree.terminals)
      terminals.push_back(Json::array({t.node, t.level}));
    out.push_back(Json{{"token", tree.token},
                       {"root", Json::array({tree.root.node, tree.root.level})},
                       {"terminals", terminals},
                       {"edges", edges}});
  }
  return Json{{"trees", out}};
}

inline Json derand_to_json(const DerandResult& result, const Alg1Params& params) {
  return Json{{"seed_count", params.seed_count},
              {"flood_window", params.flood_window},
              {"selected", result.selected},
              {"initial_phi", result.initial_phi.str()},
              {"guaranteed", result.guaranteed}};
}

inline Json phase_log_to_json(const Alg1PhaseLog& log) {
  auto span = [](const Alg1PhaseLog::Span& s) {
    return Json{{"first", s.first}, {"last", s.last}};
  };
  Json gathers = Json::array();
  for (const auto& [node, s] : log.gather_spans)
    gathers.push_back(Json{{"node", node}, {"span", span(s)}});
  Json floods = Json::array();
  for (const auto& [token, s] : log.flood_spans)
    floods.push_back(Json{{"token", token}, {"span", span(s)}});
  return Json{{"mode", log.params.mode == Alg1Params::Mode::derandomized
                           ? "derandomized"
                           : "random"},
              {"trivial_branch", log.params.trivial_branch},
              {"seed_count", log.params.seed_count},
              {"flood_window", log.params.flood_window},
              {"gather_window", log.params.gather_window},
              {"seed_nodes", log.seed_nodes},
              {"gathers", gathers},
              {"floods", floods},
              {"fallback_used", log.fallback_used},
              {"fallback", span(log.fallback)},
              {"derand_guaranteed", log.derand_guaranteed},
              {"total_rounds", log.total_rounds}};
}

// ---------------------------------------------------------------------------
// Files.

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << content;
}

inline void write_json(const std::string& path, const Json& j) {
  write_file(path, j.dump(2) + "\n");
}

inline Json load_json(const std::string& path) {
  return Json::parse(read_file(path));
}

}  // namespace dyngossip
