// Command-line surface for the k-gossip toolkit: sequence/distribution
// generation, schedule replay, offline scheduling, gathering, derandomized
// seed selection and adversarial lower-bound experiments.
//
// Exit codes: 0 success, 1 usage error, 2 contract violation (infeasible
// schedule, disconnected graph, unsourced token).

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dyngossip/dyngossip.hpp"

namespace dg = dyngossip;

namespace {

dg::GraphSequence load_sequence(const std::string& path) {
  return dg::sequence_from_json(dg::load_json(path));
}

dg::TokenMatrix load_matrix(const std::string& path) {
  return dg::token_matrix_from_json(dg::load_json(path));
}

int batch_threads(long trials) {
  long threads = static_cast<long>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (const char* env = std::getenv("DYNGOSSIP_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) threads = std::min(threads, cap);
  }
  return static_cast<int>(std::min(threads, trials));
}

struct GenOptions {
  std::string what = "seq";
  std::string model = "gnp";
  std::string dist_spec = "bernoulli";
  std::string from;
  std::string out;
  std::string extend = "cycle";
  int n = 0;
  int k = 0;
  long rounds = 0;
  std::uint64_t seed = 0;
  double p = -1.0;
};

void run_gen(const GenOptions& opt) {
  if (opt.what == "dist") {
    dg::DistributionSpec spec;
    if (opt.dist_spec == "bernoulli") {
      spec = dg::BernoulliInit{opt.p < 0 ? 0.75 : opt.p};
    } else if (opt.dist_spec == "one-per-node") {
      spec = dg::OneTokenPerNodeInit{};
    } else {
      throw CLI::ValidationError("--spec must be bernoulli or one-per-node");
    }
    const dg::TokenMatrix m = dg::new_distribution(opt.n, opt.k, spec, opt.seed);
    dg::write_json(opt.out, dg::token_matrix_to_json(m));
    std::cout << "wrote " << opt.out << " (n=" << opt.n << " k=" << opt.k
              << " missing=" << m.missing_count() << ")\n";
    return;
  }

  dg::GeneratorSpec spec;
  spec.n = opt.n;
  spec.seed = opt.seed;
  if (opt.model == "gnp") {
    spec.model = dg::GeneratorSpec::Model::gnp_repair;
    spec.p = opt.p < 0 ? 0.1 : opt.p;
  } else if (opt.model == "path") {
    spec.model = dg::GeneratorSpec::Model::path;
  } else if (opt.model == "star") {
    spec.model = dg::GeneratorSpec::Model::star_rotating;
  } else if (opt.model == "static") {
    spec.model = dg::GeneratorSpec::Model::static_graph;
    if (opt.from.empty())
      throw CLI::ValidationError("--model static needs --from");
    const dg::GraphSequence base = load_sequence(opt.from);
    spec.n = base.node_count();
    spec.base = base.graph_at(0);
  } else if (opt.model == "recorded") {
    spec.model = dg::GeneratorSpec::Model::recorded;
    if (opt.from.empty())
      throw CLI::ValidationError("--model recorded needs --from");
    const dg::GraphSequence base = load_sequence(opt.from);
    spec.n = base.node_count();
    spec.recorded_rounds = base.recorded();
  } else {
    throw CLI::ValidationError("unknown --model " + opt.model);
  }
  const auto extend = opt.extend == "error" ? dg::GraphSequence::Extend::error
                                            : dg::GraphSequence::Extend::cycle;
  const dg::GraphSequence seq = dg::generate_sequence(spec, opt.rounds, extend);
  dg::write_json(opt.out, dg::sequence_to_json(seq));
  std::cout << "wrote " << opt.out << " (n=" << spec.n << " rounds="
            << opt.rounds << ")\n";
}

struct SimulateOptions {
  std::string seq, init, sched, out_state, metrics;
};

void run_simulate(const SimulateOptions& opt) {
  const dg::GraphSequence seq = load_sequence(opt.seq);
  const dg::TokenMatrix init = load_matrix(opt.init);
  const dg::Schedule sched = dg::schedule_from_json(dg::load_json(opt.sched));
  const auto [final_state, metrics] = dg::run_schedule(init, seq, sched);
  if (!opt.out_state.empty())
    dg::write_json(opt.out_state, dg::token_matrix_to_json(final_state));
  if (!opt.metrics.empty())
    dg::write_file(opt.metrics, dg::metrics_csv(metrics));
  std::cout << "rounds=" << metrics.size()
            << " missing=" << final_state.missing_count() << "\n";
}

struct OfflineOptions {
  std::string seq, init, out, log, mode = "random";
  std::uint64_t seed = 0;
};

void run_offline(const OfflineOptions& opt) {
  const dg::GraphSequence seq = load_sequence(opt.seq);
  const dg::TokenMatrix init = load_matrix(opt.init);
  if (init.node_count() != seq.node_count())
    throw CLI::ValidationError("sequence and distribution disagree on n");
  const auto mode = opt.mode == "derand"
                        ? dg::Alg1Params::Mode::derandomized
                        : dg::Alg1Params::Mode::random;
  if (opt.mode != "derand" && opt.mode != "random")
    throw CLI::ValidationError("--mode must be random or derand");
  dg::Alg1Params params;
  const bool nonempty = init.node_count() >= 1 && init.token_count() >= 1;
  if (nonempty)
    params = dg::make_alg1_params(init.node_count(), init.token_count(), mode);
  const dg::Alg1Result result = dg::algorithm1(seq, init, params, opt.seed);
  dg::write_json(opt.out, dg::schedule_to_json(result.schedule));
  if (!opt.log.empty())
    dg::write_json(opt.log, dg::phase_log_to_json(result.log));
  std::cout << "rounds=" << result.schedule.round_count() << " fallback="
            << (result.log.fallback_used ? "yes" : "no") << "\n";
}

struct GatherOptions {
  std::string seq, init, out, dump_evo;
  int target = 0;
  long start = 0;
};

void run_gather(const GatherOptions& opt) {
  const dg::GraphSequence seq = load_sequence(opt.seq);
  const dg::TokenMatrix init = load_matrix(opt.init);
  const dg::Schedule sched = dg::gather_all(seq, init, opt.target, opt.start);
  dg::write_json(opt.out, dg::schedule_to_json(sched));
  if (!opt.dump_evo.empty()) {
    std::vector<std::pair<dg::NodeId, dg::TokenId>> sources;
    for (dg::TokenId t = 0; t < init.token_count(); ++t)
      sources.emplace_back(*init.first_holder(t), t);
    const dg::EvolutionGraph evo = dg::attach_supersource(
        dg::build_evolution_graph(seq, init.node_count() + init.token_count(),
                                  opt.start),
        sources);
    dg::write_json(opt.dump_evo, dg::evolution_to_json(evo));
  }
  std::cout << "rounds=" << sched.round_count() << "\n";
}

struct DerandOptions {
  std::string seq, out;
  int k = 0;
};

void run_derandomize(const DerandOptions& opt) {
  const dg::GraphSequence seq = load_sequence(opt.seq);
  const dg::Alg1Params params = dg::make_alg1_params(
      seq.node_count(), opt.k, dg::Alg1Params::Mode::derandomized);
  const dg::DerandResult result = dg::derandomize_S(
      seq, dg::nominal_token_windows(params, opt.k), params.seed_count);
  dg::write_json(opt.out, dg::derand_to_json(result, params));
  std::cout << "selected=" << result.selected.size()
            << " guaranteed=" << (result.guaranteed ? "yes" : "no") << "\n";
}

struct LowerBoundOptions {
  std::string algo = "rr";
  std::string out, csv, metrics;
  int n = 0;
  int k = 0;
  std::uint64_t seed = 0;
  long max_rounds = -1;
  long trials = 1;
};

void run_lowerbound(const LowerBoundOptions& opt) {
  const dg::StrategyKind kind = dg::parse_strategy(opt.algo);
  if (opt.trials <= 1) {
    const dg::ExperimentRecord rec =
        dg::lower_bound_experiment(opt.n, opt.k, kind, opt.seed, opt.max_rounds);
    if (!opt.out.empty()) dg::write_json(opt.out, dg::experiment_to_json(rec));
    if (!opt.metrics.empty())
      dg::write_file(opt.metrics, dg::metrics_csv(rec.per_round));
    std::cout << "rounds_used=" << rec.rounds_used << " init_missing="
              << rec.initial_missing << " max_useful=" << rec.max_useful
              << " bound=" << rec.round_bound << "\n";
    return;
  }

  // Batch mode: trial i runs with seed + i; rows are written in trial order
  // no matter how the pool schedules them.
  std::vector<dg::ExperimentRecord> records(
      static_cast<std::size_t>(opt.trials));
  std::atomic<long> next{0};
  const int thread_count = batch_threads(opt.trials);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int t = 0; t < thread_count; ++t) {
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < opt.trials; i = next.fetch_add(1))
        records[static_cast<std::size_t>(i)] = dg::lower_bound_experiment(
            opt.n, opt.k, kind, opt.seed + static_cast<std::uint64_t>(i),
            opt.max_rounds);
    });
  }
  for (std::thread& worker : pool) worker.join();

  std::string csv = dg::experiment_csv_header();
  for (const dg::ExperimentRecord& rec : records)
    csv += dg::experiment_csv_row(rec);
  if (opt.csv.empty())
    throw CLI::ValidationError("--trials > 1 needs --csv");
  dg::write_file(opt.csv, csv);
  if (!opt.out.empty())
    dg::write_json(opt.out, dg::experiment_to_json(records.front()));
  std::cout << "trials=" << opt.trials << " wrote " << opt.csv << "\n";
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"k-gossip on dynamic networks: simulator and offline schedulers"};
  app.require_subcommand(1);

  GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand(
      "gen", "Generate a graph sequence or an initial token distribution");
  gen_cmd->add_option("--what", gen.what, "seq or dist")
      ->check(CLI::IsMember({"seq", "dist"}));
  gen_cmd->add_option("--model", gen.model, "seq: gnp|path|star|static|recorded");
  gen_cmd->add_option("--spec", gen.dist_spec, "dist: bernoulli|one-per-node");
  gen_cmd->add_option("--from", gen.from, "input sequence for static/recorded");
  gen_cmd->add_option("--n", gen.n, "node count");
  gen_cmd->add_option("--k", gen.k, "token count (dist)");
  gen_cmd->add_option("--rounds", gen.rounds, "rounds to materialize (seq)");
  gen_cmd->add_option("--seed", gen.seed, "rng seed");
  gen_cmd->add_option("--p", gen.p, "edge/holding probability");
  gen_cmd->add_option("--extend", gen.extend, "cycle|error")
      ->check(CLI::IsMember({"cycle", "error"}));
  gen_cmd->add_option("--out", gen.out, "output file")->required();
  gen_cmd->callback([&] { run_gen(gen); });

  SimulateOptions sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Replay a schedule over a sequence");
  sim_cmd->add_option("--seq", sim.seq)->required();
  sim_cmd->add_option("--init", sim.init)->required();
  sim_cmd->add_option("--sched", sim.sched)->required();
  sim_cmd->add_option("--out-state", sim.out_state, "final distribution JSON");
  sim_cmd->add_option("--metrics", sim.metrics, "per-round metrics CSV");
  sim_cmd->callback([&] { run_simulate(sim); });

  OfflineOptions off;
  CLI::App* off_cmd = app.add_subcommand(
      "offline", "Compute a full-dissemination schedule for a known sequence");
  off_cmd->add_option("--seq", off.seq)->required();
  off_cmd->add_option("--init", off.init)->required();
  off_cmd->add_option("--out", off.out)->required();
  off_cmd->add_option("--log", off.log, "phase log JSON");
  off_cmd->add_option("--mode", off.mode, "random|derand");
  off_cmd->add_option("--seed", off.seed);
  off_cmd->callback([&] { run_offline(off); });

  GatherOptions gat;
  CLI::App* gat_cmd = app.add_subcommand(
      "gather", "Route every token to one target via max flow");
  gat_cmd->add_option("--seq", gat.seq)->required();
  gat_cmd->add_option("--init", gat.init)->required();
  gat_cmd->add_option("--target", gat.target)->required();
  gat_cmd->add_option("--start", gat.start, "first round of the window");
  gat_cmd->add_option("--out", gat.out)->required();
  gat_cmd->add_option("--dump-evo", gat.dump_evo, "evolution graph JSON");
  gat_cmd->callback([&] { run_gather(gat); });

  DerandOptions der;
  CLI::App* der_cmd = app.add_subcommand(
      "derandomize", "Pick the flood seed set by conditional expectations");
  der_cmd->add_option("--seq", der.seq)->required();
  der_cmd->add_option("--k", der.k, "token count")->required();
  der_cmd->add_option("--out", der.out)->required();
  der_cmd->callback([&] { run_derandomize(der); });

  LowerBoundOptions low;
  CLI::App* low_cmd = app.add_subcommand(
      "lowerbound", "Run strategies against the strong adversary");
  low_cmd->add_option("--n", low.n)->required();
  low_cmd->add_option("--k", low.k)->required();
  low_cmd->add_option("--algo", low.algo, "uniform|rr|rarest");
  low_cmd->add_option("--seed", low.seed);
  low_cmd->add_option("--max-rounds", low.max_rounds);
  low_cmd->add_option("--trials", low.trials, "batch size (seed+i per trial)");
  low_cmd->add_option("--out", low.out, "single-record JSON");
  low_cmd->add_option("--csv", low.csv, "batch CSV");
  low_cmd->add_option("--metrics", low.metrics, "per-round metrics CSV");
  low_cmd->callback([&] { run_lowerbound(low); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const dyngossip::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int main(int argc, char** argv) { return run_cli(argc, argv); }
