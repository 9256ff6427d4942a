#include "cprover/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cprover/expitr.hpp"
#include "cprover/gym.hpp"
#include "cprover/ineqgen.hpp"
#include "cprover/pool.hpp"

namespace cprover {

namespace fs = std::filesystem;

namespace {

constexpr const char* kWorkersEnv = "CURRICULUM_PROVER_WORKERS";

int workers_override(int fallback) {
  const char* v = std::getenv(kWorkersEnv);
  if (!v || !*v) return fallback;
  int n = std::atoi(v);
  if (n < 1) throw std::invalid_argument(std::string(kWorkersEnv) + " must be a positive integer");
  return n;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BudgetFlags {
  int d = 512;
  int e = 8;
  int max_depth = 24;
  long long timeout_ms = 60000;

  void add(CLI::App* app) {
    app->add_option("--d", d, "Expansion budget")->capture_default_str();
    app->add_option("--e", e, "Tactic samples per expansion")->capture_default_str();
    app->add_option("--max-depth", max_depth, "Depth cap")->capture_default_str();
    app->add_option("--timeout-ms", timeout_ms, "Per-search wall-clock limit")->capture_default_str();
  }
  SearchBudget budget() const {
    if (d < 0 || e < 1 || max_depth < 1 || timeout_ms < 1) throw std::invalid_argument("invalid search budget");
    return {d, e, max_depth, std::chrono::milliseconds(timeout_ms)};
  }
};

Checkpoint checkpoint_or_untrained(const std::string& path) {
  if (!path.empty()) return Checkpoint::load(path);
  return make_base_checkpoint({});
}

// ---------------------------------------------------------------------------

int cmd_ineqgen(const std::string& out, const GridOptions& grid) {
  auto start = std::chrono::steady_clock::now();
  auto statements = generate_grid(grid);
  write_corpus(statements, out);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "generated " << statements.size() << " statements into " << out << " in " << secs << " s\n";
  return 0;
}

int cmd_serve(const std::string& corpus, const FaultOptions& faults) {
  ProofEnv env(load_corpus(corpus));
  std::ios::sync_with_stdio(false);
  serve_loop(env, std::cin, std::cout, faults);
  return 0;
}

/// Protocol-compatible front end that spreads searches over a worker pool.
int cmd_pool(int workers, const std::string& command, long long timeout_ms) {
  WorkerPool pool(PoolOptions{workers_override(workers), command, std::chrono::milliseconds(timeout_ms)});
  std::map<std::string, std::pair<WorkerHandle, std::string>> routes;
  std::uint64_t next_id = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    GymResponse resp;
    try {
      GymRequest req = parse_request(line);
      if (req.command == "init_search") {
        if (req.args.size() != 2) throw ProtocolError("init_search expects [decl, options]");
        auto [h, r] = pool.init_search_wait(req.args[0], req.args[1]);
        resp = r;
        if (r.ok()) {
          std::string id = std::to_string(next_id++);
          routes[id] = {h, *r.search_id};
          resp.search_id = id;
        }
      } else if (req.command == "run_tac" || req.command == "clear_search") {
        if (req.args.empty()) throw ProtocolError(req.command + " expects a search id");
        auto it = routes.find(req.args[0]);
        if (it == routes.end()) {
          resp = GymResponse::failure("unknown search id");
        } else {
          GymRequest fwd = req;
          fwd.args[0] = it->second.second;
          resp = pool.request_wait(it->second.first, fwd);
          if (resp.search_id) resp.search_id = req.args[0];
          if (req.command == "clear_search" && resp.ok()) routes.erase(it);
        }
      } else {
        resp = GymResponse::failure("unknown command '" + req.command + "'");
      }
    } catch (const ProtocolError& e) {
      resp = GymResponse::failure(e.what());
    } catch (const WorkerCrashed& e) {
      resp = GymResponse::failure(e.what());
    } catch (const TacticFailed& e) {
      resp = GymResponse::failure(e.what());
    }
    std::cout << format_response(resp) << '\n' << std::flush;
  }
  return 0;
}

struct SearchFlags {
  std::string corpus, name, checkpoint, out, priority = "value", pool_cmd;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  BudgetFlags budget;
};

int cmd_search(const SearchFlags& f) {
  PriorityMode mode;
  if (f.priority == "value") {
    mode = PriorityMode::Value;
  } else if (f.priority == "logprob") {
    mode = PriorityMode::CumulativeLogprob;
  } else {
    throw CLI::ValidationError("--priority", "must be 'value' or 'logprob'");
  }
  SearchBudget budget = f.budget.budget();
  Checkpoint ckpt = checkpoint_or_untrained(f.checkpoint);
  ProofEnv env(load_corpus(f.corpus));
  if (!env.find(f.name)) throw UnknownDeclaration(f.name);
  std::unique_ptr<WorkerPool> pool;
  std::unique_ptr<Prover> prover;
  if (f.pool_cmd.empty()) {
    prover = std::make_unique<LocalProver>(env);
  } else {
    pool = std::make_unique<WorkerPool>(PoolOptions{1, f.pool_cmd});
    prover = std::make_unique<PoolProver>(*pool);
  }
  Rng rng(f.seed);
  SearchRecord rec = best_first_search(*prover, checkpoint_guide(ckpt, mode, f.temperature), budget, f.name, rng).record;
  rec.seed = f.seed;
  std::string json = record_to_json(rec);
  if (f.out.empty()) {
    std::cout << json << '\n';
  } else {
    std::ofstream(f.out, std::ios::binary) << json << '\n';
  }
  if (rec.success) {
    std::cerr << "proved " << rec.name << " in " << rec.proof.size() << " tactics, " << rec.expansions
              << " expansions\n";
    return 0;
  }
  std::cerr << "not proved: " << rec.diagnostic << " after " << rec.expansions << " expansions\n";
  return 1;
}

struct ExpitrFlags {
  std::string config, run_id, runs_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations, workers;
};

int cmd_expitr(const ExpitrFlags& f, bool sample_only) {
  // Overrides go into the JSON before parsing so seed-derived defaults
  // (grid seeds, the run id) follow the overridden seed.
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(f.config));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config: ") + e.what());
  }
  if (f.seed) j["seed"] = *f.seed;
  if (sample_only) j["mode"] = "sample-only";
  if (f.iterations) j["iterations"] = *f.iterations;
  if (f.workers) j["workers"] = *f.workers;
  if (!f.run_id.empty()) j["run_id"] = f.run_id;
  if (!f.runs_dir.empty()) j["runs_dir"] = f.runs_dir;
  RunConfig cfg = config_from_json(j.dump());
  cfg.workers = workers_override(cfg.workers);

  auto start = std::chrono::steady_clock::now();
  ExpertIteration loop(cfg);
  loop.on_progress = [&](int k, const std::string& msg) {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "[" << secs << " s] iteration " << k << ": " << msg << '\n';
  };
  loop.run();
  std::cerr << "wrote " << (loop.dir() / "metrics.csv").string() << '\n';
  return 0;
}

struct EvalFlags {
  std::string corpus, checkpoint, out;
  int attempts = 16;
  std::uint64_t seed = 0;
  int workers = 1;
  double temperature = 1.0;
  BudgetFlags budget;
};

int cmd_eval(const EvalFlags& f) {
  if (f.attempts < 1) throw CLI::ValidationError("--attempts", "must be at least 1");
  RunConfig cfg;
  cfg.budget = f.budget.budget();
  cfg.temperature = f.temperature;
  cfg.workers = workers_override(f.workers);
  std::vector<std::string> skipped;
  auto statements = load_corpus(f.corpus, &skipped);
  for (const auto& e : skipped) std::cerr << "skipped: " << e << "\n";
  ProofEnv env(statements);
  Checkpoint ckpt = checkpoint_or_untrained(f.checkpoint);
  std::vector<SearchJob> jobs;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    for (int a = 0; a < f.attempts; ++a) {
      jobs.push_back({i, a, derive_seed(f.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(a)})});
    }
  }
  auto records = run_searches(env, ckpt, PriorityMode::Value, cfg, jobs, 0);
  IterationTallies tallies(statements.size());
  for (std::size_t i = 0; i < statements.size(); ++i) {
    tallies[i].name = statements[i].name;
    tallies[i].n_d = statements[i].n_d;
    tallies[i].n_s = statements[i].n_s;
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    ++tallies[jobs[j].statement].n;
    tallies[jobs[j].statement].c += records[j].success;
  }
  std::string csv = metrics_csv(metrics_rows("eval", {tallies}));
  if (f.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream(f.out, std::ios::binary) << csv;
  }
  return 0;
}

int cmd_replay(const std::string& records_path, const std::string& name, const std::string& corpus) {
  std::vector<Statement> statements;
  if (!corpus.empty()) {
    statements = load_corpus(corpus);
  } else {
    fs::path run_dir = fs::path(records_path).parent_path().parent_path();
    RunConfig cfg = config_from_json(read_file(run_dir / "config.json"));
    for (auto& set : load_sets(cfg)) {
      for (auto& s : set.statements) statements.push_back(std::move(s));
    }
  }
  ProofEnv env(std::move(statements));
  std::ifstream in(records_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + records_path);
  std::string line;
  bool seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SearchRecord rec = record_from_json(line);
    if (rec.name != name) continue;
    seen = true;
    if (!rec.success) continue;
    auto tactics = rec.tactics();
    if (!replay(env, name, tactics)) {
      std::cerr << "stored proof of " << name << " does not replay\n";
      return 1;
    }
    std::cout << "replayed " << name << ": " << tactics.size() << " tactics, proved\n";
    return 0;
  }
  std::cerr << (seen ? "no successful record for " : "no record for ") << name << " in " << records_path << '\n';
  return 1;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Synthetic-inequality prover with expert iteration", "curriculum_prover"};
  app.require_subcommand(1);

  std::string out_dir;
  GridOptions grid;
  auto* gen = app.add_subcommand("ineqgen", "Generate the synthetic inequality corpus");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--ns-max", grid.ns_max, "Largest N_S")->capture_default_str();
  gen->add_option("--nd-max", grid.nd_max, "Largest N_D")->capture_default_str();
  gen->add_option("--per-cell", grid.per_cell, "Statements per (N_S, N_D) cell")->capture_default_str();
  gen->add_option("--seed", grid.seed, "Generator seed")->capture_default_str();

  auto* gym = app.add_subcommand("gym", "Prover REPL over standard input/output");
  gym->require_subcommand(1);
  std::string serve_corpus;
  FaultOptions faults;
  auto* serve = gym->add_subcommand("serve", "Serve one environment on stdio");
  serve->add_option("--corpus", serve_corpus, "Corpus directory")->required();
  serve->add_option("--crash-on", faults.crash_on)->group("");
  serve->add_option("--hang-on", faults.hang_on)->group("");
  int pool_workers = 1;
  std::string pool_cmd;
  long long pool_timeout = 10000;
  auto* poolc = gym->add_subcommand("pool", "Multiplex searches over worker processes");
  poolc->add_option("--workers", pool_workers, "Worker processes")->capture_default_str();
  poolc->add_option("--cmd", pool_cmd, "Worker command, run through sh -c")->required();
  poolc->add_option("--timeout-ms", pool_timeout, "Per-request timeout")->capture_default_str();

  SearchFlags sf;
  auto* search = app.add_subcommand("search", "Best-first search on one statement");
  search->add_option("--corpus", sf.corpus, "Corpus directory")->required();
  search->add_option("--name", sf.name, "Statement name")->required();
  search->add_option("--checkpoint", sf.checkpoint, "Checkpoint file (default: untrained)");
  search->add_option("--priority", sf.priority, "value or logprob")->capture_default_str();
  search->add_option("--seed", sf.seed, "Search seed")->capture_default_str();
  search->add_option("--temperature", sf.temperature, "Sampling temperature")->capture_default_str();
  search->add_option("--out", sf.out, "Write the search record here instead of stdout");
  search->add_option("--pool-cmd", sf.pool_cmd, "Run tactics through a gym worker started with this command");
  sf.budget.add(search);

  ExpitrFlags ef;
  auto* expitr = app.add_subcommand("expitr", "Expert iteration");
  expitr->require_subcommand(1);
  auto add_expitr = [&](CLI::App* sub) {
    sub->add_option("--config", ef.config, "Run config JSON")->required();
    sub->add_option("--seed", ef.seed, "Override the config seed");
    sub->add_option("--iterations", ef.iterations, "Override the iteration count");
    sub->add_option("--workers", ef.workers, "Override the worker count");
    sub->add_option("--run-id", ef.run_id, "Override the run id");
    sub->add_option("--runs-dir", ef.runs_dir, "Override the runs directory");
  };
  auto* run = expitr->add_subcommand("run", "Bootstrap then iterate");
  add_expitr(run);
  auto* sample_only = expitr->add_subcommand("sample-only", "Iterate without retraining after bootstrap");
  add_expitr(sample_only);

  EvalFlags vf;
  auto* eval = app.add_subcommand("eval", "pass@k of a checkpoint on a corpus");
  eval->add_option("--corpus", vf.corpus, "Corpus directory")->required();
  eval->add_option("--checkpoint", vf.checkpoint, "Checkpoint file (default: untrained)");
  eval->add_option("--attempts", vf.attempts, "Attempts per statement")->capture_default_str();
  eval->add_option("--seed", vf.seed, "Seed")->capture_default_str();
  eval->add_option("--workers", vf.workers, "Search threads")->capture_default_str();
  eval->add_option("--temperature", vf.temperature, "Sampling temperature")->capture_default_str();
  eval->add_option("--out", vf.out, "Write the CSV here instead of stdout");
  vf.budget.add(eval);

  std::string records_path, replay_name, replay_corpus;
  auto* rep = app.add_subcommand("replay", "Re-verify a stored proof");
  rep->add_option("records", records_path, "records.jsonl of a run iteration")->required();
  rep->add_option("--name", replay_name, "Statement name")->required();
  rep->add_option("--corpus", replay_corpus, "Corpus directory (default: the run's statement sets)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_ineqgen(out_dir, grid);
    if (serve->parsed()) return cmd_serve(serve_corpus, faults);
    if (poolc->parsed()) return cmd_pool(pool_workers, pool_cmd, pool_timeout);
    if (search->parsed()) return cmd_search(sf);
    if (run->parsed()) return cmd_expitr(ef, false);
    if (sample_only->parsed()) return cmd_expitr(ef, true);
    if (eval->parsed()) return cmd_eval(vf);
    if (rep->parsed()) return cmd_replay(records_path, replay_name, replay_corpus);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n' << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace cprover
