// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "cprover/expitr.hpp"
#include "cprover/gym.hpp"
#include "cprover/pool.hpp"
#include "support/corpus.hpp"
#include "support/graphs.hpp"
#include "support/passk.hpp"

using namespace cprover;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

/// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::string notes;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() == 5) failures.push_back("...");
  }
  void note(const std::string& s) { notes += (notes.empty() ? "" : "; ") + s; }
};

bool report(int id, const std::string& title, const std::function<void(Check&)>& body) {
  Check c;
  auto start = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  bool ok = c.failures.empty();
  char head[128];
  std::snprintf(head, sizeof head, "%s criterion %d: %s [%.2f s]", ok ? "PASS" : "FAIL", id, title.c_str(),
                seconds_since(start));
  std::cout << head;
  if (!c.notes.empty()) std::cout << " (" << c.notes << ")";
  std::cout << "\n";
  for (const auto& f : c.failures) std::cout << "    " << f << "\n";
  std::cout.flush();
  return ok;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// ---------------------------------------------------------------------------

void bucket_math(Check& c) {
  auto start = Clock::now();
  c.expect(bucketize(std::nullopt) == 0, "Unproved -> 0");
  c.expect(bucketize(21) == 1 && bucketize(25) == 1 && bucketize(100) == 1, "ps > 20 -> 1");
  c.expect(bucketize(1) == 10, "ps = 1 -> 10");
  // Independent evaluation of the projection, 1..19 onto 10..2.
  const int table[19] = {10, 10, 9, 9, 8, 8, 7, 7, 6, 6, 6, 5, 5, 4, 4, 3, 3, 2, 2};
  for (int ps = 1; ps <= 40; ++ps) {
    int want = ps < 20 ? table[ps - 1] : 1;
    c.expect(bucketize(ps) == want, "bucketize(" + std::to_string(ps) + ")");
    if (ps > 1) c.expect(bucketize(ps) <= bucketize(ps - 1), "monotone at " + std::to_string(ps));
  }
  BucketDistribution p{};
  p[0] = 1;
  c.expect(value_of_distribution(p) == 0.0, "p_0 = 1 -> v = 0");
  p = {};
  p[10] = 1;
  c.expect(value_of_distribution(p) == 1.0, "p_10 = 1 -> v = 1");
  p.fill(1.0 / kBuckets);
  c.expect(std::abs(value_of_distribution(p) - 0.5) < 1e-12, "uniform -> v = 0.5");
  c.expect(seconds_since(start) < 1.0, "runtime < 1 s");
}

void generator_oracle(Check& c) {
  auto start = Clock::now();
  auto grid = generate_grid(GridOptions{});
  double gen = seconds_since(start);
  c.expect(grid.size() == 5600, "grid size " + std::to_string(grid.size()));
  c.expect(gen < 60.0, "generation took " + fmt(gen) + " s");
  ProofEnv env(grid);
  std::size_t closed = 0;
  for (const auto& s : grid) {
    c.expect(s.trace.depth() == s.n_d, s.name + ": trace depth " + std::to_string(s.trace.depth()));
    bool ok = replay(env, s.name, linearize(s.trace));
    closed += ok;
    c.expect(ok, s.name + ": trace replay does not close");
  }
  c.note(std::to_string(closed) + "/" + std::to_string(grid.size()) + " closed, generated in " + fmt(gen) + " s");
}

void protocol(Check& c) {
  const fs::path golden = CPROVER_GOLDEN_DIR;
  std::string expected = testing::read_file(golden / "serve.responses.jsonl");
  {
    ProofEnv env(load_corpus(golden / "corpus"));
    std::istringstream in(testing::read_file(golden / "serve.requests.jsonl"));
    std::ostringstream out;
    serve_loop(env, in, out);
    c.expect(out.str() == expected, "in-process transcript differs from golden");
  }
  auto [status, out] = testing::run_command(testing::quote(CPROVER_BIN) + " gym serve --corpus " +
                                            testing::quote((golden / "corpus").string()) + " < " +
                                            testing::quote((golden / "serve.requests.jsonl").string()));
  c.expect(status == 0 && out == expected, "child-process transcript differs from golden");

  // 1000 interleaved searches over 8 workers, with crashes injected.
  testing::TempDir dir("accept_pool");
  auto statements = testing::small_grid(29, 6);
  write_corpus(statements, dir.path);
  PoolOptions opts;
  opts.workers = 8;
  opts.command = testing::quote(CPROVER_BIN) + " gym serve --corpus " + testing::quote(dir.path.string()) +
                 " --crash-on INJECTED_CRASH";
  WorkerPool pool(opts);
  Checkpoint ckpt = make_base_checkpoint(trace_proofsteps(statements));
  ProofEnv local(statements);
  std::atomic<int> next{0}, proved{0}, lost{0}, bad_replays{0};
  const int total = 1000, crash_every = 97;
  SearchBudget budget;
  budget.d = 8;
  budget.e = 4;
  std::vector<std::thread> threads;
  for (int t = 0; t < 16; ++t) {
    threads.emplace_back([&] {
      PoolProver prover(pool);
      for (int i; (i = next.fetch_add(1)) < total;) {
        SearchGuide guide = checkpoint_guide(ckpt, PriorityMode::Value);
        if (i % crash_every == 0) {
          guide.policy = [](const TacticState&, int, Rng&) {
            return std::vector<SampledTactic>{{"ineq_base INJECTED_CRASH", 0.0}};
          };
        }
        Rng rng(derive_seed(3, {static_cast<std::uint64_t>(i)}));
        const auto& s = statements[static_cast<std::size_t>(i) % statements.size()];
        auto res = best_first_search(prover, guide, budget, s.name, rng);
        if (res.record.success) {
          ++proved;
          if (!replay(local, s.name, res.record.tactics())) ++bad_replays;
        }
        if (res.record.diagnostic.rfind("prover unavailable", 0) == 0) ++lost;
      }
    });
  }
  for (auto& t : threads) t.join();
  c.expect(pool.violations() == 0, "requests sent to busy workers: " + std::to_string(pool.violations()));
  c.expect(bad_replays == 0, "pool proofs that fail to replay: " + std::to_string(bad_replays.load()));
  c.expect(pool.restarts() >= (total + crash_every - 1) / crash_every, "crashes not all observed");
  c.expect(proved > 0, "no search succeeded through the pool");
  std::uint64_t sent = 0;
  for (int w = 0; w < pool.size(); ++w) sent += pool.requests_sent(w);
  c.note("golden transcripts match; " + std::to_string(total) + " searches, " + std::to_string(sent) + " requests, " +
         std::to_string(pool.restarts()) + " restarts, " + std::to_string(lost.load()) + " lost, 0 busy-worker requests");
}

void search_oracle(Check& c) {
  Rng rng(404);
  std::vector<Statement> statements;
  for (int i = 0; i < 100; ++i) {
    GeneratorConfig cfg;
    cfg.n_s = static_cast<int>(rng.uniform(0, 7));
    cfg.n_d = static_cast<int>(rng.uniform(0, 6));
    cfg.rng_seed = rng.next();
    statements.push_back(generate_statement(cfg, i + 1));
    statements.back().name += "_" + std::to_string(i);
  }
  ProofEnv env(statements);
  SearchGuide guide;
  guide.mode = PriorityMode::CumulativeLogprob;
  guide.policy = testing::oracle_policy(env, statements);
  int exact = 0;
  for (const auto& s : statements) {
    LocalProver prover(env);
    Rng r(1);
    auto res = best_first_search(prover, guide, SearchBudget{}, s.name, r);
    int want = static_cast<int>(linearize(s.trace).size());
    bool ok = res.record.success && res.record.expansions == want;
    exact += ok;
    c.expect(ok, s.name + ": " + std::to_string(res.record.expansions) + " expansions, trace length " + std::to_string(want));
  }
  Rng grng(50);
  for (int i = 0; i < 50; ++i) {
    auto g = testing::random_graph(grng);
    c.expect(extract_proofsizes(g) == testing::brute_force_proofsizes(g), "graph " + std::to_string(i));
  }
  c.note(std::to_string(exact) + "/100 oracle searches exact; 50 graphs match brute force");
}

RunConfig desk_config(std::uint64_t seed, const std::string& mode, const fs::path& runs) {
  std::string json = R"({"seed": )" + std::to_string(seed) + R"(, "mode": ")" + mode + R"(", "iterations": 6,
    "budget": {"d": 64, "e": 4},
    "sets": [{"name": "synthetic", "attempts": 1, "grid": {"ns_max": 3, "nd_max": 4, "per_cell": 25}}]})";
  RunConfig cfg = config_from_json(json);
  cfg.runs_dir = runs.string();
  return cfg;
}

void dedup_ledger(Check& c) {
  testing::TempDir dir("accept_dedup");
  RunConfig cfg = desk_config(9, "expert", dir.path);
  cfg.iterations = 3;
  ExpertIteration loop(cfg);
  loop.run();
  for (int k = 0; k <= 3; ++k) {
    auto file = loop.dir() / ("iter_" + std::to_string(k)) / "dataset.txt";
    c.expect(rebuild_dataset(loop.dir(), k) == testing::read_file(file), "rebuilt D_" + std::to_string(k) + " differs");
  }
  DedupStore s;
  s.merge_proofsize("d", "g", 5, 2);
  s.merge_proofsize("d", "g", 3, 4);
  c.expect(*s.label("d", "g") == 3, "min rule: 5 then 3");
  s.merge_proofsize("d", "g", 4, 5);
  c.expect(*s.label("d", "g") == 3, "min rule: 3 then 4");
  s.merge_proofsize("d", "h", std::nullopt, 2);
  s.merge_proofsize("d", "h", 6, 3);
  c.expect(*s.label("d", "h") == 6, "Unproved upgrades to 6");
  s.merge_proofsize("d", "h", std::nullopt, 4);
  c.expect(*s.label("d", "h") == 6, "Unproved never downgrades");
  c.note("D_0..D_3 rebuilt byte for byte; " + std::to_string(loop.store().proofstep_count()) + " proofsteps, " +
         std::to_string(loop.store().proofsize_count()) + " proofsizes");
}

void pass_at_k_oracle(Check& c) {
  int cases = 0;
  for (int n = 1; n <= 8; ++n)
    for (int k = 1; k <= n; ++k)
      for (int s = 0; s <= n; ++s, ++cases)
        c.expect(std::abs(pass_at_k(n, s, k) - testing::enumerate_pass_at_k(n, s, k)) < 1e-12,
                 "n=" + std::to_string(n) + " c=" + std::to_string(s) + " k=" + std::to_string(k));
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    int statements = 1 + static_cast<int>(rng.index(30)), iterations = 1 + static_cast<int>(rng.index(10));
    std::vector<IterationTallies> by;
    for (int k = 0; k < iterations; ++k) {
      IterationTallies it;
      for (int s = 0; s < statements; ++s) {
        AttemptTally a;
        a.name = std::to_string(s);
        a.n = static_cast<int>(rng.index(5));
        a.c = a.n ? static_cast<int>(rng.index(a.n + 1)) : 0;
        a.iteration = k;
        it.push_back(a);
      }
      if (rng.chance(0.5)) std::reverse(it.begin(), it.end());
      by.push_back(std::move(it));
    }
    auto series = cumulative_pass_rate(by);
    c.expect(std::is_sorted(series.begin(), series.end()), "non-monotone series in trial " + std::to_string(trial));
  }
  c.note(std::to_string(cases) + " (n, c, k) cases; 500 random cumulative series");
}

struct DeskRun {
  std::vector<double> overall;
  double hardest_final = 0;
  int hardest_closed = 0;
  std::string csv;
};

DeskRun desk_run(std::uint64_t seed, const std::string& mode, const fs::path& runs) {
  ExpertIteration loop(desk_config(seed, mode, runs));
  auto rows = loop.run();
  DeskRun out;
  for (const auto& r : rows) {
    if (!r.n_d) out.overall.push_back(r.cumulative);
    if (r.n_d == 4) {
      out.hardest_final = r.cumulative;
      out.hardest_closed = static_cast<int>(std::lround(r.cumulative * r.n_statements));
    }
  }
  out.csv = testing::read_file(loop.dir() / "metrics.csv");
  return out;
}

std::map<std::pair<std::uint64_t, std::string>, std::string> desk_csv;

void curriculum(Check& c) {
  testing::TempDir dir("accept_desk");
  auto start = Clock::now();
  int expert_hard = 0;
  bool sample_stuck = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    DeskRun e = desk_run(seed, "expert", dir.path), s = desk_run(seed, "sample-only", dir.path);
    desk_csv[{seed, "expert"}] = e.csv;
    desk_csv[{seed, "sample-only"}] = s.csv;
    std::string tag = "seed " + std::to_string(seed);
    c.expect(e.overall.size() == 7 && s.overall.size() == 7, tag + ": expected 7 iterations");
    for (std::size_t k = 3; k < e.overall.size() && k < s.overall.size(); ++k)
      c.expect(e.overall[k] >= s.overall[k], tag + ": expert below sample-only at k=" + std::to_string(k));
    c.expect(e.overall.back() > s.overall.back(), tag + ": expert not strictly ahead at the final iteration");
    expert_hard += e.hardest_closed >= 1;
    sample_stuck = sample_stuck && s.hardest_closed == 0;
    c.note(tag + " final " + fmt(e.overall.back()) + " vs " + fmt(s.overall.back()) + ", N_D=4 closed " +
           std::to_string(e.hardest_closed) + " vs " + std::to_string(s.hardest_closed));
  }
  c.expect(expert_hard >= 2, "expert closes N_D=4 statements in only " + std::to_string(expert_hard) + " seeds");
  c.expect(sample_stuck, "sample-only closed an N_D=4 statement");
  double t = seconds_since(start);
  c.expect(t < 600, "runtime " + fmt(t) + " s");
}

void determinism(Check& c) {
  if (desk_csv.empty()) throw std::runtime_error("criterion 7 produced no runs");
  testing::TempDir dir("accept_again");
  for (const auto& [key, csv] : desk_csv) {
    DeskRun again = desk_run(key.first, key.second, dir.path);
    c.expect(again.csv == csv, key.second + " seed " + std::to_string(key.first) + ": metrics.csv differs");
  }
  c.note(std::to_string(desk_csv.size()) + " metrics.csv files identical");
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report(1, "bucket and value math", bucket_math);
  ok &= report(2, "generator traces close every statement", generator_oracle);
  ok &= report(3, "protocol transcripts and pool safety", protocol);
  ok &= report(4, "search and proof size oracles", search_oracle);
  ok &= report(5, "dataset rebuild and dedup rules", dedup_ledger);
  ok &= report(6, "pass@k enumeration and monotone cumulative rate", pass_at_k_oracle);
  ok &= report(7, "expert iteration beats sample-only on the curriculum", curriculum);
  ok &= report(8, "curriculum runs are deterministic", determinism);
  return ok ? 0 : 1;
}
