#include "cprover/expitr.hpp"

#include <atomic>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "cprover/pool.hpp"

namespace cprover {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

RunConfig config_from_json(std::string_view text) {
  RunConfig c;
  try {
    json j = json::parse(text);
    read_opt(j, "run_id", c.run_id);
    read_opt(j, "runs_dir", c.runs_dir);
    read_opt(j, "seed", c.seed);
    std::string mode = "expert";
    read_opt(j, "mode", mode);
    if (mode == "expert") {
      c.mode = LoopMode::Expert;
    } else if (mode == "sample-only") {
      c.mode = LoopMode::SampleOnly;
    } else {
      throw std::invalid_argument("mode must be 'expert' or 'sample-only'");
    }
    std::string target = "proofsize";
    read_opt(j, "value_target", target);
    if (target == "proofsize") {
      c.value_target = ValueTarget::Proofsize;
    } else if (target == "outcome") {
      c.value_target = ValueTarget::Outcome;
    } else {
      throw std::invalid_argument("value_target must be 'proofsize' or 'outcome'");
    }
    read_opt(j, "iterations", c.iterations);
    if (auto b = j.find("budget"); b != j.end()) {
      read_opt(*b, "d", c.budget.d);
      read_opt(*b, "e", c.budget.e);
      read_opt(*b, "max_depth", c.budget.max_depth);
      long long ms = c.budget.timeout.count();
      read_opt(*b, "timeout_ms", ms);
      c.budget.timeout = std::chrono::milliseconds(ms);
    }
    read_opt(j, "temperature", c.temperature);
    read_opt(j, "alpha", c.alpha);
    read_opt(j, "attempt_scale", c.attempt_scale);
    read_opt(j, "workers", c.workers);
    read_opt(j, "pool_command", c.pool_command);
    if (auto s = j.find("seed_proofs"); s != j.end()) {
      read_opt(*s, "n_s", c.seed_proofs.n_s);
      read_opt(*s, "n_d", c.seed_proofs.n_d);
      read_opt(*s, "count", c.seed_proofs.count);
    }
    for (const auto& s : j.value("sets", json::array())) {
      StatementSetSpec spec;
      spec.name = s.at("name").get<std::string>();
      read_opt(s, "attempts", spec.attempts);
      read_opt(s, "corpus", spec.corpus);
      if (auto g = s.find("grid"); g != s.end()) {
        GridOptions grid;
        read_opt(*g, "ns_max", grid.ns_max);
        read_opt(*g, "nd_max", grid.nd_max);
        read_opt(*g, "per_cell", grid.per_cell);
        grid.seed = derive_seed(c.seed, {0x67726964});
        read_opt(*g, "seed", grid.seed);
        spec.grid = grid;
      }
      if (spec.grid.has_value() == !spec.corpus.empty())
        throw std::invalid_argument("set '" + spec.name + "' needs exactly one of 'grid' or 'corpus'");
      c.sets.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config: ") + e.what());
  }
  if (c.iterations < 0 || c.budget.d < 0 || c.budget.e < 1 || c.attempt_scale < 0 || c.workers < 1)
    throw std::invalid_argument("bad config: negative iterations/budget/scale or no workers");
  for (const auto& s : c.sets) {
    if (s.attempts < 0) throw std::invalid_argument("bad config: negative attempts for set '" + s.name + "'");
  }
  if (c.run_id.empty()) {
    c.run_id = std::string(c.mode == LoopMode::Expert ? "expert" : "sample-only") + "-seed" + std::to_string(c.seed);
  }
  return c;
}

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  j["run_id"] = c.run_id;
  j["runs_dir"] = c.runs_dir;
  j["seed"] = c.seed;
  j["mode"] = c.mode == LoopMode::Expert ? "expert" : "sample-only";
  j["value_target"] = c.value_target == ValueTarget::Proofsize ? "proofsize" : "outcome";
  j["iterations"] = c.iterations;
  j["budget"] = {{"d", c.budget.d},
                 {"e", c.budget.e},
                 {"max_depth", c.budget.max_depth},
                 {"timeout_ms", c.budget.timeout.count()}};
  j["temperature"] = c.temperature;
  j["alpha"] = c.alpha;
  j["attempt_scale"] = c.attempt_scale;
  j["workers"] = c.workers;
  j["pool_command"] = c.pool_command;
  j["seed_proofs"] = {{"n_s", c.seed_proofs.n_s}, {"n_d", c.seed_proofs.n_d}, {"count", c.seed_proofs.count}};
  ordered_json sets = ordered_json::array();
  for (const auto& s : c.sets) {
    ordered_json e;
    e["name"] = s.name;
    e["attempts"] = s.attempts;
    if (s.grid) {
      e["grid"] = {{"ns_max", s.grid->ns_max},
                   {"nd_max", s.grid->nd_max},
                   {"per_cell", s.grid->per_cell},
                   {"seed", s.grid->seed}};
    } else {
      e["corpus"] = s.corpus;
    }
    sets.push_back(std::move(e));
  }
  j["sets"] = std::move(sets);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Dedup store

void DedupStore::merge_proofstep(const std::string& decl, const std::string& goal, const std::string& tactic,
                                 int iteration) {
  proofsteps_.emplace(std::make_tuple(decl, goal, tactic), iteration);
}

void DedupStore::merge_proofsize(const std::string& decl, const std::string& goal, ProofSize ps, int iteration) {
  auto [it, inserted] = proofsizes_.try_emplace({decl, goal}, SizeEntry{ps, iteration});
  if (inserted || !ps) return;
  SizeEntry& cur = it->second;
  if (!cur.ps || *ps < *cur.ps) cur = SizeEntry{ps, iteration};
}

void DedupStore::merge(const SearchRecord& rec, int iteration) {
  if (!rec.success) return;
  for (const auto& s : rec.proof) merge_proofstep(rec.name, s.state, s.tactic, iteration);
  for (const auto& s : rec.states) merge_proofsize(rec.name, s.state, s.ps, iteration);
}

std::size_t DedupStore::proved_count() const {
  std::size_t n = 0;
  for (const auto& [k, v] : proofsizes_) n += v.ps.has_value();
  return n;
}

std::optional<ProofSize> DedupStore::label(const std::string& decl, const std::string& goal) const {
  auto it = proofsizes_.find({decl, goal});
  if (it == proofsizes_.end()) return std::nullopt;
  return it->second.ps;
}

namespace {

void sort_by_line(std::vector<TrainingRecord>& v) {
  std::vector<std::pair<std::string, TrainingRecord>> keyed;
  keyed.reserve(v.size());
  for (auto& r : v) keyed.emplace_back(r.to_line(), std::move(r));
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  v.clear();
  for (auto& [line, r] : keyed) v.push_back(std::move(r));
}

}  // namespace

std::vector<TrainingRecord> DedupStore::records(ValueTarget target) const {
  std::vector<TrainingRecord> steps, sizes;
  for (const auto& [k, it] : proofsteps_) {
    steps.push_back({Objective::Proofstep, std::get<0>(k), std::get<1>(k), std::get<2>(k)});
  }
  for (const auto& [k, e] : proofsizes_) {
    int b = target == ValueTarget::Outcome ? outcome_bucket(e.ps) : bucketize(e.ps);
    sizes.push_back({Objective::Proofsize, k.first, k.second, std::string(1, token_of_bucket(b))});
  }
  sort_by_line(steps);
  sort_by_line(sizes);
  steps.insert(steps.end(), std::make_move_iterator(sizes.begin()), std::make_move_iterator(sizes.end()));
  return steps;
}

std::vector<TrainingRecord> build_dataset(const std::vector<TrainingRecord>& base, const DedupStore& store,
                                          ValueTarget target) {
  std::vector<TrainingRecord> out = base;
  sort_by_line(out);
  auto rest = store.records(target);
  out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return out;
}

std::string dataset_text(const std::vector<TrainingRecord>& dataset) {
  std::string out;
  for (const auto& r : dataset) {
    out += r.to_line();
    out += '\n';
  }
  return out;
}

std::vector<TrainingRecord> read_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read dataset " + path.string());
  std::vector<TrainingRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_record(line));
  }
  return out;
}

std::vector<TrainingRecord> trace_proofsteps(const std::vector<Statement>& statements) {
  ProofEnv env(statements);
  std::vector<TrainingRecord> out;
  for (const auto& s : statements) {
    TacticState state = env.init_search(s.name);
    for (const auto& tac : linearize(s.trace)) {
      std::string goal = state.text();
      auto r = env.run_tac(state, tac);
      if (!r.ok()) throw std::logic_error("trace of " + s.name + " does not replay: " + r.error);
      out.push_back({Objective::Proofstep, s.name, std::move(goal), tac});
      state = std::move(*r.state);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<SearchRecord> run_searches(const ProofEnv& env, const Checkpoint& ckpt, PriorityMode mode,
                                       const RunConfig& cfg, const std::vector<SearchJob>& jobs, int iteration) {
  std::vector<SearchRecord> out(jobs.size());
  std::unique_ptr<WorkerPool> pool;
  if (!cfg.pool_command.empty()) pool = std::make_unique<WorkerPool>(PoolOptions{cfg.workers, cfg.pool_command});
  SearchGuide guide = checkpoint_guide(ckpt, mode, cfg.temperature);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::unique_ptr<Prover> prover;
    if (pool) {
      prover = std::make_unique<PoolProver>(*pool);
    } else {
      prover = std::make_unique<LocalProver>(env);
    }
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      const SearchJob& job = jobs[i];
      Rng rng(job.seed);
      const std::string& name = env.statements()[job.statement].name;
      SearchRecord rec = best_first_search(*prover, guide, cfg.budget, name, rng).record;
      rec.iteration = iteration;
      rec.seed = job.seed;
      out[i] = std::move(rec);
    }
  };
  int threads = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool_threads;
  for (int t = 1; t < threads; ++t) pool_threads.emplace_back(worker);
  worker();
  for (auto& t : pool_threads) t.join();
  return out;
}

// ---------------------------------------------------------------------------
// Controller

std::vector<LoadedSet> load_sets(const RunConfig& cfg) {
  std::vector<LoadedSet> sets;
  std::unordered_set<std::string> names;
  for (const auto& spec : cfg.sets) {
    LoadedSet set{spec, {}, {}};
    set.statements = spec.grid ? generate_grid(*spec.grid) : load_corpus(spec.corpus, &set.skipped);
    for (const auto& st : set.statements) {
      if (!names.insert(st.name).second)
        throw std::invalid_argument("statement '" + st.name + "' appears in more than one set");
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

ExpertIteration::ExpertIteration(RunConfig cfg) : cfg_(std::move(cfg)) {
  dir_ = fs::path(cfg_.runs_dir) / cfg_.run_id;
  sets_ = load_sets(cfg_);
  std::vector<Statement> all;
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    for (std::size_t i = 0; i < sets_[s].statements.size(); ++i) {
      flat_.emplace_back(s, i);
      all.push_back(sets_[s].statements[i]);
    }
  }
  env_ = ProofEnv(std::move(all));
  tallies_.resize(sets_.size());

  std::vector<Statement> seeds;
  GeneratorConfig g;
  g.n_s = cfg_.seed_proofs.n_s;
  g.n_d = cfg_.seed_proofs.n_d;
  g.rng_seed = derive_seed(cfg_.seed, {0x73656564});
  for (int i = 1; i <= cfg_.seed_proofs.count; ++i) seeds.push_back(generate_statement(g, i));
  base_ = trace_proofsteps(seeds);
}

std::vector<SearchJob> ExpertIteration::jobs_for(int iteration, bool bootstrap) const {
  std::vector<SearchJob> jobs;
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    int a = bootstrap ? 1 : sets_[flat_[i].first].spec.attempts * cfg_.attempt_scale;
    for (int t = 0; t < a; ++t) {
      jobs.push_back({i, t,
                      derive_seed(cfg_.seed, {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(i),
                                              static_cast<std::uint64_t>(t)})});
    }
  }
  return jobs;
}

void ExpertIteration::tally(int iteration, const std::vector<SearchJob>& jobs, const std::vector<SearchRecord>& records) {
  std::vector<AttemptTally> per(flat_.size());
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    const Statement& s = sets_[flat_[i].first].statements[flat_[i].second];
    per[i].name = s.name;
    per[i].n_d = s.n_d;
    per[i].n_s = s.n_s;
    per[i].iteration = iteration;
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& t = per[jobs[j].statement];
    ++t.n;
    t.c += records[j].success;
  }
  for (auto& set : tallies_) set.emplace_back();
  for (std::size_t i = 0; i < flat_.size(); ++i) tallies_[flat_[i].first].back().push_back(std::move(per[i]));
}

void ExpertIteration::write_iteration(int k, const std::vector<SearchRecord>& records,
                                      const std::vector<TrainingRecord>* dataset, const Checkpoint* ckpt) const {
  fs::path d = dir_ / ("iter_" + std::to_string(k));
  fs::create_directories(d);
  if (ckpt) ckpt->save((d / "checkpoint.bin").string());
  {
    std::ofstream out(d / "records.jsonl", std::ios::binary);
    for (const auto& r : records) out << record_to_json(r) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (d / "records.jsonl").string());
  }
  if (dataset) {
    std::ofstream out(d / "dataset.txt", std::ios::binary);
    out << dataset_text(*dataset);
    if (!out) throw std::runtime_error("cannot write " + (d / "dataset.txt").string());
  }
}

std::vector<MetricsRow> ExpertIteration::run() {
  fs::create_directories(dir_);
  {
    std::ofstream(dir_ / "config.json", std::ios::binary) << config_to_json(cfg_);
    std::ofstream(dir_ / "base.txt", std::ios::binary) << dataset_text(build_dataset(base_, DedupStore{}, cfg_.value_target));
  }
  auto progress = [&](int k, const std::string& msg) {
    if (on_progress) on_progress(k, msg);
  };
  for (const auto& set : sets_) {
    if (set.skipped.empty()) continue;
    std::ofstream log(dir_ / "skipped.txt", std::ios::binary | std::ios::app);
    for (const auto& e : set.skipped) log << set.spec.name << ": " << e << "\n";
    progress(0, "set " + set.spec.name + ": skipped " + std::to_string(set.skipped.size()) +
                    " statements that failed to load (see skipped.txt)");
  }
  auto successes = [](const std::vector<SearchRecord>& recs) {
    return std::count_if(recs.begin(), recs.end(), [](const SearchRecord& r) { return r.success; });
  };

  const Checkpoint theta0 = make_base_checkpoint(base_, cfg_.alpha, cfg_.value_target);
  theta0.save((dir_ / "theta0.bin").string());

  auto jobs = jobs_for(0, true);
  auto records = run_searches(env_, theta0, PriorityMode::CumulativeLogprob, cfg_, jobs, 0);
  tally(0, jobs, records);
  for (const auto& r : records) store_.merge(r, 0);
  auto dataset = build_dataset(base_, store_, cfg_.value_target);
  Checkpoint theta1 = train_checkpoint(theta0, dataset);
  theta1.provenance = 1;
  write_iteration(0, records, &dataset, &theta1);
  progress(0, "bootstrap: " + std::to_string(successes(records)) + "/" + std::to_string(records.size()) + " proved");

  Checkpoint current = theta1;
  for (int k = 1; k <= cfg_.iterations; ++k) {
    const Checkpoint& ckpt = cfg_.mode == LoopMode::Expert ? current : theta1;
    jobs = jobs_for(k, false);
    records = run_searches(env_, ckpt, PriorityMode::Value, cfg_, jobs, k);
    tally(k, jobs, records);
    if (cfg_.mode == LoopMode::Expert) {
      DedupStore next_store = store_;
      for (const auto& r : records) next_store.merge(r, k);
      dataset = build_dataset(base_, next_store, cfg_.value_target);
      Checkpoint next = train_checkpoint(theta0, dataset);
      next.provenance = k + 1;
      write_iteration(k, records, &dataset, &next);
      store_ = std::move(next_store);
      current = std::move(next);
    } else {
      write_iteration(k, records, nullptr, nullptr);
    }
    progress(k, std::to_string(successes(records)) + "/" + std::to_string(records.size()) + " proved");
  }

  std::vector<MetricsRow> rows;
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    auto r = metrics_rows(sets_[s].spec.name, tallies_[s]);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) { return a.iteration < b.iteration; });
  std::ofstream(dir_ / "metrics.csv", std::ios::binary) << metrics_csv(rows);
  std::ofstream(dir_ / "metrics.json", std::ios::binary) << metrics_json(rows);
  return rows;
}

std::string rebuild_dataset(const fs::path& run_dir, int k) {
  std::ifstream cfg_in(run_dir / "config.json", std::ios::binary);
  if (!cfg_in) throw std::runtime_error("no config.json in " + run_dir.string());
  std::stringstream ss;
  ss << cfg_in.rdbuf();
  RunConfig cfg = config_from_json(ss.str());
  auto base = read_dataset(run_dir / "base.txt");
  DedupStore store;
  for (int i = 0; i <= k; ++i) {
    fs::path p = run_dir / ("iter_" + std::to_string(i)) / "records.jsonl";
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("missing " + p.string());
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) store.merge(record_from_json(line), i);
    }
  }
  return dataset_text(build_dataset(base, store, cfg.value_target));
}

}  // namespace cprover
