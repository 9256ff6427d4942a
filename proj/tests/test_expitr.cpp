#include <doctest.h>

#include <regex>

#include "cprover/expitr.hpp"
#include "support/corpus.hpp"

using namespace cprover;

namespace {

SearchRecord success(const std::string& name, std::vector<ProofStepEntry> proof, std::vector<VisitedState> states) {
  SearchRecord r;
  r.name = name;
  r.success = true;
  r.proof = std::move(proof);
  r.states = std::move(states);
  return r;
}

RunConfig tiny_config(const std::filesystem::path& runs, const std::string& mode = "expert", int attempts = 1) {
  std::string json = R"({"seed": 4, "mode": ")" + mode + R"(", "iterations": 2,
    "budget": {"d": 16, "e": 4}, "seed_proofs": {"count": 10},
    "sets": [{"name": "g", "attempts": )" + std::to_string(attempts) +
                     R"(, "grid": {"ns_max": 1, "nd_max": 2, "per_cell": 5}}]})";
  RunConfig c = config_from_json(json);
  c.runs_dir = runs.string();
  return c;
}

// Records with the wall clock field removed.
std::string records_without_time(const std::filesystem::path& p) {
  return std::regex_replace(testing::read_file(p), std::regex(R"("wall_ms":[0-9.eE+-]+)"), "");
}

}  // namespace

TEST_SUITE("expitr") {
  TEST_CASE("dedup keeps the best proof size") {
    DedupStore s;
    s.merge_proofsize("d", "g", 5, 2);
    s.merge_proofsize("d", "g", 3, 4);
    CHECK(*s.label("d", "g") == 3);
    s.merge_proofsize("d", "g", 4, 5);
    CHECK(*s.label("d", "g") == 3);

    s.merge_proofsize("d", "h", std::nullopt, 2);
    CHECK(*s.label("d", "h") == std::nullopt);
    s.merge_proofsize("d", "h", 6, 3);
    CHECK(*s.label("d", "h") == 6);
    s.merge_proofsize("d", "h", std::nullopt, 4);
    CHECK(*s.label("d", "h") == 6);
    CHECK_FALSE(s.label("d", "missing"));
    CHECK(s.proved_count() == 2);
  }

  TEST_CASE("dedup merge is idempotent and ignores failures") {
    DedupStore s;
    SearchRecord r = success("d", {{"⊢ a ≤ b", "t1"}, {"⊢ c ≤ d", "t2"}},
                             {{"⊢ a ≤ b", 2}, {"⊢ c ≤ d", 1}, {"⊢ e ≤ f", std::nullopt}});
    s.merge(r, 0);
    auto once = s.records(ValueTarget::Proofsize);
    s.merge(r, 1);
    CHECK(s.records(ValueTarget::Proofsize) == once);
    CHECK(once.size() == record_to_training(r).size());
    SearchRecord failed = r;
    failed.success = false;
    failed.name = "other";
    s.merge(failed, 2);
    CHECK(s.records(ValueTarget::Proofsize) == once);
  }

  TEST_CASE("datasets are base data plus the store") {
    std::vector<TrainingRecord> base{{Objective::Proofstep, "z", "⊢ a ≤ b", "ineq_comp add_le_add"},
                                     {Objective::Proofstep, "a", "⊢ a ≤ b", "ineq_comp mul_le_mul"}};
    DedupStore empty;
    auto d0 = build_dataset(base, empty, ValueTarget::Proofsize);
    CHECK(d0.size() == 2);
    CHECK(d0[0].decl == "a");

    DedupStore one;
    SearchRecord r = success("d", {{"⊢ (a+b) ≤ (c+d)", "ineq_comp add_le_add"}, {"⊢ a ≤ c ⊢ b ≤ d", "ineq_base x"}},
                             {{"⊢ (a+b) ≤ (c+d)", 2}, {"⊢ a ≤ c ⊢ b ≤ d", 1}});
    one.merge(r, 0);
    auto d1 = build_dataset(base, one, ValueTarget::Proofsize);
    CHECK(d1.size() == 2 + record_to_training(r).size());

    testing::TempDir dir("dataset");
    testing::write_file(dir.path / "d.txt", dataset_text(d1));
    CHECK(read_dataset(dir.path / "d.txt") == d1);
  }

  TEST_CASE("config round trip and validation") {
    RunConfig c = tiny_config("runs");
    CHECK(c.run_id == "expert-seed4");
    RunConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK(back.sets[0].grid->seed == c.sets[0].grid->seed);
    CHECK_THROWS_AS(config_from_json(R"({"mode": "greedy"})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"sets": [{"name": "x"}]})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"workers": 0})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json("not json"), std::invalid_argument);
    RunConfig dup = c;
    dup.sets.push_back(dup.sets[0]);
    CHECK_THROWS_AS(load_sets(dup), std::invalid_argument);
  }

  TEST_CASE("expert run layout, determinism and rebuild") {
    testing::TempDir a("runs_a"), b("runs_b");
    RunConfig ca = tiny_config(a.path), cb = tiny_config(b.path);
    ExpertIteration ea(ca), eb(cb);
    auto rows = ea.run();
    eb.run();
    const auto da = a.path / "expert-seed4", db = b.path / "expert-seed4";
    // config.json differs only in runs_dir.
    CHECK(std::filesystem::exists(da / "config.json"));
    for (const char* f : {"base.txt", "theta0.bin", "metrics.csv", "metrics.json"}) {
      CHECK(std::filesystem::exists(da / f));
      CHECK(testing::read_file(da / f) == testing::read_file(db / f));
    }
    for (int k = 0; k <= 2; ++k) {
      auto it = "iter_" + std::to_string(k);
      CHECK(testing::read_file(da / it / "dataset.txt") == testing::read_file(db / it / "dataset.txt"));
      CHECK(testing::read_file(da / it / "checkpoint.bin") == testing::read_file(db / it / "checkpoint.bin"));
      CHECK(records_without_time(da / it / "records.jsonl") == records_without_time(db / it / "records.jsonl"));
      CHECK(rebuild_dataset(da, k) == testing::read_file(da / it / "dataset.txt"));
      Checkpoint ck = Checkpoint::load((da / it / "checkpoint.bin").string());
      CHECK(ck.provenance == k + 1);
      CHECK(ck.lineage == Checkpoint::load((da / "theta0.bin").string()).id());
    }
    // Cumulative series is monotone.
    double last = 0;
    for (const auto& r : rows) {
      if (r.n_d) continue;
      CHECK(r.cumulative >= last);
      last = r.cumulative;
    }
    // The archived config reproduces the run.
    RunConfig again = config_from_json(testing::read_file(da / "config.json"));
    CHECK(config_to_json(again) == config_to_json(ca));
  }

  TEST_CASE("zero attempts freeze the dataset after bootstrap") {
    testing::TempDir dir("runs_zero");
    RunConfig c = tiny_config(dir.path, "expert", 0);
    ExpertIteration(c).run();
    const auto d = dir.path / "expert-seed4";
    std::string d0 = testing::read_file(d / "iter_0" / "dataset.txt");
    for (int k = 1; k <= 2; ++k) {
      auto it = d / ("iter_" + std::to_string(k));
      CHECK(testing::read_file(it / "records.jsonl").empty());
      CHECK(testing::read_file(it / "dataset.txt") == d0);
      Checkpoint ck = Checkpoint::load((it / "checkpoint.bin").string());
      Checkpoint first = Checkpoint::load((d / "iter_0" / "checkpoint.bin").string());
      CHECK(ck.id() != first.id());  // provenance differs
      ck.provenance = first.provenance;
      CHECK(ck.serialize() == first.serialize());
    }
  }

  TEST_CASE("sample-only matches the expert loop until the first retrain") {
    testing::TempDir e("runs_e"), s("runs_s");
    ExpertIteration(tiny_config(e.path)).run();
    ExpertIteration(tiny_config(s.path, "sample-only")).run();
    const auto de = e.path / "expert-seed4", ds = s.path / "sample-only-seed4";
    CHECK(records_without_time(de / "iter_0" / "records.jsonl") == records_without_time(ds / "iter_0" / "records.jsonl"));
    CHECK(records_without_time(de / "iter_1" / "records.jsonl") == records_without_time(ds / "iter_1" / "records.jsonl"));
    CHECK(testing::read_file(de / "iter_0" / "checkpoint.bin") == testing::read_file(ds / "iter_0" / "checkpoint.bin"));
    // The model never changes after bootstrap.
    CHECK_FALSE(std::filesystem::exists(ds / "iter_1" / "checkpoint.bin"));
    CHECK_FALSE(std::filesystem::exists(ds / "iter_2" / "dataset.txt"));
  }

  TEST_CASE("pool-backed searches match in-process searches") {
    testing::TempDir local("runs_local"), pooled("runs_pool");
    RunConfig a = tiny_config(local.path);
    a.iterations = 1;
    RunConfig b = a;
    b.runs_dir = pooled.path.string();
    b.workers = 2;
    // Workers load the same generated grid from a corpus directory.
    auto sets = load_sets(b);
    write_corpus(sets[0].statements, pooled.path / "corpus");
    b.pool_command = testing::quote(CPROVER_BIN) + " gym serve --corpus " + testing::quote((pooled.path / "corpus").string());
    ExpertIteration(a).run();
    ExpertIteration(b).run();
    for (int k = 0; k <= 1; ++k) {
      auto it = "iter_" + std::to_string(k);
      CHECK(testing::read_file(local.path / "expert-seed4" / it / "dataset.txt") ==
            testing::read_file(pooled.path / "expert-seed4" / it / "dataset.txt"));
    }
  }
}

TEST_CASE("unloadable corpus entries are skipped and logged" * doctest::test_suite("expitr")) {
  testing::TempDir dir("skip");
  auto statements = testing::small_grid(3, 1);
  write_corpus(statements, dir.path / "corpus");
  testing::write_file(dir.path / "corpus" / (statements[0].name + ".lean"), "theorem broken");
  RunConfig cfg = config_from_json(R"({"seed": 1, "iterations": 0, "budget": {"d": 4, "e": 2},
    "seed_proofs": {"count": 5}, "sets": [{"name": "c", "corpus": ")" + (dir.path / "corpus").string() + R"("}]})");
  cfg.runs_dir = (dir.path / "runs").string();
  CHECK_THROWS(load_corpus(dir.path / "corpus"));
  ExpertIteration loop(cfg);
  REQUIRE(loop.sets()[0].skipped.size() == 1);
  auto rows = loop.run();
  CHECK(rows[0].n_statements == static_cast<int>(statements.size()) - 1);
  CHECK(testing::read_file(loop.dir() / "skipped.txt").find("manifest line 1") != std::string::npos);
}
