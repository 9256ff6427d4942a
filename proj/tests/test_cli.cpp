#include <doctest.h>

#include "cprover/search.hpp"
#include "support/corpus.hpp"

using namespace cprover;

namespace {

std::pair<int, std::string> cli(const std::string& args, const std::string& env = "") {
  return testing::run_command(env + testing::quote(CPROVER_BIN) + " " + args + " 2>&1");
}

const std::string kCorpus = testing::quote((std::filesystem::path(CPROVER_GOLDEN_DIR) / "corpus").string());
const std::string kDecl = "synthetic_ineq_nb_seed_var_0_depth_1_p_1";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(cli("").first == 2);
    CHECK(cli("frobnicate").first == 2);
    CHECK(cli("search --corpus " + kCorpus).first == 2);
    CHECK(cli("search --corpus " + kCorpus + " --name x --priority fast").first == 2);
    CHECK(cli("ineqgen --out /tmp/x --per-cell many").first == 2);
    CHECK(cli("--help").first == 0);
  }

  TEST_CASE("search exit codes") {
    auto [zero, out] = cli("search --corpus " + kCorpus + " --name " + kDecl + " --d 0");
    CHECK(zero == 1);
    CHECK(out.find("budget exhausted") != std::string::npos);
    CHECK(cli("search --corpus " + kCorpus + " --name missing").first == 1);
    CHECK(cli("search --corpus /nonexistent --name " + kDecl).first == 1);
  }

  TEST_CASE("ineqgen writes a loadable corpus") {
    testing::TempDir dir("cli_gen");
    auto out = dir.path / "c";
    auto [status, text] = cli("ineqgen --out " + testing::quote(out.string()) + " --ns-max 1 --nd-max 1 --per-cell 2 --seed 9");
    CHECK(status == 0);
    CHECK(load_corpus(out).size() == 8);
  }

  TEST_CASE("expitr run, replay and worker override") {
    testing::TempDir dir("cli_run");
    std::string config = R"({"seed": 2, "iterations": 3, "budget": {"d": 16, "e": 4}, "seed_proofs": {"count": 10},
      "sets": [{"name": "g", "attempts": 1, "grid": {"ns_max": 1, "nd_max": 1, "per_cell": 6}}]})";
    testing::write_file(dir.path / "demo.json", config);
    std::string runs = testing::quote((dir.path / "runs").string());
    auto [status, out] = cli("expitr run --config " + testing::quote((dir.path / "demo.json").string()) + " --runs-dir " + runs,
                             "CURRICULUM_PROVER_WORKERS=3 ");
    REQUIRE(status == 0);
    auto run = dir.path / "runs" / "expert-seed2";
    CHECK(std::filesystem::exists(run / "metrics.csv"));
    CHECK(testing::read_file(run / "config.json").find("\"workers\": 3") != std::string::npos);

    // Replay a stored proof.
    std::filesystem::path records;
    std::string name;
    for (int k = 0; k <= 3 && name.empty(); ++k) {
      records = run / ("iter_" + std::to_string(k)) / "records.jsonl";
      std::istringstream lines(testing::read_file(records));
      for (std::string line; std::getline(lines, line);) {
        auto r = record_from_json(line);
        if (r.success) {
          name = r.name;
          break;
        }
      }
    }
    REQUIRE_FALSE(name.empty());
    CHECK(cli("replay " + testing::quote(records.string()) + " --name " + name).first == 0);
    CHECK(cli("replay " + testing::quote(records.string()) + " --name nobody").first == 1);

    // Flag overrides change the run id and seed.
    auto [s2, o2] = cli("expitr sample-only --config " + testing::quote((dir.path / "demo.json").string()) +
                        " --seed 5 --iterations 1 --runs-dir " + runs);
    CHECK(s2 == 0);
    CHECK(std::filesystem::exists(dir.path / "runs" / "sample-only-seed5" / "metrics.csv"));
    CHECK(cli("expitr run --config /nonexistent.json").first == 1);
  }

  TEST_CASE("eval writes pass@k rows") {
    testing::TempDir dir("cli_eval");
    auto csv = dir.path / "eval.csv";
    auto [status, out] = cli("eval --corpus " + kCorpus + " --attempts 8 --out " + testing::quote(csv.string()));
    CHECK(status == 0);
    std::string text = testing::read_file(csv);
    CHECK(text.rfind("iteration,set,N_D,n_statements,pass1,pass8,cumulative\n0,eval,all,2,", 0) == 0);
  }
}
