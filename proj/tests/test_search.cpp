#include <doctest.h>

#include "cprover/expitr.hpp"
#include "cprover/search.hpp"
#include "support/corpus.hpp"
#include "support/graphs.hpp"

using namespace cprover;

namespace {

SearchGuide logprob_guide(PolicyFn policy) {
  SearchGuide g;
  g.mode = PriorityMode::CumulativeLogprob;
  g.policy = std::move(policy);
  return g;
}

}  // namespace

TEST_SUITE("search") {
  TEST_CASE("oracle policy proves in trace-length expansions") {
    auto statements = testing::small_grid(3, 3);
    ProofEnv env(statements);
    SearchGuide guide = logprob_guide(testing::oracle_policy(env, statements));
    for (const auto& s : statements) {
      LocalProver prover(env);
      Rng rng(1);
      auto res = best_first_search(prover, guide, SearchBudget{}, s.name, rng);
      CHECK(res.record.success);
      CHECK(res.record.diagnostic.empty());
      CHECK(res.record.expansions == static_cast<int>(linearize(s.trace).size()));
      CHECK(res.record.tactics() == linearize(s.trace));
      CHECK(replay(env, s.name, res.record.tactics()));
    }
  }

  TEST_CASE("zero budget") {
    auto statements = testing::small_grid(3, 1);
    ProofEnv env(statements);
    LocalProver prover(env);
    Rng rng(1);
    SearchBudget budget;
    budget.d = 0;
    auto res = best_first_search(prover, logprob_guide(testing::oracle_policy(env, statements)), budget,
                                 statements[0].name, rng);
    CHECK_FALSE(res.record.success);
    CHECK(res.record.expansions == 0);
    CHECK(res.record.diagnostic == "budget exhausted");
  }

  TEST_CASE("adversarial policy leaves only the root") {
    auto statements = testing::small_grid(3, 1);
    ProofEnv env(statements);
    LocalProver prover(env);
    Rng rng(1);
    auto bad = logprob_guide([](const TacticState&, int e, Rng&) {
      return std::vector<SampledTactic>(e, {"ineq_comp not_a_theorem", -1.0});
    });
    SearchBudget budget;
    budget.d = 10;
    auto res = best_first_search(prover, bad, budget, statements.back().name, rng);
    CHECK_FALSE(res.record.success);
    CHECK(res.graph.nodes.size() == 1);
    CHECK(res.graph.edges.empty());
    // Expand-once: the root cannot be expanded a second time.
    CHECK(res.record.expansions == 1);
    CHECK(res.record.diagnostic == "search space exhausted");
    REQUIRE(res.record.states.size() == 1);
    CHECK_FALSE(res.record.states[0].ps);
  }

  TEST_CASE("unknown declaration is a diagnostic") {
    ProofEnv env(testing::small_grid(3, 1));
    LocalProver prover(env);
    Rng rng(1);
    auto res = best_first_search(prover, logprob_guide([](const TacticState&, int, Rng&) {
                                   return std::vector<SampledTactic>{};
                                 }),
                                 SearchBudget{}, "missing", rng);
    CHECK_FALSE(res.record.success);
    CHECK(res.record.diagnostic == "unknown declaration 'missing'");
  }

  TEST_CASE("proof sizes on a chain and a diamond") {
    auto chain = testing::make_graph(3, {{0, 1}, {1, 2}}, {false, false, true});
    auto ps = extract_proofsizes(chain);
    CHECK(ps[0] == 2);
    CHECK(ps[1] == 1);
    CHECK(ps[2] == 0);
    // root -> x -> done (2) and root -> y1 -> y2 -> y3 -> done (4)
    auto diamond = testing::make_graph(6, {{0, 1}, {1, 5}, {0, 2}, {2, 3}, {3, 4}, {4, 5}},
                                       {false, false, false, false, false, true});
    CHECK(extract_proofsizes(diamond)[0] == 2);
    CHECK(extract_proofsizes(diamond) == testing::brute_force_proofsizes(diamond));
    auto stuck = testing::make_graph(2, {{0, 1}}, {false, false});
    CHECK_FALSE(extract_proofsizes(stuck)[0]);
  }

  TEST_CASE("proof sizes match brute force") {
    Rng rng(77);
    for (int i = 0; i < 200; ++i) {
      auto g = testing::random_graph(rng);
      CHECK(extract_proofsizes(g) == testing::brute_force_proofsizes(g));
    }
  }

  TEST_CASE("training records from a search record") {
    SearchRecord failed;
    failed.name = "d";
    failed.states = {{"⊢ a ≤ b", std::nullopt}};
    CHECK(record_to_training(failed).empty());

    SearchRecord rec;
    rec.name = "d";
    rec.success = true;
    rec.proof = {{"⊢ (a+b) ≤ (c+d)", "ineq_comp add_le_add"}, {"⊢ a ≤ c ⊢ b ≤ d", "ineq_base x"}};
    rec.states = {{"⊢ (a+b) ≤ (c+d)", 2}, {"⊢ a ≤ c ⊢ b ≤ d", 1}, {"⊢ a ≤ d", std::nullopt},
                  {"⊢ b ≤ c", std::nullopt}, {"⊢ c ≤ a", std::nullopt}};
    auto out = record_to_training(rec);
    int steps = 0, sizes = 0, unproved = 0;
    for (const auto& r : out) {
      steps += r.objective == Objective::Proofstep;
      sizes += r.objective == Objective::Proofsize;
      unproved += r.objective == Objective::Proofsize && r.target == "A";
    }
    CHECK(steps == 2);
    CHECK(sizes == 5);
    CHECK(unproved == 3);
    CHECK(out[2].target == std::string(1, token_of_bucket(bucketize(2))));

    rec.states.resize(2);
    for (const auto& r : record_to_training(rec)) CHECK(r.target != "A");
    auto outcome = record_to_training(rec, ValueTarget::Outcome);
    CHECK(outcome.back().target == "K");
  }

  TEST_CASE("record JSON round trip") {
    SearchRecord rec;
    rec.name = "d";
    rec.success = true;
    rec.iteration = 3;
    rec.seed = 0xfedcba9876543210ULL;
    rec.expansions = 4;
    rec.wall_ms = 1.5;
    rec.proof = {{"⊢ a ≤ b", "ineq_comp add_le_add"}};
    rec.states = {{"⊢ a ≤ b", 1}, {"⊢ b ≤ a", std::nullopt}};
    SearchRecord back = record_from_json(record_to_json(rec));
    CHECK(record_to_json(back) == record_to_json(rec));
    CHECK(back.seed == rec.seed);
    CHECK_FALSE(back.states[1].ps);
  }

  TEST_CASE("checkpoint-guided search is deterministic per seed") {
    auto statements = testing::small_grid(5, 3);
    ProofEnv env(statements);
    Checkpoint ckpt = make_base_checkpoint(trace_proofsteps(statements));
    SearchBudget budget;
    budget.d = 16;
    budget.e = 4;
    int proved = 0;
    for (auto mode : {PriorityMode::Value, PriorityMode::CumulativeLogprob}) {
      SearchGuide guide = checkpoint_guide(ckpt, mode);
      for (const auto& s : statements) {
        LocalProver p1(env), p2(env);
        Rng r1(42), r2(42);
        auto a = best_first_search(p1, guide, budget, s.name, r1);
        auto b = best_first_search(p2, guide, budget, s.name, r2);
        a.record.wall_ms = b.record.wall_ms = 0;
        CHECK(record_to_json(a.record) == record_to_json(b.record));
        CHECK(a.record.expansions <= budget.d);
        if (a.record.success) {
          ++proved;
          CHECK(replay(env, s.name, a.record.tactics()));
          CHECK(a.record.states.front().ps == static_cast<int>(a.record.proof.size()));
        }
      }
    }
    CHECK(proved > 0);
  }
}
