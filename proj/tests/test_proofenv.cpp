#include <doctest.h>

#include "cprover/proofenv.hpp"
#include "support/numeric.hpp"

using namespace cprover;

namespace {

Statement handmade(std::string name, Inequality goal, std::vector<char> vars = {'a', 'b', 'c', 'd'}) {
  Statement s;
  s.name = std::move(name);
  s.variables = vars;
  for (char v : vars) s.hypotheses.emplace_back(v, SignFact::StrictPos);
  s.goal = normalize(goal);
  return s;
}

const Expr a = var('a'), b = var('b'), c = var('c'), d = var('d');

ProofEnv small_env() {
  GeneratorConfig cfg;
  std::vector<Statement> corpus{generate_statement(cfg, 1)};
  corpus.push_back(handmade("sq", {lit(2) * (a * (a + lit(-68))), pow(a + lit(-68), lit(2)) + pow(a, lit(2))}));
  corpus.push_back(handmade("add", {a + b, c + d}));
  corpus.push_back(handmade("mul", {a * b, c * d}));
  return ProofEnv(std::move(corpus));
}

}  // namespace

TEST_SUITE("proofenv") {
  TEST_CASE("init_search") {
    ProofEnv env = small_env();
    const std::string decl = "synthetic_ineq_nb_seed_var_0_depth_0_p_1";
    TacticState s = env.init_search(decl);
    CHECK(s.decl == decl);
    REQUIRE(s.goals.size() == 1);
    CHECK(s.goals[0] == env.find(decl)->goal);
    CHECK(s.id == 0);
    CHECK_THROWS_AS(env.init_search("nonexistent"), UnknownDeclaration);
    CHECK(env.init_search(decl).text() == s.text());
  }

  TEST_CASE("sq_nonneg closes its instance") {
    ProofEnv env = small_env();
    TacticState s = env.init_search("sq");
    auto out = env.run_tac(s, "ineq_base sq_nonneg [a; (a+-68)]");
    REQUIRE(out.ok());
    CHECK(out.state->proved());
    CHECK(out.state->text() == kNoGoals);
    // The space-separated argument form is accepted too.
    CHECK(env.run_tac(s, "ineq_base sq_nonneg a (a+-68)").state->proved());
    // Swapped arguments do not match: no commutation.
    auto bad = env.run_tac(s, "ineq_base sq_nonneg [(a+-68); a]");
    CHECK_FALSE(bad.ok());
    CHECK(bad.error == "no schema match");
  }

  TEST_CASE("add_le_add decomposes in goal order") {
    ProofEnv env = small_env();
    auto out = env.run_tac(env.init_search("add"), "ineq_comp add_le_add");
    REQUIRE(out.ok());
    REQUIRE(out.state->goals.size() == 2);
    CHECK(out.state->goals[0] == Inequality{a, c});
    CHECK(out.state->goals[1] == Inequality{b, d});
    CHECK(out.state->text() == "⊢ a ≤ c ⊢ b ≤ d");

    auto fail = env.run_tac(env.init_search("mul"), "ineq_comp add_le_add");
    CHECK_FALSE(fail.ok());
    CHECK(fail.error == "composition does not apply");
  }

  TEST_CASE("tactic errors") {
    ProofEnv env = small_env();
    TacticState s = env.init_search("add");
    CHECK(env.run_tac(s, "simp").error.rfind("malformed tactic", 0) == 0);
    CHECK(env.run_tac(s, "ineq_comp no_such_theorem").error.rfind("malformed tactic", 0) == 0);
    CHECK(env.run_tac(s, "ineq_base add_le_add").error.rfind("malformed tactic", 0) == 0);
    CHECK_FALSE(env.run_tac(s, "ineq_transform neg_le_neg").ok());
    TacticState done = *env.run_tac(env.init_search("sq"), "ineq_base sq_nonneg [a; (a+-68)]").state;
    CHECK(env.run_tac(done, "ineq_comp add_le_add").error == "no goals to apply a tactic to");
  }

  TEST_CASE("match_schema") {
    Expr x = var('x'), y = var('y');
    Inequality goal{lit(2) * (x * y), pow(y, lit(2)) + pow(x, lit(2))};
    auto m = match_schema(goal, "sq_nonneg", std::vector<Expr>{x, y});
    REQUIRE(m);
    CHECK(m->size() == 2);
    CHECK((*m)[0].first == "x");
    CHECK((*m)[0].second == x);
    CHECK_FALSE(match_schema(goal, "sq_nonneg", std::vector<Expr>{y, x}));
    CHECK_FALSE(match_schema(goal, "sq_nonneg", std::vector<Expr>{x}));
    CHECK(schema_slots("am_gm", 4) == std::vector<std::string>{"x1", "x2", "w1", "w2"});
  }

  TEST_CASE("goal serialization round trip") {
    GridOptions g;
    g.ns_max = 3;
    g.nd_max = 3;
    g.per_cell = 4;
    ProofEnv env(generate_grid(g));
    for (const auto& st : env.statements()) {
      TacticState s = env.init_search(st.name);
      for (const auto& tac : linearize(st.trace)) {
        CHECK(parse_goals(s.text()) == s.goals);
        s = *env.run_tac(s, tac).state;
      }
      CHECK(s.proved());
      CHECK(parse_goals(s.text()).empty());
    }
    CHECK_THROWS_AS(parse_goals("⊢ a ≤"), ParseError);
  }

  TEST_CASE("base closures are numerically sound") {
    Rng rng(404);
    int closures = 0, samples = 0;
    for (int i = 0; closures < 200; ++i) {
      GeneratorConfig cfg;
      cfg.n_s = static_cast<int>(rng.uniform(0, 6));
      Rng pool_rng(rng.next());
      SeedPool pool = gen_seed_pool(cfg, pool_rng);
      auto [ineq, trace] = gen_base_inequality(pool, pool_rng);
      Statement st;
      st.name = "base" + std::to_string(i);
      st.variables = pool.variables;
      for (char v : pool.variables) st.hypotheses.emplace_back(v, pool.env.at(v));
      st.goal = ineq;
      ProofEnv env({st});
      auto out = env.run_tac(env.init_search(st.name), linearize(trace).front());
      REQUIRE(out.ok());
      CHECK(out.state->proved());
      ++closures;
      for (int k = 0; k < 10; ++k) {
        testing::Assignment at;
        for (auto [v, f] : st.hypotheses) at[v] = testing::sample_value(f, rng);
        auto ok = testing::holds(ineq, at);
        if (!ok) continue;
        ++samples;
        INFO(trace.theorem, ": ", canonical_text(ineq));
        CHECK(*ok);
      }
    }
    CHECK(samples > 500);
  }

  TEST_CASE("replay rejects incomplete or broken sequences") {
    ProofEnv env = small_env();
    std::vector<std::string> partial{"ineq_comp add_le_add"};
    CHECK_FALSE(replay(env, "add", partial));
    std::vector<std::string> good{"ineq_base sq_nonneg [a; (a+-68)]"};
    CHECK(replay(env, "sq", good));
    CHECK_THROWS_AS(replay(env, "missing", good), UnknownDeclaration);
  }
}
