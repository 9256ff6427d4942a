#pragma once

#include <algorithm>
#include <climits>
#include <functional>
#include <map>
#include <string>

#include "cprover/proofenv.hpp"
#include "cprover/search.hpp"

namespace cprover::testing {

/// Graph over n nodes where `done` nodes have no goals. Keys are synthetic.
inline SearchGraph make_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                              const std::vector<bool>& done) {
  SearchGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    SearchNode node;
    node.key = "n" + std::to_string(i);
    if (!done[i]) node.state.goals.push_back({var('a'), var('b')});
    g.index[node.key] = i;
    g.nodes.push_back(std::move(node));
  }
  for (auto [p, c] : edges) g.edges.push_back({p, "t", 0.0, c});
  return g;
}

/// Shortest distance to a done node by enumerating every simple path.
inline std::vector<ProofSize> brute_force_proofsizes(const SearchGraph& g) {
  std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& e : g.edges) out[e.parent].push_back(e.child);
  std::vector<ProofSize> best(n);
  for (std::size_t s = 0; s < n; ++s) {
    int shortest = INT_MAX;
    std::vector<bool> on_path(n);
    std::function<void(std::size_t, int)> walk = [&](std::size_t v, int len) {
      if (g.terminal(v)) {
        shortest = std::min(shortest, len);
        return;
      }
      on_path[v] = true;
      for (std::size_t c : out[v]) {
        if (!on_path[c]) walk(c, len + 1);
      }
      on_path[v] = false;
    };
    walk(s, 0);
    if (shortest != INT_MAX) best[s] = shortest;
  }
  return best;
}

inline SearchGraph random_graph(Rng& rng) {
  std::size_t n = 2 + rng.index(11);
  std::vector<bool> done(n);
  for (std::size_t i = 1; i < n; ++i) done[i] = rng.chance(0.2);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t m = rng.index(3 * n + 1);
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t p = rng.index(n), c = rng.index(n);
    if (!done[p] && p != c) edges.emplace_back(p, c);
  }
  return make_graph(n, edges, done);
}

/// Policy that always plays the generator's own proof: state text -> next tactic.
inline PolicyFn oracle_policy(const ProofEnv& env, const std::vector<Statement>& statements) {
  auto table = std::make_shared<std::map<std::string, std::string>>();
  for (const auto& s : statements) {
    TacticState st = env.init_search(s.name);
    for (const auto& tac : linearize(s.trace)) {
      (*table)[s.name + "|" + st.text()] = tac;
      st = *env.run_tac(st, tac).state;
    }
  }
  return [table](const TacticState& s, int, Rng&) {
    std::vector<SampledTactic> out;
    auto it = table->find(s.decl + "|" + s.text());
    if (it != table->end()) out.push_back({it->second, 0.0});
    return out;
  };
}

}  // namespace cprover::testing
