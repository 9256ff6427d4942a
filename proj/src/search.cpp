#include "cprover/search.hpp"

#include <deque>
#include <queue>

#include <json.hpp>

namespace cprover {

SearchGuide checkpoint_guide(const Checkpoint& ckpt, PriorityMode mode, double temperature) {
  SearchGuide g;
  g.mode = mode;
  g.policy = [&ckpt, temperature](const TacticState& s, int e, Rng& rng) {
    return policy_sample(ckpt, s, e, temperature, rng);
  };
  g.value = [&ckpt](const TacticState& s) { return value_of_distribution(value_predict(ckpt, s)); };
  return g;
}

std::vector<ProofSize> extract_proofsizes(const SearchGraph& g) {
  std::vector<ProofSize> ps(g.nodes.size());
  std::vector<std::vector<std::size_t>> parents(g.nodes.size());
  for (const auto& e : g.edges) parents[e.child].push_back(e.parent);
  std::deque<std::size_t> queue;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    if (g.terminal(n)) {
      ps[n] = 0;
      queue.push_back(n);
    }
  }
  while (!queue.empty()) {
    std::size_t n = queue.front();
    queue.pop_front();
    for (std::size_t p : parents[n]) {
      if (!ps[p]) {
        ps[p] = *ps[n] + 1;
        queue.push_back(p);
      }
    }
  }
  return ps;
}

std::vector<std::string> SearchRecord::tactics() const {
  std::vector<std::string> out;
  out.reserve(proof.size());
  for (const auto& s : proof) out.push_back(s.tactic);
  return out;
}

std::string record_to_json(const SearchRecord& r) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["name"] = r.name;
  j["success"] = r.success;
  j["iteration"] = r.iteration;
  j["seed"] = r.seed;
  j["expansions"] = r.expansions;
  j["wall_ms"] = r.wall_ms;
  j["diagnostic"] = r.diagnostic;
  auto& proof = j["proof"] = nlohmann::ordered_json::array();
  for (const auto& s : r.proof) proof.push_back({{"state", s.state}, {"tactic", s.tactic}});
  auto& states = j["states"] = nlohmann::ordered_json::array();
  for (const auto& s : r.states) {
    nlohmann::ordered_json e;
    e["state"] = s.state;
    e["ps"] = s.ps ? nlohmann::ordered_json(*s.ps) : nlohmann::ordered_json(nullptr);
    states.push_back(std::move(e));
  }
  return j.dump();
}

SearchRecord record_from_json(std::string_view line) {
  auto j = nlohmann::json::parse(line);
  if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported search record version");
  SearchRecord r;
  r.name = j.at("name").get<std::string>();
  r.success = j.at("success").get<bool>();
  r.iteration = j.at("iteration").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.expansions = j.at("expansions").get<int>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.diagnostic = j.at("diagnostic").get<std::string>();
  for (const auto& s : j.at("proof")) r.proof.push_back({s.at("state").get<std::string>(), s.at("tactic").get<std::string>()});
  for (const auto& s : j.at("states")) {
    ProofSize ps;
    if (!s.at("ps").is_null()) ps = s.at("ps").get<int>();
    r.states.push_back({s.at("state").get<std::string>(), ps});
  }
  return r;
}

namespace {

struct QueueEntry {
  double priority;
  std::uint64_t seq;
  std::size_t node;

  // Max-heap on priority, earliest insertion first among equals.
  bool operator<(const QueueEntry& o) const {
    if (priority != o.priority) return priority < o.priority;
    return seq > o.seq;
  }
};

void propagate_proved(SearchGraph& g, const std::vector<std::vector<std::size_t>>& parents, std::size_t from) {
  std::deque<std::size_t> queue{from};
  g.nodes[from].proved = true;
  while (!queue.empty()) {
    std::size_t n = queue.front();
    queue.pop_front();
    for (std::size_t p : parents[n]) {
      if (!g.nodes[p].proved) {
        g.nodes[p].proved = true;
        queue.push_back(p);
      }
    }
  }
}

void finish_record(SearchResult& res) {
  SearchGraph& g = res.graph;
  SearchRecord& rec = res.record;
  auto ps = extract_proofsizes(g);
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    if (!g.terminal(n)) rec.states.push_back({g.nodes[n].key, ps[n]});
  }
  rec.success = !g.nodes.empty() && g.nodes[0].proved;
  if (!rec.success) return;
  std::vector<std::vector<std::size_t>> out(g.nodes.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i) out[g.edges[i].parent].push_back(i);
  std::size_t n = 0;
  while (!g.terminal(n)) {
    for (std::size_t ei : out[n]) {
      const auto& e = g.edges[ei];
      if (ps[e.child] && *ps[e.child] + 1 == *ps[n]) {
        rec.proof.push_back({g.nodes[n].key, e.tactic});
        n = e.child;
        break;
      }
    }
  }
}

}  // namespace

SearchResult best_first_search(Prover& prover, const SearchGuide& guide, const SearchBudget& budget,
                               const std::string& statement, Rng& rng) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  SearchResult res;
  SearchGraph& g = res.graph;
  SearchRecord& rec = res.record;
  rec.name = statement;

  std::string search_id;
  try {
    ProverReply init = prover.init_search(statement);
    if (!init.ok()) {
      rec.diagnostic = init.error;
      rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
      return res;
    }
    search_id = init.search_id;

    std::vector<std::vector<std::size_t>> parents;
    std::priority_queue<QueueEntry> queue;
    std::uint64_t seq = 0;
    auto add_node = [&](TacticState state, std::string state_id, int depth, double cum_lp) {
      SearchNode node;
      node.key = state.text();
      node.state = std::move(state);
      node.state_id = std::move(state_id);
      node.depth = depth;
      node.cumulative_logprob = cum_lp;
      std::size_t id = g.nodes.size();
      g.index.emplace(node.key, id);
      bool terminal = node.state.goals.empty();
      if (!terminal) {
        node.priority = guide.mode == PriorityMode::Value ? guide.value(node.state) : cum_lp;
        queue.push({node.priority, seq++, id});
      }
      g.nodes.push_back(std::move(node));
      parents.emplace_back();
      return id;
    };
    add_node(std::move(init.state), init.state_id, 0, 0.0);

    while (!g.nodes[0].proved && rec.expansions < budget.d && !queue.empty()) {
      if (clock::now() - start > budget.timeout) {
        rec.diagnostic = "timeout";
        break;
      }
      std::size_t n = queue.top().node;
      queue.pop();
      if (g.nodes[n].expanded || g.nodes[n].depth >= budget.max_depth) continue;
      g.nodes[n].expanded = true;
      ++rec.expansions;
      // Copies: add_node may reallocate the node vector.
      const TacticState state = g.nodes[n].state;
      const std::string state_id = g.nodes[n].state_id;
      const int depth = g.nodes[n].depth;
      const double cum_lp = g.nodes[n].cumulative_logprob;
      for (auto& sample : guide.policy(state, budget.e, rng)) {
        ProverReply r = prover.run_tac(search_id, state_id, sample.text);
        if (!r.ok()) continue;
        std::string key = r.state.text();
        auto it = g.index.find(key);
        std::size_t child =
            it != g.index.end() ? it->second : add_node(std::move(r.state), r.state_id, depth + 1, cum_lp + sample.logprob);
        g.edges.push_back({n, std::move(sample.text), sample.logprob, child});
        parents[child].push_back(n);
        if ((g.terminal(child) || g.nodes[child].proved) && !g.nodes[n].proved) propagate_proved(g, parents, child);
        if (g.nodes[0].proved) break;
      }
    }
    if (!g.nodes[0].proved && rec.diagnostic.empty()) {
      rec.diagnostic = queue.empty() && rec.expansions < budget.d ? "search space exhausted" : "budget exhausted";
    }
  } catch (const ProverUnavailable& e) {
    rec.diagnostic = std::string("prover unavailable: ") + e.what();
  }
  if (!search_id.empty()) {
    try {
      prover.clear_search(search_id);
    } catch (const ProverUnavailable&) {
    }
  }
  finish_record(res);
  if (rec.success) rec.diagnostic.clear();
  rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  return res;
}

std::vector<TrainingRecord> record_to_training(const SearchRecord& rec, ValueTarget target) {
  std::vector<TrainingRecord> out;
  if (!rec.success) return out;
  for (const auto& s : rec.proof) out.push_back({Objective::Proofstep, rec.name, s.state, s.tactic});
  for (const auto& s : rec.states) {
    int b = target == ValueTarget::Outcome ? outcome_bucket(s.ps) : bucketize(s.ps);
    out.push_back({Objective::Proofsize, rec.name, s.state, std::string(1, token_of_bucket(b))});
  }
  return out;
}

}  // namespace cprover
