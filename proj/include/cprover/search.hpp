#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cprover/model.hpp"
#include "cprover/prover.hpp"
#include "cprover/rng.hpp"

namespace cprover {

struct SearchBudget {
  int d = 512;  // expansions
  int e = 8;    // samples per expansion
  int max_depth = 24;
  std::chrono::milliseconds timeout{60000};
};

enum class PriorityMode : std::uint8_t { Value, CumulativeLogprob };

using PolicyFn = std::function<std::vector<SampledTactic>(const TacticState&, int e, Rng&)>;
using ValueFn = std::function<double(const TacticState&)>;

struct SearchGuide {
  PolicyFn policy;
  ValueFn value;  // required in Value mode
  PriorityMode mode = PriorityMode::Value;
};

/// Policy and value read from a checkpoint.
SearchGuide checkpoint_guide(const Checkpoint& ckpt, PriorityMode mode, double temperature = 1.0);

struct SearchNode {
  TacticState state;
  std::string key;       // canonical state text
  std::string state_id;  // prover-side id
  int depth = 0;
  double priority = 0;
  double cumulative_logprob = 0;
  bool expanded = false;
  bool proved = false;
};

struct SearchEdge {
  std::size_t parent = 0;
  std::string tactic;
  double logprob = 0;
  std::size_t child = 0;
};

/// OR-graph: a state is proved when any child is. Node 0 is the root.
struct SearchGraph {
  std::vector<SearchNode> nodes;
  std::vector<SearchEdge> edges;
  std::unordered_map<std::string, std::size_t> index;

  bool terminal(std::size_t n) const { return nodes[n].state.goals.empty(); }
};

/// Shortest tactic-path length from each node to a zero-goal node.
std::vector<ProofSize> extract_proofsizes(const SearchGraph& g);

struct ProofStepEntry {
  std::string state;
  std::string tactic;
};

struct VisitedState {
  std::string state;
  ProofSize ps;
};

struct SearchRecord {
  std::string name;
  bool success = false;
  std::vector<ProofStepEntry> proof;  // minimal proof, root first
  std::vector<VisitedState> states;   // every non-terminal node, in discovery order
  int expansions = 0;
  double wall_ms = 0;
  int iteration = 0;
  std::uint64_t seed = 0;
  std::string diagnostic;

  std::vector<std::string> tactics() const;
};

std::string record_to_json(const SearchRecord& r);
SearchRecord record_from_json(std::string_view line);

struct SearchResult {
  SearchRecord record;
  SearchGraph graph;
};

SearchResult best_first_search(Prover& prover, const SearchGuide& guide, const SearchBudget& budget,
                               const std::string& statement, Rng& rng);

/// Proofsteps along the minimal proof and one proofsize per visited state;
/// nothing for failed searches.
std::vector<TrainingRecord> record_to_training(const SearchRecord& rec, ValueTarget target = ValueTarget::Proofsize);

}  // namespace cprover
