#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cprover/ineqgen.hpp"
#include "cprover/theorems.hpp"

namespace cprover {

/// Ordered list of open goals for one declaration. Empty goals means proved.
struct TacticState {
  std::string decl;
  std::vector<Inequality> goals;
  int id = 0;

  bool proved() const noexcept { return goals.empty(); }
  /// Canonical single-line serialization, e.g. "⊢ (a+b) ≤ (c+d) ⊢ a ≤ c".
  std::string text() const;
};

inline constexpr std::string_view kNoGoals = "no goals";

std::string serialize_goals(std::span<const Inequality> goals);
/// Inverse of serialize_goals. Throws ParseError.
std::vector<Inequality> parse_goals(std::string_view text);

class UnknownDeclaration : public std::runtime_error {
 public:
  explicit UnknownDeclaration(const std::string& decl) : std::runtime_error("unknown declaration '" + decl + "'") {}
};

/// Result of applying one tactic: a new state, or the reason it failed.
/// A failure marks a dead search edge; it is not an exceptional condition.
struct TacticOutcome {
  std::optional<TacticState> state;
  std::string error;

  bool ok() const noexcept { return state.has_value(); }
};

using SchemaMatch = std::vector<std::pair<std::string, Expr>>;

/// Slot names of a base family at a given arity ("x", "y", "w1", ...).
std::vector<std::string> schema_slots(std::string_view family, std::size_t arity);

/// Instantiation mapping when normalize(goal) equals the normalized schema
/// instance under `args`; nullopt otherwise. Side conditions are checked
/// with sign_of under `env`.
std::optional<SchemaMatch> match_schema(const Inequality& goal, std::string_view family, std::span<const Expr> args,
                                        const SignEnv& env = {});

/// The inequality game over a loaded statement corpus. Stateless with respect
/// to searches: state tables live in the protocol layer.
class ProofEnv {
 public:
  ProofEnv() = default;
  explicit ProofEnv(std::vector<Statement> corpus);

  const Statement* find(std::string_view decl) const;
  std::size_t size() const noexcept { return statements_.size(); }
  const std::vector<Statement>& statements() const noexcept { return statements_; }

  /// Single-goal state for `decl` with id 0. Throws UnknownDeclaration.
  TacticState init_search(std::string_view decl) const;
  TacticOutcome run_tac(const TacticState& state, std::string_view tactic_text) const;
  TacticOutcome run_tac(const TacticState& state, const Tactic& tactic) const;

 private:
  std::vector<Statement> statements_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, SignEnv> envs_;
};

/// Replays a tactic sequence from init_search; true when it ends proved and
/// every step applied.
bool replay(const ProofEnv& env, std::string_view decl, std::span<const std::string> tactics);

}  // namespace cprover
