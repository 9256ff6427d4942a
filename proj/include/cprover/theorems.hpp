#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cprover/expr.hpp"

namespace cprover {

enum class Relation : std::uint8_t { Le, Lt };

struct Inequality {
  Expr lhs;
  Expr rhs;
  Relation rel = Relation::Le;

  friend bool operator==(const Inequality& a, const Inequality& b) {
    return a.rel == b.rel && a.lhs == b.lhs && b.rhs == a.rhs;
  }
};

Inequality normalize(const Inequality& ineq);
/// "<lhs> ≤ <rhs>" in the canonical grammar, after normalization.
std::string canonical_text(const Inequality& ineq);
std::string relation_symbol(Relation r);

enum class TheoremKind : std::uint8_t { Base, Composition, Transform };

/// One entry in the schema table. Base families close a goal given their
/// instantiation arguments; compositions split a goal into two; transforms
/// map a goal to its pre-image.
struct TheoremInfo {
  std::string_view name;     // tactic name, e.g. "add_le_add"
  std::string_view display;  // composition-listing name, e.g. "AddLeAdd"
  TheoremKind kind;
  std::vector<std::size_t> arities;  // base families only
};

const std::vector<TheoremInfo>& theorem_table();
const TheoremInfo* find_theorem(std::string_view name);

/// The six base families drawn by the generator, in table order.
const std::vector<std::string_view>& base_families();
/// Base family used as the ratio inequality of le_mul_of_ratio.
inline constexpr std::string_view kSelfDivConst = "self_div_const";
const std::vector<std::string_view>& composition_theorems();
const std::vector<std::string_view>& transform_theorems();

/// Instance of a base family, or nullopt if the arity is wrong or a side
/// condition is not certified by sign_of under `env`. Not normalized.
std::optional<Inequality> instantiate_base(std::string_view family, std::span<const Expr> args,
                                           const SignEnv& env);

/// Forward composition of two inequalities given in goal order.
std::optional<Inequality> compose_forward(std::string_view theorem, const Inequality& first,
                                          const Inequality& second, const SignEnv& env);
/// Goal order sub-goals whose forward composition normalizes to `goal`.
std::optional<std::array<Inequality, 2>> compose_backward(std::string_view theorem, const Inequality& goal,
                                                          const SignEnv& env);

std::optional<Inequality> transform_forward(std::string_view theorem, const Inequality& premise,
                                            const SignEnv& env);
std::optional<Inequality> transform_backward(std::string_view theorem, const Inequality& goal,
                                             const SignEnv& env);

/// Exact rational value of a literal, an integer literal or a quotient of two.
struct Rational {
  long long num = 0;
  long long den = 1;
};
std::optional<Rational> literal_rational(const Expr& e);
/// Normal-form literal for p/q (Int when q divides p, else unfolded quotient).
Expr rational_literal(long long p, long long q);

// ---------------------------------------------------------------------------
// Tactics: `<verb> <theorem_name> [<arg>; ...]`, arguments in the canonical grammar.

inline constexpr std::string_view kVerbBase = "ineq_base";
inline constexpr std::string_view kVerbComp = "ineq_comp";
inline constexpr std::string_view kVerbTransform = "ineq_transform";

std::string_view verb_for(TheoremKind kind) noexcept;

struct Tactic {
  std::string verb;
  std::string theorem;
  std::vector<Expr> args;
};

std::string format_tactic(const Tactic& t);
/// Throws ParseError on malformed text or a theorem that does not belong to the verb.
Tactic parse_tactic(std::string_view text);

}  // namespace cprover
