#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cprover {

enum class Op : std::uint8_t {
  Var,
  Int,
  Log,
  LogInv,
  Sqrt,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Max,
  Min,
};

int arity(Op op) noexcept;
bool is_unary(Op op) noexcept;
bool is_binary(Op op) noexcept;
std::string_view op_name(Op op) noexcept;

/// Immutable arithmetic expression tree with value semantics.
///
/// Nodes are shared; copying an Expr is a refcount bump. Every node caches
/// its text in the canonical grammar (see docs/grammar.md), which is
/// injective on trees, so structural equality is text equality.
class Expr {
 public:
  /// The literal 0.
  Expr();
  static Expr var(char name);
  static Expr integer(std::int32_t value);
  static Expr unary(Op op, Expr arg);
  static Expr binary(Op op, Expr lhs, Expr rhs);

  Op op() const noexcept;
  char name() const;
  std::int32_t value() const;
  std::size_t arity() const noexcept;
  const Expr& child(std::size_t i) const;
  const Expr& lhs() const { return child(0); }
  const Expr& rhs() const { return child(1); }

  bool is_var() const noexcept { return op() == Op::Var; }
  bool is_int() const noexcept { return op() == Op::Int; }
  bool is(Op o) const noexcept { return op() == o; }

  /// Canonical-grammar text of this tree exactly as built (no normalization).
  const std::string& text() const noexcept;
  /// Number of nodes on the longest root-to-leaf path (a leaf has depth 1).
  int depth() const noexcept;
  std::size_t size() const noexcept;

  friend bool operator==(const Expr& a, const Expr& b) noexcept {
    return a.node_ == b.node_ || a.text() == b.text();
  }
  friend bool operator<(const Expr& a, const Expr& b) noexcept { return a.text() < b.text(); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr max(const Expr& a, const Expr& b);
Expr min(const Expr& a, const Expr& b);
Expr log(const Expr& a);
Expr log_inv(const Expr& a);
Expr sqrt(const Expr& a);
inline Expr lit(std::int32_t v) { return Expr::integer(v); }
inline Expr var(char c) { return Expr::var(c); }
/// p/q as an (unfolded) division of literals.
inline Expr frac(std::int32_t p, std::int32_t q) { return lit(p) / lit(q); }

// ---------------------------------------------------------------------------
// Sign facts

enum class SignFact : std::uint8_t {
  StrictPos,
  StrictNeg,
  NonNeg,
  NonPos,
  NonZero,
  Unknown,
};

std::string_view to_string(SignFact s) noexcept;
/// `a` implies `b` in the sign lattice (StrictPos implies NonNeg and NonZero, ...).
bool implies(SignFact a, SignFact b) noexcept;

using SignEnv = std::map<char, SignFact>;

/// Strongest fact derivable by the fixed rule table. Unknown is the fallback.
SignFact sign_of(const Expr& e, const SignEnv& env);

// ---------------------------------------------------------------------------
// Canonical form, text and parsing

/// Constant folding of integer-only subtrees plus double-negation removal.
/// Never reassociates or commutes.
Expr normalize(const Expr& e);

/// Text of normalize(e).
std::string canonicalize(const Expr& e);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t pos, const std::string& what);
  std::size_t position() const noexcept { return pos_; }

 private:
  std::size_t pos_;
};

/// Parses the canonical grammar. Whitespace between tokens is ignored.
Expr parse_expr(std::string_view s);

/// Lean 3 style real-number rendering: literals as (n:ℝ), minimal
/// precedence-driven parentheses that preserve the tree shape.
std::string render_lean(const Expr& e);
/// Reads render_lean output back; exact inverse on normal forms.
Expr parse_lean_expr(std::string_view s);

/// All subterms in preorder, paired with their path from the root
/// ("" for the root, then '0'/'1' per child step).
void collect_subterms(const Expr& e, const std::string& prefix,
                      std::vector<std::pair<std::string, Expr>>& out);
std::optional<Expr> subterm_at(const Expr& e, std::string_view path);

}  // namespace cprover
