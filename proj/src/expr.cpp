#include "cprover/expr.hpp"

#include <cctype>
#include <limits>
#include <optional>

namespace cprover {

struct Expr::Node {
  Op op;
  char name = 0;
  std::int32_t value = 0;
  std::vector<Expr> children;
  std::string text;
  int depth = 1;
  std::size_t size = 1;
};

int arity(Op op) noexcept {
  switch (op) {
    case Op::Var:
    case Op::Int:
      return 0;
    case Op::Log:
    case Op::LogInv:
    case Op::Sqrt:
    case Op::Neg:
      return 1;
    default:
      return 2;
  }
}

bool is_unary(Op op) noexcept { return arity(op) == 1; }
bool is_binary(Op op) noexcept { return arity(op) == 2; }

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::Var: return "var";
    case Op::Int: return "int";
    case Op::Log: return "log";
    case Op::LogInv: return "loginv";
    case Op::Sqrt: return "sqrt";
    case Op::Neg: return "neg";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Pow: return "pow";
    case Op::Max: return "max";
    case Op::Min: return "min";
  }
  return "?";
}

namespace {

char infix_symbol(Op op) {
  switch (op) {
    case Op::Add: return '+';
    case Op::Sub: return '-';
    case Op::Mul: return '*';
    case Op::Div: return '/';
    case Op::Pow: return '^';
    default: return 0;
  }
}

}  // namespace

Expr::Expr() {
  static const Expr zero = integer(0);
  node_ = zero.node_;
}

Expr Expr::var(char name) {
  if (name < 'a' || name > 'z') throw std::invalid_argument("variable names are single lowercase letters");
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->name = name;
  n->text = std::string(1, name);
  return Expr(std::move(n));
}

Expr Expr::integer(std::int32_t value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Int;
  n->value = value;
  n->text = std::to_string(value);
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr arg) {
  if (!is_unary(op)) throw std::invalid_argument("not a unary op");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->depth = arg.depth() + 1;
  n->size = arg.size() + 1;
  if (op == Op::Neg) {
    // A literal operand is parenthesized so "-(5)" stays distinct from "-5".
    n->text = arg.is_int() ? "-(" + arg.text() + ")" : "-" + arg.text();
  } else {
    n->text = std::string(op_name(op)) + "(" + arg.text() + ")";
  }
  n->children.push_back(std::move(arg));
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw std::invalid_argument("not a binary op");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->depth = std::max(lhs.depth(), rhs.depth()) + 1;
  n->size = lhs.size() + rhs.size() + 1;
  if (char sym = infix_symbol(op)) {
    n->text = "(" + lhs.text() + sym + rhs.text() + ")";
  } else {
    n->text = std::string(op_name(op)) + "(" + lhs.text() + "," + rhs.text() + ")";
  }
  n->children.push_back(std::move(lhs));
  n->children.push_back(std::move(rhs));
  return Expr(std::move(n));
}

Op Expr::op() const noexcept { return node_->op; }

char Expr::name() const {
  if (node_->op != Op::Var) throw std::logic_error("name() on non-variable");
  return node_->name;
}

std::int32_t Expr::value() const {
  if (node_->op != Op::Int) throw std::logic_error("value() on non-literal");
  return node_->value;
}

std::size_t Expr::arity() const noexcept { return node_->children.size(); }

const Expr& Expr::child(std::size_t i) const { return node_->children.at(i); }

const std::string& Expr::text() const noexcept { return node_->text; }
int Expr::depth() const noexcept { return node_->depth; }
std::size_t Expr::size() const noexcept { return node_->size; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }
Expr pow(const Expr& base, const Expr& exponent) { return Expr::binary(Op::Pow, base, exponent); }
Expr max(const Expr& a, const Expr& b) { return Expr::binary(Op::Max, a, b); }
Expr min(const Expr& a, const Expr& b) { return Expr::binary(Op::Min, a, b); }
Expr log(const Expr& a) { return Expr::unary(Op::Log, a); }
Expr log_inv(const Expr& a) { return Expr::unary(Op::LogInv, a); }
Expr sqrt(const Expr& a) { return Expr::unary(Op::Sqrt, a); }

// ---------------------------------------------------------------------------
// Sign inference over sets of possible signs {-, 0, +}.

namespace {

using SignSet = unsigned;
constexpr SignSet kNeg = 1, kZero = 2, kPos = 4, kAll = 7;

SignSet to_set(SignFact s) {
  switch (s) {
    case SignFact::StrictPos: return kPos;
    case SignFact::StrictNeg: return kNeg;
    case SignFact::NonNeg: return kZero | kPos;
    case SignFact::NonPos: return kNeg | kZero;
    case SignFact::NonZero: return kNeg | kPos;
    case SignFact::Unknown: return kAll;
  }
  return kAll;
}

// {0} has no SignFact of its own and weakens to NonNeg.
SignFact from_set(SignSet s) {
  switch (s) {
    case kPos: return SignFact::StrictPos;
    case kNeg: return SignFact::StrictNeg;
    case kZero:
    case kZero | kPos: return SignFact::NonNeg;
    case kNeg | kZero: return SignFact::NonPos;
    case kNeg | kPos: return SignFact::NonZero;
    default: return SignFact::Unknown;
  }
}

SignSet of_value(long double v) { return v > 0 ? kPos : (v < 0 ? kNeg : kZero); }

// Sign classes are ordered intervals, so max/min act on them elementwise.
int rank(SignSet single) { return single == kNeg ? 0 : (single == kZero ? 1 : 2); }

template <class F>
SignSet lift(SignSet a, SignSet b, F&& f) {
  SignSet out = 0;
  for (SignSet x : {kNeg, kZero, kPos}) {
    if (!(a & x)) continue;
    for (SignSet y : {kNeg, kZero, kPos}) {
      if (b & y) out |= f(x, y);
    }
  }
  return out;
}

SignSet add_signs(SignSet x, SignSet y) {
  if (x == kZero) return y;
  if (y == kZero) return x;
  if (x == y) return x;
  return kAll;
}

SignSet mul_signs(SignSet x, SignSet y) {
  if (x == kZero || y == kZero) return kZero;
  return x == y ? kPos : kNeg;
}

SignSet neg_set(SignSet s) {
  SignSet out = s & kZero;
  if (s & kPos) out |= kNeg;
  if (s & kNeg) out |= kPos;
  return out;
}

SignSet sign_set(const Expr& e, const SignEnv& env);

SignSet log_literal(const Expr& arg, bool reciprocal) {
  // Lean's real.log is log |x| with log 0 = 0.
  long double v = arg.value();
  if (v == 0) return kZero;
  if (v < 0) v = -v;
  SignSet s = v > 1 ? kPos : (v == 1 ? kZero : kNeg);
  return reciprocal ? neg_set(s) : s;
}

SignSet sign_set(const Expr& e, const SignEnv& env) {
  switch (e.op()) {
    case Op::Var: {
      auto it = env.find(e.name());
      return it == env.end() ? kAll : to_set(it->second);
    }
    case Op::Int:
      return of_value(e.value());
    case Op::Neg:
      return neg_set(sign_set(e.child(0), env));
    case Op::Log:
    case Op::LogInv:
      if (e.child(0).is_int()) return log_literal(e.child(0), e.op() == Op::LogInv);
      return kAll;
    case Op::Sqrt: {
      // real.sqrt is 0 on negatives, so the result is never negative.
      SignSet a = sign_set(e.child(0), env);
      return a == kPos ? kPos : (kZero | kPos);
    }
    case Op::Add:
      return lift(sign_set(e.lhs(), env), sign_set(e.rhs(), env), add_signs);
    case Op::Sub:
      return lift(sign_set(e.lhs(), env), neg_set(sign_set(e.rhs(), env)), add_signs);
    case Op::Mul:
      return lift(sign_set(e.lhs(), env), sign_set(e.rhs(), env), mul_signs);
    case Op::Div: {
      // x / 0 = 0 in Lean.
      SignSet d = sign_set(e.rhs(), env);
      SignSet out = lift(sign_set(e.lhs(), env), d & ~kZero, mul_signs);
      if (d & kZero) out |= kZero;
      return out ? out : kZero;
    }
    case Op::Pow: {
      SignSet b = sign_set(e.lhs(), env);
      if (b == kPos) return kPos;
      const Expr& ex = e.rhs();
      if (ex.is_int() && ex.value() >= 0) {
        if (ex.value() == 0) return kPos;
        SignSet out = b & kZero;
        if (b & kPos) out |= kPos;
        if (b & kNeg) out |= (ex.value() % 2 == 0) ? kPos : kNeg;
        return out;
      }
      return kAll;
    }
    case Op::Max:
    case Op::Min: {
      bool is_max = e.op() == Op::Max;
      return lift(sign_set(e.lhs(), env), sign_set(e.rhs(), env), [is_max](SignSet x, SignSet y) {
        bool pick_x = is_max ? rank(x) >= rank(y) : rank(x) <= rank(y);
        return pick_x ? x : y;
      });
    }
  }
  return kAll;
}

}  // namespace

std::string_view to_string(SignFact s) noexcept {
  switch (s) {
    case SignFact::StrictPos: return "StrictPos";
    case SignFact::StrictNeg: return "StrictNeg";
    case SignFact::NonNeg: return "NonNeg";
    case SignFact::NonPos: return "NonPos";
    case SignFact::NonZero: return "NonZero";
    case SignFact::Unknown: return "Unknown";
  }
  return "?";
}

bool implies(SignFact a, SignFact b) noexcept {
  SignSet sa = to_set(a), sb = to_set(b);
  return (sa & ~sb) == 0;
}

SignFact sign_of(const Expr& e, const SignEnv& env) { return from_set(sign_set(e, env)); }

// ---------------------------------------------------------------------------
// Normal form

namespace {

std::optional<std::int32_t> narrow(long long v) {
  if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max())
    return std::nullopt;
  return static_cast<std::int32_t>(v);
}

std::optional<std::int32_t> fold(Op op, long long a, long long b) {
  switch (op) {
    case Op::Add: return narrow(a + b);
    case Op::Sub: return narrow(a - b);
    case Op::Mul: return narrow(a * b);
    case Op::Div:
      if (b == 0 || a % b != 0) return std::nullopt;
      return narrow(a / b);
    case Op::Pow: {
      if (b < 0) return std::nullopt;
      if (a == 0) return b == 0 ? 1 : 0;
      if (a == 1) return 1;
      if (a == -1) return b % 2 == 0 ? 1 : -1;
      long long acc = 1;
      for (long long i = 0; i < b; ++i) {
        acc *= a;
        if (!narrow(acc)) return std::nullopt;
      }
      return narrow(acc);
    }
    case Op::Max: return narrow(std::max(a, b));
    case Op::Min: return narrow(std::min(a, b));
    default: return std::nullopt;
  }
}

}  // namespace

Expr normalize(const Expr& e) {
  switch (e.op()) {
    case Op::Var:
    case Op::Int:
      return e;
    case Op::Neg: {
      Expr a = normalize(e.child(0));
      if (a.is(Op::Neg)) return a.child(0);
      if (a.is_int() && a.value() != std::numeric_limits<std::int32_t>::min()) return lit(-a.value());
      return -a;
    }
    case Op::Log:
    case Op::LogInv:
    case Op::Sqrt:
      return Expr::unary(e.op(), normalize(e.child(0)));
    default: {
      Expr a = normalize(e.lhs());
      Expr b = normalize(e.rhs());
      if (a.is_int() && b.is_int()) {
        if (auto v = fold(e.op(), a.value(), b.value())) return lit(*v);
      }
      return Expr::binary(e.op(), a, b);
    }
  }
}

std::string canonicalize(const Expr& e) { return normalize(e).text(); }

// ---------------------------------------------------------------------------
// Canonical grammar parser

ParseError::ParseError(std::size_t pos, const std::string& what)
    : std::runtime_error("parse error at " + std::to_string(pos) + ": " + what), pos_(pos) {}

namespace {

class CanonicalParser {
 public:
  explicit CanonicalParser(std::string_view s) : s_(s) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Expr expr() {
    if (peek() == '-') {
      std::size_t next = pos_ + 1;
      if (next < s_.size() && std::isdigit(static_cast<unsigned char>(s_[next]))) return primary();
      ++pos_;
      return -expr();
    }
    return primary();
  }

  Expr integer() {
    std::size_t start = pos_;
    bool negative = false;
    if (s_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    long long v = 0;
    std::size_t digits = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_] - '0');
      if (v > 2147483648LL) {
        pos_ = start;
        fail("integer literal out of range");
      }
      ++pos_;
      ++digits;
    }
    if (digits == 0) fail("expected digits");
    if (negative) v = -v;
    auto n = narrow(v);
    if (!n) {
      pos_ = start;
      fail("integer literal out of range");
    }
    return lit(*n);
  }

  Expr primary() {
    char c = peek();
    if (c == '\0') fail("unexpected end of input");
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return integer();
    if (c == '(') {
      ++pos_;
      Expr a = expr();
      char op = peek();
      Op bop;
      switch (op) {
        case ')':
          ++pos_;
          return a;
        case '+': bop = Op::Add; break;
        case '-': bop = Op::Sub; break;
        case '*': bop = Op::Mul; break;
        case '/': bop = Op::Div; break;
        case '^': bop = Op::Pow; break;
        default: fail("expected operator or ')'");
      }
      ++pos_;
      Expr b = expr();
      expect(')');
      return Expr::binary(bop, a, b);
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string_view id = s_.substr(start, pos_ - start);
      if (id.size() == 1) return var(id[0]);
      Op fop;
      if (id == "log") fop = Op::Log;
      else if (id == "loginv") fop = Op::LogInv;
      else if (id == "sqrt") fop = Op::Sqrt;
      else if (id == "max") fop = Op::Max;
      else if (id == "min") fop = Op::Min;
      else {
        pos_ = start;
        fail("unknown function '" + std::string(id) + "'");
      }
      expect('(');
      Expr a = expr();
      if (is_binary(fop)) {
        expect(',');
        Expr b = expr();
        expect(')');
        return Expr::binary(fop, a, b);
      }
      expect(')');
      return Expr::unary(fop, a);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view s) { return CanonicalParser(s).parse_all(); }

void collect_subterms(const Expr& e, const std::string& prefix,
                      std::vector<std::pair<std::string, Expr>>& out) {
  out.emplace_back(prefix, e);
  for (std::size_t i = 0; i < e.arity(); ++i) {
    collect_subterms(e.child(i), prefix + static_cast<char>('0' + i), out);
  }
}

std::optional<Expr> subterm_at(const Expr& e, std::string_view path) {
  Expr cur = e;
  for (char c : path) {
    std::size_t i = static_cast<std::size_t>(c - '0');
    if (i >= cur.arity()) return std::nullopt;
    Expr next = cur.child(i);
    cur = next;
  }
  return cur;
}

}  // namespace cprover
