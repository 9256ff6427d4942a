#include <cctype>

#include "cprover/expr.hpp"

namespace cprover {

namespace {

constexpr int kPrecAdd = 65;
constexpr int kPrecMul = 70;
constexpr int kPrecPow = 75;
constexpr int kPrecAtom = 100;

int lean_prec(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub:
      return kPrecAdd;
    case Op::Mul:
    case Op::Div:
      return kPrecMul;
    case Op::Pow:
    case Op::Neg:
      return kPrecPow;
    case Op::Int:
      return e.value() < 0 ? kPrecPow : kPrecAtom;
    default:
      return kPrecAtom;
  }
}

std::string real_literal(std::int64_t v) {
  if (v < 0) return "-(" + std::to_string(-v) + ":ℝ)";
  return "(" + std::to_string(v) + ":ℝ)";
}

std::string render(const Expr& e);

std::string paren(const std::string& s) { return "(" + s + ")"; }

// Function arguments must be atoms.
std::string render_arg(const Expr& e) {
  bool atomic = e.is_var() || (e.is_int() && e.value() >= 0);
  return atomic ? render(e) : paren(render(e));
}

std::string render_operand(const Expr& e, bool wrap) { return wrap ? paren(render(e)) : render(e); }

std::string render(const Expr& e) {
  switch (e.op()) {
    case Op::Var:
      return std::string(1, e.name());
    case Op::Int:
      return real_literal(e.value());
    case Op::Log:
      return "real.log " + render_arg(e.child(0));
    case Op::LogInv:
      return "real.log " + render_arg(e.child(0)) + "⁻¹";
    case Op::Sqrt:
      return "real.sqrt " + render_arg(e.child(0));
    case Op::Max:
    case Op::Min:
      return std::string(op_name(e.op())) + " " + render_arg(e.lhs()) + " " + render_arg(e.rhs());
    case Op::Neg:
      return "-" + render_operand(e.child(0), lean_prec(e.child(0)) <= kPrecPow);
    case Op::Pow: {
      std::string base = render_operand(e.lhs(), lean_prec(e.lhs()) <= kPrecPow);
      const Expr& ex = e.rhs();
      std::string exponent = (ex.is_int() && ex.value() >= 0)
                                 ? std::to_string(ex.value())
                                 : render_operand(ex, lean_prec(ex) < kPrecPow);
      return base + " ^ " + exponent;
    }
    default: {
      int p = lean_prec(e);
      const char* sym = e.is(Op::Add) ? " + " : e.is(Op::Sub) ? " - " : e.is(Op::Mul) ? " * " : " / ";
      return render_operand(e.lhs(), lean_prec(e.lhs()) < p) + sym +
             render_operand(e.rhs(), lean_prec(e.rhs()) <= p);
    }
  }
}

// Lean-syntax reader; the inverse of render() on normal forms.
class LeanReader {
 public:
  explicit LeanReader(std::string_view s) : s_(s) {}

  Expr parse_all() {
    Expr e = additive();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

  Expr additive() {
    Expr acc = multiplicative();
    for (;;) {
      if (accept("+")) acc = acc + multiplicative();
      else if (accept_binary_minus()) acc = acc - multiplicative();
      else return acc;
    }
  }

  std::size_t position() const { return pos_; }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool lookahead(std::string_view tok) {
    skip_ws();
    return s_.substr(pos_, tok.size()) == tok;
  }

  bool accept(std::string_view tok) {
    if (!lookahead(tok)) return false;
    pos_ += tok.size();
    return true;
  }

  bool accept_binary_minus() { return accept("-"); }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  Expr multiplicative() {
    Expr acc = unary();
    for (;;) {
      if (accept("*")) acc = acc * unary();
      else if (accept("/")) acc = acc / unary();
      else return acc;
    }
  }

  Expr unary() {
    if (accept("-")) {
      Expr a = unary();
      if (a.is_int() && a.value() > 0) return lit(-a.value());
      return -a;
    }
    return power();
  }

  Expr power() {
    Expr base = application();
    if (accept("^")) {
      skip_ws();
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) return pow(base, number());
      return pow(base, unary());
    }
    return base;
  }

  Expr application() {
    if (accept("real.log")) {
      Expr a = atom();
      if (accept("⁻¹")) return log_inv(a);
      return log(a);
    }
    if (accept("real.sqrt")) return sqrt(atom());
    if (lookahead("max ") || lookahead("min ")) {
      bool is_max = lookahead("max");
      pos_ += 3;
      Expr a = atom();
      Expr b = atom();
      return is_max ? max(a, b) : min(a, b);
    }
    return atom();
  }

  Expr number() {
    skip_ws();
    std::size_t start = pos_;
    long long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_++] - '0');
      if (v > 2147483647LL) fail("literal out of range");
    }
    if (pos_ == start) fail("expected number");
    return lit(static_cast<std::int32_t>(v));
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return number();
    if (c == '(') {
      ++pos_;
      skip_ws();
      std::size_t save = pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        Expr n = number();
        if (accept(":ℝ)")) return n;
        pos_ = save;
      }
      Expr inner = additive();
      expect(")");
      return inner;
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::size_t next = pos_ + 1;
      if (next < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[next])) || s_[next] == '_' || s_[next] == '.'))
        fail("unexpected identifier");
      ++pos_;
      return var(c);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string render_lean(const Expr& e) { return render(e); }

Expr parse_lean_expr(std::string_view s) { return LeanReader(s).parse_all(); }

}  // namespace cprover
