#include "cprover/theorems.hpp"

#include <algorithm>
#include <numeric>

namespace cprover {

Inequality normalize(const Inequality& ineq) { return {normalize(ineq.lhs), normalize(ineq.rhs), ineq.rel}; }

std::string relation_symbol(Relation r) { return r == Relation::Le ? "≤" : "<"; }

std::string canonical_text(const Inequality& ineq) {
  return canonicalize(ineq.lhs) + " " + relation_symbol(ineq.rel) + " " + canonicalize(ineq.rhs);
}

const std::vector<TheoremInfo>& theorem_table() {
  static const std::vector<TheoremInfo> table = {
      {"am_gm", "AmGm", TheoremKind::Base, {4, 6}},
      {"sq_nonneg", "Sqnonneg", TheoremKind::Base, {2}},
      {"cauchy", "Cauchy", TheoremKind::Base, {4}},
      {"bernoulli", "Bernoulli", TheoremKind::Base, {2}},
      {"young", "Young", TheoremKind::Base, {4}},
      {"holder", "Holder", TheoremKind::Base, {6}},
      {"self_div_const", "SelfDivConst", TheoremKind::Base, {2}},
      {"mul_le_mul", "MulLeMul", TheoremKind::Composition, {}},
      {"add_le_add", "AddLeAdd", TheoremKind::Composition, {}},
      {"div_le_div", "DivLeDiv", TheoremKind::Composition, {}},
      {"mul_le_mul_of_nonneg", "MulLeMulOfNonneg", TheoremKind::Composition, {}},
      {"le_mul_of_ratio", "LeMulOfRatio", TheoremKind::Composition, {}},
      {"neg_le_neg", "NegLeNeg", TheoremKind::Transform, {}},
      {"inv_le_inv", "InvLeInv", TheoremKind::Transform, {}},
      {"mul_self_le_mul_self", "MulSelfLeMulSelf", TheoremKind::Transform, {}},
      {"div_le_one_of_le", "DivLeOneOfLe", TheoremKind::Transform, {}},
  };
  return table;
}

const TheoremInfo* find_theorem(std::string_view name) {
  for (const auto& t : theorem_table()) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const std::vector<std::string_view>& base_families() {
  static const std::vector<std::string_view> v = {"am_gm", "sq_nonneg", "cauchy", "bernoulli", "young", "holder"};
  return v;
}

const std::vector<std::string_view>& composition_theorems() {
  static const std::vector<std::string_view> v = {"mul_le_mul", "add_le_add", "div_le_div", "mul_le_mul_of_nonneg",
                                                  "le_mul_of_ratio"};
  return v;
}

const std::vector<std::string_view>& transform_theorems() {
  static const std::vector<std::string_view> v = {"neg_le_neg", "inv_le_inv", "mul_self_le_mul_self",
                                                  "div_le_one_of_le"};
  return v;
}

std::optional<Rational> literal_rational(const Expr& e) {
  if (e.is_int()) return Rational{e.value(), 1};
  if (e.is(Op::Div) && e.lhs().is_int() && e.rhs().is_int() && e.rhs().value() != 0) {
    long long p = e.lhs().value(), q = e.rhs().value();
    if (q < 0) {
      p = -p;
      q = -q;
    }
    return Rational{p, q};
  }
  return std::nullopt;
}

Expr rational_literal(long long p, long long q) {
  return normalize(lit(static_cast<std::int32_t>(p)) / lit(static_cast<std::int32_t>(q)));
}

namespace {

bool nonneg(const Expr& e, const SignEnv& env) { return implies(sign_of(e, env), SignFact::NonNeg); }
bool pos(const Expr& e, const SignEnv& env) { return sign_of(e, env) == SignFact::StrictPos; }

Expr square(const Expr& e) { return pow(e, lit(2)); }

bool sums_to_one(std::span<const Rational> ws) {
  // Denominators in this table are tiny, so a common-denominator sum is exact.
  long long num = 0, den = 1;
  for (const auto& w : ws) {
    if (w.num < 0) return false;
    num = num * w.den + w.num * den;
    den *= w.den;
    long long g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  return num == den;
}

// 1/p + 1/q = 1 with p, q > 1.
std::optional<std::pair<Rational, Rational>> conjugate(const Expr& p, const Expr& q) {
  auto rp = literal_rational(p), rq = literal_rational(q);
  if (!rp || !rq) return std::nullopt;
  if (rp->num <= rp->den || rq->num <= rq->den) return std::nullopt;
  Rational inv[2] = {{rp->den, rp->num}, {rq->den, rq->num}};
  if (!sums_to_one(inv)) return std::nullopt;
  return std::make_pair(*rp, *rq);
}

std::optional<Inequality> am_gm(std::span<const Expr> args, const SignEnv& env) {
  std::size_t n = args.size() / 2;
  std::vector<Rational> ws;
  for (std::size_t i = 0; i < n; ++i) {
    if (!nonneg(args[i], env)) return std::nullopt;
    auto w = literal_rational(args[n + i]);
    if (!w) return std::nullopt;
    ws.push_back(*w);
  }
  if (!sums_to_one(ws)) return std::nullopt;
  Expr lhs = pow(args[0], args[n]);
  Expr rhs = args[n] * args[0];
  for (std::size_t i = 1; i < n; ++i) {
    lhs = lhs * pow(args[i], args[n + i]);
    rhs = rhs + args[n + i] * args[i];
  }
  return Inequality{lhs, rhs};
}

std::optional<Inequality> young(std::span<const Expr> a, const SignEnv& env) {
  if (!nonneg(a[0], env) || !nonneg(a[1], env) || !conjugate(a[2], a[3])) return std::nullopt;
  return Inequality{a[0] * a[1], pow(a[0], a[2]) / a[2] + pow(a[1], a[3]) / a[3]};
}

std::optional<Inequality> holder(std::span<const Expr> a, const SignEnv& env) {
  for (int i = 0; i < 4; ++i) {
    if (!nonneg(a[i], env)) return std::nullopt;
  }
  auto pq = conjugate(a[4], a[5]);
  if (!pq) return std::nullopt;
  Expr inv_p = rational_literal(pq->first.den, pq->first.num);
  Expr inv_q = rational_literal(pq->second.den, pq->second.num);
  Expr lhs = a[0] * a[2] + a[1] * a[3];
  Expr rhs = pow(pow(a[0], a[4]) + pow(a[1], a[4]), inv_p) * pow(pow(a[2], a[5]) + pow(a[3], a[5]), inv_q);
  return Inequality{lhs, rhs};
}

bool is_negation(const Expr& e) { return e.is(Op::Neg) || (e.is_int() && e.value() < 0); }

bool is_reciprocal(const Expr& e) { return e.is(Op::Div) && e.lhs().is_int() && e.lhs().value() == 1; }

}  // namespace

std::optional<Inequality> instantiate_base(std::string_view family, std::span<const Expr> args, const SignEnv& env) {
  const TheoremInfo* info = find_theorem(family);
  if (!info || info->kind != TheoremKind::Base) return std::nullopt;
  if (std::find(info->arities.begin(), info->arities.end(), args.size()) == info->arities.end()) return std::nullopt;

  if (family == "am_gm") return am_gm(args, env);
  if (family == "sq_nonneg") {
    // 2xy ≤ y² + x²
    return Inequality{lit(2) * (args[0] * args[1]), square(args[1]) + square(args[0])};
  }
  if (family == "cauchy") {
    const Expr &x1 = args[0], &x2 = args[1], &y1 = args[2], &y2 = args[3];
    return Inequality{square(x1 * y1 + x2 * y2), (square(x1) + square(x2)) * (square(y1) + square(y2))};
  }
  if (family == "bernoulli") {
    const Expr &n = args[0], &x = args[1];
    if (!n.is_int() || n.value() < 1 || !nonneg(x, env)) return std::nullopt;
    return Inequality{lit(1) + n * x, pow(x + lit(1), n)};
  }
  if (family == "young") return young(args, env);
  if (family == "holder") return holder(args, env);
  if (family == kSelfDivConst) {
    const Expr &x = args[0], &n = args[1];
    if (!n.is_int() || n.value() < 1 || !nonneg(x, env)) return std::nullopt;
    return Inequality{x / n, x};
  }
  return std::nullopt;
}

std::optional<Inequality> compose_forward(std::string_view theorem, const Inequality& first,
                                          const Inequality& second, const SignEnv& env) {
  if (first.rel != Relation::Le || second.rel != Relation::Le) return std::nullopt;
  const Expr &a = first.lhs, &b = first.rhs, &c = second.lhs, &d = second.rhs;
  if (theorem == "add_le_add") return Inequality{a + c, b + d};
  if (theorem == "mul_le_mul") {
    if (!nonneg(c, env) || !nonneg(b, env)) return std::nullopt;
    return Inequality{a * c, b * d};
  }
  if (theorem == "mul_le_mul_of_nonneg") {
    if (!nonneg(a, env) || !nonneg(d, env)) return std::nullopt;
    return Inequality{a * c, b * d};
  }
  if (theorem == "div_le_div") {
    // a ≤ b', d' ≤ b  ⊢  a / b ≤ b' / d'
    if (!nonneg(b, env) || !pos(c, env)) return std::nullopt;
    return Inequality{a / d, b / c};
  }
  if (theorem == "le_mul_of_ratio") {
    if (!pos(c, env) || !nonneg(b, env)) return std::nullopt;
    return Inequality{a, b * (d / c)};
  }
  return std::nullopt;
}

std::optional<std::array<Inequality, 2>> compose_backward(std::string_view theorem, const Inequality& goal_in,
                                                          const SignEnv& env) {
  Inequality goal = normalize(goal_in);
  if (goal.rel != Relation::Le) return std::nullopt;
  const Expr &l = goal.lhs, &r = goal.rhs;
  std::optional<std::array<Inequality, 2>> parts;
  if (theorem == "add_le_add") {
    if (l.is(Op::Add) && r.is(Op::Add)) parts = {{{l.lhs(), r.lhs()}, {l.rhs(), r.rhs()}}};
  } else if (theorem == "mul_le_mul" || theorem == "mul_le_mul_of_nonneg") {
    if (l.is(Op::Mul) && r.is(Op::Mul)) parts = {{{l.lhs(), r.lhs()}, {l.rhs(), r.rhs()}}};
  } else if (theorem == "div_le_div") {
    if (l.is(Op::Div) && r.is(Op::Div)) parts = {{{l.lhs(), r.lhs()}, {r.rhs(), l.rhs()}}};
  } else if (theorem == "le_mul_of_ratio") {
    if (r.is(Op::Mul) && r.rhs().is(Op::Div)) parts = {{{l, r.lhs()}, {r.rhs().rhs(), r.rhs().lhs()}}};
  }
  if (!parts) return std::nullopt;
  auto fwd = compose_forward(theorem, (*parts)[0], (*parts)[1], env);
  if (!fwd || !(normalize(*fwd) == goal)) return std::nullopt;
  return parts;
}

std::optional<Inequality> transform_forward(std::string_view theorem, const Inequality& p, const SignEnv& env) {
  if (p.rel != Relation::Le) return std::nullopt;
  if (theorem == "neg_le_neg") return Inequality{-p.rhs, -p.lhs};
  if (theorem == "inv_le_inv") {
    if (!pos(p.lhs, env)) return std::nullopt;
    return Inequality{lit(1) / p.rhs, lit(1) / p.lhs};
  }
  if (theorem == "mul_self_le_mul_self") {
    if (!nonneg(p.lhs, env)) return std::nullopt;
    return Inequality{p.lhs * p.lhs, p.rhs * p.rhs};
  }
  if (theorem == "div_le_one_of_le") {
    if (!nonneg(p.rhs, env)) return std::nullopt;
    return Inequality{p.lhs / p.rhs, lit(1)};
  }
  return std::nullopt;
}

std::optional<Inequality> transform_backward(std::string_view theorem, const Inequality& goal_in,
                                             const SignEnv& env) {
  Inequality goal = normalize(goal_in);
  if (goal.rel != Relation::Le) return std::nullopt;
  const Expr &l = goal.lhs, &r = goal.rhs;
  std::optional<Inequality> pre;
  if (theorem == "neg_le_neg") {
    if (is_negation(l) && is_negation(r)) pre = Inequality{normalize(-r), normalize(-l)};
  } else if (theorem == "inv_le_inv") {
    if (is_reciprocal(l) && is_reciprocal(r)) pre = Inequality{r.rhs(), l.rhs()};
  } else if (theorem == "mul_self_le_mul_self") {
    if (l.is(Op::Mul) && r.is(Op::Mul) && l.lhs() == l.rhs() && r.lhs() == r.rhs()) pre = Inequality{l.lhs(), r.lhs()};
  } else if (theorem == "div_le_one_of_le") {
    if (l.is(Op::Div) && r.is_int() && r.value() == 1) pre = Inequality{l.lhs(), l.rhs()};
  }
  if (!pre) return std::nullopt;
  auto fwd = transform_forward(theorem, *pre, env);
  if (!fwd || !(normalize(*fwd) == goal)) return std::nullopt;
  return pre;
}

}  // namespace cprover

namespace cprover {

std::string_view verb_for(TheoremKind kind) noexcept {
  switch (kind) {
    case TheoremKind::Base: return kVerbBase;
    case TheoremKind::Composition: return kVerbComp;
    case TheoremKind::Transform: return kVerbTransform;
  }
  return kVerbBase;
}

std::string format_tactic(const Tactic& t) {
  std::string out = t.verb + " " + t.theorem;
  if (!t.args.empty()) {
    out += " [";
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (i) out += "; ";
      out += t.args[i].text();
    }
    out += "]";
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Tactic parse_tactic(std::string_view text) {
  std::string_view s = trim(text);
  auto sp = s.find(' ');
  if (sp == std::string_view::npos) throw ParseError(0, "tactic needs a verb and a theorem name");
  Tactic t;
  t.verb = std::string(s.substr(0, sp));
  std::string_view rest = trim(s.substr(sp + 1));
  auto br = rest.find('[');
  std::string_view name = trim(br == std::string_view::npos ? rest : rest.substr(0, br));
  std::string_view loose;  // space-separated arguments after the name
  if (br == std::string_view::npos) {
    if (auto gap = name.find(' '); gap != std::string_view::npos) {
      loose = trim(name.substr(gap + 1));
      name = name.substr(0, gap);
    }
  }
  if (name.empty() || name.find(' ') != std::string_view::npos) throw ParseError(sp + 1, "bad theorem name");
  t.theorem = std::string(name);
  const TheoremInfo* info = find_theorem(t.theorem);
  if (!info) throw ParseError(sp + 1, "unknown theorem '" + t.theorem + "'");
  if (verb_for(info->kind) != t.verb) throw ParseError(0, "theorem '" + t.theorem + "' does not belong to verb '" + t.verb + "'");
  if (br != std::string_view::npos) {
    std::string_view inner = rest.substr(br + 1);
    if (inner.empty() || inner.back() != ']') throw ParseError(s.size(), "expected ']'");
    inner.remove_suffix(1);
    std::size_t start = 0;
    while (start <= inner.size()) {
      auto semi = inner.find(';', start);
      std::string_view piece = trim(inner.substr(start, semi == std::string_view::npos ? inner.npos : semi - start));
      if (piece.empty()) throw ParseError(sp + 1 + br + 1 + start, "empty argument");
      t.args.push_back(parse_expr(piece));
      if (semi == std::string_view::npos) break;
      start = semi + 1;
    }
  }
  if (!loose.empty()) {
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= loose.size(); ++i) {
      char c = i < loose.size() ? loose[i] : ' ';
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (depth < 0) throw ParseError(i, "unbalanced ')'");
      if (depth == 0 && (c == ' ' || c == '\t')) {
        if (i > start) t.args.push_back(parse_expr(loose.substr(start, i - start)));
        start = i + 1;
      }
    }
    if (depth != 0) throw ParseError(s.size(), "unbalanced '('");
  }
  if (info->kind != TheoremKind::Base && !t.args.empty()) throw ParseError(0, "only ineq_base takes arguments");
  return t;
}

}  // namespace cprover
