#include "cprover/ineqgen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cprover {

namespace {

constexpr int kSeedRetries = 50;
constexpr int kCompositionResamples = 200;
constexpr int kBaseDraws = 30;
constexpr std::size_t kMaxGoalSize = 800;
constexpr int kStatementAttempts = 100;

const Op kSeedOps[] = {Op::Log, Op::LogInv, Op::Sqrt, Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow, Op::Max, Op::Min};

bool nonneg_fact(SignFact s) { return implies(s, SignFact::NonNeg); }

std::vector<Expr> entries_where(const SeedPool& pool, bool (*pred)(SignFact)) {
  std::vector<Expr> out;
  for (const auto& e : pool.entries) {
    if (pred(e.sign)) out.push_back(e.expr);
  }
  return out;
}

bool contains_subterm(const Expr& hay, const Expr& needle) {
  if (hay == needle) return true;
  for (std::size_t i = 0; i < hay.arity(); ++i) {
    if (contains_subterm(hay.child(i), needle)) return true;
  }
  return false;
}

// Every argument must survive normalization as a visible subterm, so the
// instantiation can be read off the goal.
bool recoverable(const Inequality& ineq, const std::vector<Expr>& args) {
  for (const auto& a : args) {
    if (!contains_subterm(ineq.lhs, a) && !contains_subterm(ineq.rhs, a)) return false;
  }
  return true;
}

bool too_big(const Inequality& i) { return i.lhs.size() + i.rhs.size() > kMaxGoalSize; }

std::pair<Expr, Expr> conjugate_pair(Rng& rng) {
  long long a = rng.uniform(2, 5);
  long long b = rng.uniform(1, a - 1);
  return {rational_literal(a, b), rational_literal(a, a - b)};
}

std::optional<std::vector<Expr>> draw_args(std::string_view family, const SeedPool& pool, Rng& rng) {
  const auto& all = pool.entries;
  auto any = [&] { return all[rng.index(all.size())].expr; };
  std::vector<Expr> nonneg = entries_where(pool, nonneg_fact);
  auto pick_nonneg = [&] { return nonneg[rng.index(nonneg.size())]; };

  std::vector<Expr> args;
  if (family == "am_gm") {
    if (nonneg.empty()) return std::nullopt;
    int n = static_cast<int>(rng.uniform(2, 3));
    std::vector<long long> ks;
    if (n == 2) {
      long long k = rng.uniform(1, 9);
      ks = {k, 10 - k};
    } else {
      long long k1 = rng.uniform(1, 8);
      long long k2 = rng.uniform(1, 9 - k1);
      ks = {k1, k2, 10 - k1 - k2};
    }
    for (int i = 0; i < n; ++i) args.push_back(pick_nonneg());
    for (long long k : ks) args.push_back(frac(static_cast<std::int32_t>(k), 10));
  } else if (family == "sq_nonneg") {
    args = {any(), any()};
  } else if (family == "cauchy") {
    args = {any(), any(), any(), any()};
  } else if (family == "bernoulli") {
    if (nonneg.empty()) return std::nullopt;
    args = {lit(static_cast<std::int32_t>(rng.uniform(2, 99))), pick_nonneg()};
  } else if (family == "young") {
    if (nonneg.empty()) return std::nullopt;
    auto [p, q] = conjugate_pair(rng);
    args = {pick_nonneg(), pick_nonneg(), p, q};
  } else if (family == "holder") {
    if (nonneg.empty()) return std::nullopt;
    auto [p, q] = conjugate_pair(rng);
    args = {pick_nonneg(), pick_nonneg(), pick_nonneg(), pick_nonneg(), p, q};
  } else if (family == kSelfDivConst) {
    std::vector<Expr> positive = entries_where(pool, [](SignFact s) { return s == SignFact::StrictPos; });
    if (positive.empty()) return std::nullopt;
    args = {positive[rng.index(positive.size())], lit(static_cast<std::int32_t>(rng.uniform(2, 99)))};
  } else {
    return std::nullopt;
  }
  for (auto& a : args) a = normalize(a);
  return args;
}

std::optional<std::pair<Inequality, ProofTrace>> try_family(std::string_view family, const SeedPool& pool,
                                                            Rng& rng) {
  for (int attempt = 0; attempt < kBaseDraws; ++attempt) {
    auto args = draw_args(family, pool, rng);
    if (!args) return std::nullopt;
    auto inst = instantiate_base(family, *args, pool.env);
    if (!inst) continue;
    Inequality ineq = normalize(*inst);
    if (!recoverable(ineq, *args) || too_big(ineq)) continue;
    ProofTrace t;
    t.kind = TheoremKind::Base;
    t.theorem = std::string(family);
    t.args = std::move(*args);
    return std::make_pair(std::move(ineq), std::move(t));
  }
  return std::nullopt;
}

}  // namespace

int ProofTrace::depth() const {
  int d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return kind == TheoremKind::Base ? 0 : d + 1;
}

std::size_t ProofTrace::node_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.node_count();
  return n;
}

SignEnv Statement::env() const {
  SignEnv env;
  for (auto [v, s] : hypotheses) env[v] = s;
  return env;
}

std::string statement_name(int n_s, int n_d, int index) {
  return "synthetic_ineq_nb_seed_var_" + std::to_string(n_s) + "_depth_" + std::to_string(n_d) + "_p_" +
         std::to_string(index);
}

SeedPool gen_seed_pool(const GeneratorConfig& cfg, Rng& rng) {
  SeedPool pool;
  int n_v = static_cast<int>(rng.uniform(cfg.n_v_min, cfg.n_v_max));
  for (int i = 0; i < n_v; ++i) {
    char v = static_cast<char>('a' + i);
    pool.variables.push_back(v);
    pool.env[v] = SignFact::StrictPos;
    pool.entries.push_back({var(v), SignFact::StrictPos});
  }
  for (int i = 0; i < cfg.n_n; ++i) {
    auto magnitude = static_cast<std::int32_t>(rng.uniform(1, 100));
    Expr n = lit(rng.chance(0.25) ? -magnitude : magnitude);
    pool.entries.push_back({n, sign_of(n, pool.env)});
  }
  for (int round = 0; round < cfg.n_s; ++round) {
    std::optional<SeedEntry> made;
    for (int attempt = 0; attempt <= kSeedRetries; ++attempt) {
      Op op = kSeedOps[rng.index(std::size(kSeedOps))];
      const Expr& x = pool.entries[rng.index(pool.entries.size())].expr;
      Expr e = is_unary(op) ? Expr::unary(op, x)
                            : Expr::binary(op, x, pool.entries[rng.index(pool.entries.size())].expr);
      e = normalize(e);
      SignFact s = sign_of(e, pool.env);
      made = SeedEntry{e, s};
      if (s != SignFact::Unknown) break;
    }
    pool.entries.push_back(*made);
  }
  return pool;
}

std::pair<Inequality, ProofTrace> gen_base_inequality(const SeedPool& pool, Rng& rng) {
  return gen_base_inequality(pool, rng, base_families());
}

std::pair<Inequality, ProofTrace> gen_base_inequality(const SeedPool& pool, Rng& rng,
                                                      std::span<const std::string_view> families) {
  if (pool.entries.empty()) throw GenerationExhausted("empty seed pool");
  std::vector<std::string_view> order(families.begin(), families.end());
  // Fisher-Yates with the portable rng.
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  for (auto family : order) {
    if (auto r = try_family(family, pool, rng)) return std::move(*r);
  }
  throw GenerationExhausted("no base family instantiable from the seed pool");
}

std::pair<Inequality, ProofTrace> compose(const SeedPool& pool, std::pair<Inequality, ProofTrace> base, int n_d,
                                          Rng& rng) {
  if (n_d < 0) throw std::invalid_argument("n_d must be non-negative");
  auto [cur, trace] = std::move(base);
  cur = normalize(cur);
  static const std::string_view kSelfDiv[] = {kSelfDivConst};
  for (int round = 0; round < n_d; ++round) {
    bool done = false;
    for (int attempt = 0; attempt < kCompositionResamples && !done; ++attempt) {
      if (rng.index(3) == 0) {
        const auto& ts = transform_theorems();
        std::string_view t = ts[rng.index(ts.size())];
        auto out = transform_forward(t, cur, pool.env);
        if (!out) continue;
        Inequality next = normalize(*out);
        auto back = transform_backward(t, next, pool.env);
        if (!back || !(*back == cur) || too_big(next)) continue;
        ProofTrace node{TheoremKind::Transform, std::string(t), {}, {}};
        node.children.push_back(std::move(trace));
        trace = std::move(node);
        cur = std::move(next);
        done = true;
      } else {
        const auto& cs = composition_theorems();
        std::string_view c = cs[rng.index(cs.size())];
        std::pair<Inequality, ProofTrace> fresh{Inequality{lit(0), lit(0)}, {}};
        try {
          fresh = c == "le_mul_of_ratio" ? gen_base_inequality(pool, rng, kSelfDiv) : gen_base_inequality(pool, rng);
        } catch (const GenerationExhausted&) {
          continue;
        }
        bool current_first = rng.chance(0.5);
        const Inequality& first = current_first ? cur : fresh.first;
        const Inequality& second = current_first ? fresh.first : cur;
        auto out = compose_forward(c, first, second, pool.env);
        if (!out) continue;
        Inequality next = normalize(*out);
        auto back = compose_backward(c, next, pool.env);
        if (!back || !((*back)[0] == first) || !((*back)[1] == second) || too_big(next)) continue;
        ProofTrace node{TheoremKind::Composition, std::string(c), {}, {}};
        if (current_first) {
          node.children.push_back(std::move(trace));
          node.children.push_back(std::move(fresh.second));
        } else {
          node.children.push_back(std::move(fresh.second));
          node.children.push_back(std::move(trace));
        }
        trace = std::move(node);
        cur = std::move(next);
        done = true;
      }
    }
    if (!done) throw GenerationExhausted("composition round " + std::to_string(round) + " exhausted its resamples");
  }
  return {std::move(cur), std::move(trace)};
}

namespace {

void normalize_trace(ProofTrace& t) {
  for (auto& a : t.args) a = normalize(a);
  for (auto& c : t.children) normalize_trace(c);
}

}  // namespace

Statement simplify_statement(Statement s) {
  s.goal = normalize(s.goal);
  normalize_trace(s.trace);
  return s;
}

Statement generate_statement(const GeneratorConfig& cfg, int index) {
  for (int attempt = 0; attempt < kStatementAttempts; ++attempt) {
    Rng rng(derive_seed(cfg.rng_seed, {static_cast<std::uint64_t>(cfg.n_s), static_cast<std::uint64_t>(cfg.n_d),
                                       static_cast<std::uint64_t>(index), static_cast<std::uint64_t>(attempt)}));
    try {
      SeedPool pool = gen_seed_pool(cfg, rng);
      auto composed = compose(pool, gen_base_inequality(pool, rng), cfg.n_d, rng);
      Statement s;
      s.name = statement_name(cfg.n_s, cfg.n_d, index);
      s.variables = pool.variables;
      for (char v : pool.variables) s.hypotheses.emplace_back(v, SignFact::StrictPos);
      s.goal = std::move(composed.first);
      s.trace = std::move(composed.second);
      s.n_d = cfg.n_d;
      s.n_s = cfg.n_s;
      return simplify_statement(std::move(s));
    } catch (const GenerationExhausted&) {
    }
  }
  throw GenerationExhausted("statement " + statement_name(cfg.n_s, cfg.n_d, index) + " could not be generated");
}

// ---------------------------------------------------------------------------
// Lean emission and reading

namespace {

std::string subscript(std::size_t i) {
  static const char* digits[] = {"₀", "₁", "₂", "₃", "₄", "₅", "₆", "₇", "₈", "₉"};
  std::string s = std::to_string(i), out;
  for (char c : s) out += digits[c - '0'];
  return out;
}

std::string hypothesis_text(char v, SignFact s) {
  std::string x(1, v);
  switch (s) {
    case SignFact::StrictPos: return "0 < " + x;
    case SignFact::StrictNeg: return x + " < 0";
    case SignFact::NonNeg: return "0 ≤ " + x;
    case SignFact::NonPos: return x + " ≤ 0";
    case SignFact::NonZero: return x + " ≠ 0";
    case SignFact::Unknown: break;
  }
  throw std::invalid_argument("Unknown is not a hypothesis");
}

std::optional<std::pair<char, SignFact>> read_hypothesis(std::string_view t) {
  auto single = [](std::string_view s) -> std::optional<char> {
    if (s.size() == 1 && s[0] >= 'a' && s[0] <= 'z') return s[0];
    return std::nullopt;
  };
  struct Form {
    std::string_view prefix, suffix;
    SignFact fact;
  };
  static const Form forms[] = {{"0 < ", "", SignFact::StrictPos}, {"0 ≤ ", "", SignFact::NonNeg},
                               {"", " < 0", SignFact::StrictNeg}, {"", " ≤ 0", SignFact::NonPos},
                               {"", " ≠ 0", SignFact::NonZero}};
  for (const auto& f : forms) {
    if (t.size() < f.prefix.size() + f.suffix.size()) continue;
    if (t.substr(0, f.prefix.size()) != f.prefix) continue;
    if (t.substr(t.size() - f.suffix.size()) != f.suffix) continue;
    auto v = single(t.substr(f.prefix.size(), t.size() - f.prefix.size() - f.suffix.size()));
    if (v) return std::make_pair(*v, f.fact);
  }
  return std::nullopt;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string emit_statement(const Statement& s) {
  std::ostringstream out;
  out << "theorem " << s.name << "\n";
  out << "  (";
  for (std::size_t i = 0; i < s.variables.size(); ++i) out << (i ? " " : "") << s.variables[i];
  out << " : ℝ)";
  for (std::size_t i = 0; i < s.hypotheses.size(); ++i) {
    out << "\n  (h" << subscript(i) << " : " << hypothesis_text(s.hypotheses[i].first, s.hypotheses[i].second) << ")";
  }
  out << " :\n  " << render_lean(s.goal.lhs) << " " << relation_symbol(s.goal.rel) << " " << render_lean(s.goal.rhs)
      << " := sorry\n";
  return out.str();
}

Statement read_statement(std::string_view text) {
  std::string_view s = strip(text);
  if (s.substr(0, 8) != "theorem ") throw ParseError(0, "expected 'theorem'");
  std::size_t pos = 8;
  std::size_t name_end = s.find_first_of(" \n\t", pos);
  if (name_end == std::string_view::npos) throw ParseError(pos, "missing binders");
  Statement st;
  st.name = std::string(s.substr(pos, name_end - pos));
  pos = name_end;
  // Binder groups up to the top-level ':' that introduces the goal.
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos >= s.size()) throw ParseError(pos, "unexpected end of statement");
    if (s[pos] == ':') {
      ++pos;
      break;
    }
    if (s[pos] != '(') throw ParseError(pos, "expected binder");
    std::size_t close = s.find(')', pos);
    if (close == std::string_view::npos) throw ParseError(pos, "unclosed binder");
    std::string_view inner = s.substr(pos + 1, close - pos - 1);
    std::size_t colon = inner.find(" : ");
    if (colon == std::string_view::npos) throw ParseError(pos, "binder without type");
    std::string_view names = strip(inner.substr(0, colon));
    std::string_view type = strip(inner.substr(colon + 3));
    if (type == "ℝ") {
      std::istringstream ns{std::string(names)};
      std::string v;
      while (ns >> v) {
        if (v.size() != 1) throw ParseError(pos, "variables are single letters");
        st.variables.push_back(v[0]);
      }
    } else {
      auto h = read_hypothesis(type);
      if (!h) throw ParseError(pos, "unsupported hypothesis '" + std::string(type) + "'");
      st.hypotheses.push_back(*h);
    }
    pos = close + 1;
  }
  std::string_view goal = strip(s.substr(pos));
  constexpr std::string_view kEnd = ":= sorry";
  if (goal.size() < kEnd.size() || goal.substr(goal.size() - kEnd.size()) != kEnd)
    throw ParseError(s.size(), "expected ':= sorry'");
  goal = strip(goal.substr(0, goal.size() - kEnd.size()));
  std::size_t rel = goal.find(" ≤ ");
  std::size_t rel_len = std::string_view(" ≤ ").size();
  st.goal.rel = Relation::Le;
  if (rel == std::string_view::npos) {
    rel = goal.find(" < ");
    rel_len = 3;
    st.goal.rel = Relation::Lt;
  }
  if (rel == std::string_view::npos) throw ParseError(pos, "goal has no relation");
  st.goal.lhs = parse_lean_expr(goal.substr(0, rel));
  st.goal.rhs = parse_lean_expr(goal.substr(rel + rel_len));
  // Difficulty is recoverable from the name.
  int ns = 0, nd = 0, idx = 0;
  if (std::sscanf(st.name.c_str(), "synthetic_ineq_nb_seed_var_%d_depth_%d_p_%d", &ns, &nd, &idx) == 3) {
    st.n_s = ns;
    st.n_d = nd;
  }
  return st;
}

std::vector<std::string> linearize(const ProofTrace& trace) {
  std::vector<std::string> out;
  auto walk = [&](auto&& self, const ProofTrace& t) -> void {
    out.push_back(format_tactic(Tactic{std::string(verb_for(t.kind)), t.theorem, t.args}));
    for (const auto& c : t.children) self(self, c);
  };
  walk(walk, trace);
  return out;
}

std::string composition_listing(const ProofTrace& trace) {
  std::string out;
  auto walk = [&](auto&& self, const ProofTrace& t) -> void {
    const TheoremInfo* info = find_theorem(t.theorem);
    out += info ? std::string(info->display) : t.theorem;
    for (const auto& a : t.args) {
      std::string r = render_lean(a);
      bool atomic = a.is_var() || (a.is_int() && a.value() >= 0);
      out += " " + (atomic ? r : "(" + r + ")");
    }
    out += "\n";
    for (const auto& c : t.children) self(self, c);
  };
  walk(walk, trace);
  return out;
}

namespace {

nlohmann::json trace_json(const ProofTrace& t) {
  nlohmann::json j;
  j["kind"] = t.kind == TheoremKind::Base ? "base" : t.kind == TheoremKind::Composition ? "comp" : "transform";
  j["theorem"] = t.theorem;
  auto args = nlohmann::json::array();
  for (const auto& a : t.args) args.push_back(a.text());
  j["args"] = args;
  auto children = nlohmann::json::array();
  for (const auto& c : t.children) children.push_back(trace_json(c));
  j["children"] = children;
  return j;
}

ProofTrace trace_of(const nlohmann::json& j) {
  ProofTrace t;
  std::string kind = j.at("kind").get<std::string>();
  t.kind = kind == "base" ? TheoremKind::Base : kind == "comp" ? TheoremKind::Composition : TheoremKind::Transform;
  t.theorem = j.at("theorem").get<std::string>();
  for (const auto& a : j.at("args")) t.args.push_back(parse_expr(a.get<std::string>()));
  for (const auto& c : j.at("children")) t.children.push_back(trace_of(c));
  return t;
}

}  // namespace

std::string trace_to_json(const ProofTrace& t) { return trace_json(t).dump(); }

ProofTrace trace_from_json(std::string_view text) { return trace_of(nlohmann::json::parse(text)); }

std::vector<Statement> generate_grid(const GridOptions& opts) {
  std::vector<Statement> out;
  out.reserve(static_cast<std::size_t>((opts.ns_max + 1) * (opts.nd_max + 1) * opts.per_cell));
  for (int ns = 0; ns <= opts.ns_max; ++ns) {
    for (int nd = 0; nd <= opts.nd_max; ++nd) {
      for (int i = 1; i <= opts.per_cell; ++i) {
        GeneratorConfig cfg;
        cfg.n_s = ns;
        cfg.n_d = nd;
        cfg.rng_seed = opts.seed;
        out.push_back(generate_statement(cfg, i));
      }
    }
  }
  return out;
}

void write_corpus(const std::vector<Statement>& statements, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary);
  for (const auto& s : statements) {
    std::string lean_file = s.name + ".lean";
    std::string trace_file = s.name + ".trace.json";
    std::ofstream(dir / lean_file, std::ios::binary) << emit_statement(s);
    std::ofstream(dir / trace_file, std::ios::binary) << trace_to_json(s.trace) << "\n";
    nlohmann::json m;
    m["name"] = s.name;
    m["n_s"] = s.n_s;
    m["n_d"] = s.n_d;
    m["file"] = lean_file;
    m["trace"] = trace_file;
    manifest << m.dump() << "\n";
  }
  if (!manifest) throw std::runtime_error("failed writing manifest in " + dir.string());
}

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Statement> load_corpus(const std::filesystem::path& dir, std::vector<std::string>* errors) {
  std::ifstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw std::runtime_error("no manifest.jsonl in " + dir.string());
  std::vector<Statement> out;
  std::string line;
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    try {
      auto m = nlohmann::json::parse(line);
      Statement s = read_statement(slurp(dir / m.at("file").get<std::string>()));
      s.n_s = m.at("n_s").get<int>();
      s.n_d = m.at("n_d").get<int>();
      if (m.contains("trace") && std::filesystem::exists(dir / m.at("trace").get<std::string>())) {
        s.trace = trace_from_json(slurp(dir / m.at("trace").get<std::string>()));
      }
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      if (!errors) throw;
      errors->push_back("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cprover
