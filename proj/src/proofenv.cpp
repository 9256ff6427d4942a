#include "cprover/proofenv.hpp"

namespace cprover {

namespace {

constexpr std::string_view kTurnstile = "⊢";

}  // namespace

std::string serialize_goals(std::span<const Inequality> goals) {
  if (goals.empty()) return std::string(kNoGoals);
  std::string out;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (i) out += ' ';
    out += kTurnstile;
    out += ' ';
    out += canonical_text(goals[i]);
  }
  return out;
}

std::string TacticState::text() const { return serialize_goals(goals); }

std::vector<Inequality> parse_goals(std::string_view text) {
  std::vector<Inequality> goals;
  if (text == kNoGoals) return goals;
  std::size_t pos = text.find(kTurnstile);
  if (pos != 0) throw ParseError(0, "tactic state must start with '⊢' or be 'no goals'");
  while (pos != std::string_view::npos) {
    std::size_t start = pos + kTurnstile.size();
    std::size_t next = text.find(kTurnstile, start);
    std::string_view goal = text.substr(start, next == std::string_view::npos ? text.npos : next - start);
    Relation rel = Relation::Le;
    std::size_t r = goal.find("≤");
    std::size_t rlen = std::string_view("≤").size();
    if (r == std::string_view::npos) {
      r = goal.find('<');
      rlen = 1;
      rel = Relation::Lt;
    }
    if (r == std::string_view::npos) throw ParseError(start, "goal has no relation");
    try {
      goals.push_back({parse_expr(goal.substr(0, r)), parse_expr(goal.substr(r + rlen)), rel});
    } catch (const ParseError& e) {
      throw ParseError(start + e.position(), e.what());
    }
    pos = next;
  }
  return goals;
}

std::vector<std::string> schema_slots(std::string_view family, std::size_t arity) {
  if (family == "am_gm") {
    std::vector<std::string> s;
    std::size_t n = arity / 2;
    for (std::size_t i = 1; i <= n; ++i) s.push_back("x" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) s.push_back("w" + std::to_string(i));
    return s;
  }
  if (family == "sq_nonneg") return {"x", "y"};
  if (family == "cauchy") return {"x1", "x2", "y1", "y2"};
  if (family == "bernoulli") return {"n", "x"};
  if (family == "young") return {"x", "y", "p", "q"};
  if (family == "holder") return {"x1", "x2", "y1", "y2", "p", "q"};
  if (family == kSelfDivConst) return {"x", "n"};
  return {};
}

std::optional<SchemaMatch> match_schema(const Inequality& goal, std::string_view family, std::span<const Expr> args,
                                        const SignEnv& env) {
  std::vector<Expr> normalized;
  normalized.reserve(args.size());
  for (const auto& a : args) normalized.push_back(normalize(a));
  auto inst = instantiate_base(family, normalized, env);
  if (!inst) return std::nullopt;
  if (!(normalize(*inst) == normalize(goal))) return std::nullopt;
  auto names = schema_slots(family, normalized.size());
  SchemaMatch m;
  for (std::size_t i = 0; i < normalized.size(); ++i) m.emplace_back(names[i], normalized[i]);
  return m;
}

ProofEnv::ProofEnv(std::vector<Statement> corpus) : statements_(std::move(corpus)) {
  for (std::size_t i = 0; i < statements_.size(); ++i) {
    index_.emplace(statements_[i].name, i);
    envs_.emplace(statements_[i].name, statements_[i].env());
  }
}

const Statement* ProofEnv::find(std::string_view decl) const {
  auto it = index_.find(std::string(decl));
  return it == index_.end() ? nullptr : &statements_[it->second];
}

TacticState ProofEnv::init_search(std::string_view decl) const {
  const Statement* s = find(decl);
  if (!s) throw UnknownDeclaration(std::string(decl));
  return TacticState{s->name, {normalize(s->goal)}, 0};
}

TacticOutcome ProofEnv::run_tac(const TacticState& state, std::string_view tactic_text) const {
  Tactic t;
  try {
    t = parse_tactic(tactic_text);
  } catch (const ParseError& e) {
    return {std::nullopt, std::string("malformed tactic: ") + e.what()};
  }
  return run_tac(state, t);
}

TacticOutcome ProofEnv::run_tac(const TacticState& state, const Tactic& tactic) const {
  if (state.goals.empty()) return {std::nullopt, "no goals to apply a tactic to"};
  auto env_it = envs_.find(state.decl);
  if (env_it == envs_.end()) return {std::nullopt, "unknown declaration '" + state.decl + "'"};
  const SignEnv& env = env_it->second;
  const TheoremInfo* info = find_theorem(tactic.theorem);
  if (!info || verb_for(info->kind) != tactic.verb) return {std::nullopt, "unknown tactic"};

  const Inequality& goal = state.goals.front();
  std::vector<Inequality> replaced;
  switch (info->kind) {
    case TheoremKind::Base:
      if (!match_schema(goal, tactic.theorem, tactic.args, env)) return {std::nullopt, "no schema match"};
      break;
    case TheoremKind::Composition: {
      auto parts = compose_backward(tactic.theorem, goal, env);
      if (!parts) return {std::nullopt, "composition does not apply"};
      replaced.assign(parts->begin(), parts->end());
      break;
    }
    case TheoremKind::Transform: {
      auto pre = transform_backward(tactic.theorem, goal, env);
      if (!pre) return {std::nullopt, "transform does not apply"};
      replaced.push_back(std::move(*pre));
      break;
    }
  }
  TacticState next{state.decl, std::move(replaced), -1};
  next.goals.insert(next.goals.end(), state.goals.begin() + 1, state.goals.end());
  return {std::move(next), {}};
}

bool replay(const ProofEnv& env, std::string_view decl, std::span<const std::string> tactics) {
  TacticState s = env.init_search(decl);
  for (const auto& t : tactics) {
    auto r = env.run_tac(s, t);
    if (!r.ok()) return false;
    s = std::move(*r.state);
  }
  return s.proved();
}

}  // namespace cprover
