#include "cprover/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace cprover {

int bucketize(ProofSize ps) {
  if (!ps) return 0;
  if (*ps < 1) throw std::invalid_argument("proof size must be at least 1");
  if (*ps >= 20) return 1;
  return 2 + (20 - *ps) * 9 / 20;
}

char token_of_bucket(int b) {
  if (b < 0 || b >= kBuckets) throw std::invalid_argument("bucket out of range");
  return static_cast<char>('A' + b);
}

int bucket_of_token(char c) {
  if (c < 'A' || c > 'K') throw std::invalid_argument(std::string("not a bucket token: '") + c + "'");
  return c - 'A';
}

double value_of_distribution(const BucketDistribution& p) {
  double total = 0, weighted = 0;
  for (int b = 0; b < kBuckets; ++b) {
    if (!(p[b] >= 0)) throw std::invalid_argument("negative bucket probability");
    total += p[b];
    weighted += p[b] * b;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("bucket distribution does not sum to 1");
  return weighted / 10.0;
}

int outcome_bucket(ProofSize ps) { return ps ? kBuckets - 1 : 0; }

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kDecl = "DECL ";
constexpr std::string_view kGoal = " GOAL ";
constexpr std::string_view kStep = " PROOFSTEP ";
constexpr std::string_view kSize = " PROOFSIZE ";

}  // namespace

std::string TrainingRecord::to_line() const {
  std::string out;
  out.reserve(decl.size() + goal.size() + target.size() + 32);
  out += kDecl;
  out += decl;
  out += kGoal;
  out += goal;
  out += objective == Objective::Proofstep ? kStep : kSize;
  out += target;
  return out;
}

TrainingRecord parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.substr(0, kDecl.size()) != kDecl) throw MalformedRecord("record must start with DECL");
  std::size_t g = line.find(kGoal);
  if (g == line.npos) throw MalformedRecord("record lacks GOAL");
  TrainingRecord r;
  std::size_t t = line.rfind(kStep);
  std::size_t tlen = kStep.size();
  r.objective = Objective::Proofstep;
  std::size_t s = line.rfind(kSize);
  if (s != line.npos && (t == line.npos || s > t)) {
    t = s;
    tlen = kSize.size();
    r.objective = Objective::Proofsize;
  }
  if (t == line.npos || t < g) throw MalformedRecord("record lacks PROOFSTEP or PROOFSIZE");
  r.decl = std::string(line.substr(kDecl.size(), g - kDecl.size()));
  r.goal = std::string(line.substr(g + kGoal.size(), t - g - kGoal.size()));
  r.target = std::string(line.substr(t + tlen));
  if (r.decl.empty() || r.goal.empty() || r.target.empty()) throw MalformedRecord("record has an empty field");
  if (r.objective == Objective::Proofsize && (r.target.size() != 1 || r.target[0] < 'A' || r.target[0] > 'K'))
    throw MalformedRecord("proofsize target must be one of 'A'..'K'");
  return r;
}

// ---------------------------------------------------------------------------

const std::vector<TacticTemplate>& tactic_templates() {
  static const std::vector<TacticTemplate> table = [] {
    std::vector<TacticTemplate> v;
    for (const auto& t : theorem_table()) {
      if (t.kind == TheoremKind::Base) {
        for (auto a : t.arities) v.push_back({verb_for(t.kind), t.name, a});
      } else {
        v.push_back({verb_for(t.kind), t.name, 0});
      }
    }
    return v;
  }();
  return table;
}

std::optional<std::size_t> template_of(const Tactic& t) {
  const auto& table = tactic_templates();
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].verb == t.verb && table[i].theorem == t.theorem && table[i].arity == t.args.size()) return i;
  }
  return std::nullopt;
}

namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void byte(std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(std::string_view s) {
    for (char c : s) byte(static_cast<std::uint8_t>(c));
  }
};

void side_features(Fnv& f, const Expr& e) {
  f.byte(static_cast<std::uint8_t>(e.op()));
  for (std::size_t i = 0; i < 2; ++i) f.byte(i < e.arity() ? static_cast<std::uint8_t>(e.child(i).op()) : 0xff);
  f.byte(static_cast<std::uint8_t>(std::min(e.depth(), 6)));
}

}  // namespace

std::uint64_t goal_features(const TacticState& state) {
  Fnv f;
  f.u64(state.goals.size());
  if (state.goals.empty()) return f.h;
  const Inequality& g = state.goals.front();
  f.byte(static_cast<std::uint8_t>(g.rel));
  side_features(f, g.lhs);
  side_features(f, g.rhs);
  return f.h;
}

// ---------------------------------------------------------------------------

Checkpoint::Checkpoint() {
  const auto& table = tactic_templates();
  slots.resize(table.size());
  for (std::size_t t = 0; t < table.size(); ++t) {
    slots[t].resize(table[t].arity);
  }
}

namespace {

constexpr std::string_view kMagic = "CPCK";

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw std::runtime_error("truncated checkpoint");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

template <class Map>
std::vector<typename Map::key_type> sorted_keys(const Map& m) {
  std::vector<typename Map::key_type> keys;
  keys.reserve(m.size());
  for (const auto& [k, v] : m) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string serialize_impl(const Checkpoint& c, std::uint64_t lineage) {
  Writer w;
  w.raw(kMagic);
  w.u32(Checkpoint::kVersion);
  w.f64(c.alpha);
  w.u8(static_cast<std::uint8_t>(c.target));
  w.u32(static_cast<std::uint32_t>(c.provenance));
  w.u64(lineage);
  w.u32(static_cast<std::uint32_t>(c.slots.size()));

  w.u64(c.policy.size());
  for (auto k : sorted_keys(c.policy)) {
    w.u64(k);
    for (auto n : c.policy.at(k)) w.u64(n);
  }
  for (const auto& per_template : c.slots) {
    w.u32(static_cast<std::uint32_t>(per_template.size()));
    for (const auto& paths : per_template) {
      w.u64(paths.size());
      for (const auto& [path, n] : paths) {
        w.str(path);
        w.u64(n);
      }
    }
  }
  w.u64(c.value.size());
  for (auto k : sorted_keys(c.value)) {
    w.u64(k);
    for (auto n : c.value.at(k)) w.u64(n);
  }
  return w.take();
}

}  // namespace

std::string Checkpoint::serialize() const { return serialize_impl(*this, lineage); }

Checkpoint Checkpoint::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw std::runtime_error("not a checkpoint");
  if (r.u32() != kVersion) throw std::runtime_error("unsupported checkpoint version");
  Checkpoint c;
  c.alpha = r.f64();
  std::uint8_t target = r.u8();
  if (target > 1) throw std::runtime_error("bad value target in checkpoint");
  c.target = static_cast<ValueTarget>(target);
  c.provenance = static_cast<int>(r.u32());
  c.lineage = r.u64();
  std::uint32_t templates = r.u32();
  if (templates != c.slots.size()) throw std::runtime_error("checkpoint template table mismatch");

  std::uint64_t np = r.u64();
  for (std::uint64_t i = 0; i < np; ++i) {
    std::uint64_t k = r.u64();
    auto& counts = c.policy[k];
    counts.resize(templates);
    for (auto& n : counts) n = r.u64();
  }
  for (auto& per_template : c.slots) {
    if (r.u32() != per_template.size()) throw std::runtime_error("checkpoint slot table mismatch");
    for (auto& paths : per_template) {
      std::uint64_t n = r.u64();
      for (std::uint64_t i = 0; i < n; ++i) {
        std::string path = r.str();
        paths[std::move(path)] = r.u64();
      }
    }
  }
  std::uint64_t nv = r.u64();
  for (std::uint64_t i = 0; i < nv; ++i) {
    std::uint64_t k = r.u64();
    auto& counts = c.value[k];
    for (auto& n : counts) n = r.u64();
  }
  if (!r.done()) throw std::runtime_error("trailing bytes in checkpoint");
  return c;
}

std::uint64_t Checkpoint::id() const {
  Fnv f;
  f.bytes(serialize_impl(*this, 0));
  return f.h;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  out << serialize();
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

// ---------------------------------------------------------------------------

namespace {

void add_record(Checkpoint& c, const TrainingRecord& rec) {
  TacticState state;
  state.decl = rec.decl;
  try {
    state.goals = parse_goals(rec.goal);
  } catch (const ParseError& e) {
    throw MalformedRecord("bad goal in record: " + std::string(e.what()));
  }
  if (state.goals.empty()) throw MalformedRecord("record goal has no open goals");
  std::uint64_t f = goal_features(state);

  if (rec.objective == Objective::Proofsize) {
    if (rec.target.size() != 1 || rec.target[0] < 'A' || rec.target[0] > 'K')
      throw MalformedRecord("bad bucket token in record: '" + rec.target + "'");
    int b = bucket_of_token(rec.target[0]);
    if (c.target == ValueTarget::Outcome) b = b == 0 ? 0 : kBuckets - 1;
    c.value[f][b] += 1;
    return;
  }
  Tactic t;
  try {
    t = parse_tactic(rec.target);
  } catch (const ParseError& e) {
    throw MalformedRecord("bad tactic in record: " + std::string(e.what()));
  }
  auto tid = template_of(t);
  if (!tid) throw MalformedRecord("tactic matches no template: " + rec.target);
  auto& counts = c.policy[f];
  counts.resize(c.slots.size());
  counts[*tid] += 1;
  if (t.args.empty()) return;

  std::vector<std::pair<std::string, Expr>> subterms;
  const Inequality& g = state.goals.front();
  collect_subterms(g.lhs, "L", subterms);
  collect_subterms(g.rhs, "R", subterms);
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    Expr a = normalize(t.args[i]);
    for (const auto& [path, e] : subterms) {
      if (e == a) c.slots[*tid][i][path] += 1;
    }
  }
}

}  // namespace

Checkpoint make_base_checkpoint(std::span<const TrainingRecord> base_data, double alpha, ValueTarget target) {
  Checkpoint c;
  c.alpha = alpha;
  c.target = target;
  c = train_checkpoint(c, std::vector<TrainingRecord>(base_data.begin(), base_data.end()));
  c.provenance = 0;
  c.lineage = c.id();
  return c;
}

Checkpoint train_checkpoint(const Checkpoint& base, std::vector<TrainingRecord> dataset) {
  Checkpoint c = base;
  std::vector<std::pair<std::string, const TrainingRecord*>> order;
  order.reserve(dataset.size());
  for (const auto& r : dataset) order.emplace_back(r.to_line(), &r);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [line, rec] : order) add_record(c, *rec);
  return c;
}

// ---------------------------------------------------------------------------

namespace {

double tempered(double count, double alpha, double temperature) { return std::pow(count + alpha, 1.0 / temperature); }

/// Index drawn from the weights, or the first maximal index when greedy.
std::size_t draw(std::span<const double> weights, bool greedy, Rng& rng) {
  if (greedy) return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.unit() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

struct GoalIndex {
  std::vector<std::pair<std::string, Expr>> subterms;
  std::unordered_map<std::string_view, std::size_t> by_path;
};

}  // namespace

std::vector<SampledTactic> policy_sample(const Checkpoint& ckpt, const TacticState& state, int e, double temperature,
                                         Rng& rng) {
  std::vector<SampledTactic> out;
  if (state.goals.empty() || e <= 0) return out;
  const bool greedy = temperature <= 0;
  const double temp = greedy ? 1.0 : temperature;
  const auto& table = tactic_templates();
  // alpha 0 with no evidence would leave nothing to draw; fall back to uniform.
  const double alpha = ckpt.alpha > 0 ? ckpt.alpha : 1e-12;

  std::vector<double> tw(table.size());
  auto pit = ckpt.policy.find(goal_features(state));
  for (std::size_t t = 0; t < table.size(); ++t) {
    double n = pit == ckpt.policy.end() ? 0.0 : static_cast<double>(pit->second[t]);
    tw[t] = tempered(n, alpha, temp);
  }
  const double tw_total = std::accumulate(tw.begin(), tw.end(), 0.0);

  GoalIndex index;
  const Inequality& g = state.goals.front();
  collect_subterms(g.lhs, "L", index.subterms);
  collect_subterms(g.rhs, "R", index.subterms);
  for (std::size_t i = 0; i < index.subterms.size(); ++i) index.by_path.emplace(index.subterms[i].first, i);
  const double n_sub = static_cast<double>(index.subterms.size());
  const double base_w = tempered(0, alpha, temp);

  for (int k = 0; k < e; ++k) {
    std::size_t t = draw(tw, greedy, rng);
    double logprob = std::log(tw[t] / tw_total);
    Tactic tac{std::string(table[t].verb), std::string(table[t].theorem), {}};
    for (std::size_t slot = 0; slot < table[t].arity; ++slot) {
      // Learned paths present in this goal carry extra weight; every subterm
      // keeps the smoothing weight.
      std::vector<std::size_t> learned;
      std::vector<double> extra;
      for (const auto& [path, n] : ckpt.slots[t][slot]) {
        auto it = index.by_path.find(path);
        if (it == index.by_path.end()) continue;
        learned.push_back(it->second);
        extra.push_back(tempered(static_cast<double>(n), alpha, temp) - base_w);
      }
      double extra_total = std::accumulate(extra.begin(), extra.end(), 0.0);
      double total = n_sub * base_w + extra_total;
      std::size_t pick;
      if (greedy) {
        pick = learned.empty() ? 0 : learned[draw(extra, true, rng)];
      } else {
        double u = rng.unit() * total;
        if (u < extra_total) {
          pick = learned[draw(extra, false, rng)];
        } else {
          pick = std::min(static_cast<std::size_t>((u - extra_total) / base_w), index.subterms.size() - 1);
        }
      }
      double w = base_w;
      for (std::size_t j = 0; j < learned.size(); ++j) {
        if (learned[j] == pick) w += extra[j];
      }
      logprob += std::log(w / total);
      tac.args.push_back(index.subterms[pick].second);
    }
    out.push_back({format_tactic(tac), logprob});
  }
  return out;
}

BucketDistribution value_predict(const Checkpoint& ckpt, const TacticState& state) {
  BucketDistribution p{};
  auto it = ckpt.value.find(goal_features(state));
  const bool outcome = ckpt.target == ValueTarget::Outcome;
  std::array<std::uint64_t, kBuckets> counts{};
  if (it != ckpt.value.end()) counts = it->second;
  const std::array<int, 2> outcome_buckets = {0, kBuckets - 1};
  double total = 0;
  if (outcome) {
    for (int b : outcome_buckets) total += static_cast<double>(counts[b]) + ckpt.alpha;
  } else {
    for (int b = 0; b < kBuckets; ++b) total += static_cast<double>(counts[b]) + ckpt.alpha;
  }
  if (total <= 0) {
    if (outcome) {
      p[0] = p[kBuckets - 1] = 0.5;
    } else {
      p.fill(1.0 / kBuckets);
    }
    return p;
  }
  if (outcome) {
    for (int b : outcome_buckets) p[b] = (static_cast<double>(counts[b]) + ckpt.alpha) / total;
  } else {
    for (int b = 0; b < kBuckets; ++b) p[b] = (static_cast<double>(counts[b]) + ckpt.alpha) / total;
  }
  return p;
}

}  // namespace cprover
