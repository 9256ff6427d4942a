#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cprover/expr.hpp"
#include "cprover/rng.hpp"
#include "cprover/theorems.hpp"

namespace cprover {

struct GeneratorConfig {
  int n_s = 0;  // seed composition rounds
  int n_d = 0;  // inequality composition depth
  int n_n = 4;  // integer seeds
  int n_v_min = 2;
  int n_v_max = 8;
  std::uint64_t rng_seed = 0;
};

struct SeedEntry {
  Expr expr;
  SignFact sign;
};

struct SeedPool {
  std::vector<SeedEntry> entries;
  SignEnv env;
  std::vector<char> variables;
};

/// Construction certificate. Children are listed in goal order, so a
/// preorder walk yields a closing tactic sequence.
struct ProofTrace {
  TheoremKind kind = TheoremKind::Base;
  std::string theorem;
  std::vector<Expr> args;  // base nodes only
  std::vector<ProofTrace> children;

  /// Composition/transform nodes on the longest root-to-leaf path.
  int depth() const;
  std::size_t node_count() const;
};

struct Statement {
  std::string name;
  std::vector<char> variables;
  std::vector<std::pair<char, SignFact>> hypotheses;
  Inequality goal;
  int n_d = 0;
  int n_s = 0;
  ProofTrace trace;

  SignEnv env() const;
};

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string statement_name(int n_s, int n_d, int index);

SeedPool gen_seed_pool(const GeneratorConfig& cfg, Rng& rng);

/// Draws one of `families` (default: the six base families) and instantiates
/// it from pool entries satisfying its side conditions.
std::pair<Inequality, ProofTrace> gen_base_inequality(const SeedPool& pool, Rng& rng);
std::pair<Inequality, ProofTrace> gen_base_inequality(const SeedPool& pool, Rng& rng,
                                                      std::span<const std::string_view> families);

/// Exactly `n_d` composition/transform rounds on top of `base`.
std::pair<Inequality, ProofTrace> compose(const SeedPool& pool, std::pair<Inequality, ProofTrace> base, int n_d,
                                          Rng& rng);

Statement simplify_statement(Statement s);

/// Full pipeline for one statement; `index` is the 1-based p_i suffix.
Statement generate_statement(const GeneratorConfig& cfg, int index);

/// Lean theorem text ending in ":= sorry".
std::string emit_statement(const Statement& s);
/// Reads emit_statement output back (the trace is left empty).
Statement read_statement(std::string_view text);

/// Tactic texts from a preorder walk of the trace.
std::vector<std::string> linearize(const ProofTrace& trace);
/// Composition listing in the style "AddLeAdd / Bernoulli 99 c / ...".
std::string composition_listing(const ProofTrace& trace);

// Trace <-> JSON text (nlohmann::json kept out of this header).
std::string trace_to_json(const ProofTrace& t);
ProofTrace trace_from_json(std::string_view text);

struct GridOptions {
  int ns_max = 7;
  int nd_max = 6;
  int per_cell = 100;
  std::uint64_t seed = 0;
};

/// Generates the (n_s, n_d) grid in deterministic order.
std::vector<Statement> generate_grid(const GridOptions& opts);

/// Writes one .lean file and one .trace.json per statement plus manifest.jsonl.
void write_corpus(const std::vector<Statement>& statements, const std::filesystem::path& dir);
/// Loads a corpus written by write_corpus (traces included when present).
/// With `errors`, entries that fail to load are skipped and described there;
/// without, the first failure throws.
std::vector<Statement> load_corpus(const std::filesystem::path& dir, std::vector<std::string>* errors = nullptr);

}  // namespace cprover
