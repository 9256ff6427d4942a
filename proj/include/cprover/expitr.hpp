#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cprover/ineqgen.hpp"
#include "cprover/metrics.hpp"
#include "cprover/model.hpp"
#include "cprover/search.hpp"

namespace cprover {

enum class LoopMode : std::uint8_t { Expert, SampleOnly };

struct StatementSetSpec {
  std::string name;
  int attempts = 1;
  std::optional<GridOptions> grid;  // generated in-process
  std::string corpus;               // or loaded from a corpus directory
};

/// Low-difficulty statements whose construction traces form the base
/// proofstep dataset theta_0 is trained on.
struct SeedProofSpec {
  int n_s = 5;
  int n_d = 1;
  int count = 50;
};

struct RunConfig {
  std::string run_id;
  std::string runs_dir = "runs";
  std::uint64_t seed = 0;
  LoopMode mode = LoopMode::Expert;
  ValueTarget value_target = ValueTarget::Proofsize;
  int iterations = 6;
  SearchBudget budget;
  double temperature = 1.0;
  double alpha = 0.1;
  int attempt_scale = 1;
  int workers = 1;
  std::string pool_command;  // empty: in-process provers
  SeedProofSpec seed_proofs;
  std::vector<StatementSetSpec> sets;
};

/// Throws std::invalid_argument on unknown modes or malformed fields.
RunConfig config_from_json(std::string_view text);
std::string config_to_json(const RunConfig& cfg);

/// Global deduplication across iterations. Proofsteps are a set; proofsizes
/// keep the best label per (decl, goal), where unproved is the worst.
class DedupStore {
 public:
  void merge(const SearchRecord& rec, int iteration);
  void merge_proofstep(const std::string& decl, const std::string& goal, const std::string& tactic, int iteration);
  void merge_proofsize(const std::string& decl, const std::string& goal, ProofSize ps, int iteration);

  std::size_t proofstep_count() const noexcept { return proofsteps_.size(); }
  std::size_t proofsize_count() const noexcept { return proofsizes_.size(); }
  std::size_t proved_count() const;
  std::optional<ProofSize> label(const std::string& decl, const std::string& goal) const;

  /// Deduped proofsteps then proofsizes, each section sorted.
  std::vector<TrainingRecord> records(ValueTarget target) const;

 private:
  struct SizeEntry {
    ProofSize ps;
    int iteration = 0;
  };
  std::map<std::tuple<std::string, std::string, std::string>, int> proofsteps_;
  std::map<std::pair<std::string, std::string>, SizeEntry> proofsizes_;
};

/// base (sorted) ++ deduped store sections.
std::vector<TrainingRecord> build_dataset(const std::vector<TrainingRecord>& base, const DedupStore& store,
                                          ValueTarget target);
std::string dataset_text(const std::vector<TrainingRecord>& dataset);
std::vector<TrainingRecord> read_dataset(const std::filesystem::path& path);

/// Proofstep records from replaying each statement's trace.
std::vector<TrainingRecord> trace_proofsteps(const std::vector<Statement>& statements);

struct SearchJob {
  std::size_t statement = 0;
  int attempt = 0;
  std::uint64_t seed = 0;
};

/// Runs jobs across `cfg.workers` threads; results come back in job order.
std::vector<SearchRecord> run_searches(const ProofEnv& env, const Checkpoint& ckpt, PriorityMode mode,
                                       const RunConfig& cfg, const std::vector<SearchJob>& jobs, int iteration);

struct LoadedSet {
  StatementSetSpec spec;
  std::vector<Statement> statements;
  std::vector<std::string> skipped;  // corpus entries that failed to load
};

/// Statement sets named by a config, in order. Corpus entries that fail to
/// load are skipped, so they never enter a denominator. Throws
/// std::invalid_argument when a name appears twice.
std::vector<LoadedSet> load_sets(const RunConfig& cfg);

class ExpertIteration {
 public:
  explicit ExpertIteration(RunConfig cfg);

  /// Bootstrap plus cfg.iterations rounds; writes the run directory and
  /// returns the metrics rows.
  std::vector<MetricsRow> run();

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const DedupStore& store() const noexcept { return store_; }
  const std::vector<LoadedSet>& sets() const noexcept { return sets_; }

  /// Progress callback: (iteration, message).
  std::function<void(int, const std::string&)> on_progress;

 private:
  std::vector<SearchJob> jobs_for(int iteration, bool bootstrap) const;
  void tally(int iteration, const std::vector<SearchJob>& jobs, const std::vector<SearchRecord>& records);
  void write_iteration(int k, const std::vector<SearchRecord>& records, const std::vector<TrainingRecord>* dataset,
                       const Checkpoint* ckpt) const;

  RunConfig cfg_;
  std::filesystem::path dir_;
  std::vector<LoadedSet> sets_;
  std::vector<std::pair<std::size_t, std::size_t>> flat_;  // (set, statement) by global index
  ProofEnv env_;
  std::vector<TrainingRecord> base_;
  DedupStore store_;
  std::vector<std::vector<IterationTallies>> tallies_;  // [set][iteration]
};

/// Rebuilds D_k of a finished run from its archived records.
std::string rebuild_dataset(const std::filesystem::path& run_dir, int k);

}  // namespace cprover
