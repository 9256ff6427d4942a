#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cprover/proofenv.hpp"
#include "cprover/rng.hpp"

namespace cprover {

inline constexpr int kBuckets = 11;

/// Proof size in tactic applications; nullopt means unproved.
using ProofSize = std::optional<int>;

/// 0 for unproved, 1 for ps >= 20, else 2 + floor((20 - ps) * 9 / 20).
/// Throws std::invalid_argument for ps < 1.
int bucketize(ProofSize ps);
char token_of_bucket(int b);
/// Throws std::invalid_argument outside 'A'..'K'.
int bucket_of_token(char c);

using BucketDistribution = std::array<double, kBuckets>;
/// (sum_b p_b * b) / 10. Throws std::invalid_argument unless p is a distribution.
double value_of_distribution(const BucketDistribution& p);

enum class ValueTarget : std::uint8_t { Proofsize, Outcome };
/// Outcome objective: proved goals are labelled bucket 10, unproved bucket 0.
int outcome_bucket(ProofSize ps);

// ---------------------------------------------------------------------------
// Training records

enum class Objective : std::uint8_t { Proofstep, Proofsize };

struct TrainingRecord {
  Objective objective = Objective::Proofstep;
  std::string decl;
  std::string goal;    // canonical tactic state text
  std::string target;  // tactic text, or one bucket token

  std::string to_line() const;
  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

class MalformedRecord : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `DECL <decl> GOAL <goal> PROOFSTEP <tactic>` or `... PROOFSIZE <token>`.
TrainingRecord parse_record(std::string_view line);

// ---------------------------------------------------------------------------
// Tactic templates: one per base family arity, composition and transform.

struct TacticTemplate {
  std::string_view verb;
  std::string_view theorem;
  std::size_t arity = 0;
};

const std::vector<TacticTemplate>& tactic_templates();
std::optional<std::size_t> template_of(const Tactic& t);

/// Hash of the first goal's relation, root and child operator kinds of each
/// side, side depths capped at 6, and the number of open goals.
std::uint64_t goal_features(const TacticState& state);

// ---------------------------------------------------------------------------

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  double alpha = 0.1;
  ValueTarget target = ValueTarget::Proofsize;
  int provenance = 0;         // iteration index k of theta_k
  std::uint64_t lineage = 0;  // id of the theta_0 this was trained from

  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> policy;  // features -> per-template counts
  /// [template][slot] -> subterm path -> count
  std::vector<std::vector<std::map<std::string, std::uint64_t>>> slots;
  std::unordered_map<std::uint64_t, std::array<std::uint64_t, kBuckets>> value;

  Checkpoint();

  std::string serialize() const;
  static Checkpoint deserialize(std::string_view bytes);
  /// Content hash of the serialization with the lineage field cleared.
  std::uint64_t id() const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

/// theta_0: untrained counts plus base proofstep data; its lineage is its own id.
Checkpoint make_base_checkpoint(std::span<const TrainingRecord> base_data, double alpha = 0.1,
                                ValueTarget target = ValueTarget::Proofsize);

/// One counting pass over the sorted dataset on a copy of `base`.
/// Throws MalformedRecord.
Checkpoint train_checkpoint(const Checkpoint& base, std::vector<TrainingRecord> dataset);

struct SampledTactic {
  std::string text;
  double logprob = 0;
};

/// `e` independent draws. Temperature <= 0 takes the argmax at every choice.
std::vector<SampledTactic> policy_sample(const Checkpoint& ckpt, const TacticState& state, int e, double temperature,
                                         Rng& rng);

BucketDistribution value_predict(const Checkpoint& ckpt, const TacticState& state);

}  // namespace cprover
