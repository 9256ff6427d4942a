#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "cprover/gym.hpp"
#include "cprover/proofenv.hpp"

namespace cprover {

/// Reply to init_search/run_tac with the state already parsed.
struct ProverReply {
  std::string error;  // empty on success
  std::string search_id;
  std::string state_id;
  TacticState state;

  bool ok() const noexcept { return error.empty(); }
};

/// Transport failure (crash, broken pipe). Distinct from a failed tactic,
/// which comes back as a reply with an error.
class ProverUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What a search talks to. One instance serves one search driver at a time.
class Prover {
 public:
  virtual ~Prover() = default;
  virtual ProverReply init_search(std::string_view decl) = 0;
  virtual ProverReply run_tac(std::string_view search_id, std::string_view state_id, std::string_view tactic) = 0;
  virtual void clear_search(std::string_view search_id) = 0;
};

/// In-process prover: a private GymSession over a shared, read-only ProofEnv.
class LocalProver final : public Prover {
 public:
  explicit LocalProver(const ProofEnv& env) : session_(env) {}

  ProverReply init_search(std::string_view decl) override;
  ProverReply run_tac(std::string_view search_id, std::string_view state_id, std::string_view tactic) override;
  void clear_search(std::string_view search_id) override { session_.clear_search(search_id); }

 private:
  ProverReply reply(const GymResponse& r) const;
  GymSession session_;
};

}  // namespace cprover
