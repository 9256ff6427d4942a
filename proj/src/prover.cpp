#include "cprover/prover.hpp"

namespace cprover {

ProverReply LocalProver::reply(const GymResponse& r) const {
  ProverReply out;
  if (!r.ok()) {
    out.error = *r.error;
    return out;
  }
  out.search_id = *r.search_id;
  out.state_id = *r.tactic_state_id;
  out.state = *session_.state(out.search_id, out.state_id);
  return out;
}

ProverReply LocalProver::init_search(std::string_view decl) { return reply(session_.init_search(decl)); }

ProverReply LocalProver::run_tac(std::string_view search_id, std::string_view state_id, std::string_view tactic) {
  return reply(session_.run_tac(search_id, state_id, tactic));
}

}  // namespace cprover
