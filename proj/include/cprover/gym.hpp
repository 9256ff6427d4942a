#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cprover/proofenv.hpp"

namespace cprover {

/// One request line: `["<command>",["arg", ...]]`.
struct GymRequest {
  std::string command;
  std::vector<std::string> args;
};

/// One response line. Key order on the wire is fixed:
/// error, search_id, tactic_state, tactic_state_id.
struct GymResponse {
  std::optional<std::string> error;
  std::optional<std::string> search_id;
  std::optional<std::string> tactic_state;
  std::optional<std::string> tactic_state_id;

  bool ok() const noexcept { return !error.has_value(); }
  static GymResponse failure(std::string message) { return {std::move(message), {}, {}, {}}; }
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_request(const GymRequest& req);
/// Throws ProtocolError on anything that is not a two-element array of
/// a command string and an array of strings.
GymRequest parse_request(std::string_view line);
std::string format_response(const GymResponse& resp);
GymResponse parse_response(std::string_view line);

/// Server-side state machine: a search table over one ProofEnv. Search ids
/// are global and monotonic from "0"; state ids are per search, also from "0".
class GymSession {
 public:
  explicit GymSession(const ProofEnv& env) : env_(&env) {}

  GymResponse handle(const GymRequest& req);
  /// Handles one raw line; malformed input yields an error response.
  std::string handle_line(std::string_view line);

  GymResponse init_search(std::string_view decl, std::string_view options = "");
  GymResponse run_tac(std::string_view search_id, std::string_view state_id, std::string_view tactic);
  GymResponse clear_search(std::string_view search_id);

  /// Parsed state behind an id pair, for in-process clients.
  const TacticState* state(std::string_view search_id, std::string_view state_id) const;
  std::size_t open_searches() const noexcept { return searches_.size(); }

 private:
  const ProofEnv* env_;
  std::uint64_t next_search_ = 0;
  std::map<std::uint64_t, std::vector<TacticState>> searches_;
};

/// Test-only fault injection for the serve loop.
struct FaultOptions {
  std::string crash_on;  // exit abruptly when a request line contains this
  std::string hang_on;   // stop responding when a request line contains this
};

/// Reads requests line by line until end of input; one response per line.
void serve_loop(const ProofEnv& env, std::istream& in, std::ostream& out, const FaultOptions& faults = {});

}  // namespace cprover
