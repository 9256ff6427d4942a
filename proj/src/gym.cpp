#include "cprover/gym.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <json.hpp>

namespace cprover {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json nullable(const std::optional<std::string>& s) { return s ? ordered_json(*s) : ordered_json(nullptr); }

std::optional<std::uint64_t> parse_id(std::string_view s) {
  if (s.empty() || (s.size() > 1 && s[0] == '0')) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string format_request(const GymRequest& req) {
  ordered_json j = ordered_json::array({req.command, req.args});
  return j.dump();
}

GymRequest parse_request(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  }
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_array())
    throw ProtocolError("request must be [command, [args...]]");
  GymRequest req;
  req.command = j[0].get<std::string>();
  for (const auto& a : j[1]) {
    if (!a.is_string()) throw ProtocolError("request arguments must be strings");
    req.args.push_back(a.get<std::string>());
  }
  return req;
}

std::string format_response(const GymResponse& r) {
  ordered_json j;
  j["error"] = nullable(r.error);
  j["search_id"] = nullable(r.search_id);
  j["tactic_state"] = nullable(r.tactic_state);
  j["tactic_state_id"] = nullable(r.tactic_state_id);
  return j.dump();
}

GymResponse parse_response(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("response must be an object");
  auto field = [&](const char* key) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("response lacks field '") + key + "'");
    if (it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ProtocolError(std::string("field '") + key + "' must be a string or null");
    return it->get<std::string>();
  };
  return {field("error"), field("search_id"), field("tactic_state"), field("tactic_state_id")};
}

GymResponse GymSession::init_search(std::string_view decl, std::string_view /*options*/) {
  TacticState s;
  try {
    s = env_->init_search(decl);
  } catch (const UnknownDeclaration& e) {
    return GymResponse::failure(e.what());
  }
  std::uint64_t id = next_search_++;
  std::string text = s.text();
  searches_[id].push_back(std::move(s));
  return {std::nullopt, std::to_string(id), std::move(text), "0"};
}

GymResponse GymSession::run_tac(std::string_view search_id, std::string_view state_id, std::string_view tactic) {
  auto sid = parse_id(search_id);
  auto it = sid ? searches_.find(*sid) : searches_.end();
  if (it == searches_.end()) return GymResponse::failure("unknown search id");
  auto tid = parse_id(state_id);
  if (!tid || *tid >= it->second.size()) return GymResponse::failure("unknown tactic state id");
  auto outcome = env_->run_tac(it->second[*tid], tactic);
  if (!outcome.ok()) return GymResponse::failure(outcome.error);
  TacticState next = std::move(*outcome.state);
  next.id = static_cast<int>(it->second.size());
  std::string text = next.text();
  std::string id = std::to_string(next.id);
  it->second.push_back(std::move(next));
  return {std::nullopt, std::string(search_id), std::move(text), std::move(id)};
}

GymResponse GymSession::clear_search(std::string_view search_id) {
  auto sid = parse_id(search_id);
  if (!sid || searches_.erase(*sid) == 0) return GymResponse::failure("unknown search id");
  return {};
}

const TacticState* GymSession::state(std::string_view search_id, std::string_view state_id) const {
  auto sid = parse_id(search_id);
  auto tid = parse_id(state_id);
  if (!sid || !tid) return nullptr;
  auto it = searches_.find(*sid);
  if (it == searches_.end() || *tid >= it->second.size()) return nullptr;
  return &it->second[*tid];
}

GymResponse GymSession::handle(const GymRequest& req) {
  auto arity = [&](std::size_t n) { return req.args.size() == n; };
  if (req.command == "init_search") {
    if (!arity(2)) return GymResponse::failure("init_search expects [decl, options]");
    return init_search(req.args[0], req.args[1]);
  }
  if (req.command == "run_tac") {
    if (!arity(3)) return GymResponse::failure("run_tac expects [search_id, tactic_state_id, tactic]");
    return run_tac(req.args[0], req.args[1], req.args[2]);
  }
  if (req.command == "clear_search") {
    if (!arity(1)) return GymResponse::failure("clear_search expects [search_id]");
    return clear_search(req.args[0]);
  }
  return GymResponse::failure("unknown command '" + req.command + "'");
}

std::string GymSession::handle_line(std::string_view line) {
  try {
    return format_response(handle(parse_request(line)));
  } catch (const ProtocolError& e) {
    return format_response(GymResponse::failure(e.what()));
  }
}

void serve_loop(const ProofEnv& env, std::istream& in, std::ostream& out, const FaultOptions& faults) {
  GymSession session(env);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!faults.crash_on.empty() && line.find(faults.crash_on) != std::string::npos) std::_Exit(3);
    if (!faults.hang_on.empty() && line.find(faults.hang_on) != std::string::npos) {
      for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
    }
    out << session.handle_line(line) << '\n' << std::flush;
  }
}

}  // namespace cprover
