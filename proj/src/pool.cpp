#include "cprover/pool.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace cprover {

struct WorkerPool::Worker {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;
  std::atomic<bool> in_flight{false};
  std::atomic<int> active{0};
  std::atomic<std::uint64_t> generation{0};
  std::atomic<std::uint64_t> sent{0};
};

namespace {

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

void spawn(const std::string& command, pid_t& pid, int& to_child, int& from_child) {
  int in[2], out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  }
  pid = ::fork();
  if (pid < 0) throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    // Own process group, so killing the worker also kills whatever the shell started.
    ::setpgid(0, 0);
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  to_child = in[1];
  from_child = out[0];
}

void reap(pid_t& pid, bool force) {
  if (pid <= 0) return;
  if (force) ::kill(-pid, SIGKILL);
  int status = 0;
  if (!force) {
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid, &status, WNOHANG) == pid) {
        pid = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(-pid, SIGKILL);
  }
  ::waitpid(pid, &status, 0);
  pid = -1;
}

bool write_all(int fd, const std::string& data) {
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

enum class ReadStatus { Line, Eof, Timeout };

ReadStatus read_line(int fd, std::string& buffer, std::string& line, std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return ReadStatus::Line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return ReadStatus::Timeout;
    pollfd p{fd, POLLIN, 0};
    int r = ::poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) return ReadStatus::Timeout;
    char chunk[65536];
    ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return ReadStatus::Eof;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

WorkerPool::WorkerPool(PoolOptions opts) : opts_(std::move(opts)) {
  if (opts_.workers < 1) throw std::invalid_argument("worker pool needs at least one worker");
  if (opts_.command.empty()) throw std::invalid_argument("worker pool needs a worker command");
  ::signal(SIGPIPE, SIG_IGN);
  for (int i = 0; i < opts_.workers; ++i) {
    auto w = std::make_unique<Worker>();
    spawn(opts_.command, w->pid, w->to_child, w->from_child);
    workers_.push_back(std::move(w));
  }
}

WorkerPool::~WorkerPool() {
  for (auto& w : workers_) close_fd(w->to_child);
  for (auto& w : workers_) {
    reap(w->pid, false);
    close_fd(w->from_child);
  }
}

bool WorkerPool::try_claim(int w) {
  bool expected = false;
  return workers_[w]->in_flight.compare_exchange_strong(expected, true, std::memory_order_acq_rel);
}

void WorkerPool::release(int w) {
  {
    std::lock_guard lk(idle_mu_);
    workers_[w]->in_flight.store(false, std::memory_order_release);
  }
  idle_cv_.notify_all();
}

void WorkerPool::claim_wait(int w) {
  std::unique_lock lk(idle_mu_);
  idle_cv_.wait(lk, [&] { return try_claim(w); });
}

void WorkerPool::respawn(int w) {
  Worker& wk = *workers_[w];
  close_fd(wk.to_child);
  reap(wk.pid, true);
  close_fd(wk.from_child);
  wk.buffer.clear();
  wk.generation.fetch_add(1);
  restarts_.fetch_add(1);
  spawn(opts_.command, wk.pid, wk.to_child, wk.from_child);
}

// Caller holds the claim on `w`.
GymResponse WorkerPool::exchange(int w, WorkerHandle h, const std::string& line) {
  Worker& wk = *workers_[w];
  if (wk.active.fetch_add(1) != 0) violations_.fetch_add(1);
  struct Leave {
    Worker& wk;
    ~Leave() { wk.active.fetch_sub(1); }
  } leave{wk};

  if (h.generation != wk.generation.load()) throw WorkerCrashed("search lost: worker " + std::to_string(w) + " restarted");
  wk.sent.fetch_add(1);
  if (!write_all(wk.to_child, line + "\n")) {
    respawn(w);
    throw WorkerCrashed("worker " + std::to_string(w) + " crashed");
  }
  std::string reply;
  switch (read_line(wk.from_child, wk.buffer, reply, std::chrono::steady_clock::now() + opts_.timeout)) {
    case ReadStatus::Line:
      break;
    case ReadStatus::Eof:
      respawn(w);
      throw WorkerCrashed("worker " + std::to_string(w) + " crashed");
    case ReadStatus::Timeout:
      respawn(w);
      throw TacticFailed("worker " + std::to_string(w) + " timed out; restarted");
  }
  try {
    return parse_response(reply);
  } catch (const ProtocolError& e) {
    respawn(w);
    throw WorkerCrashed("worker " + std::to_string(w) + " sent garbage: " + e.what());
  }
}

namespace {

template <class F>
auto with_release(WorkerPool* pool, F&& f, void (WorkerPool::*rel)(int), int w) {
  struct Guard {
    WorkerPool* p;
    void (WorkerPool::*r)(int);
    int w;
    ~Guard() { (p->*r)(w); }
  } g{pool, rel, w};
  return f();
}

}  // namespace

std::pair<WorkerHandle, GymResponse> WorkerPool::init_search(std::string_view decl, std::string_view options) {
  int n = size();
  std::uint64_t start = next_.fetch_add(1);
  for (int i = 0; i < n; ++i) {
    int w = static_cast<int>((start + static_cast<std::uint64_t>(i)) % static_cast<std::uint64_t>(n));
    if (!try_claim(w)) continue;
    WorkerHandle h{w, workers_[w]->generation.load()};
    auto line = format_request({"init_search", {std::string(decl), std::string(options)}});
    return {h, with_release(this, [&] { return exchange(w, h, line); }, &WorkerPool::release, w)};
  }
  throw AllWorkersBusy();
}

std::pair<WorkerHandle, GymResponse> WorkerPool::init_search_wait(std::string_view decl, std::string_view options) {
  int n = size();
  int w = -1;
  {
    std::unique_lock lk(idle_mu_);
    std::uint64_t start = next_.fetch_add(1);
    idle_cv_.wait(lk, [&] {
      for (int i = 0; i < n; ++i) {
        int c = static_cast<int>((start + static_cast<std::uint64_t>(i)) % static_cast<std::uint64_t>(n));
        if (try_claim(c)) {
          w = c;
          return true;
        }
      }
      return false;
    });
  }
  WorkerHandle h{w, workers_[w]->generation.load()};
  auto line = format_request({"init_search", {std::string(decl), std::string(options)}});
  return {h, with_release(this, [&] { return exchange(w, h, line); }, &WorkerPool::release, w)};
}

GymResponse WorkerPool::run_tac(WorkerHandle h, std::string_view search_id, std::string_view state_id,
                                std::string_view tactic) {
  if (!try_claim(h.worker)) throw WorkerBusy(h.worker);
  auto line = format_request({"run_tac", {std::string(search_id), std::string(state_id), std::string(tactic)}});
  return with_release(this, [&] { return exchange(h.worker, h, line); }, &WorkerPool::release, h.worker);
}

GymResponse WorkerPool::run_tac_wait(WorkerHandle h, std::string_view search_id, std::string_view state_id,
                                     std::string_view tactic) {
  return request_wait(h, {"run_tac", {std::string(search_id), std::string(state_id), std::string(tactic)}});
}

GymResponse WorkerPool::clear_search_wait(WorkerHandle h, std::string_view search_id) {
  return request_wait(h, {"clear_search", {std::string(search_id)}});
}

GymResponse WorkerPool::request_wait(WorkerHandle h, const GymRequest& req) {
  claim_wait(h.worker);
  auto line = format_request(req);
  return with_release(this, [&] { return exchange(h.worker, h, line); }, &WorkerPool::release, h.worker);
}

std::uint64_t WorkerPool::generation(int worker) const { return workers_.at(worker)->generation.load(); }

std::uint64_t WorkerPool::requests_sent(int worker) const { return workers_.at(worker)->sent.load(); }

void WorkerPool::kill_worker(int worker) {
  pid_t pid = workers_.at(worker)->pid;
  if (pid > 0) ::kill(-pid, SIGKILL);
}

// ---------------------------------------------------------------------------

namespace {

ProverReply to_reply(const GymResponse& r, std::string search_id, std::string_view decl) {
  ProverReply out;
  if (!r.ok()) {
    out.error = *r.error;
    return out;
  }
  if (!r.tactic_state || !r.tactic_state_id) throw ProverUnavailable("response lacks a tactic state");
  out.search_id = std::move(search_id);
  out.state_id = *r.tactic_state_id;
  try {
    out.state.goals = parse_goals(*r.tactic_state);
  } catch (const ParseError& e) {
    throw ProverUnavailable(std::string("unparseable tactic state: ") + e.what());
  }
  out.state.decl = std::string(decl);
  out.state.id = std::stoi(out.state_id);
  return out;
}

}  // namespace

ProverReply PoolProver::init_search(std::string_view decl) {
  auto [h, r] = pool_->init_search_wait(decl);
  if (!r.ok()) return to_reply(r, {}, decl);
  std::string id = std::to_string(h.worker) + ":" + *r.search_id;
  searches_[id] = Pinned{h, *r.search_id, std::string(decl)};
  return to_reply(r, id, decl);
}

const PoolProver::Pinned& PoolProver::pinned(std::string_view search_id) const {
  auto it = searches_.find(search_id);
  if (it == searches_.end()) throw ProverUnavailable("unknown search id");
  return it->second;
}

ProverReply PoolProver::run_tac(std::string_view search_id, std::string_view state_id, std::string_view tactic) {
  const Pinned& p = pinned(search_id);
  try {
    return to_reply(pool_->run_tac_wait(p.handle, p.remote_id, state_id, tactic), std::string(search_id), p.decl);
  } catch (const TacticFailed& e) {
    ProverReply out;
    out.error = e.what();
    return out;
  }
}

void PoolProver::clear_search(std::string_view search_id) {
  auto it = searches_.find(search_id);
  if (it == searches_.end()) return;
  try {
    pool_->clear_search_wait(it->second.handle, it->second.remote_id);
  } catch (const std::exception&) {
    // The worker is gone, and with it the search.
  }
  searches_.erase(it);
}

}  // namespace cprover
