#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cprover/gym.hpp"
#include "cprover/prover.hpp"

namespace cprover {

class AllWorkersBusy : public std::runtime_error {
 public:
  AllWorkersBusy() : std::runtime_error("all workers busy") {}
};

class WorkerBusy : public std::runtime_error {
 public:
  explicit WorkerBusy(int worker) : std::runtime_error("worker " + std::to_string(worker) + " has a request in flight") {}
};

/// The worker died (or was restarted) and took its searches with it.
class WorkerCrashed : public ProverUnavailable {
 public:
  using ProverUnavailable::ProverUnavailable;
};

/// A request did not answer in time; the worker has been restarted.
class TacticFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PoolOptions {
  int workers = 1;
  std::string command;  // run through /bin/sh -c; must speak the gym protocol on stdio
  std::chrono::milliseconds timeout{10000};
};

/// Identifies the worker process a search is pinned to. A handle outlives
/// its worker only as a stale generation, which is reported as a crash.
struct WorkerHandle {
  int worker = -1;
  std::uint64_t generation = 0;
};

/// Child processes speaking the gym protocol. At most one request is ever
/// outstanding per worker: the in-flight flag is claimed before sending and
/// a claim that fails is rejected locally.
class WorkerPool {
 public:
  explicit WorkerPool(PoolOptions opts);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const noexcept { return static_cast<int>(workers_.size()); }

  /// Round-robin over idle workers. Throws AllWorkersBusy when none is idle.
  std::pair<WorkerHandle, GymResponse> init_search(std::string_view decl, std::string_view options = "");
  /// Same, but blocks until a worker becomes idle.
  std::pair<WorkerHandle, GymResponse> init_search_wait(std::string_view decl, std::string_view options = "");

  /// Throws WorkerBusy if the pinned worker has a request in flight.
  GymResponse run_tac(WorkerHandle h, std::string_view search_id, std::string_view state_id, std::string_view tactic);
  /// Same, but waits for the pinned worker to become idle.
  GymResponse run_tac_wait(WorkerHandle h, std::string_view search_id, std::string_view state_id,
                           std::string_view tactic);
  GymResponse clear_search_wait(WorkerHandle h, std::string_view search_id);

  /// Raw request on a claimed worker; used by the multiplexing front end.
  GymResponse request_wait(WorkerHandle h, const GymRequest& req);

  std::uint64_t generation(int worker) const;
  /// Requests that found the target worker already in flight after claiming.
  /// Always zero unless the claim protocol is broken.
  std::uint64_t violations() const noexcept { return violations_.load(); }
  std::uint64_t restarts() const noexcept { return restarts_.load(); }
  std::uint64_t requests_sent(int worker) const;

  /// Kills a worker process without telling the pool (fault injection).
  void kill_worker(int worker);

 private:
  struct Worker;

  bool try_claim(int w);
  void release(int w);
  void claim_wait(int w);
  GymResponse exchange(int w, WorkerHandle h, const std::string& line);
  void respawn(int w);

  PoolOptions opts_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::atomic<std::uint64_t> next_{0};
  std::atomic<std::uint64_t> violations_{0};
  std::atomic<std::uint64_t> restarts_{0};
  std::mutex idle_mu_;
  std::condition_variable idle_cv_;
};

/// Prover over a shared WorkerPool. Search ids are namespaced by worker so
/// that ids from different processes cannot collide.
class PoolProver final : public Prover {
 public:
  explicit PoolProver(WorkerPool& pool) : pool_(&pool) {}

  ProverReply init_search(std::string_view decl) override;
  ProverReply run_tac(std::string_view search_id, std::string_view state_id, std::string_view tactic) override;
  void clear_search(std::string_view search_id) override;

 private:
  struct Pinned {
    WorkerHandle handle;
    std::string remote_id;
    std::string decl;
  };
  const Pinned& pinned(std::string_view search_id) const;

  WorkerPool* pool_;
  std::map<std::string, Pinned, std::less<>> searches_;
};

}  // namespace cprover
