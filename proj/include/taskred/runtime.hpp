#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "taskred/task_expr.hpp"
#include "taskred/value.hpp"

namespace taskred {

/// Worker count used when none is given: TASKRED_THREADS if set, else the
/// number of hardware threads (at least 1).
std::size_t default_thread_count();

struct RuntimeConfig {
  std::size_t num_threads = default_thread_count();
  std::size_t concurrency_level = 0;  // 0: same as num_threads
  bool steal_enabled = false;
  bool trace = false;

  [[nodiscard]] std::size_t effective_concurrency() const {
    return concurrency_level == 0 ? num_threads : concurrency_level;
  }
};

/// A kernel threw while being evaluated.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::string kernel, const std::string& message)
      : std::runtime_error("kernel '" + kernel + "' failed: " + message), kernel_(std::move(kernel)),
        message_(message) {}

  [[nodiscard]] const std::string& kernel() const { return kernel_; }
  [[nodiscard]] const std::string& message() const { return message_; }

 private:
  std::string kernel_;
  std::string message_;
};

struct TileStats {
  std::uint64_t packets = 0;   // all packets dequeued
  std::uint64_t requests = 0;  // Request packets handled
  std::uint64_t results = 0;   // Result packets handled
  std::uint64_t kernel_invocations = 0;
  std::uint64_t rehosted_in = 0;  // requests moved here by the stealing policy
  std::chrono::nanoseconds busy{0};
  std::uint32_t max_kernel_nesting = 0;
  std::uint64_t foreign_dequeues = 0;  // must stay 0: single-consumer mailboxes
};

struct RuntimeStats {
  std::vector<TileStats> tiles;

  [[nodiscard]] std::uint64_t total_packets() const;
  [[nodiscard]] std::uint64_t total_kernel_invocations() const;
};

/// One dispatch or completion of an argument slot of a Call frame. Timestamps
/// come from a single global counter, so they are totally ordered.
struct TraceEvent {
  enum class Kind { Dispatch, Complete };
  Kind kind;
  std::uint64_t frame;  // unique per evaluated Call node
  std::size_t slot;
  bool sequential;  // parent frame evaluates its arguments in order
  std::uint64_t timestamp;
  TileId tile;
};

/// Fixed pool of tiles, each a thread draining its own FIFO mailbox. The task
/// manager on a tile never blocks on child results: a Call waiting for its
/// arguments is parked as a frame and the tile goes back to its mailbox, so
/// self-addressed requests cannot deadlock.
class Runtime {
 public:
  explicit Runtime(RuntimeConfig cfg = {});
  Runtime(KernelRegistry registry, RuntimeConfig cfg);
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Kernels may be added only while no evaluation is running.
  KernelRegistry& registry() { return registry_; }
  [[nodiscard]] const KernelRegistry& registry() const { return registry_; }

  [[nodiscard]] const RuntimeConfig& config() const { return cfg_; }
  [[nodiscard]] std::size_t num_tiles() const;

  /// Evaluates `expr` to completion; returns once every tile is idle again.
  /// Throws EvaluationError naming the first failing kernel.
  Value evaluate(const TaskExpr& expr);

  /// Empty mailboxes, no outstanding requests, no parked frames.
  [[nodiscard]] bool quiescent() const;
  [[nodiscard]] std::uint64_t outstanding_requests() const;

  [[nodiscard]] RuntimeStats stats() const;
  void reset_stats();

  /// Trace of the last evaluation (empty unless cfg.trace).
  [[nodiscard]] std::vector<TraceEvent> trace() const;

 private:
  struct Impl;
  RuntimeConfig cfg_;
  KernelRegistry registry_;
  std::unique_ptr<Impl> impl_;
};

/// Checks the seq ordering property on a trace: in every sequential frame,
/// slot k completes before slot k+1 is dispatched. Returns the number of
/// violations.
std::size_t count_seq_order_violations(const std::vector<TraceEvent>& trace);

}  // namespace taskred
