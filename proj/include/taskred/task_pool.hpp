#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace taskred {

/// Dynamic task pool in the style of OpenMP tasking: one producer submits
/// tasks into a shared FIFO that every worker drains, and wait() is a
/// barrier in which the calling thread helps. The caller counts as one of the
/// `num_threads` workers, so a single-thread pool runs tasks in submission
/// order on the caller.
class TaskPool {
 public:
  explicit TaskPool(std::size_t num_threads);
  ~TaskPool();

  TaskPool(const TaskPool&) = delete;
  TaskPool& operator=(const TaskPool&) = delete;

  void submit(std::function<void()> task);

  /// Blocks until every submitted task has finished; rethrows the first
  /// exception a task raised since the previous wait().
  void wait();

  [[nodiscard]] std::size_t num_threads() const { return helpers_.size() + 1; }

  /// Tasks submitted since construction or the last reset_counters().
  [[nodiscard]] std::uint64_t dispatched() const { return dispatched_.load(); }
  [[nodiscard]] std::uint64_t executed() const { return executed_.load(); }
  void reset_counters();

 private:
  bool run_one(std::unique_lock<std::mutex>& lock);
  void worker_loop();

  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::deque<std::function<void()>> queue_;
  std::size_t pending_ = 0;  // queued + running
  bool stopping_ = false;
  std::exception_ptr error_;
  std::atomic<std::uint64_t> dispatched_{0};
  std::atomic<std::uint64_t> executed_{0};
  std::vector<std::thread> helpers_;
};

}  // namespace taskred
