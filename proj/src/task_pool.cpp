#include "taskred/task_pool.hpp"

#include <stdexcept>
#include <utility>

namespace taskred {

TaskPool::TaskPool(std::size_t num_threads) {
  if (num_threads == 0) throw std::invalid_argument("TaskPool needs at least one thread");
  helpers_.reserve(num_threads - 1);
  for (std::size_t i = 1; i < num_threads; ++i) {
    helpers_.emplace_back([this] { worker_loop(); });
  }
}

TaskPool::~TaskPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : helpers_) t.join();
}

void TaskPool::submit(std::function<void()> task) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(task));
    ++pending_;
  }
  dispatched_.fetch_add(1, std::memory_order_relaxed);
  work_cv_.notify_one();
}

bool TaskPool::run_one(std::unique_lock<std::mutex>& lock) {
  if (queue_.empty()) return false;
  auto task = std::move(queue_.front());
  queue_.pop_front();
  lock.unlock();
  std::exception_ptr err;
  try {
    task();
  } catch (...) {
    err = std::current_exception();
  }
  executed_.fetch_add(1, std::memory_order_relaxed);
  lock.lock();
  if (err && !error_) error_ = err;
  if (--pending_ == 0) done_cv_.notify_all();
  return true;
}

void TaskPool::worker_loop() {
  std::unique_lock lock(mutex_);
  for (;;) {
    work_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (stopping_ && queue_.empty()) return;
    run_one(lock);
  }
}

void TaskPool::wait() {
  std::unique_lock lock(mutex_);
  while (pending_ != 0) {
    if (!run_one(lock)) done_cv_.wait(lock, [&] { return pending_ == 0 || !queue_.empty(); });
  }
  if (error_) {
    auto err = std::exchange(error_, nullptr);
    std::rethrow_exception(err);
  }
}

void TaskPool::reset_counters() {
  dispatched_.store(0);
  executed_.store(0);
}

}  // namespace taskred
