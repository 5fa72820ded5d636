#include "taskred/runtime.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <variant>

namespace taskred {

std::size_t default_thread_count() {
  if (const char* env = std::getenv("TASKRED_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      // fall through to hardware count
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

std::uint64_t RuntimeStats::total_packets() const {
  std::uint64_t n = 0;
  for (const auto& t : tiles) n += t.packets;
  return n;
}

std::uint64_t RuntimeStats::total_kernel_invocations() const {
  std::uint64_t n = 0;
  for (const auto& t : tiles) n += t.kernel_invocations;
  return n;
}

namespace {

constexpr std::size_t kController = std::numeric_limits<std::size_t>::max();

struct ReturnAddr {
  std::size_t tile = kController;
  std::uint32_t frame = 0;
  std::size_t slot = 0;
  std::uint64_t frame_uid = 0;
  bool sequential = false;
};

struct Failure {
  std::string kernel;
  std::string message;
};

using Outcome = std::variant<Value, Failure>;

struct Request {
  const TaskNode* expr = nullptr;
  ReturnAddr ret;
  bool rehosted = false;
};

struct Result {
  std::uint32_t frame = 0;
  std::size_t slot = 0;
  Outcome outcome;
};

struct Stop {};

using Packet = std::variant<Request, Result, Stop>;

class Mailbox {
 public:
  void bind_owner() { owner_ = std::this_thread::get_id(); }

  void push(Packet p) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(p));
    }
    cv_.notify_one();
  }

  Packet pop(std::atomic<bool>& idle) {
    if (std::this_thread::get_id() != owner_) {
      foreign_dequeues_.fetch_add(1, std::memory_order_relaxed);
    }
    std::unique_lock lock(mutex_);
    while (queue_.empty()) {
      idle.store(true, std::memory_order_release);
      cv_.wait(lock);
    }
    idle.store(false, std::memory_order_release);
    Packet p = std::move(queue_.front());
    queue_.pop_front();
    return p;
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

  [[nodiscard]] std::uint64_t foreign_dequeues() const {
    return foreign_dequeues_.load(std::memory_order_relaxed);
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Packet> queue_;
  std::thread::id owner_;
  std::atomic<std::uint64_t> foreign_dequeues_{0};
};

/// A Call node parked on its tile while its arguments are evaluated.
struct Frame {
  const TaskNode* expr = nullptr;
  ReturnAddr ret;
  std::vector<Value> args;
  std::size_t remaining = 0;
  std::size_t next = 0;
  std::optional<Failure> failure;
  std::uint64_t uid = 0;
};

struct Tile {
  Mailbox mailbox;
  // Owned by the tile thread; deque keeps references stable across growth.
  std::deque<Frame> frames;
  std::vector<std::uint32_t> free_frames;
  std::atomic<std::size_t> live_frames{0};
  std::atomic<bool> idle{true};
  std::uint32_t nesting = 0;
  TileStats stats;
  std::thread thread;
};

}  // namespace

struct Runtime::Impl {
  Impl(Runtime& rt, std::size_t n) : owner(rt), tiles(n) {
    for (auto& t : tiles) t = std::make_unique<Tile>();
  }

  Runtime& owner;
  std::vector<std::unique_ptr<Tile>> tiles;

  std::atomic<std::uint64_t> in_flight{0};
  std::atomic<std::uint64_t> outstanding{0};
  std::atomic<std::uint64_t> clock{0};
  std::atomic<std::uint64_t> next_uid{0};

  mutable std::mutex trace_mutex;
  std::vector<TraceEvent> trace;

  std::mutex ctl_mutex;
  std::condition_variable ctl_cv;
  std::optional<Outcome> root;

  std::mutex eval_mutex;

  [[nodiscard]] std::size_t size() const { return tiles.size(); }

  void start() {
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      tiles[t]->thread = std::thread([this, t] { tile_loop(t); });
    }
  }

  void stop() {
    for (auto& t : tiles) t->mailbox.push(Stop{});
    for (auto& t : tiles) {
      if (t->thread.joinable()) t->thread.join();
    }
  }

  void record(TraceEvent::Kind kind, std::uint64_t frame, std::size_t slot, bool sequential,
              std::size_t tile) {
    if (!owner.cfg_.trace) return;
    const std::uint64_t ts = clock.fetch_add(1, std::memory_order_acq_rel);
    std::lock_guard lock(trace_mutex);
    trace.push_back(TraceEvent{kind, frame, slot, sequential, ts, TileId{tile}});
  }

  void tile_loop(std::size_t t) {
    Tile& tile = *tiles[t];
    tile.mailbox.bind_owner();
    for (;;) {
      Packet packet = tile.mailbox.pop(tile.idle);
      if (std::holds_alternative<Stop>(packet)) return;
      const auto begin = std::chrono::steady_clock::now();
      ++tile.stats.packets;
      if (auto* req = std::get_if<Request>(&packet)) {
        handle_request(t, *req);
      } else {
        handle_result(t, std::get<Result>(packet));
      }
      tile.stats.busy += std::chrono::steady_clock::now() - begin;
      finish_packet();
    }
  }

  void finish_packet() {
    if (in_flight.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      std::lock_guard lock(ctl_mutex);
      ctl_cv.notify_all();
    }
  }

  std::uint32_t alloc_frame(Tile& tile) {
    tile.live_frames.fetch_add(1, std::memory_order_relaxed);
    if (!tile.free_frames.empty()) {
      const std::uint32_t idx = tile.free_frames.back();
      tile.free_frames.pop_back();
      return idx;
    }
    tile.frames.emplace_back();
    return static_cast<std::uint32_t>(tile.frames.size() - 1);
  }

  void release_frame(Tile& tile, std::uint32_t idx) {
    Frame& f = tile.frames[idx];
    f.args.clear();
    f.failure.reset();
    f.expr = nullptr;
    tile.free_frames.push_back(idx);
    tile.live_frames.fetch_sub(1, std::memory_order_relaxed);
  }

  std::size_t choose_tile(std::size_t slot, const TaskNode& arg) {
    const std::size_t n = tiles.size();
    if (const auto& hint = arg.placement_hint()) return hint->index % n;
    std::size_t dest = default_placement(slot, n).index;
    if (owner.cfg_.steal_enabled && n > 1) {
      const Tile& home = *tiles[dest];
      if (!home.idle.load(std::memory_order_acquire) || home.mailbox.size() != 0) {
        for (std::size_t step = 1; step < n; ++step) {
          const std::size_t cand = (dest + step) % n;
          const Tile& c = *tiles[cand];
          if (c.idle.load(std::memory_order_acquire) && c.mailbox.size() == 0) return cand;
        }
      }
    }
    return dest;
  }

  void dispatch(std::size_t t, std::uint32_t fi, std::size_t slot, const TaskNode& arg) {
    const Frame& f = tiles[t]->frames[fi];
    ReturnAddr ret{t, fi, slot, f.uid, f.expr->mode() == EvalMode::Sequential};
    const std::size_t dest = choose_tile(slot, arg);
    const bool rehosted = !arg.placement_hint() && dest != default_placement(slot, size()).index;
    record(TraceEvent::Kind::Dispatch, ret.frame_uid, slot, ret.sequential, t);
    outstanding.fetch_add(1, std::memory_order_relaxed);
    in_flight.fetch_add(1, std::memory_order_acq_rel);
    tiles[dest]->mailbox.push(Request{&arg, ret, rehosted});
  }

  void deliver(std::size_t from, const ReturnAddr& ret, Outcome outcome) {
    if (ret.tile != kController) {
      record(TraceEvent::Kind::Complete, ret.frame_uid, ret.slot, ret.sequential, from);
      in_flight.fetch_add(1, std::memory_order_acq_rel);
      tiles[ret.tile]->mailbox.push(Result{ret.frame, ret.slot, std::move(outcome)});
      return;
    }
    outstanding.fetch_sub(1, std::memory_order_relaxed);
    std::lock_guard lock(ctl_mutex);
    root = std::move(outcome);
    ctl_cv.notify_all();
  }

  // Inline resolution of a literal argument: no packet, but traced as an
  // immediate dispatch/complete pair.
  void fill_literal(std::size_t t, Frame& f, std::size_t slot, const Value& v) {
    const bool sequential = f.expr->mode() == EvalMode::Sequential;
    record(TraceEvent::Kind::Dispatch, f.uid, slot, sequential, t);
    f.args[slot] = v;
    --f.remaining;
    record(TraceEvent::Kind::Complete, f.uid, slot, sequential, t);
  }

  void handle_request(std::size_t t, const Request& req) {
    Tile& tile = *tiles[t];
    ++tile.stats.requests;
    if (req.rehosted) ++tile.stats.rehosted_in;
    const TaskNode& node = *req.expr;
    if (node.is_literal()) {
      deliver(t, req.ret, node.value());
      return;
    }
    const std::size_t n = node.args().size();
    const std::uint32_t fi = alloc_frame(tile);
    {
      Frame& f = tile.frames[fi];
      f.expr = &node;
      f.ret = req.ret;
      f.args.assign(n, Value{});
      f.remaining = n;
      f.next = 0;
      f.uid = next_uid.fetch_add(1, std::memory_order_relaxed) + 1;
    }
    if (node.mode() == EvalMode::Sequential) {
      advance_sequential(t, fi);
      return;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const TaskNode& arg = *node.args()[k];
      if (arg.is_literal()) {
        fill_literal(t, tile.frames[fi], k, arg.value());
      } else {
        dispatch(t, fi, k, arg);
      }
    }
    if (tile.frames[fi].remaining == 0) finish_frame(t, fi);
  }

  void advance_sequential(std::size_t t, std::uint32_t fi) {
    Tile& tile = *tiles[t];
    Frame& f = tile.frames[fi];
    const auto& args = f.expr->args();
    while (f.next < args.size()) {
      const std::size_t k = f.next++;
      const TaskNode& arg = *args[k];
      if (arg.is_literal()) {
        fill_literal(t, f, k, arg.value());
        continue;
      }
      dispatch(t, fi, k, arg);
      return;
    }
    finish_frame(t, fi);
  }

  void handle_result(std::size_t t, Result& res) {
    Tile& tile = *tiles[t];
    ++tile.stats.results;
    outstanding.fetch_sub(1, std::memory_order_relaxed);
    Frame& f = tile.frames[res.frame];
    if (auto* fail = std::get_if<Failure>(&res.outcome)) {
      if (!f.failure) f.failure = std::move(*fail);
    } else {
      f.args[res.slot] = std::move(std::get<Value>(res.outcome));
    }
    --f.remaining;
    if (f.expr->mode() == EvalMode::Sequential) {
      if (f.failure) {
        finish_frame(t, res.frame);
      } else {
        advance_sequential(t, res.frame);
      }
      return;
    }
    if (f.remaining == 0) finish_frame(t, res.frame);
  }

  void finish_frame(std::size_t t, std::uint32_t fi) {
    Tile& tile = *tiles[t];
    Frame& f = tile.frames[fi];
    Outcome outcome;
    if (f.failure) {
      outcome = std::move(*f.failure);
    } else {
      const KernelInfo& info = owner.registry_.at(f.expr->kernel());
      ++tile.nesting;
      tile.stats.max_kernel_nesting = std::max(tile.stats.max_kernel_nesting, tile.nesting);
      ++tile.stats.kernel_invocations;
      try {
        outcome = info.fn(std::span<const Value>(f.args), KernelContext{TileId{t}, size()});
      } catch (const std::exception& e) {
        outcome = Failure{info.name, e.what()};
      } catch (...) {
        outcome = Failure{info.name, "unknown exception"};
      }
      --tile.nesting;
    }
    const ReturnAddr ret = f.ret;
    release_frame(tile, fi);
    deliver(t, ret, std::move(outcome));
  }
};

Runtime::Runtime(RuntimeConfig cfg) : Runtime(KernelRegistry{}, cfg) {}

Runtime::Runtime(KernelRegistry registry, RuntimeConfig cfg)
    : cfg_(cfg), registry_(std::move(registry)) {
  if (cfg_.num_threads == 0) throw std::invalid_argument("num_threads must be >= 1");
  if (cfg_.concurrency_level == 0) cfg_.concurrency_level = cfg_.num_threads;
  impl_ = std::make_unique<Impl>(*this, cfg_.num_threads);
  impl_->start();
}

Runtime::~Runtime() { impl_->stop(); }

std::size_t Runtime::num_tiles() const { return impl_->size(); }

Value Runtime::evaluate(const TaskExpr& expr) {
  if (!expr) throw std::invalid_argument("evaluate of a null expression");
  std::unique_lock guard(impl_->eval_mutex, std::try_to_lock);
  if (!guard.owns_lock()) throw std::logic_error("Runtime::evaluate is not reentrant");

  {
    std::lock_guard lock(impl_->trace_mutex);
    impl_->trace.clear();
  }
  if (expr->is_literal()) return expr->value();

  {
    std::lock_guard lock(impl_->ctl_mutex);
    impl_->root.reset();
  }
  const std::size_t dest = expr->placement_hint() ? expr->placement_hint()->index % num_tiles() : 0;
  impl_->outstanding.fetch_add(1, std::memory_order_relaxed);
  impl_->in_flight.fetch_add(1, std::memory_order_acq_rel);
  impl_->tiles[dest]->mailbox.push(Request{expr.get(), ReturnAddr{}, false});

  std::unique_lock lock(impl_->ctl_mutex);
  impl_->ctl_cv.wait(lock, [&] {
    return impl_->root.has_value() && impl_->in_flight.load(std::memory_order_acquire) == 0;
  });
  Outcome outcome = std::move(*impl_->root);
  impl_->root.reset();
  lock.unlock();

  if (auto* fail = std::get_if<Failure>(&outcome)) {
    throw EvaluationError(fail->kernel, fail->message);
  }
  return std::get<Value>(std::move(outcome));
}

bool Runtime::quiescent() const {
  if (impl_->outstanding.load(std::memory_order_acquire) != 0) return false;
  if (impl_->in_flight.load(std::memory_order_acquire) != 0) return false;
  for (const auto& t : impl_->tiles) {
    if (t->mailbox.size() != 0) return false;
    if (t->live_frames.load(std::memory_order_acquire) != 0) return false;
  }
  return true;
}

std::uint64_t Runtime::outstanding_requests() const {
  return impl_->outstanding.load(std::memory_order_acquire);
}

RuntimeStats Runtime::stats() const {
  RuntimeStats s;
  s.tiles.reserve(impl_->tiles.size());
  for (const auto& t : impl_->tiles) {
    TileStats ts = t->stats;
    ts.foreign_dequeues = t->mailbox.foreign_dequeues();
    s.tiles.push_back(ts);
  }
  return s;
}

void Runtime::reset_stats() {
  std::lock_guard guard(impl_->eval_mutex);
  for (auto& t : impl_->tiles) t->stats = TileStats{};
}

std::vector<TraceEvent> Runtime::trace() const {
  std::lock_guard lock(impl_->trace_mutex);
  return impl_->trace;
}

std::size_t count_seq_order_violations(const std::vector<TraceEvent>& trace) {
  struct SlotTimes {
    std::optional<std::uint64_t> dispatched;
    std::optional<std::uint64_t> completed;
  };
  std::map<std::uint64_t, std::map<std::size_t, SlotTimes>> frames;
  for (const auto& e : trace) {
    if (!e.sequential) continue;
    auto& st = frames[e.frame][e.slot];
    (e.kind == TraceEvent::Kind::Dispatch ? st.dispatched : st.completed) = e.timestamp;
  }
  std::size_t violations = 0;
  for (const auto& [uid, slots] : frames) {
    const SlotTimes* prev = nullptr;
    for (const auto& [slot, st] : slots) {
      if (!st.dispatched || !st.completed || *st.completed <= *st.dispatched) ++violations;
      if (prev != nullptr && prev->completed && st.dispatched && *prev->completed >= *st.dispatched) {
        ++violations;
      }
      prev = &st;
    }
  }
  return violations;
}

}  // namespace taskred
