#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskred/value.hpp"

namespace taskred {

/// Index of a worker tile in [0, num_tiles).
struct TileId {
  std::size_t index = 0;
  friend auto operator<=>(const TileId&, const TileId&) = default;
};

struct KernelId {
  std::uint32_t value = 0;
  friend auto operator<=>(const KernelId&, const KernelId&) = default;
};

enum class EvalMode { Parallel, Sequential };

/// Information a kernel receives about where it runs.
struct KernelContext {
  TileId tile;
  std::size_t num_tiles = 1;
};

using KernelFn = std::function<Value(std::span<const Value>, const KernelContext&)>;

struct KernelInfo {
  std::string name;
  std::optional<std::size_t> arity;  // nullopt: variadic
  KernelFn fn;
};

/// Built-in kernels present in every registry.
inline constexpr KernelId kSeqKernel{0};   // value of the last argument
inline constexpr KernelId kListKernel{1};  // all arguments as a ValueList

class KernelRegistry {
 public:
  KernelRegistry();

  KernelId add(std::string name, std::size_t arity, KernelFn fn);
  KernelId add_variadic(std::string name, KernelFn fn);

  [[nodiscard]] const KernelInfo& at(KernelId id) const;
  [[nodiscard]] std::size_t size() const { return kernels_.size(); }

 private:
  // deque: references handed to running tiles stay valid while kernels are added
  std::deque<KernelInfo> kernels_;
};

class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TaskNode;

/// Immutable node of a task expression tree. Copies share the node.
using TaskExpr = std::shared_ptr<const TaskNode>;

class TaskNode {
 public:
  enum class Kind { Literal, Call };

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_literal() const { return kind_ == Kind::Literal; }
  [[nodiscard]] const Value& value() const { return value_; }
  [[nodiscard]] KernelId kernel() const { return kernel_; }
  [[nodiscard]] const std::vector<TaskExpr>& args() const { return args_; }
  [[nodiscard]] EvalMode mode() const { return mode_; }
  [[nodiscard]] const std::optional<TileId>& placement_hint() const { return hint_; }

  /// Nodes reachable from this one, including itself.
  [[nodiscard]] std::size_t size() const;

 private:
  friend TaskExpr literal(Value v);
  friend TaskExpr make_call(KernelId, std::vector<TaskExpr>, EvalMode, std::optional<TileId>);

  Kind kind_ = Kind::Literal;
  Value value_;
  KernelId kernel_{};
  std::vector<TaskExpr> args_;
  EvalMode mode_ = EvalMode::Parallel;
  std::optional<TileId> hint_;
};

TaskExpr literal(Value v);

/// Call node; throws ArityError when `args` does not match the kernel's arity.
TaskExpr call(const KernelRegistry& registry, KernelId kernel, std::vector<TaskExpr> args,
              EvalMode mode = EvalMode::Parallel, std::optional<TileId> hint = std::nullopt);

/// Children evaluated strictly left to right; the value is the last child's.
TaskExpr seq(std::vector<TaskExpr> exprs);

/// n children built by factory(0..n-1), dispatched concurrently; the value is
/// the ValueList of child values in index order.
TaskExpr spawn_n(std::size_t n, const std::function<TaskExpr(std::size_t)>& factory);
TaskExpr spawn_n(int n, const std::function<TaskExpr(std::size_t)>& factory);

/// Parallel composite over an explicit child list (same value as spawn_n).
TaskExpr par(std::vector<TaskExpr> exprs);

/// Static round-robin home tile of the task at `task_index`.
TileId default_placement(std::size_t task_index, std::size_t num_tiles);

/// Unchecked call node construction (used by the builders above).
TaskExpr make_call(KernelId kernel, std::vector<TaskExpr> args, EvalMode mode,
                   std::optional<TileId> hint);

}  // namespace taskred
