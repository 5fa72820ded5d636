#include "taskred/task_expr.hpp"

#include <sstream>

namespace taskred {

std::string to_string(const Value& v) {
  struct Printer {
    std::ostringstream& os;
    void operator()(std::monostate) const { os << "()"; }
    void operator()(std::int64_t i) const { os << i; }
    void operator()(double d) const { os << d; }
    void operator()(const ValueList& l) const {
      os << '(';
      for (std::size_t k = 0; k < l.size(); ++k) {
        if (k != 0) os << ' ';
        std::visit(*this, l[k].storage());
      }
      os << ')';
    }
    void operator()(const Handle& h) const { os << "#<handle " << h.get() << '>'; }
  };
  std::ostringstream os;
  std::visit(Printer{os}, v.storage());
  return os.str();
}

KernelRegistry::KernelRegistry() {
  add_variadic("seq", [](std::span<const Value> args, const KernelContext&) {
    return args.empty() ? Value{} : args.back();
  });
  add_variadic("list", [](std::span<const Value> args, const KernelContext&) {
    return Value{ValueList(args.begin(), args.end())};
  });
}

KernelId KernelRegistry::add(std::string name, std::size_t arity, KernelFn fn) {
  const KernelId id{static_cast<std::uint32_t>(kernels_.size())};
  kernels_.push_back(KernelInfo{std::move(name), arity, std::move(fn)});
  return id;
}

KernelId KernelRegistry::add_variadic(std::string name, KernelFn fn) {
  const KernelId id{static_cast<std::uint32_t>(kernels_.size())};
  kernels_.push_back(KernelInfo{std::move(name), std::nullopt, std::move(fn)});
  return id;
}

const KernelInfo& KernelRegistry::at(KernelId id) const {
  if (id.value >= kernels_.size()) {
    throw std::out_of_range("unknown kernel id " + std::to_string(id.value));
  }
  return kernels_[id.value];
}

std::size_t TaskNode::size() const {
  std::size_t n = 1;
  for (const auto& a : args_) n += a->size();
  return n;
}

TaskExpr literal(Value v) {
  auto node = std::shared_ptr<TaskNode>(new TaskNode());
  node->kind_ = TaskNode::Kind::Literal;
  node->value_ = std::move(v);
  return node;
}

TaskExpr make_call(KernelId kernel, std::vector<TaskExpr> args, EvalMode mode,
                   std::optional<TileId> hint) {
  for (const auto& a : args) {
    if (!a) throw std::invalid_argument("null task expression argument");
  }
  auto node = std::shared_ptr<TaskNode>(new TaskNode());
  node->kind_ = TaskNode::Kind::Call;
  node->kernel_ = kernel;
  node->args_ = std::move(args);
  node->mode_ = mode;
  node->hint_ = hint;
  return node;
}

TaskExpr call(const KernelRegistry& registry, KernelId kernel, std::vector<TaskExpr> args,
              EvalMode mode, std::optional<TileId> hint) {
  const KernelInfo& info = registry.at(kernel);
  if (info.arity && *info.arity != args.size()) {
    throw ArityError("kernel '" + info.name + "' expects " + std::to_string(*info.arity) +
                     " argument(s), got " + std::to_string(args.size()));
  }
  return make_call(kernel, std::move(args), mode, hint);
}

TaskExpr seq(std::vector<TaskExpr> exprs) {
  if (exprs.empty()) throw std::invalid_argument("seq of an empty list");
  return make_call(kSeqKernel, std::move(exprs), EvalMode::Sequential, std::nullopt);
}

TaskExpr spawn_n(std::size_t n, const std::function<TaskExpr(std::size_t)>& factory) {
  if (n == 0) throw std::invalid_argument("spawn_n needs n >= 1");
  std::vector<TaskExpr> children;
  children.reserve(n);
  for (std::size_t k = 0; k < n; ++k) children.push_back(factory(k));
  return make_call(kListKernel, std::move(children), EvalMode::Parallel, std::nullopt);
}

TaskExpr spawn_n(int n, const std::function<TaskExpr(std::size_t)>& factory) {
  if (n <= 0) throw std::invalid_argument("spawn_n needs n >= 1");
  return spawn_n(static_cast<std::size_t>(n), factory);
}

TaskExpr par(std::vector<TaskExpr> exprs) {
  if (exprs.empty()) throw std::invalid_argument("par of an empty list");
  return make_call(kListKernel, std::move(exprs), EvalMode::Parallel, std::nullopt);
}

TileId default_placement(std::size_t task_index, std::size_t num_tiles) {
  if (num_tiles == 0) throw std::invalid_argument("num_tiles must be >= 1");
  return TileId{task_index % num_tiles};
}

}  // namespace taskred
