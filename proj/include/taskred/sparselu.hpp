#pragma once

// Blocked sparse LU drivers. All three perform, for each block, the same
// sequence of kernel calls in the same order:
//
//   for kk in [0, NB):
//     lu0(A[kk][kk])
//     fwd(A[kk][kk], A[kk][jj])    for allocated (kk, jj), jj > kk
//     bdiv(A[kk][kk], A[ii][kk])   for allocated (ii, kk), ii > kk
//     bmod(A[ii][kk], A[kk][jj], A[ii][jj])
//                                  for ii, jj > kk with both operands present,
//                                  allocating A[ii][jj] (fill-in) if absent
//
// Within a step, fwd/bdiv write disjoint blocks and bmod writes disjoint
// blocks, so the results are bit-identical regardless of scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <vector>

#include "taskred/block_kernels.hpp"
#include "taskred/blocked_sparse_matrix.hpp"
#include "taskred/runtime.hpp"
#include "taskred/task_expr.hpp"
#include "taskred/task_pool.hpp"
#include "taskred/worksharing.hpp"

namespace taskred::sparselu {

enum class Phase { Lu0, FwdBdiv, Bmod };

struct PhaseEvent {
  int kk;
  Phase phase;
  std::uint64_t begin;
  std::uint64_t end;
};

/// Collects begin/end ticks of every phase task; ticks come from one counter.
class PhaseRecorder {
 public:
  std::uint64_t tick() { return clock_.fetch_add(1, std::memory_order_acq_rel); }
  void add(const PhaseEvent& e) {
    std::lock_guard lock(mutex_);
    events_.push_back(e);
  }
  [[nodiscard]] std::vector<PhaseEvent> events() const {
    std::lock_guard lock(mutex_);
    return events_;
  }

 private:
  std::atomic<std::uint64_t> clock_{0};
  mutable std::mutex mutex_;
  std::vector<PhaseEvent> events_;
};

/// Every task of phase p at step kk ends before any task of the next phase
/// (Lu0 -> FwdBdiv -> Bmod -> next step's Lu0) begins.
bool phases_well_ordered(const std::vector<PhaseEvent>& events);

/// Tasks created per step and phase by the task-pool driver.
struct TaskCounts {
  std::vector<std::size_t> fwd;
  std::vector<std::size_t> bdiv;
  std::vector<std::size_t> bmod;

  [[nodiscard]] std::size_t total() const;
};

namespace detail {

class ScopedPhase {
 public:
  ScopedPhase(PhaseRecorder* rec, int kk, Phase phase)
      : rec_(rec), kk_(kk), phase_(phase), begin_(rec ? rec->tick() : 0) {}
  ~ScopedPhase() {
    if (rec_) rec_->add(PhaseEvent{kk_, phase_, begin_, rec_->tick()});
  }
  ScopedPhase(const ScopedPhase&) = delete;
  ScopedPhase& operator=(const ScopedPhase&) = delete;

 private:
  PhaseRecorder* rec_;
  int kk_;
  Phase phase_;
  std::uint64_t begin_;
};

template <typename Scalar>
void lu0_step(BlockedSparseMatrix<Scalar>& m, int kk) {
  try {
    lu0(m.at(kk, kk));
  } catch (const SingularBlockError& e) {
    throw e.at_step(kk);
  }
}

template <typename Scalar>
void fwd_block(BlockedSparseMatrix<Scalar>& m, int kk, int jj) {
  if (auto* col = m.block(kk, jj)) fwd(m.at(kk, kk), *col);
}

template <typename Scalar>
void bdiv_block(BlockedSparseMatrix<Scalar>& m, int kk, int ii) {
  if (auto* row = m.block(ii, kk)) {
    try {
      bdiv(m.at(kk, kk), *row);
    } catch (const SingularBlockError& e) {
      throw e.at_step(kk);
    }
  }
}

template <typename Scalar>
void bmod_block(BlockedSparseMatrix<Scalar>& m, int kk, int ii, int jj) {
  const auto* row = m.block(ii, kk);
  const auto* col = m.block(kk, jj);
  if (row == nullptr || col == nullptr) return;
  bmod(*row, *col, m.allocate_zero(ii, jj));
}

}  // namespace detail

template <typename Scalar>
void factorize_sequential(BlockedSparseMatrix<Scalar>& m, PhaseRecorder* rec = nullptr) {
  const int nb = m.nb();
  for (int kk = 0; kk < nb; ++kk) {
    {
      detail::ScopedPhase p(rec, kk, Phase::Lu0);
      detail::lu0_step(m, kk);
    }
    {
      detail::ScopedPhase p(rec, kk, Phase::FwdBdiv);
      for (int jj = kk + 1; jj < nb; ++jj) detail::fwd_block(m, kk, jj);
      for (int ii = kk + 1; ii < nb; ++ii) detail::bdiv_block(m, kk, ii);
    }
    detail::ScopedPhase p(rec, kk, Phase::Bmod);
    for (int ii = kk + 1; ii < nb; ++ii) {
      for (int jj = kk + 1; jj < nb; ++jj) detail::bmod_block(m, kk, ii, jj);
    }
  }
}

/// Number of fwd and bdiv workers spawned per step for concurrency level cl.
inline int fwd_bdiv_workers(int cl) { return std::max(1, cl / 2); }

/// Builds the static-partition program: a sequential chain over kk, each step
/// a seq of the lu0 task, the interleaved fwd/bdiv worker group and the bmod
/// worker group. Registers its kernels on `rt`. `singular` receives the first
/// singular-block error raised by a task.
template <typename Scalar>
TaskExpr build_gprm_program(Runtime& rt, BlockedSparseMatrix<Scalar>& m, int cl, Strategy strategy,
                            std::shared_ptr<std::exception_ptr> singular,
                            PhaseRecorder* rec = nullptr) {
  if (cl < 1) throw std::invalid_argument("concurrency level must be >= 1");
  const int nb = m.nb();
  const int half = fwd_bdiv_workers(cl);
  auto* mat = &m;
  auto guard = [singular](auto&& body) {
    try {
      body();
    } catch (const SingularBlockError&) {
      if (singular && !*singular) *singular = std::current_exception();
      throw;
    }
  };

  auto& reg = rt.registry();
  const KernelId lu0_k = reg.add("lu0", 1, [=](std::span<const Value> a, const KernelContext&) {
    const int kk = static_cast<int>(a[0].as_int());
    detail::ScopedPhase p(rec, kk, Phase::Lu0);
    guard([&] { detail::lu0_step(*mat, kk); });
    return Value{};
  });
  const KernelId fwd_k = reg.add("fwd", 2, [=](std::span<const Value> a, const KernelContext&) {
    const int kk = static_cast<int>(a[0].as_int());
    const int ind = static_cast<int>(a[1].as_int());
    detail::ScopedPhase p(rec, kk, Phase::FwdBdiv);
    PartitionSpec spec{strategy, SingleLoop{kk + 1, nb}, ind, half};
    run_partition(spec, [&](int jj) { detail::fwd_block(*mat, kk, jj); });
    return Value{};
  });
  const KernelId bdiv_k = reg.add("bdiv", 2, [=](std::span<const Value> a, const KernelContext&) {
    const int kk = static_cast<int>(a[0].as_int());
    const int ind = static_cast<int>(a[1].as_int());
    detail::ScopedPhase p(rec, kk, Phase::FwdBdiv);
    PartitionSpec spec{strategy, SingleLoop{kk + 1, nb}, ind, half};
    guard([&] { run_partition(spec, [&](int ii) { detail::bdiv_block(*mat, kk, ii); }); });
    return Value{};
  });
  const KernelId bmod_k = reg.add("bmod", 2, [=](std::span<const Value> a, const KernelContext&) {
    const int kk = static_cast<int>(a[0].as_int());
    const int ind = static_cast<int>(a[1].as_int());
    detail::ScopedPhase p(rec, kk, Phase::Bmod);
    PartitionSpec spec{strategy, NestedLoop{kk + 1, nb, kk + 1, nb}, ind, cl};
    run_partition(spec, [&](int ii, int jj) { detail::bmod_block(*mat, kk, ii, jj); });
    return Value{};
  });

  std::vector<TaskExpr> steps;
  steps.reserve(static_cast<std::size_t>(nb));
  for (int kk = 0; kk < nb; ++kk) {
    const TaskExpr k = literal(kk);
    std::vector<TaskExpr> fwd_bdiv;
    fwd_bdiv.reserve(2 * static_cast<std::size_t>(half));
    for (int n = 0; n < half; ++n) {
      fwd_bdiv.push_back(call(reg, fwd_k, {k, literal(n)}));
      fwd_bdiv.push_back(call(reg, bdiv_k, {k, literal(n)}));
    }
    TaskExpr bmods = spawn_n(cl, [&](std::size_t n) {
      return call(reg, bmod_k, {k, literal(static_cast<std::int64_t>(n))});
    });
    steps.push_back(seq({call(reg, lu0_k, {k}), par(std::move(fwd_bdiv)), std::move(bmods)}));
  }
  return seq(std::move(steps));
}

/// Static-partition driver evaluated on `rt` with concurrency level `cl`.
template <typename Scalar>
void factorize_gprm(BlockedSparseMatrix<Scalar>& m, Runtime& rt, int cl, Strategy strategy,
                    PhaseRecorder* rec = nullptr) {
  auto singular = std::make_shared<std::exception_ptr>();
  const TaskExpr program = build_gprm_program(rt, m, cl, strategy, singular, rec);
  try {
    rt.evaluate(program);
  } catch (const EvaluationError&) {
    if (*singular) std::rethrow_exception(*singular);
    throw;
  }
}

template <typename Scalar>
void factorize_gprm(BlockedSparseMatrix<Scalar>& m, const RuntimeConfig& cfg, Strategy strategy,
                    PhaseRecorder* rec = nullptr) {
  Runtime rt(cfg);
  factorize_gprm(m, rt, static_cast<int>(cfg.effective_concurrency()), strategy, rec);
}

/// Task-per-block driver: the calling thread scans each phase and submits one
/// pool task per eligible block (allocating fill-in blocks itself before the
/// bmod tasks), with a barrier after each phase.
template <typename Scalar>
TaskCounts factorize_taskpool(BlockedSparseMatrix<Scalar>& m, TaskPool& pool,
                              PhaseRecorder* rec = nullptr) {
  const int nb = m.nb();
  TaskCounts counts;
  counts.fwd.assign(static_cast<std::size_t>(nb), 0);
  counts.bdiv.assign(static_cast<std::size_t>(nb), 0);
  counts.bmod.assign(static_cast<std::size_t>(nb), 0);
  auto* mat = &m;
  for (int kk = 0; kk < nb; ++kk) {
    {
      detail::ScopedPhase p(rec, kk, Phase::Lu0);
      detail::lu0_step(m, kk);
    }
    for (int jj = kk + 1; jj < nb; ++jj) {
      if (!m.allocated(kk, jj)) continue;
      ++counts.fwd[kk];
      pool.submit([=] {
        detail::ScopedPhase p(rec, kk, Phase::FwdBdiv);
        fwd(mat->at(kk, kk), mat->at(kk, jj));
      });
    }
    for (int ii = kk + 1; ii < nb; ++ii) {
      if (!m.allocated(ii, kk)) continue;
      ++counts.bdiv[kk];
      pool.submit([=] {
        detail::ScopedPhase p(rec, kk, Phase::FwdBdiv);
        detail::bdiv_block(*mat, kk, ii);
      });
    }
    pool.wait();
    for (int ii = kk + 1; ii < nb; ++ii) {
      if (!m.allocated(ii, kk)) continue;
      for (int jj = kk + 1; jj < nb; ++jj) {
        if (!m.allocated(kk, jj)) continue;
        m.allocate_zero(ii, jj);
        ++counts.bmod[kk];
        pool.submit([=] {
          detail::ScopedPhase p(rec, kk, Phase::Bmod);
          bmod(mat->at(ii, kk), mat->at(kk, jj), mat->at(ii, jj));
        });
      }
    }
    pool.wait();
  }
  return counts;
}

template <typename Scalar>
TaskCounts factorize_taskpool(BlockedSparseMatrix<Scalar>& m, std::size_t num_threads,
                              PhaseRecorder* rec = nullptr) {
  TaskPool pool(num_threads);
  return factorize_taskpool(m, pool, rec);
}

}  // namespace taskred::sparselu
