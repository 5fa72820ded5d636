#pragma once

// Naive triple-loop matrix multiplication benchmark. Each row of C is one
// job of n * p multiply-adds; every strategy computes a row with exactly the
// same loop, so all strategies produce bit-identical C.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "taskred/blocked_sparse_matrix.hpp"
#include "taskred/runtime.hpp"
#include "taskred/task_expr.hpp"
#include "taskred/task_pool.hpp"
#include "taskred/worksharing.hpp"

namespace taskred::matmul {

struct MatmulJobSpec {
  int m = 1;       // rows of A, number of jobs
  int n = 1;       // inner dimension; B is n x n
  int cutoff = 1;  // rows per pool task
};

template <typename Scalar>
struct Problem {
  DenseMatrix<Scalar> a;
  DenseMatrix<Scalar> b;
};

/// Deterministic inputs: A (m x n) then B (n x n) filled row-major from one
/// BotsLcg stream.
inline Problem<float> make_problem(int m, int n) {
  if (m < 1 || n < 1) throw std::invalid_argument("matmul dimensions must be >= 1");
  Problem<float> p{DenseMatrix<float>(m, n), DenseMatrix<float>(n, n)};
  BotsLcg lcg;
  for (Eigen::Index i = 0; i < p.a.rows(); ++i) {
    for (Eigen::Index k = 0; k < p.a.cols(); ++k) p.a(i, k) = lcg.next();
  }
  for (Eigen::Index i = 0; i < p.b.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.b.cols(); ++j) p.b(i, j) = lcg.next();
  }
  return p;
}

namespace detail {

template <typename Scalar>
void check_shapes(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b,
                  const DenseMatrix<Scalar>& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw std::invalid_argument("matmul: dimension mismatch");
  }
}

}  // namespace detail

/// C[i][j] += sum_k A[i][k] * B[k][j] for rows [begin, end), loops i, j, k.
template <typename Scalar>
void multiply_rows(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b, DenseMatrix<Scalar>& c,
                   Eigen::Index begin, Eigen::Index end) {
  const Eigen::Index p = b.cols();
  const Eigen::Index n = a.cols();
  for (Eigen::Index i = begin; i < end; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      Scalar acc = c(i, j);
      for (Eigen::Index k = 0; k < n; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
}

template <typename Scalar>
void matmul_seq(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b, DenseMatrix<Scalar>& c) {
  detail::check_shapes(a, b, c);
  multiply_rows(a, b, c, 0, a.rows());
}

/// Rows statically partitioned over `cl` worker tasks evaluated on `rt`.
/// Returns the number of worker tasks dispatched (cl).
template <typename Scalar>
std::size_t matmul_parfor(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b,
                          DenseMatrix<Scalar>& c, Runtime& rt, int cl,
                          Strategy strategy = Strategy::RoundRobin) {
  detail::check_shapes(a, b, c);
  if (cl < 1) throw std::invalid_argument("concurrency level must be >= 1");
  const int m = static_cast<int>(a.rows());
  const auto* pa = &a;
  const auto* pb = &b;
  auto* pc = &c;
  auto& reg = rt.registry();
  const KernelId worker = reg.add("matmul_rows", 1, [=](std::span<const Value> args, const KernelContext&) {
    PartitionSpec spec{strategy, SingleLoop{0, m}, static_cast<int>(args[0].as_int()), cl};
    run_partition(spec, [&](int i) { multiply_rows(*pa, *pb, *pc, i, i + 1); });
    return Value{};
  });
  const TaskExpr program = spawn_n(cl, [&](std::size_t k) {
    return call(reg, worker, {literal(static_cast<std::int64_t>(k))});
  });
  rt.evaluate(program);
  return static_cast<std::size_t>(cl);
}

inline std::size_t task_count(int m, int cutoff) {
  if (m < 1 || cutoff < 1) throw std::invalid_argument("task_count needs m, cutoff >= 1");
  return static_cast<std::size_t>((m + cutoff - 1) / cutoff);
}

/// One pool task per `cutoff` consecutive rows; the final task takes the
/// remainder when cutoff does not divide m. Returns the tasks dispatched.
template <typename Scalar>
std::size_t matmul_taskpool(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b,
                            DenseMatrix<Scalar>& c, TaskPool& pool, int cutoff) {
  detail::check_shapes(a, b, c);
  const Eigen::Index m = a.rows();
  if (cutoff < 1 || cutoff > m) throw std::invalid_argument("cutoff must lie in [1, m]");
  const std::size_t tasks = task_count(static_cast<int>(m), cutoff);
  const auto* pa = &a;
  const auto* pb = &b;
  auto* pc = &c;
  for (std::size_t t = 0; t < tasks; ++t) {
    const Eigen::Index begin = static_cast<Eigen::Index>(t) * cutoff;
    const Eigen::Index end = std::min<Eigen::Index>(begin + cutoff, m);
    pool.submit([=] { multiply_rows(*pa, *pb, *pc, begin, end); });
  }
  pool.wait();
  return tasks;
}

}  // namespace taskred::matmul
