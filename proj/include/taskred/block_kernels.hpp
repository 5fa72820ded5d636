#pragma once

// The four block kernels of right-looking blocked LU without pivoting. Loop
// orders are fixed so every driver performs the same floating-point
// operations on each block.

#include <optional>
#include <stdexcept>
#include <string>

#include "taskred/blocked_sparse_matrix.hpp"

namespace taskred {

/// Zero pivot met while factoring or solving against a diagonal block.
class SingularBlockError : public std::runtime_error {
 public:
  explicit SingularBlockError(int pivot, std::optional<int> step = std::nullopt)
      : std::runtime_error(describe(pivot, step)), pivot_(pivot), step_(step) {}

  [[nodiscard]] int pivot() const { return pivot_; }
  [[nodiscard]] std::optional<int> step() const { return step_; }

  [[nodiscard]] SingularBlockError at_step(int kk) const { return SingularBlockError(pivot_, kk); }

 private:
  static std::string describe(int pivot, std::optional<int> step) {
    std::string s = "zero pivot at element " + std::to_string(pivot);
    if (step) s += " of diagonal block (" + std::to_string(*step) + ", " + std::to_string(*step) + ")";
    return s;
  }

  int pivot_;
  std::optional<int> step_;
};

/// In-place Doolittle factorization: unit-lower L below the diagonal, U on
/// and above it.
template <typename Scalar>
void lu0(Block<Scalar>& diag) {
  const Eigen::Index bs = diag.rows();
  for (Eigen::Index k = 0; k < bs; ++k) {
    if (diag(k, k) == Scalar(0)) throw SingularBlockError(static_cast<int>(k));
    for (Eigen::Index i = k + 1; i < bs; ++i) {
      diag(i, k) = diag(i, k) / diag(k, k);
      for (Eigen::Index j = k + 1; j < bs; ++j) {
        diag(i, j) = diag(i, j) - diag(i, k) * diag(k, j);
      }
    }
  }
}

/// col <- L^-1 col, with L the unit-lower part of a factored diagonal block.
template <typename Scalar>
void fwd(const Block<Scalar>& diag, Block<Scalar>& col) {
  const Eigen::Index bs = diag.rows();
  for (Eigen::Index j = 0; j < bs; ++j) {
    for (Eigen::Index k = 0; k < bs; ++k) {
      for (Eigen::Index i = k + 1; i < bs; ++i) {
        col(i, j) = col(i, j) - diag(i, k) * col(k, j);
      }
    }
  }
}

/// row <- row U^-1, with U the upper part (diagonal included) of a factored
/// diagonal block.
template <typename Scalar>
void bdiv(const Block<Scalar>& diag, Block<Scalar>& row) {
  const Eigen::Index bs = diag.rows();
  for (Eigen::Index k = 0; k < bs; ++k) {
    if (diag(k, k) == Scalar(0)) throw SingularBlockError(static_cast<int>(k));
  }
  for (Eigen::Index i = 0; i < bs; ++i) {
    for (Eigen::Index k = 0; k < bs; ++k) {
      row(i, k) = row(i, k) / diag(k, k);
      for (Eigen::Index j = k + 1; j < bs; ++j) {
        row(i, j) = row(i, j) - row(i, k) * diag(k, j);
      }
    }
  }
}

/// inner <- inner - row * col, loop order i, j, k.
template <typename Scalar>
void bmod(const Block<Scalar>& row, const Block<Scalar>& col, Block<Scalar>& inner) {
  const Eigen::Index bs = inner.rows();
  for (Eigen::Index i = 0; i < bs; ++i) {
    for (Eigen::Index j = 0; j < bs; ++j) {
      for (Eigen::Index k = 0; k < bs; ++k) {
        inner(i, j) = inner(i, j) - row(i, k) * col(k, j);
      }
    }
  }
}

/// Dense in-place non-pivoting Doolittle LU over the whole matrix, used as the
/// verification oracle for the blocked drivers.
template <typename Scalar>
void dense_lu_inplace(DenseMatrix<Scalar>& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (a(k, k) == Scalar(0)) throw SingularBlockError(static_cast<int>(k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      a(i, k) = a(i, k) / a(k, k);
      const Scalar lik = a(i, k);
      if (lik == Scalar(0)) continue;
      for (Eigen::Index j = k + 1; j < n; ++j) a(i, j) = a(i, j) - lik * a(k, j);
    }
  }
}

}  // namespace taskred
