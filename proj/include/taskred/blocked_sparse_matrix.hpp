#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iosfwd>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace taskred {

template <typename Scalar>
using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Allocation pattern of a generated matrix (row-major over the block grid).
using BlockPattern = std::vector<bool>;

/// Linear congruential generator used for matrix contents:
/// state <- 3125 * state mod 65536, value = (state - 32768) / 16384.
class BotsLcg {
 public:
  static constexpr std::uint32_t kSeed = 1325;

  explicit BotsLcg(std::uint32_t seed = kSeed) : state_(seed % 65536U) {}

  [[nodiscard]] std::uint32_t state() const { return state_; }

  /// Advances the state and returns the corresponding value in [-2, 2).
  float next() {
    state_ = (3125U * state_) % 65536U;
    return static_cast<float>((static_cast<double>(state_) - 32768.0) / 16384.0);
  }

 private:
  std::uint32_t state_;
};

/// True iff block (ii, jj) is allocated by genmat: the tridiagonal block band
/// always; otherwise neither index odd and, off the diagonal, the smaller of
/// the pair a multiple of three.
constexpr bool structure_predicate(int ii, int jj) {
  if (ii == jj || ii == jj - 1 || ii - 1 == jj) return true;
  if (ii % 2 == 1 || jj % 2 == 1) return false;
  if (ii < jj && ii % 3 != 0) return false;
  if (ii > jj && jj % 3 != 0) return false;
  return true;
}

/// Number of blocks structure_predicate allocates on an nb x nb grid.
inline std::size_t count_structure(int nb) {
  std::size_t n = 0;
  for (int ii = 0; ii < nb; ++ii) {
    for (int jj = 0; jj < nb; ++jj) n += structure_predicate(ii, jj) ? 1 : 0;
  }
  return n;
}

/// NB x NB grid of optionally allocated BS x BS row-major blocks. Distinct
/// blocks may be touched concurrently; allocating block (ii, jj) only writes
/// that grid slot.
template <typename Scalar>
class BlockedSparseMatrix {
 public:
  using BlockType = Block<Scalar>;

  BlockedSparseMatrix(int nb, int bs) : nb_(nb), bs_(bs) {
    if (nb < 1 || bs < 1) throw std::invalid_argument("NB and BS must be >= 1");
    blocks_.resize(static_cast<std::size_t>(nb) * static_cast<std::size_t>(nb));
  }

  BlockedSparseMatrix(const BlockedSparseMatrix& other) : nb_(other.nb_), bs_(other.bs_) {
    blocks_.resize(other.blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (other.blocks_[k]) blocks_[k] = std::make_unique<BlockType>(*other.blocks_[k]);
    }
  }
  BlockedSparseMatrix& operator=(const BlockedSparseMatrix& other) {
    if (this != &other) *this = BlockedSparseMatrix(other);
    return *this;
  }
  BlockedSparseMatrix(BlockedSparseMatrix&&) noexcept = default;
  BlockedSparseMatrix& operator=(BlockedSparseMatrix&&) noexcept = default;

  [[nodiscard]] int nb() const { return nb_; }
  [[nodiscard]] int bs() const { return bs_; }

  [[nodiscard]] bool allocated(int ii, int jj) const { return blocks_[index(ii, jj)] != nullptr; }

  /// nullptr when the block is not allocated.
  [[nodiscard]] BlockType* block(int ii, int jj) { return blocks_[index(ii, jj)].get(); }
  [[nodiscard]] const BlockType* block(int ii, int jj) const { return blocks_[index(ii, jj)].get(); }

  BlockType& at(int ii, int jj) {
    BlockType* b = block(ii, jj);
    if (b == nullptr) throw std::out_of_range("block not allocated");
    return *b;
  }
  [[nodiscard]] const BlockType& at(int ii, int jj) const {
    const BlockType* b = block(ii, jj);
    if (b == nullptr) throw std::out_of_range("block not allocated");
    return *b;
  }

  /// Existing block, or a new zero-filled one.
  BlockType& allocate_zero(int ii, int jj) {
    auto& slot = blocks_[index(ii, jj)];
    if (!slot) slot = std::make_unique<BlockType>(BlockType::Zero(bs_, bs_));
    return *slot;
  }

  [[nodiscard]] std::size_t allocated_count() const {
    return static_cast<std::size_t>(
        std::count_if(blocks_.begin(), blocks_.end(), [](const auto& b) { return b != nullptr; }));
  }

  /// Fraction of grid cells without a block.
  [[nodiscard]] double sparsity() const {
    return 1.0 - static_cast<double>(allocated_count()) / static_cast<double>(blocks_.size());
  }

  [[nodiscard]] BlockPattern pattern() const {
    BlockPattern p(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) p[k] = blocks_[k] != nullptr;
    return p;
  }

  /// Same pattern and bitwise-identical block contents.
  friend bool operator==(const BlockedSparseMatrix& a, const BlockedSparseMatrix& b) {
    if (a.nb_ != b.nb_ || a.bs_ != b.bs_) return false;
    const auto bytes = static_cast<std::size_t>(a.bs_) * static_cast<std::size_t>(a.bs_) * sizeof(Scalar);
    for (std::size_t k = 0; k < a.blocks_.size(); ++k) {
      const auto& x = a.blocks_[k];
      const auto& y = b.blocks_[k];
      if ((x == nullptr) != (y == nullptr)) return false;
      if (x && std::memcmp(x->data(), y->data(), bytes) != 0) return false;
    }
    return true;
  }

 private:
  [[nodiscard]] std::size_t index(int ii, int jj) const {
    if (ii < 0 || jj < 0 || ii >= nb_ || jj >= nb_) throw std::out_of_range("block index out of range");
    return static_cast<std::size_t>(ii) * static_cast<std::size_t>(nb_) + static_cast<std::size_t>(jj);
  }

  int nb_;
  int bs_;
  std::vector<std::unique_ptr<BlockType>> blocks_;
};

using SparseMatrixF = BlockedSparseMatrix<float>;

/// Deterministic benchmark matrix: blocks allocated per structure_predicate,
/// visited row-major over the grid and filled element-row-major from one
/// BotsLcg stream.
inline SparseMatrixF genmat(int nb, int bs) {
  SparseMatrixF m(nb, bs);
  BotsLcg lcg;
  for (int ii = 0; ii < nb; ++ii) {
    for (int jj = 0; jj < nb; ++jj) {
      if (!structure_predicate(ii, jj)) continue;
      auto& b = m.allocate_zero(ii, jj);
      for (int i = 0; i < bs; ++i) {
        for (int j = 0; j < bs; ++j) b(i, j) = lcg.next();
      }
    }
  }
  return m;
}

/// Unallocated blocks contribute zeros.
template <typename Scalar>
DenseMatrix<Scalar> to_dense(const BlockedSparseMatrix<Scalar>& m) {
  const int bs = m.bs();
  DenseMatrix<Scalar> d = DenseMatrix<Scalar>::Zero(m.nb() * bs, m.nb() * bs);
  for (int ii = 0; ii < m.nb(); ++ii) {
    for (int jj = 0; jj < m.nb(); ++jj) {
      if (const auto* b = m.block(ii, jj)) d.block(ii * bs, jj * bs, bs, bs) = *b;
    }
  }
  return d;
}

/// Re-blocks a dense matrix, allocating exactly the blocks set in `pattern`.
template <typename Scalar>
BlockedSparseMatrix<Scalar> from_dense(const DenseMatrix<Scalar>& d, int bs, const BlockPattern& pattern) {
  if (bs < 1 || d.rows() != d.cols() || d.rows() % bs != 0) {
    throw std::invalid_argument("dense matrix is not a square multiple of the block size");
  }
  const int nb = static_cast<int>(d.rows() / bs);
  if (pattern.size() != static_cast<std::size_t>(nb) * static_cast<std::size_t>(nb)) {
    throw std::invalid_argument("pattern does not match the block grid");
  }
  BlockedSparseMatrix<Scalar> m(nb, bs);
  for (int ii = 0; ii < nb; ++ii) {
    for (int jj = 0; jj < nb; ++jj) {
      if (pattern[static_cast<std::size_t>(ii) * nb + jj]) {
        m.allocate_zero(ii, jj) = d.block(ii * bs, jj * bs, bs, bs);
      }
    }
  }
  return m;
}

struct CompareResult {
  double max_rel_error = 0.0;
  bool pass = true;
};

inline constexpr double kRelErrorFloor = 1e-20;

/// Elementwise |a - b| / max(|a|, |b|, 1e-20); passes iff the maximum is at
/// most rel_tol. NaN anywhere fails.
template <typename DerivedA, typename DerivedB>
CompareResult compare(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                      double rel_tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("compare: shape mismatch");
  }
  CompareResult r;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double x = static_cast<double>(a(i, j));
      const double y = static_cast<double>(b(i, j));
      const double denom = std::max({std::abs(x), std::abs(y), kRelErrorFloor});
      const double err = std::abs(x - y) / denom;
      if (std::isnan(err)) {
        r.max_rel_error = std::numeric_limits<double>::infinity();
      } else {
        r.max_rel_error = std::max(r.max_rel_error, err);
      }
    }
  }
  r.pass = r.max_rel_error <= rel_tol;
  return r;
}

/// Debug dump: "NB BS", then per allocated block "ii jj" and BS rows of values.
template <typename Scalar>
void dump(std::ostream& os, const BlockedSparseMatrix<Scalar>& m) {
  os << m.nb() << ' ' << m.bs() << '\n';
  for (int ii = 0; ii < m.nb(); ++ii) {
    for (int jj = 0; jj < m.nb(); ++jj) {
      const auto* b = m.block(ii, jj);
      if (b == nullptr) continue;
      os << ii << ' ' << jj << '\n';
      for (int i = 0; i < m.bs(); ++i) {
        for (int j = 0; j < m.bs(); ++j) os << (j == 0 ? "" : " ") << (*b)(i, j);
        os << '\n';
      }
    }
  }
}

}  // namespace taskred
