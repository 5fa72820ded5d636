#include <doctest.h>

#include <sstream>
#include <vector>

#include "support/oracles.hpp"
#include "taskred/blocked_sparse_matrix.hpp"

using namespace taskred;

namespace {

// Independent restatement of the generator for comparison.
std::vector<float> lcg_stream(std::size_t n) {
  std::vector<float> out;
  long state = 1325;
  for (std::size_t k = 0; k < n; ++k) {
    state = (3125 * state) % 65536;
    out.push_back(static_cast<float>((state - 32768.0) / 16384.0));
  }
  return out;
}

}  // namespace

TEST_CASE("generator sequence") {
  BotsLcg lcg;
  CHECK(lcg.next() == -1.27630615234375F);
  CHECK(lcg.next() == -0.45672607421875F);
  CHECK(lcg.next() == 0.73101806640625F);
  CHECK(lcg.next() == 0.43145751953125F);
  BotsLcg again;
  for (float v : lcg_stream(1000)) REQUIRE(again.next() == v);
}

TEST_CASE("structure predicate block counts") {
  CHECK(count_structure(1) == 1);
  CHECK(count_structure(2) == 4);
  CHECK(count_structure(5) == 17);
  CHECK(count_structure(10) == 38);
  CHECK(count_structure(25) == 133);
  CHECK(count_structure(50) == 364);
  CHECK(count_structure(100) == 1148);
  CHECK(structure_predicate(0, 4));
  CHECK_FALSE(structure_predicate(2, 4));  // smaller index 2 is not a multiple of three
  CHECK(structure_predicate(6, 0));
  CHECK_FALSE(structure_predicate(1, 5));
}

TEST_CASE("genmat fills allocated blocks from one stream") {
  SUBCASE("single block") {
    const SparseMatrixF m = genmat(1, 1);
    CHECK(m.allocated_count() == 1);
    CHECK(m.at(0, 0)(0, 0) == -1.27630615234375F);
  }
  SUBCASE("2x2 grid of 2x2 blocks") {
    const SparseMatrixF m = genmat(2, 2);
    CHECK(m.allocated_count() == 4);
    const auto v = lcg_stream(16);
    const DenseMatrix<float> d = to_dense(m);
    // block (0,0) takes v0..v3, (0,1) v4..v7, (1,0) v8..v11, (1,1) v12..v15
    CHECK(d(0, 0) == v[0]);
    CHECK(d(0, 1) == v[1]);
    CHECK(d(1, 0) == v[2]);
    CHECK(d(0, 2) == v[4]);
    CHECK(d(1, 3) == v[7]);
    CHECK(d(2, 0) == v[8]);
    CHECK(d(3, 3) == v[15]);
  }
  SUBCASE("pattern follows the predicate") {
    const SparseMatrixF m = genmat(10, 2);
    for (int ii = 0; ii < 10; ++ii) {
      for (int jj = 0; jj < 10; ++jj) CHECK(m.allocated(ii, jj) == structure_predicate(ii, jj));
    }
  }
}

TEST_CASE("sparsity of the standard grids") {
  CHECK(genmat(50, 1).sparsity() == doctest::Approx(1.0 - 364.0 / 2500.0));
  CHECK(genmat(100, 1).sparsity() == doctest::Approx(0.8852));
  CHECK(genmat(1, 3).sparsity() == 0.0);
}

TEST_CASE("dense round trip keeps pattern and values") {
  const SparseMatrixF m = genmat(7, 3);
  const SparseMatrixF back = from_dense(to_dense(m), 3, m.pattern());
  CHECK(back == m);
  SparseMatrixF copy = m;
  CHECK(copy == m);
  copy.at(0, 0)(1, 1) += 1.0F;
  CHECK_FALSE(copy == m);
  CHECK_THROWS_AS(from_dense(to_dense(m), 4, m.pattern()), std::invalid_argument);
  CHECK_THROWS_AS(from_dense(to_dense(m), 3, BlockPattern(3)), std::invalid_argument);
}

TEST_CASE("block access and allocation") {
  SparseMatrixF m(3, 2);
  CHECK(m.allocated_count() == 0);
  CHECK(m.block(1, 2) == nullptr);
  CHECK_THROWS_AS(m.at(1, 2), std::out_of_range);
  CHECK_THROWS_AS((void)m.allocated(3, 0), std::out_of_range);
  auto& b = m.allocate_zero(1, 2);
  CHECK(b.isZero());
  b(0, 0) = 5.0F;
  CHECK(m.allocate_zero(1, 2)(0, 0) == 5.0F);  // existing block is kept
  CHECK(m.allocated_count() == 1);
  CHECK_THROWS_AS(SparseMatrixF(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(SparseMatrixF(2, 0), std::invalid_argument);
}

TEST_CASE("relative comparison") {
  Eigen::MatrixXf a(1, 1);
  Eigen::MatrixXf b(1, 1);
  a << 1.0F;
  b << 1.001F;
  CHECK(compare(a, b, 1e-2).pass);
  CHECK_FALSE(compare(a, b, 1e-4).pass);
  CHECK(compare(a, b, 1e-2).max_rel_error == doctest::Approx(0.001 / 1.001).epsilon(1e-4));
  a << 0.0F;
  b << 0.0F;
  CHECK(compare(a, b, 0.0).pass);
  b << std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(compare(a, b, 1e9).pass);
  CHECK_THROWS_AS(compare(a, Eigen::MatrixXf(2, 1), 1.0), std::invalid_argument);
}

TEST_CASE("dump lists allocated blocks") {
  SparseMatrixF m(2, 1);
  m.allocate_zero(1, 0)(0, 0) = 2.5F;
  std::ostringstream os;
  dump(os, m);
  CHECK(os.str() == "2 1\n1 0\n2.5\n");
}

TEST_CASE("double blocks work the same way") {
  BlockedSparseMatrix<double> m(2, 2);
  m.allocate_zero(0, 0) = Block<double>::Identity(2, 2);
  CHECK(to_dense(m)(1, 1) == 1.0);
  CHECK(to_dense(m)(3, 3) == 0.0);
}
