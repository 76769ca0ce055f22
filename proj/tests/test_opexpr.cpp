#include "helpers.hpp"

#include "msa/error.hpp"
#include "msa/opexpr.hpp"

#include <doctest.h>

#include <filesystem>

using namespace msa;

namespace {

SparseMatrix random_sparse(int rows, int cols, std::mt19937_64& rng, double fill = 0.3)
{
  std::uniform_real_distribution<double> u(-1, 1), p(0, 1);
  TripletBuilder b(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (p(rng) < fill)
        b.add(i, j, u(rng));
  return b.finalize();
}

Vector random_vec(int n, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(-1, 1);
  Vector v(n);
  for (int i = 0; i < n; ++i)
    v[i] = u(rng);
  return v;
}

} // namespace

TEST_SUITE("opexpr")
{
  TEST_CASE("product action")
  {
    DenseMatrix a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 0, 1, 1, 0;
    const Op ab = matrix_op(a.sparseView()) * matrix_op(b.sparseView());
    Vector x(2);
    x << 1, 1;
    const Vector y = matvec(ab, x);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 7.0);
    CHECK(test::max_abs(test::dense(collapse(ab)) - a * b) == 0.0);
    CHECK(matvec(identity_op(2), x) == x);
  }

  TEST_CASE("block action")
  {
    DenseMatrix a(2, 2), c(2, 1);
    a << 2, 0, 0, 3;
    c << 1, 1;
    const Op blk = block_mat({{matrix_op(a.sparseView()), matrix_op(c.sparseView())},
                              {transpose(matrix_op(c.sparseView())), nullptr}});
    CHECK(blk->rows() == 3);
    Vector x(3);
    x << 1, 1, 1;
    const Vector y = matvec(blk, x);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 4.0);
    CHECK(y[2] == 2.0);
    DenseMatrix full(3, 3);
    full << 2, 0, 1, 0, 3, 1, 1, 1, 0;
    CHECK(test::max_abs(test::dense(collapse(blk)) - full) == 0.0);

    const BlockVector bx = BlockVector::split(x, {2, 1});
    const BlockVector by = matvec(blk, bx);
    CHECK(by.flatten() == y);
    CHECK(block_of(blk, 1, 1)->kind() == OpKind::Zero);
  }

  TEST_CASE("algebraic identities")
  {
    std::mt19937_64 rng(21);
    const SparseMatrix m = random_sparse(5, 5, rng);
    const Op M = matrix_op(m);
    const Op diff = M - M;
    CHECK(test::max_abs(test::dense(collapse(diff))) == 0.0);
    CHECK(transpose(transpose(M)).get() == M.get());
    const Op sq = M * transpose(M);
    CHECK(test::max_abs(test::dense(collapse(sq)) - test::dense(collapse(sq)).transpose()) <= 1e-14);
    CHECK(test::max_abs(test::dense(collapse(2.5 * M)) - 2.5 * test::dense(m)) == 0.0);
    const Vector x = random_vec(5, rng);
    CHECK(matvec(zero_op(3, 5), x).isZero(0.0));
    CHECK(matvec(zero_op(3, 5), x).size() == 3);
  }

  TEST_CASE("block diagonal")
  {
    std::mt19937_64 rng(22);
    const SparseMatrix a = random_sparse(3, 3, rng), b = random_sparse(2, 2, rng);
    const Op d = block_diag_mat({matrix_op(a), matrix_op(b)});
    const DenseMatrix full = test::dense(collapse(d));
    CHECK(test::max_abs(full.topLeftCorner(3, 3) - test::dense(a)) == 0.0);
    CHECK(test::max_abs(full.bottomRightCorner(2, 2) - test::dense(b)) == 0.0);
    CHECK(full.topRightCorner(3, 2).isZero(0.0));
    CHECK_THROWS_AS(block_diag_mat({matrix_op(random_sparse(2, 3, rng))}), InvalidArgument);
  }

  TEST_CASE("shape errors")
  {
    const Op a = matrix_op(SparseMatrix(2, 3)), b = matrix_op(SparseMatrix(2, 2));
    CHECK_THROWS_AS(a * b, InvalidArgument);
    CHECK_THROWS_AS(a + b, InvalidArgument);
    CHECK_THROWS_AS(matvec(a, Vector::Zero(2)), InvalidArgument);
    CHECK_THROWS_AS(block_mat({{a, b}, {b, nullptr}}), InvalidArgument);
    CHECK_THROWS_AS(block_mat({{nullptr}}), InvalidArgument);
  }

  TEST_CASE("lazy action agrees with collapse on random vectors")
  {
    std::mt19937_64 rng(23);
    const SparseMatrix a = random_sparse(6, 4, rng), b = random_sparse(4, 4, rng), c = random_sparse(6, 6, rng);
    const Op A = matrix_op(a), B = matrix_op(b), C = matrix_op(c);
    std::vector<Op> exprs{
      A * B,
      transpose(A) * C * A + B,
      C - 3.0 * (A * transpose(A)),
      block_mat({{C, A}, {transpose(A), scaled(-1.0, B)}}),
      transpose(block_mat({{A, nullptr}, {dense_op(test::dense(b).topRows(2)), identity_op(2)}})),
    };
    for (const Op& e : exprs) {
      const DenseMatrix full = test::dense(collapse(e));
      for (int k = 0; k < 20; ++k) {
        const Vector x = random_vec(e->cols(), rng), y = random_vec(e->rows(), rng);
        CHECK((matvec(e, x) - full * x).norm() <= 1e-12 * (1 + x.norm()));
        CHECK((e->apply(y, true) - full.transpose() * y).norm() <= 1e-12 * (1 + y.norm()));
      }
    }
  }

  TEST_CASE("inverse handles are not collapsible")
  {
    const Op inv = inverse_op(
      3, [](const Vector& x) { return Vector(0.5 * x); }, nullptr, "half");
    CHECK_THROWS_AS(collapse(inv), NotCollapsible);
    CHECK_THROWS_AS(collapse(inv * identity_op(3)), NotCollapsible);
    const Vector x = Vector::Ones(3);
    CHECK(matvec(inv, x)[1] == 0.5);
    CHECK(inv->apply(x, true)[2] == 0.5);
  }

  TEST_CASE("symmetric block elimination")
  {
    DenseMatrix a(3, 3);
    a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
    const Op A = block_mat({{matrix_op(a.sparseView())}});
    BlockVector b = BlockVector::split(Vector::Ones(3), {3});
    const Op C = constrain_block_system(A, b, {BlockConstraint{{0}, {2.0}}});
    const DenseMatrix c = test::dense(collapse(C));
    CHECK(test::max_abs(c - c.transpose()) == 0.0);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 1) == 0.0);
    const Vector x = c.lu().solve(b.flatten());
    CHECK(x[0] == doctest::Approx(2.0));
    // The free part solves the original system with the constraint lifted.
    const Vector r = a * x - Vector::Ones(3);
    CHECK(std::abs(r[1]) < 1e-12);
    CHECK(std::abs(r[2]) < 1e-12);
  }

  TEST_CASE("matrix market round trip")
  {
    std::mt19937_64 rng(24);
    const SparseMatrix a = random_sparse(7, 5, rng);
    const auto path = std::filesystem::temp_directory_path() / "msa_opexpr_roundtrip.mtx";
    write_matrix_market(matrix_op(a) * identity_op(5), path.string());
    CHECK(test::max_abs(test::dense(read_matrix_market(path)) - test::dense(a)) == 0.0);
    std::filesystem::remove(path);
  }
}
