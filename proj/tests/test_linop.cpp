#include "regulus/linop.hpp"

#include "regulus/csv.hpp"
#include "test_support.hpp"

#include <cstdio>
#include <filesystem>

using namespace regulus;
using namespace regulus::testing;

TEST_CASE("kron_apply identity case") {
  Matrix b = Matrix::Identity(2, 2);
  auto c = identity_op(3);
  Vector x(6);
  x << 1, 2, 3, 4, 5, 6;
  CHECK((kron_apply(b, *c, x) - x).norm() == 0.0);
}

TEST_CASE("kron_apply row difference") {
  Matrix b(1, 2);
  b << 1, -1;
  auto c = identity_op(2);
  Vector x(4);
  x << 1, 2, 3, 4;
  Vector y = kron_apply(b, *c, x);
  // oracle: explicit 2x4 Kronecker product
  Matrix k = dense_kron(b, Matrix::Identity(2, 2));
  CHECK((y - k * x).norm() <= 1e-15);
  CHECK(y[0] == doctest::Approx(-2).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(-2).epsilon(1e-14));
}

TEST_CASE("kron_apply diagonal factors") {
  Matrix b = Vector::Map((const double[]){2, 3}, 2).asDiagonal();
  auto c = diagonal_op(Vector::Ones(2));
  Vector x = Vector::Ones(4);
  Vector y = kron_apply(b, *c, x);
  Matrix k = dense_kron(b, Matrix::Identity(2, 2));
  CHECK((y - k * x).norm() <= 1e-15);
  Vector expect(4);
  expect << 2, 2, 3, 3;
  CHECK((y - expect).norm() <= 1e-15);
}

TEST_CASE("kron_apply shape error") {
  Matrix b(1, 2);
  b << 1, -1;
  auto c = identity_op(2);
  CHECK_THROWS_AS(kron_apply(b, *c, Vector::Ones(5)), ShapeError);
}

TEST_CASE("block_diag_apply basics") {
  {
    Matrix blk(1, 1);
    blk << 2;
    BlockDiagOp op({dense_op(blk)});
    Vector x(1);
    x << 5;
    CHECK(block_diag_apply(op, x)[0] == 10.0);
  }
  {
    Matrix b1(1, 1), b2(1, 1);
    b1 << 2;
    b2 << 3;
    BlockDiagOp op({dense_op(b1), dense_op(b2)});
    Vector x = Vector::Ones(2);
    Vector y = block_diag_apply(op, x);
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 3.0);
  }
  {
    Matrix ones(1, 2);
    ones << 1, 1;
    BlockDiagOp op({identity_op(2), dense_op(ones)});
    Vector x(4);
    x << 1, 2, 3, 4;
    Vector y = block_diag_apply(op, x);
    // oracle: assemble the full matrix and multiply
    Matrix full = Matrix::Zero(3, 4);
    full.topLeftCorner(2, 2) = Matrix::Identity(2, 2);
    full.bottomRightCorner(1, 2) = ones;
    CHECK((y - full * x).norm() <= 1e-15);
    CHECK(y[2] == 7.0);
  }
}

TEST_CASE("block diag of identical blocks equals Kronecker form") {
  Matrix blk = randm(3, 3, 42);
  auto bop = dense_op(blk);
  BlockDiagOp block({bop, bop, bop, bop});
  auto kron = kron_op(identity_op(4), bop);
  Vector x = randv(12, 5);
  CHECK((block.apply(x) - kron->apply(x)).norm() <= 1e-14 * x.norm());
}

TEST_CASE("operator_norm_estimate") {
  Vector d(2);
  d << 3, 1;
  CHECK(operator_norm_estimate(*diagonal_op(d), 50) ==
        doctest::Approx(3.0).epsilon(1e-6));
  CHECK(operator_norm_estimate(*identity_op(10), 5) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(operator_norm_estimate(*zero_op(4, 3), 10) == 0.0);

  Matrix a = randm(20, 15, 99);
  double est = operator_norm_estimate(*dense_op(a), 200);
  Eigen::JacobiSVD<Matrix> dec(a);
  double sigma1 = dec.singularValues()[0];
  CHECK(est == doctest::Approx(sigma1).epsilon(1e-6));
  CHECK(est <= sigma1 + 1e-12);

  // lower bound, nondecreasing in iters
  double prev = 0;
  for (int iters : {1, 3, 10, 40}) {
    double e = operator_norm_estimate(*dense_op(a), iters);
    CHECK(e <= sigma1 + 1e-12);
    CHECK(e >= prev - 1e-12);
    prev = e;
  }
}

TEST_CASE("adjoint consistency and linearity of combinators") {
  Matrix a = randm(7, 5, 1);
  auto dense = dense_op(a);
  check_adjoint(*dense);
  check_linear(*dense);

  auto kron = kron_op(dense_op(randm(3, 4, 2)), dense_op(randm(5, 2, 3)));
  check_adjoint(*kron);
  check_linear(*kron);

  BlockDiagOp block({dense_op(randm(3, 2, 4)), dense_op(randm(2, 5, 5))});
  check_adjoint(block);

  auto comp = compose_op(dense_op(randm(4, 7, 6)), dense);
  check_adjoint(*comp);

  auto stack = vstack_op({dense_op(randm(3, 5, 7)), dense_op(randm(2, 5, 8))});
  check_adjoint(*stack);

  auto scaled = scaled_op(-2.5, dense);
  check_adjoint(*scaled);

  auto diag = diagonal_op(randv(6, 9));
  check_adjoint(*diag);
}

TEST_CASE("to_dense agrees with combinator structure and enforces the cap") {
  Matrix a = randm(4, 3, 21), b = randm(2, 5, 22);
  auto kron = kron_op(dense_op(a), dense_op(b));
  CHECK((kron->to_dense() - dense_kron(a, b)).norm() <= 1e-13);
  CHECK_THROWS_AS(zero_op(5000, 4000)->to_dense(), ShapeError);
}

TEST_CASE("apply is shape checked") {
  auto op = dense_op(randm(3, 4, 33));
  CHECK_THROWS_AS(op->apply(Vector::Ones(3)), ShapeError);
  CHECK_THROWS_AS(op->apply_transpose(Vector::Ones(4)), ShapeError);
}

TEST_CASE("problem data must be finite") {
  Matrix bad(1, 1);
  bad << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dense_op(bad), ParameterError);
}

TEST_CASE("CSV round trip is exact") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "regulus_csv_test";
  fs::create_directories(dir);
  Matrix m = randm(5, 3, 77);
  m(0, 0) = 1.0 / 3.0;
  m(1, 2) = -1e-17;
  std::string path = (dir / "m.csv").string();
  write_matrix_csv(path, m);
  Matrix back = read_matrix_csv(path);
  CHECK(back.rows() == m.rows());
  CHECK(back.cols() == m.cols());
  CHECK((back - m).norm() == 0.0);  // 17 significant digits round-trip

  Vector v = randv(6, 78);
  std::string vpath = (dir / "v.csv").string();
  write_vector_csv(vpath, v);
  CHECK((read_vector_csv(vpath) - v).norm() == 0.0);
  fs::remove_all(dir);
}
