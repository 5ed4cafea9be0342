#include "regulus/direct.hpp"

#include "test_support.hpp"

using namespace regulus;
using namespace regulus::testing;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_CASE("filter_factors") {
  {
    Vector s = Vector::Ones(1);
    Vector phi = filter_factors(FilterSpec::tikhonov(1.0), s);
    CHECK(phi[0] == doctest::Approx(0.5));
  }
  {
    Vector s(3);
    s << 3, 2, 1;
    Vector phi = filter_factors(FilterSpec::tsvd(3), s);
    CHECK((phi - Vector::Ones(3)).norm() == 0.0);
  }
  {
    Vector s(3);
    s << 10, 1, 0.1;
    Vector phi = filter_factors(FilterSpec::tikhonov(1.0), s);
    CHECK(phi[0] == doctest::Approx(0.99009900990099009).epsilon(1e-12));
    CHECK(phi[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(phi[2] == doctest::Approx(0.0099009900990099).epsilon(1e-12));
  }
  CHECK_THROWS_AS(filter_factors(FilterSpec::tikhonov(0.0), Vector::Ones(2)),
                  ParameterError);
  CHECK_THROWS_AS(filter_factors(FilterSpec::tikhonov(-1.0), Vector::Ones(2)),
                  ParameterError);
}

TEST_CASE("tsvd_solve on a diagonal system") {
  Matrix a = diag2(2, 1);
  Vector b(2);
  b << 2, 1;
  {
    SolveResult r = tsvd_solve(a, b, RegSelector::fixed(2));
    CHECK((r.x - Vector::Ones(2)).norm() <= 1e-12);
    CHECK(*r.chosen_param == 2);
  }
  {
    // one-term sum by hand: x = (u1^T b / sigma1) v1 = (2/2) e1
    SolveResult r = tsvd_solve(a, b, RegSelector::fixed(1));
    Vector expect(2);
    expect << 1, 0;
    CHECK((r.x - expect).norm() <= 1e-12);
  }
}

TEST_CASE("tsvd_solve discrepancy-principle enumeration") {
  Matrix a = diag2(2, 1);
  Vector b(2);
  b << 2, 1;
  // residual(h=1) = 1, residual(h=2) = 0; eta*delta = 1 picks h = 1
  SolveResult r = tsvd_solve(a, b, RegSelector::dp(0.5, 2.0));
  CHECK(*r.chosen_param == 1);
  CHECK((a * r.x - b).norm() == doctest::Approx(1.0).epsilon(1e-12));
  // oracle: enumerate all h and take the first whose residual meets the bound
  Svd dec = svd(a);
  Vector c = dec.U.transpose() * b;
  int h_oracle = 0;
  for (int h = 1; h <= 2; ++h) {
    double res2 = b.squaredNorm();
    for (int i = 0; i < h; ++i) res2 -= c[i] * c[i];
    if (std::sqrt(std::max(0.0, res2)) <= 1.0) {
      h_oracle = h;
      break;
    }
  }
  CHECK(h_oracle == 1);
  // infeasible when eta*delta is below the residual floor
  Vector b_off(2);
  b_off << 2, 1;
  Matrix tall(3, 2);
  tall.setZero();
  tall(0, 0) = 2;
  tall(1, 1) = 1;
  Vector b3(3);
  b3 << 2, 1, 0.5;  // component outside range(A)
  CHECK_THROWS_AS(tsvd_solve(tall, b3, RegSelector::dp(0.1, 1.01)),
                  DpInfeasibleError);
}

TEST_CASE("tsvd residual is nonincreasing in h") {
  Matrix a = randm(10, 6, 5);
  Vector b = randv(10, 6);
  double prev = std::numeric_limits<double>::infinity();
  for (int h = 1; h <= 6; ++h) {
    SolveResult r = tsvd_solve(a, b, RegSelector::fixed(h));
    double res = (a * r.x - b).norm();
    CHECK(res <= prev + 1e-12);
    prev = res;
  }
}

TEST_CASE("tikhonov_solve standard form") {
  {
    Matrix a = Matrix::Identity(3, 3);
    Vector b = randv(3, 7);
    SolveResult r = tikhonov_solve(a, b, std::nullopt, RegSelector::fixed(1));
    CHECK((r.x - 0.5 * b).norm() <= 1e-12);
  }
  {
    // 2x2 normal equations by hand: (4+1)x1 = 4, (1+1)x2 = 1
    Matrix a = diag2(2, 1);
    Vector b(2);
    b << 2, 1;
    SolveResult r = tikhonov_solve(a, b, std::nullopt, RegSelector::fixed(1));
    CHECK(r.x[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("tikhonov_solve general form matches dense normal equations") {
  Matrix a = randm(6, 4, 8);
  Matrix psi = randm(3, 4, 9);
  Vector b = randv(6, 10);
  const double alpha = 0.1;
  SolveResult r = tikhonov_solve(a, b, psi, RegSelector::fixed(alpha));
  Matrix lhs = a.transpose() * a + alpha * psi.transpose() * psi;
  Vector oracle = lhs.ldlt().solve(a.transpose() * b);
  CHECK((r.x - oracle).norm() <= 1e-8 * oracle.norm());
  // residual of the normal equations
  CHECK((lhs * r.x - a.transpose() * b).norm() <=
        1e-10 * (a.transpose() * b).norm());
}

TEST_CASE("tikhonov filter-factor consistency") {
  Matrix a = randm(8, 5, 11);
  Vector b = randv(8, 12);
  const double alpha = 0.3;
  SolveResult r = tikhonov_solve(a, b, std::nullopt, RegSelector::fixed(alpha));
  Svd dec = svd(a);
  Vector phi = filter_factors(FilterSpec::tikhonov(alpha), dec.sigma);
  Vector recon = Vector::Zero(5);
  Vector c = dec.U.transpose() * b;
  for (Index i = 0; i < 5; ++i)
    recon += phi[i] * (c[i] / dec.sigma[i]) * dec.V.col(i);
  CHECK((r.x - recon).norm() <= 1e-10 * recon.norm());
}

TEST_CASE("tikhonov limits in alpha") {
  Matrix a = randm(9, 5, 13);
  Vector b = randv(9, 14);
  // alpha -> 0: minimum-norm least squares solution
  Vector ls = a.colPivHouseholderQr().solve(b);
  SolveResult r = tikhonov_solve(a, b, std::nullopt,
                                 RegSelector::fixed(1e-12));
  CHECK((r.x - ls).norm() <= 1e-6 * ls.norm());
  // alpha -> inf: ||x|| decreases monotonically to 0
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {1e-2, 1e0, 1e2, 1e4, 1e6}) {
    double nx =
        tikhonov_solve(a, b, std::nullopt, RegSelector::fixed(alpha)).x.norm();
    CHECK(nx < prev);
    prev = nx;
  }
  CHECK(prev <= 1e-4 * ls.norm());
}

TEST_CASE("tikhonov_solve selector validation") {
  Matrix a = diag2(2, 1);
  Vector b(2);
  b << 2, 1;
  RegSelector bad;
  bad.kind = RegSelector::Kind::dp;
  bad.delta = 0;  // dp without a usable delta
  bad.eta = 1.01;
  CHECK_THROWS_AS(tikhonov_solve(a, b, std::nullopt, bad), ParameterError);
}

TEST_CASE("tikhonov dp and gcv selectors pick sensible parameters") {
  Matrix a = randm(20, 10, 15);
  Vector x_true = randv(10, 16);
  Vector b_true = a * x_true;
  Vector noise = randv(20, 17);
  double delta = 0.01 * b_true.norm();
  Vector b = b_true + (delta / noise.norm()) * noise;
  {
    SolveResult r = tikhonov_solve(a, b, std::nullopt,
                                   RegSelector::dp(delta, 1.01));
    double res = (a * r.x - b).norm();
    CHECK(res == doctest::Approx(1.01 * delta).epsilon(1e-7));
    CHECK(res >= delta);
  }
  {
    SolveResult r = tikhonov_solve(a, b, std::nullopt, RegSelector::gcv());
    CHECK((r.x - x_true).norm() / x_true.norm() < 0.5);
  }
}

TEST_CASE("tgsvd with identity Psi equals tsvd for every h") {
  Matrix a = randm(6, 4, 18);
  Vector b = randv(6, 19);
  Matrix psi = Matrix::Identity(4, 4);
  for (int h = 1; h <= 4; ++h) {
    SolveResult tg = tgsvd_solve(a, b, psi, RegSelector::fixed(h));
    SolveResult ts = tsvd_solve(a, b, RegSelector::fixed(h));
    CHECK((tg.x - ts.x).norm() <= 1e-8 * (ts.x.norm() + 1));
  }
}

TEST_CASE("tgsvd at h = k equals general-form Tikhonov with tiny alpha") {
  Matrix a = randm(7, 5, 20);
  Matrix psi = randm(4, 5, 21);
  Vector b = randv(7, 22);
  SolveResult tg = tgsvd_solve(a, b, psi, RegSelector::fixed(4));
  SolveResult tik = tikhonov_solve(a, b, psi, RegSelector::fixed(1e-12));
  CHECK((tg.x - tik.x).norm() <= 1e-6 * tik.x.norm());
}

TEST_CASE("tgsvd h = 0 keeps only the null-space term") {
  Matrix a = randm(7, 5, 23);
  Matrix psi = randm(4, 5, 24);
  Vector b = randv(7, 25);
  SolveResult r = tgsvd_solve(a, b, psi, RegSelector::fixed(0));
  Gsvd dec = gsvd(a, psi);
  Vector c = dec.U.transpose() * b;
  Vector expect = c[4] * dec.Y_dual.col(4);
  CHECK((r.x - expect).norm() <= 1e-10 * (expect.norm() + 1));
}

TEST_CASE("tgsvd residual is nonincreasing in h") {
  Matrix a = randm(8, 5, 26);
  Matrix psi = randm(4, 5, 27);
  Vector b = randv(8, 28);
  double prev = std::numeric_limits<double>::infinity();
  for (int h = 1; h <= 4; ++h) {
    SolveResult r = tgsvd_solve(a, b, psi, RegSelector::fixed(h));
    double res = (a * r.x - b).norm();
    CHECK(res <= prev + 1e-12);
    prev = res;
  }
}

TEST_CASE("std_form_transform with square nonsingular Psi") {
  Matrix a = randm(6, 4, 30);
  Matrix psi = randm(4, 4, 31);
  psi += 3.0 * Matrix::Identity(4, 4);  // well conditioned
  StdFormTransform tf = std_form_transform(a, psi);
  CHECK((tf.psi_a_pinv - psi.inverse()).norm() <= 1e-10);
  Vector b = randv(6, 32);
  CHECK(tf.null_component(b).norm() <= 1e-12);
  CHECK((tf.transformed_rhs(b) - b).norm() <= 1e-12);
}

TEST_CASE("std_form_transform null component for the 1D derivative") {
  // null(Psi) = constants; x0 is the constant least-squares fit of b
  const Index n = 5;
  Matrix psi = Matrix::Zero(n - 1, n);
  for (Index i = 0; i + 1 < n; ++i) {
    psi(i, i) = 1;
    psi(i, i + 1) = -1;
  }
  Matrix a = randm(7, n, 33);
  Vector b = randv(7, 34);
  StdFormTransform tf = std_form_transform(a, psi);
  Vector x0 = tf.null_component(b);
  // scalar least squares by hand: min_c ||c * (A 1) - b||
  Vector a1 = a * Vector::Ones(n);
  double c = a1.dot(b) / a1.squaredNorm();
  CHECK((x0 - c * Vector::Ones(n)).norm() <= 1e-10);
  CHECK((psi * x0).norm() <= 1e-10);
}

TEST_CASE("std_form round trip reproduces general-form Tikhonov") {
  Matrix a = randm(8, 5, 35);
  Matrix psi = randm(4, 5, 36);
  Vector b = randv(8, 37);
  const double alpha = 0.5;
  StdFormTransform tf = std_form_transform(a, psi);
  // standard-form solve in z: min ||A_std z - bbar||^2 + alpha ||z||^2
  Vector bbar = tf.transformed_rhs(b);
  Matrix lhs = tf.a_std.transpose() * tf.a_std +
               alpha * Matrix::Identity(4, 4);
  Vector z = lhs.ldlt().solve(tf.a_std.transpose() * bbar);
  Vector x = tf.map_back(z, b);
  SolveResult direct = tikhonov_solve(a, b, psi, RegSelector::fixed(alpha));
  CHECK((x - direct.x).norm() <= 1e-8 * direct.x.norm());
}

TEST_CASE("std_form_transform detects unsolvable problems") {
  // A annihilates the null space of Psi: A W is rank deficient
  const Index n = 4;
  Matrix psi = Matrix::Zero(n - 1, n);
  for (Index i = 0; i + 1 < n; ++i) {
    psi(i, i) = 1;
    psi(i, i + 1) = -1;
  }
  Matrix a = psi;  // constants are also in null(A)
  CHECK_THROWS_AS(std_form_transform(a, psi), PreconditionError);
}
