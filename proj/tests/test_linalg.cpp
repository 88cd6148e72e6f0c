#include <catch2/catch.hpp>
#include <random>

#include "pdmala/linalg.hpp"

using namespace pdmala;

namespace {

// Independent determinant oracle by cofactor expansion (d <= 4 in tests).
double cofactor_det(const Matrix& m) {
  const Eigen::Index d = m.rows();
  if (d == 1) return m(0, 0);
  double det = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    Matrix minor(d - 1, d - 1);
    for (Eigen::Index r = 1; r < d; ++r) {
      Eigen::Index cc = 0;
      for (Eigen::Index c = 0; c < d; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += (j % 2 == 0 ? 1.0 : -1.0) * m(0, j) * cofactor_det(minor);
  }
  return det;
}

Matrix random_spd(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix l = Matrix::Zero(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < r; ++c) l(r, c) = 0.5 * n01(rng);
    l(r, r) = 0.5 + std::abs(n01(rng));
  }
  return l * l.transpose() + 0.1 * Matrix::Identity(d, d);
}

}  // namespace

TEST_CASE("chol_factor on the identity", "[linalg]") {
  const SpdMatrix m = chol_factor(Matrix::Identity(2, 2));
  CHECK(m.chol().isApprox(Matrix::Identity(2, 2), 1e-15));
  CHECK(m.logdet() == Approx(0.0).margin(1e-15));
}

TEST_CASE("chol_factor on a diagonal matrix", "[linalg]") {
  Matrix m(2, 2);
  m << 4.0, 0.0, 0.0, 9.0;
  const SpdMatrix s = chol_factor(m);
  CHECK(s.chol()(0, 0) == Approx(2.0));
  CHECK(s.chol()(1, 1) == Approx(3.0));
  CHECK(s.chol()(0, 1) == 0.0);
  CHECK(s.logdet() == Approx(std::log(36.0)));
}

TEST_CASE("chol_factor reconstructs and matches the hand determinant", "[linalg]") {
  Matrix m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  const SpdMatrix s = chol_factor(m);
  const Matrix recon = s.chol() * s.chol().transpose();
  CHECK((recon - m).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()));
  CHECK(s.logdet() == Approx(std::log(3.0)));  // det = 2*2 - 1
}

TEST_CASE("chol_factor rejects indefinite and asymmetric input", "[linalg]") {
  Matrix indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(chol_factor(indef), NotPositiveDefinite);

  Matrix asym(2, 2);
  asym << 1.0, 0.1, 0.0, 1.0;
  CHECK_THROWS_AS(chol_factor(asym), NotSymmetric);

  CHECK_THROWS_AS(chol_factor(Matrix::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("spd_solve basics", "[linalg]") {
  const SpdMatrix id = chol_factor(Matrix::Identity(3, 3));
  Vector v(3);
  v << 1.0, -2.0, 0.5;
  CHECK(spd_solve(id, v).isApprox(v, 1e-14));

  Matrix diag(2, 2);
  diag << 2.0, 0.0, 0.0, 4.0;
  Vector rhs(2);
  rhs << 2.0, 8.0;
  const Vector u = spd_solve(chol_factor(diag), rhs);
  CHECK(u[0] == Approx(1.0));
  CHECK(u[1] == Approx(2.0));

  Matrix m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  Vector b(2);
  b << 3.0, 3.0;  // 2+1 = 3, 1+2 = 3
  const Vector w = spd_solve(chol_factor(m), b);
  CHECK(w[0] == Approx(1.0));
  CHECK(w[1] == Approx(1.0));

  Vector bad(3);
  CHECK_THROWS_AS(spd_solve(chol_factor(m), bad), DimensionMismatch);
}

TEST_CASE("spd_inverse basics and 5x5 round trip", "[linalg]") {
  CHECK(spd_inverse(chol_factor(Matrix::Identity(3, 3))).matrix().isApprox(Matrix::Identity(3, 3), 1e-14));

  Matrix diag(2, 2);
  diag << 2.0, 0.0, 0.0, 4.0;
  const SpdMatrix inv = spd_inverse(chol_factor(diag));
  CHECK(inv.matrix()(0, 0) == Approx(0.5));
  CHECK(inv.matrix()(1, 1) == Approx(0.25));

  std::mt19937_64 rng(991);
  const Matrix m = random_spd(5, rng);
  const SpdMatrix s = chol_factor(m);
  const Matrix round_trip = s.matrix() * s.inverse().matrix();
  CHECK((round_trip - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("spd_solve round trip over random right-hand sides", "[linalg]") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> n01;
  for (const Eigen::Index d : {2, 5, 11}) {
    const SpdMatrix m = chol_factor(random_spd(d, rng));
    for (int rep = 0; rep < 100; ++rep) {
      Vector v(d);
      for (Eigen::Index i = 0; i < d; ++i) v[i] = n01(rng);
      const Vector back = spd_solve(m, Vector(m.matrix() * v));
      CHECK((back - v).norm() <= 1e-8 * (1.0 + v.norm()));
    }
  }
}

TEST_CASE("logdet against the cofactor oracle", "[linalg]") {
  std::mt19937_64 rng(777);
  for (const Eigen::Index d : {1, 2, 3, 4}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix m = random_spd(d, rng);
      const double expected = std::log(cofactor_det(m));
      CHECK(chol_factor(m).logdet() == Approx(expected).epsilon(1e-8));
    }
  }
}

TEST_CASE("spd_solve residual is small", "[linalg]") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n01;
  const SpdMatrix m = chol_factor(random_spd(8, rng));
  Vector v(8);
  for (Eigen::Index i = 0; i < 8; ++i) v[i] = n01(rng);
  const Vector u = spd_solve(m, v);
  CHECK((m.matrix() * u - v).norm() <= 1e-10 * v.norm());
}

TEST_CASE("PartialsTensor validates slice symmetry", "[linalg]") {
  Matrix sym(2, 2);
  sym << 1.0, 2.0, 2.0, 3.0;
  const PartialsTensor t(std::vector<Matrix>{sym, Matrix::Zero(2, 2)});
  CHECK(t.dim() == 2);
  CHECK(t.entry(0, 0, 1) == Approx(2.0));
  CHECK(t.entry(0, 1, 0) == Approx(2.0));

  Matrix bad(2, 2);
  bad << 1.0, 2.0, 0.0, 3.0;
  CHECK_THROWS_AS(PartialsTensor(std::vector<Matrix>{bad, sym}), NotSymmetric);

  CHECK_THROWS_AS(PartialsTensor(std::vector<Matrix>{Matrix::Zero(3, 3), Matrix::Zero(3, 3)}),
                  DimensionMismatch);
}
