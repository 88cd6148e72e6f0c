#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "pdmala/errors.hpp"

namespace pdmala {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric positive-definite matrix with its lower Cholesky factor
/// and log-determinant. Immutable after construction; safe to share across
/// threads. Square roots of SPD matrices are always the lower Cholesky
/// factor in this library.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  const Matrix& matrix() const { return mat_; }
  const Matrix& chol() const { return chol_; }  // lower triangular L, L L^T = matrix()
  double logdet() const { return logdet_; }
  Eigen::Index dim() const { return mat_.rows(); }

  /// Solves this * u = v via the Cholesky factor, with one step of
  /// iterative refinement to hold the 1e-10 relative-residual contract.
  Vector solve(const Vector& v) const {
    if (v.size() != dim()) {
      throw DimensionMismatch("spd_solve: vector length " + std::to_string(v.size()) +
                              " does not match matrix dimension " + std::to_string(dim()));
    }
    Vector u = chol_solve(v);
    u += chol_solve(Vector(v - mat_ * u));
    return u;
  }

  Matrix solve(const Matrix& b) const {
    if (b.rows() != dim()) {
      throw DimensionMismatch("spd_solve: rhs has " + std::to_string(b.rows()) +
                              " rows, matrix dimension is " + std::to_string(dim()));
    }
    Matrix u = chol_solve(b);
    u += chol_solve(Matrix(b - mat_ * u));
    return u;
  }

  SpdMatrix inverse() const;

 private:
  friend SpdMatrix chol_factor(const Matrix& m);

  Vector chol_solve(const Vector& v) const {
    Vector u = chol_.triangularView<Eigen::Lower>().solve(v);
    chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(u);
    return u;
  }

  Matrix chol_solve(const Matrix& b) const {
    Matrix u = chol_.triangularView<Eigen::Lower>().solve(b);
    chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(u);
    return u;
  }

  Matrix mat_;
  Matrix chol_;
  double logdet_ = 0.0;
};

/// Factors a symmetric matrix into an SpdMatrix. Inputs are symmetrized as
/// (M + M^T)/2 before factorization; asymmetry beyond 1e-12 * max|entry| is
/// rejected. Throws NotPositiveDefinite when a pivot is <= 0.
inline SpdMatrix chol_factor(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("chol_factor: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    throw NotSymmetric("chol_factor: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }

  SpdMatrix out;
  out.mat_ = 0.5 * (m + m.transpose());
  Eigen::LLT<Matrix> llt(out.mat_);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("chol_factor: matrix is not positive definite");
  }
  out.chol_ = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < out.chol_.rows(); ++i) {
    const double pivot = out.chol_(i, i);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NotPositiveDefinite("chol_factor: nonpositive pivot at index " + std::to_string(i));
    }
    logdet += std::log(pivot);
  }
  out.logdet_ = 2.0 * logdet;
  return out;
}

inline SpdMatrix SpdMatrix::inverse() const {
  Matrix inv = solve(Matrix(Matrix::Identity(dim(), dim())));
  return chol_factor(Matrix(0.5 * (inv + inv.transpose())));
}

inline Vector spd_solve(const SpdMatrix& m, const Vector& v) { return m.solve(v); }

inline SpdMatrix spd_inverse(const SpdMatrix& m) { return m.inverse(); }

/// Third-order partials tensor: slice(j)(k, m) = dG_{km}/dx_j. Each slice is
/// symmetric (G is symmetric in its last two indices); slices are
/// symmetrized on construction and rejected if badly asymmetric.
class PartialsTensor {
 public:
  PartialsTensor() = default;

  explicit PartialsTensor(std::vector<Matrix> slices) : slices_(std::move(slices)) {
    const auto d = static_cast<Eigen::Index>(slices_.size());
    for (auto& s : slices_) {
      if (s.rows() != d || s.cols() != d) {
        throw DimensionMismatch("PartialsTensor: slice shape does not match tensor dimension");
      }
      const double scale = std::max(s.cwiseAbs().maxCoeff(), 1.0);
      if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw NotSymmetric("PartialsTensor: slice not symmetric in its last two indices");
      }
      s = 0.5 * (s + s.transpose()).eval();
    }
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(slices_.size()); }
  const Matrix& slice(Eigen::Index j) const { return slices_[static_cast<size_t>(j)]; }
  double entry(Eigen::Index j, Eigen::Index k, Eigen::Index m) const {
    return slices_[static_cast<size_t>(j)](k, m);
  }

  static PartialsTensor zero(Eigen::Index d) {
    return PartialsTensor(std::vector<Matrix>(static_cast<size_t>(d), Matrix::Zero(d, d)));
  }

 private:
  std::vector<Matrix> slices_;
};

}  // namespace pdmala
