#pragma once

#include <functional>
#include <memory>
#include <random>
#include <utility>

#include "pdmala/target_model.hpp"

namespace pdmala {

/// Multivariate normal N(mean, cov), optionally carrying a constant metric G
/// (metric partials are identically zero).
class GaussianModel : public TargetModel {
 public:
  GaussianModel(Vector mean, Matrix cov) : mean_(std::move(mean)) {
    prec_ = chol_factor(cov).inverse();
    if (mean_.size() != prec_.dim()) {
      throw DimensionMismatch("GaussianModel: mean/covariance dimension mismatch");
    }
  }

  GaussianModel(Vector mean, Matrix cov, Matrix constant_metric)
      : GaussianModel(std::move(mean), std::move(cov)) {
    metric_ = chol_factor(constant_metric);
    if (metric_.dim() != dim()) {
      throw DimensionMismatch("GaussianModel: metric dimension mismatch");
    }
    has_metric_ = true;
  }

  static GaussianModel standard(Eigen::Index d) {
    return GaussianModel(Vector::Zero(d), Matrix::Identity(d, d));
  }

  Eigen::Index dim() const override { return mean_.size(); }

  double log_density(const StateVector& x) const override {
    const Vector r = x - mean_;
    return -0.5 * r.dot(prec_.matrix() * r);
  }

  Vector grad_log_density(const StateVector& x) const override {
    return -(prec_.matrix() * (x - mean_));
  }

  bool has_metric() const override { return has_metric_; }

  SpdMatrix metric(const StateVector&) const override {
    if (!has_metric_) throw MissingMetric("GaussianModel built without a metric");
    return metric_;
  }

  PartialsTensor metric_partials(const StateVector&) const override {
    if (!has_metric_) throw MissingMetric("GaussianModel built without a metric");
    return PartialsTensor::zero(dim());
  }

  const Vector& mean() const { return mean_; }

 private:
  Vector mean_;
  SpdMatrix prec_;
  SpdMatrix metric_;
  bool has_metric_ = false;
};

/// Wraps a base target with a diagonal position-dependent metric
/// G(x) = diag(g_1(x), ..., g_d(x)); each entry supplies its value and
/// gradient so the partials tensor is analytic.
class DiagonalMetricModel : public TargetModel {
 public:
  struct Entry {
    std::function<double(const StateVector&)> value;
    std::function<Vector(const StateVector&)> gradient;
  };

  DiagonalMetricModel(std::shared_ptr<const TargetModel> base, std::vector<Entry> entries)
      : base_(std::move(base)), entries_(std::move(entries)) {
    if (static_cast<Eigen::Index>(entries_.size()) != base_->dim()) {
      throw DimensionMismatch("DiagonalMetricModel: one diagonal entry per coordinate required");
    }
  }

  Eigen::Index dim() const override { return base_->dim(); }
  double log_density(const StateVector& x) const override { return base_->log_density(x); }
  Vector grad_log_density(const StateVector& x) const override {
    return base_->grad_log_density(x);
  }
  bool in_support(const StateVector& x) const override { return base_->in_support(x); }

  bool has_metric() const override { return true; }

  SpdMatrix metric(const StateVector& x) const override {
    Matrix g = Matrix::Zero(dim(), dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
      g(i, i) = entries_[static_cast<size_t>(i)].value(x);
    }
    return chol_factor(g);
  }

  PartialsTensor metric_partials(const StateVector& x) const override {
    const Eigen::Index d = dim();
    std::vector<Matrix> slices(static_cast<size_t>(d), Matrix::Zero(d, d));
    for (Eigen::Index i = 0; i < d; ++i) {
      const Vector gi = entries_[static_cast<size_t>(i)].gradient(x);
      for (Eigen::Index j = 0; j < d; ++j) {
        slices[static_cast<size_t>(j)](i, i) = gi[j];
      }
    }
    return PartialsTensor(std::move(slices));
  }

 private:
  std::shared_ptr<const TargetModel> base_;
  std::vector<Entry> entries_;
};

/// The two-dimensional counterexample metric G(x) = [[f(x_2), 0], [0, 1]]
/// for a positive differentiable f, over an arbitrary 2-d base target.
/// Gamma vanishes identically while Omega = [0, f'/(2f)], so the corrected
/// and uncorrected position-dependent diffusions genuinely differ.
class ExampleMetricModel : public TargetModel {
 public:
  ExampleMetricModel(std::shared_ptr<const TargetModel> base, std::function<double(double)> f,
                     std::function<double(double)> f_prime)
      : base_(std::move(base)), f_(std::move(f)), f_prime_(std::move(f_prime)) {
    if (base_->dim() != 2) throw DimensionMismatch("ExampleMetricModel: base target must be 2-d");
  }

  Eigen::Index dim() const override { return 2; }
  double log_density(const StateVector& x) const override { return base_->log_density(x); }
  Vector grad_log_density(const StateVector& x) const override {
    return base_->grad_log_density(x);
  }
  bool in_support(const StateVector& x) const override { return base_->in_support(x); }

  bool has_metric() const override { return true; }

  SpdMatrix metric(const StateVector& x) const override {
    Matrix g(2, 2);
    g << f_(x[1]), 0.0, 0.0, 1.0;
    return chol_factor(g);
  }

  PartialsTensor metric_partials(const StateVector& x) const override {
    std::vector<Matrix> slices(2, Matrix::Zero(2, 2));
    slices[1](0, 0) = f_prime_(x[1]);
    return PartialsTensor(std::move(slices));
  }

  double f(double x2) const { return f_(x2); }

 private:
  std::shared_ptr<const TargetModel> base_;
  std::function<double(double)> f_;
  std::function<double(double)> f_prime_;
};

/// Random smooth SPD metric field G(x) = L(x) L(x)^T + delta I with affine
/// lower-triangular L(x), used by the algebra sweeps. L L^T is positive
/// semidefinite for every x, so G is SPD globally and the partials are
/// exact:  dG_j = dL_j L^T + L dL_j^T.
class SyntheticSmoothMetricModel : public TargetModel {
 public:
  SyntheticSmoothMetricModel(std::shared_ptr<const TargetModel> base, std::uint64_t seed,
                             double amplitude = 0.3, double delta = 0.5)
      : base_(std::move(base)), delta_(delta) {
    const Eigen::Index d = base_->dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const auto nd = static_cast<size_t>(d);
    l0_ = Matrix::Zero(d, d);
    lin_.assign(nd * nd, Vector::Zero(d));
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) {
        l0_(r, c) = (r == c) ? 1.0 + 0.4 * unif(rng) : 0.25 * unif(rng);
        Vector& coeff = lin_[static_cast<size_t>(r * d + c)];
        for (Eigen::Index j = 0; j < d; ++j) coeff[j] = amplitude * unif(rng);
      }
    }
  }

  Eigen::Index dim() const override { return base_->dim(); }
  double log_density(const StateVector& x) const override { return base_->log_density(x); }
  Vector grad_log_density(const StateVector& x) const override {
    return base_->grad_log_density(x);
  }
  bool in_support(const StateVector& x) const override { return base_->in_support(x); }

  bool has_metric() const override { return true; }

  SpdMatrix metric(const StateVector& x) const override {
    const Matrix l = l_at(x);
    Matrix g = l * l.transpose();
    g.diagonal().array() += delta_;
    return chol_factor(g);
  }

  PartialsTensor metric_partials(const StateVector& x) const override {
    const Eigen::Index d = dim();
    const Matrix l = l_at(x);
    std::vector<Matrix> slices;
    slices.reserve(static_cast<size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
      Matrix dl = Matrix::Zero(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c <= r; ++c) {
          dl(r, c) = lin_[static_cast<size_t>(r * d + c)][j];
        }
      }
      slices.emplace_back(dl * l.transpose() + l * dl.transpose());
    }
    return PartialsTensor(std::move(slices));
  }

 private:
  Matrix l_at(const StateVector& x) const {
    const Eigen::Index d = dim();
    Matrix l = Matrix::Zero(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) {
        l(r, c) = l0_(r, c) + lin_[static_cast<size_t>(r * d + c)].dot(x);
      }
    }
    return l;
  }

  std::shared_ptr<const TargetModel> base_;
  double delta_;
  Matrix l0_;
  std::vector<Vector> lin_;
};

/// Restricts a base model to an axis-aligned box; the log density is -inf
/// outside, which samplers treat as certain rejection.
class SupportWindowModel : public TargetModel {
 public:
  SupportWindowModel(std::shared_ptr<const TargetModel> base, Vector lo, Vector hi)
      : base_(std::move(base)), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != base_->dim() || hi_.size() != base_->dim()) {
      throw DimensionMismatch("SupportWindowModel: bound length mismatch");
    }
  }

  Eigen::Index dim() const override { return base_->dim(); }

  bool in_support(const StateVector& x) const override {
    for (Eigen::Index i = 0; i < dim(); ++i) {
      if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
    }
    return base_->in_support(x);
  }

  double log_density(const StateVector& x) const override {
    if (!in_support(x)) return -std::numeric_limits<double>::infinity();
    return base_->log_density(x);
  }

  Vector grad_log_density(const StateVector& x) const override {
    return base_->grad_log_density(x);
  }

  bool has_metric() const override { return base_->has_metric(); }
  SpdMatrix metric(const StateVector& x) const override { return base_->metric(x); }
  PartialsTensor metric_partials(const StateVector& x) const override {
    return base_->metric_partials(x);
  }

 private:
  std::shared_ptr<const TargetModel> base_;
  Vector lo_;
  Vector hi_;
};

}  // namespace pdmala
