#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pdmala/linalg.hpp"

namespace pdmala {

/// The chain/diffusion state: a point in R^d.
using StateVector = Vector;

/// Abstract target distribution. log_density is defined only up to an
/// additive constant (Metropolis-Hastings ratios cancel it), so tests must
/// never compare absolute values across models. Implementations must be
/// pure: one instance may serve many chains concurrently.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double log_density(const StateVector& x) const = 0;
  virtual Vector grad_log_density(const StateVector& x) const = 0;

  /// Position-dependent metric G(x). Models without a metric can still be
  /// sampled by the metric-free families.
  virtual bool has_metric() const { return false; }
  virtual SpdMatrix metric(const StateVector& /*x*/) const {
    throw MissingMetric("model has no metric");
  }
  virtual PartialsTensor metric_partials(const StateVector& /*x*/) const {
    throw MissingMetric("model has no metric partials");
  }

  /// Proposals outside the support are rejected by the sampler rather than
  /// treated as an error.
  virtual bool in_support(const StateVector& /*x*/) const { return true; }
};

/// Central-difference step: cube root of machine epsilon scaled per
/// coordinate by (1 + |x_j|).
inline double default_fd_eps(double xj) {
  static const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
  return cbrt_eps * (1.0 + std::abs(xj));
}

/// Central-difference gradient of log_density. Pass eps <= 0 for the
/// per-coordinate default. Throws NonFiniteDensity when a stencil point
/// evaluates non-finite.
inline Vector fd_gradient(const TargetModel& model, const StateVector& x, double eps = 0.0) {
  const Eigen::Index d = model.dim();
  if (x.size() != d) throw DimensionMismatch("fd_gradient: state length does not match model dim");
  Vector g(d);
  StateVector xp = x, xm = x;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double e = eps > 0.0 ? eps : default_fd_eps(x[j]);
    xp[j] = x[j] + e;
    xm[j] = x[j] - e;
    const double fp = model.log_density(xp);
    const double fm = model.log_density(xm);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NonFiniteDensity("fd_gradient: log density non-finite at stencil for coordinate " +
                             std::to_string(j));
    }
    g[j] = (fp - fm) / (2.0 * e);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return g;
}

/// Central differences of metric(.) entrywise; the result satisfies the
/// PartialsTensor symmetry by construction. NotPositiveDefinite from the
/// metric evaluation propagates.
inline PartialsTensor fd_metric_partials(const TargetModel& model, const StateVector& x,
                                         double eps = 0.0) {
  const Eigen::Index d = model.dim();
  if (x.size() != d)
    throw DimensionMismatch("fd_metric_partials: state length does not match model dim");
  std::vector<Matrix> slices;
  slices.reserve(static_cast<size_t>(d));
  StateVector xp = x, xm = x;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double e = eps > 0.0 ? eps : default_fd_eps(x[j]);
    xp[j] = x[j] + e;
    xm[j] = x[j] - e;
    const Matrix gp = model.metric(xp).matrix();
    const Matrix gm = model.metric(xm).matrix();
    slices.emplace_back((gp - gm) / (2.0 * e));
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return PartialsTensor(std::move(slices));
}

}  // namespace pdmala
