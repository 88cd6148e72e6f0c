#pragma once

#include <functional>
#include <string>

#include "pdmala/target_model.hpp"

namespace pdmala {

/// The Langevin diffusion families implemented by this library. Each one
/// defines a drift b(x) and volatility V(x) = sqrtV * sqrtV^T; the matching
/// MH sampler proposes X' ~ N(x + h b(x), h V(x)).
///
///   Langevin          dX = 1/2 grad log pi dt + dW
///   Precond           dX = 1/2 A grad log pi dt + sqrtA dW, A constant
///   Simplified        same form with A = A(X); preserves pi only for constant A
///   MmalaUncorrected  drift 1/2 A grad log pi + Omega (as published)
///   MmalaHalf         drift 1/2 A grad log pi* + 1/2 Omega, log pi* = log pi - 1/2 log|G|
///   Pmala             drift 1/2 A grad log pi + Gamma; preserves pi w.r.t. Lebesgue measure
enum class Family {
  Langevin,
  Precond,
  Simplified,
  MmalaUncorrected,
  MmalaHalf,
  Pmala,
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Langevin: return "mala";
    case Family::Precond: return "precond";
    case Family::Simplified: return "simplified";
    case Family::MmalaUncorrected: return "mmala";
    case Family::MmalaHalf: return "mmala-half";
    case Family::Pmala: return "pmala";
  }
  return "?";
}

inline Family family_from_name(const std::string& name) {
  if (name == "mala" || name == "langevin") return Family::Langevin;
  if (name == "precond") return Family::Precond;
  if (name == "simplified") return Family::Simplified;
  if (name == "mmala") return Family::MmalaUncorrected;
  if (name == "mmala-half") return Family::MmalaHalf;
  if (name == "pmala") return Family::Pmala;
  throw BadConfig("unknown sampler family: \"" + name + "\"");
}

inline bool family_needs_metric(Family f) { return f != Family::Langevin; }
inline bool family_needs_partials(Family f) {
  return f == Family::MmalaUncorrected || f == Family::MmalaHalf || f == Family::Pmala;
}

/// Everything the correction drifts need at one point: G(x), A = G^{-1},
/// dG/dx, and dA/dx derived through dA_j = -A dG_j A.
struct MetricBundle {
  SpdMatrix g;
  SpdMatrix a;
  PartialsTensor dg;
  PartialsTensor da;
  double logdet_g = 0.0;
};

inline MetricBundle make_metric_bundle(SpdMatrix g, PartialsTensor dg) {
  MetricBundle b;
  b.logdet_g = g.logdet();
  b.a = g.inverse();
  if (dg.dim() != g.dim()) {
    throw DimensionMismatch("make_metric_bundle: partials tensor does not match metric dimension");
  }
  const Matrix& am = b.a.matrix();
  std::vector<Matrix> da(static_cast<size_t>(g.dim()));
  for (Eigen::Index j = 0; j < g.dim(); ++j) {
    da[static_cast<size_t>(j)] = -am * dg.slice(j) * am;
  }
  b.g = std::move(g);
  b.dg = std::move(dg);
  b.da = PartialsTensor(std::move(da));
  return b;
}

inline MetricBundle make_metric_bundle(const TargetModel& model, const StateVector& x) {
  return make_metric_bundle(model.metric(x), model.metric_partials(x));
}

/// d log|G| / dx_j = trace(A dG_j), one entry per j: the product is formed
/// and then traced, as the identity reads.
inline Vector grad_logdet_metric(const MetricBundle& b) {
  const Eigen::Index d = b.g.dim();
  Vector out(d);
  Matrix prod(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    prod.noalias() = b.a.matrix() * b.dg.slice(j);
    out[j] = prod.trace();
  }
  return out;
}

/// Gamma_i = 1/2 sum_j dA_ij/dx_j, the divergence of A. This is the
/// correction drift whose diffusion preserves pi w.r.t. Lebesgue measure.
inline Vector gamma_drift(const MetricBundle& b) {
  const Eigen::Index d = b.g.dim();
  Vector out = Vector::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out += b.da.slice(j).col(j);
  }
  return 0.5 * out;
}

/// Gamma expressed through G alone:
/// Gamma_i = -1/2 sum_{jkm} Ginv_ik dG_km/dx_j Ginv_mj.
/// Kept as an independent route for the algebra tests; agrees with
/// gamma_drift to 1e-9.
inline Vector gamma_drift_expanded(const MetricBundle& b) {
  const Eigen::Index d = b.g.dim();
  const Matrix& a = b.a.matrix();
  Vector acc = Vector::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    acc.noalias() += b.dg.slice(j) * a.col(j);
  }
  return -0.5 * (a * acc);
}

/// Omega_i = sum_j dA_ij/dx_j + 1/2 sum_j A_ij dlog|G|/dx_j,
/// the manifold Brownian-motion correction term.
inline Vector omega_drift(const MetricBundle& b) {
  const Eigen::Index d = b.g.dim();
  Vector div_a = Vector::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    div_a += b.da.slice(j).col(j);
  }
  return div_a + 0.5 * (b.a.matrix() * grad_logdet_metric(b));
}

/// Omega through G alone, as an explicit index contraction:
/// Omega_i = -sum_{jkm} Ginv_ik dG_km/dx_j Ginv_mj
///           + 1/2 sum_{jkm} Ginv_ij dG_mk/dx_j Ginv_km.
inline Vector omega_drift_expanded(const MetricBundle& b) {
  const Eigen::Index d = b.g.dim();
  const Matrix& a = b.a.matrix();
  Vector out = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double t1 = 0.0, t2 = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const Matrix& dgj = b.dg.slice(j);
      for (Eigen::Index k = 0; k < d; ++k) {
        for (Eigen::Index m = 0; m < d; ++m) {
          t1 += a(i, k) * dgj(k, m) * a(m, j);
          t2 += a(i, j) * dgj(m, k) * a(k, m);
        }
      }
    }
    out[i] = -t1 + 0.5 * t2;
  }
  return out;
}

/// max_{j,k,m} |dG_km/dx_j - dG_jm/dx_k|. Zero exactly when the symmetry
/// condition d/dx_j G_km = d/dx_k G_jm holds at this point, in which case
/// Omega and Gamma represent the same diffusion.
inline double symmetry_defect(const PartialsTensor& dg) {
  const Eigen::Index d = dg.dim();
  double defect = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      for (Eigen::Index m = 0; m < d; ++m) {
        defect = std::max(defect, std::abs(dg.entry(j, k, m) - dg.entry(k, j, m)));
      }
    }
  }
  return defect;
}

/// A drift/volatility field realizing one of the diffusion families.
/// Closures capture the model by reference; the caller keeps it alive.
struct DiffusionSpec {
  std::string label;
  std::function<Vector(const StateVector&)> drift;
  std::function<Matrix(const StateVector&)> volatility_chol;  // lower factor of V(x)
};

/// The same density under both reference measures: log_pi is
/// Lebesgue-referenced, log_pi_star is Hausdorff-referenced, related by
/// log pi = log pi* + 1/2 log|G| (the area formula).
struct DualDensityPair {
  std::function<double(const StateVector&)> log_pi;
  std::function<double(const StateVector&)> log_pi_star;
};

inline DualDensityPair dual_density_pair(const TargetModel& model) {
  DualDensityPair p;
  p.log_pi = [&model](const StateVector& x) { return model.log_density(x); };
  p.log_pi_star = [&model](const StateVector& x) {
    return model.log_density(x) - 0.5 * model.metric(x).logdet();
  };
  return p;
}

inline DiffusionSpec assemble_diffusion(const TargetModel& model, Family family) {
  if (family_needs_metric(family) && !model.has_metric()) {
    throw MissingMetric(std::string("family ") + family_name(family) +
                        " requires a metric but the model has none");
  }
  DiffusionSpec spec;
  spec.label = family_name(family);
  switch (family) {
    case Family::Langevin:
      spec.drift = [&model](const StateVector& x) -> Vector {
        return 0.5 * model.grad_log_density(x);
      };
      spec.volatility_chol = [&model](const StateVector& x) -> Matrix {
        (void)x;
        return Matrix::Identity(model.dim(), model.dim());
      };
      break;
    case Family::Precond:
    case Family::Simplified:
      spec.drift = [&model](const StateVector& x) -> Vector {
        const SpdMatrix a = model.metric(x).inverse();
        return 0.5 * (a.matrix() * model.grad_log_density(x));
      };
      spec.volatility_chol = [&model](const StateVector& x) -> Matrix {
        return model.metric(x).inverse().chol();
      };
      break;
    case Family::MmalaUncorrected:
      spec.drift = [&model](const StateVector& x) -> Vector {
        const MetricBundle b = make_metric_bundle(model, x);
        return 0.5 * (b.a.matrix() * model.grad_log_density(x)) + omega_drift(b);
      };
      spec.volatility_chol = [&model](const StateVector& x) -> Matrix {
        return model.metric(x).inverse().chol();
      };
      break;
    case Family::MmalaHalf:
      spec.drift = [&model](const StateVector& x) -> Vector {
        const MetricBundle b = make_metric_bundle(model, x);
        const Vector grad_star = model.grad_log_density(x) - 0.5 * grad_logdet_metric(b);
        return 0.5 * (b.a.matrix() * grad_star) + 0.5 * omega_drift(b);
      };
      spec.volatility_chol = [&model](const StateVector& x) -> Matrix {
        return model.metric(x).inverse().chol();
      };
      break;
    case Family::Pmala:
      spec.drift = [&model](const StateVector& x) -> Vector {
        const MetricBundle b = make_metric_bundle(model, x);
        return 0.5 * (b.a.matrix() * model.grad_log_density(x)) + gamma_drift(b);
      };
      spec.volatility_chol = [&model](const StateVector& x) -> Matrix {
        return model.metric(x).inverse().chol();
      };
      break;
  }
  return spec;
}

/// Stationarity residual of the Fokker-Planck equation at x:
///   r_i = b_i(x) pi(x) - 1/2 sum_j d/dx_j [ V_ij(x) pi(x) ],
/// with the derivative taken by central differences (step eps*(1+|x_j|))
/// and pi normalized so pi(x) = 1; the residual is scale-covariant, so
/// callers compare it relative to |b(x)| pi(x).
inline Vector fokker_planck_residual(const DiffusionSpec& spec,
                                     const std::function<double(const StateVector&)>& log_pi,
                                     const StateVector& x, double eps) {
  const Eigen::Index d = x.size();
  const double log_pi_x = log_pi(x);
  if (!std::isfinite(log_pi_x)) throw NonFiniteDensity("fokker_planck_residual: log pi(x) non-finite");
  const auto pi_rel = [&](const StateVector& y) {
    const double lp = log_pi(y);
    if (!std::isfinite(lp)) throw NonFiniteDensity("fokker_planck_residual: log pi non-finite at stencil");
    return std::exp(lp - log_pi_x);
  };
  const auto v_times_pi = [&](const StateVector& y) -> Matrix {
    const Matrix l = spec.volatility_chol(y);
    return (l * l.transpose()) * pi_rel(y);
  };

  Vector r = spec.drift(x);  // times pi(x) = 1
  StateVector yp = x, ym = x;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double e = eps * (1.0 + std::abs(x[j]));
    yp[j] = x[j] + e;
    ym[j] = x[j] - e;
    const Matrix vp = v_times_pi(yp);
    const Matrix vm = v_times_pi(ym);
    r -= (vp.col(j) - vm.col(j)) / (4.0 * e);  // 1/2 * central difference
    yp[j] = x[j];
    ym[j] = x[j];
  }
  return r;
}

}  // namespace pdmala
