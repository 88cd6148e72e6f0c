#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "pdmala/geometry.hpp"

namespace pdmala {

using Rng = std::mt19937_64;

/// Squared proposal scale h > 0; tuners adjust sqrt(h).
struct StepSize {
  double h;
  explicit StepSize(double h_) : h(h_) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw BadConfig("StepSize: h must be positive and finite");
    }
  }
};

/// Gaussian MH proposal: mean x + h b(x), covariance h V(x) held as its
/// lower Cholesky factor. log_density_at is the proper multivariate normal
/// log density including the -1/2 log|2 pi h V| term; V varies with position
/// and does not cancel in the acceptance ratio.
struct ProposalSpec {
  Vector mean;
  Matrix cov_chol;

  double log_density_at(const Vector& y) const {
    const Eigen::Index d = mean.size();
    static const double log2pi = std::log(2.0 * M_PI);
    const Vector z = cov_chol.triangularView<Eigen::Lower>().solve(y - mean);
    double log_det_chol = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) log_det_chol += std::log(cov_chol(i, i));
    return -0.5 * d * log2pi - log_det_chol - 0.5 * z.squaredNorm();
  }

  Vector sample(Rng& rng) const {
    std::normal_distribution<double> n01;
    Vector z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n01(rng);
    return mean + cov_chol.triangularView<Eigen::Lower>() * z;
  }
};

namespace detail {

/// Drift and volatility factor of the family's diffusion at one point,
/// independent of h, so step-size changes reuse the expensive part.
struct KernelPoint {
  StateVector x;
  double log_pi = 0.0;
  Vector drift;
  Matrix vol_chol;  // lower factor of V(x)
};

inline KernelPoint eval_point(Family family, const TargetModel& model, const StateVector& x) {
  KernelPoint p;
  p.x = x;
  p.log_pi = model.log_density(x);
  switch (family) {
    case Family::Langevin:
      p.drift = 0.5 * model.grad_log_density(x);
      p.vol_chol = Matrix::Identity(model.dim(), model.dim());
      break;
    case Family::Precond:
    case Family::Simplified: {
      const SpdMatrix a = model.metric(x).inverse();
      p.drift = 0.5 * (a.matrix() * model.grad_log_density(x));
      p.vol_chol = a.chol();
      break;
    }
    case Family::MmalaUncorrected:
    case Family::MmalaHalf:
    case Family::Pmala: {
      // one shared path for the partials families; only the correction
      // drift differs
      const MetricBundle b = make_metric_bundle(model, x);
      const Vector grad = model.grad_log_density(x);
      if (family == Family::Pmala) {
        p.drift = 0.5 * (b.a.matrix() * grad) + gamma_drift(b);
      } else if (family == Family::MmalaUncorrected) {
        p.drift = 0.5 * (b.a.matrix() * grad) + omega_drift(b);
      } else {
        const Vector grad_star = grad - 0.5 * grad_logdet_metric(b);
        p.drift = 0.5 * (b.a.matrix() * grad_star) + 0.5 * omega_drift(b);
      }
      p.vol_chol = b.a.chol();
      break;
    }
  }
  return p;
}

inline ProposalSpec proposal_from(const KernelPoint& p, double h) {
  return ProposalSpec{p.x + h * p.drift, std::sqrt(h) * p.vol_chol};
}

inline bool finite_point(const KernelPoint& p) {
  return std::isfinite(p.log_pi) && p.drift.allFinite() && p.vol_chol.allFinite();
}

}  // namespace detail

/// Proposal for one MH step of the given family from x. The metric at the
/// current state must be valid; NotPositiveDefinite here is fatal.
inline ProposalSpec make_proposal(Family family, const TargetModel& model, const StateVector& x,
                                  StepSize h) {
  if (family_needs_metric(family) && !model.has_metric()) {
    throw MissingMetric(std::string("family ") + family_name(family) +
                        " requires a metric but the model has none");
  }
  return detail::proposal_from(detail::eval_point(family, model, x), h.h);
}

/// log of the MH ratio pi(y) q(x|y) / (pi(x) q(y|x)). The caller accepts
/// with probability min(1, exp(result)). Proposals outside the support, at
/// non-finite density, or where the metric fails to factor get -inf
/// (certain rejection), never an error.
inline double log_accept_ratio(const TargetModel& model, Family family, const StateVector& x,
                               const StateVector& y, StepSize h) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (!model.in_support(y)) return neg_inf;
  const double log_pi_y = model.log_density(y);
  if (!std::isfinite(log_pi_y)) return neg_inf;

  const detail::KernelPoint cur = detail::eval_point(family, model, x);
  detail::KernelPoint prop;
  try {
    prop = detail::eval_point(family, model, y);
  } catch (const NotPositiveDefinite&) {
    return neg_inf;
  } catch (const NonFiniteTrajectory&) {
    return neg_inf;
  }
  if (!detail::finite_point(prop)) return neg_inf;

  const ProposalSpec fwd = detail::proposal_from(cur, h.h);
  const ProposalSpec rev = detail::proposal_from(prop, h.h);
  return log_pi_y + rev.log_density_at(x) - cur.log_pi - fwd.log_density_at(y);
}

/// One chain's output: samples row per iteration, acceptance indicators
/// (samples[i] == samples[i-1] exactly when accepted[i] is false), wall time
/// of the sampling loop, and the step size and seed that produced it.
struct ChainTrace {
  Matrix samples;
  std::vector<uint8_t> accepted;
  double wall_time_s = 0.0;
  double h_used = 0.0;
  std::uint64_t rng_seed = 0;

  double acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    double n_acc = 0;
    for (const auto a : accepted) n_acc += a;
    return n_acc / static_cast<double>(accepted.size());
  }
};

/// Runs n_iters MH steps from x0. Deterministic given the seed: each
/// iteration draws eps ~ N(0, I) and one uniform from the seeded generator.
/// A metric failure at x0 is fatal; later failures reject the proposal.
inline ChainTrace run_chain(Family family, const TargetModel& model, const StateVector& x0,
                            StepSize h, int n_iters, std::uint64_t seed) {
  if (n_iters < 1) throw BadConfig("run_chain: n_iters must be >= 1");
  if (!model.in_support(x0) || !std::isfinite(model.log_density(x0))) {
    throw BadConfig("run_chain: x0 outside the model support");
  }
  if (family_needs_metric(family) && !model.has_metric()) {
    throw MissingMetric(std::string("family ") + family_name(family) +
                        " requires a metric but the model has none");
  }

  const Eigen::Index d = model.dim();
  ChainTrace trace;
  trace.samples.resize(n_iters, d);
  trace.accepted.assign(static_cast<size_t>(n_iters), 0);
  trace.h_used = h.h;
  trace.rng_seed = seed;

  Rng rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;

  const auto t_start = std::chrono::steady_clock::now();

  detail::KernelPoint cur = detail::eval_point(family, model, x0);
  ProposalSpec cur_prop = detail::proposal_from(cur, h.h);
  Vector z(d);
  for (int i = 0; i < n_iters; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) z[k] = n01(rng);
    const Vector y = cur_prop.mean + cur_prop.cov_chol.triangularView<Eigen::Lower>() * z;
    const double log_u = std::log(u01(rng));

    bool accept = false;
    if (model.in_support(y)) {
      bool valid = true;
      detail::KernelPoint prop;
      try {
        prop = detail::eval_point(family, model, y);
      } catch (const NotPositiveDefinite&) {
        valid = false;
      } catch (const NonFiniteTrajectory&) {
        valid = false;
      }
      if (valid && detail::finite_point(prop)) {
        const ProposalSpec rev = detail::proposal_from(prop, h.h);
        const double log_ratio =
            prop.log_pi + rev.log_density_at(cur.x) - cur.log_pi - cur_prop.log_density_at(y);
        if (log_u < log_ratio) {
          cur = std::move(prop);
          cur_prop = rev;
          accept = true;
        }
      }
    }
    trace.samples.row(i) = cur.x;
    trace.accepted[static_cast<size_t>(i)] = accept ? 1 : 0;
  }

  trace.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return trace;
}

struct TuneResult {
  double h = 0.0;
  double achieved_rate = 0.0;
  bool budget_exhausted = false;  // warning: rate not within 0.1 of target
};

/// Robbins-Monro adaptation of log h toward the target acceptance rate,
/// followed by a frozen-h evaluation window that measures the achieved
/// rate. Always returns h > 0; when the achieved rate misses the target by
/// more than 0.1 the result carries the budget_exhausted warning.
inline TuneResult tune_step_size(Family family, const TargetModel& model, const StateVector& x0,
                                 double target_accept, int budget, std::uint64_t seed,
                                 double h_init = 0.25) {
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw BadConfig("tune_step_size: target_accept must lie in (0, 1)");
  }
  if (budget < 2) throw BadConfig("tune_step_size: budget must be >= 2");

  Rng rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;
  const Eigen::Index d = model.dim();

  const int adapt_iters = std::max(budget * 3 / 5, 1);
  const int eval_iters = std::max(budget - adapt_iters, 1);
  const double gain = 1.0 / (target_accept * (1.0 - target_accept));

  double log_h = std::log(h_init);
  detail::KernelPoint cur = detail::eval_point(family, model, x0);
  Vector z(d);
  int eval_accepts = 0;

  for (int t = 0; t < adapt_iters + eval_iters; ++t) {
    const bool adapting = t < adapt_iters;
    const double h = std::exp(log_h);
    const ProposalSpec cur_prop = detail::proposal_from(cur, h);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = n01(rng);
    const Vector y = cur_prop.mean + cur_prop.cov_chol.triangularView<Eigen::Lower>() * z;
    const double log_u = std::log(u01(rng));

    bool accept = false;
    if (model.in_support(y)) {
      bool valid = true;
      detail::KernelPoint prop;
      try {
        prop = detail::eval_point(family, model, y);
      } catch (const NotPositiveDefinite&) {
        valid = false;
      } catch (const NonFiniteTrajectory&) {
        valid = false;
      }
      if (valid && detail::finite_point(prop)) {
        const ProposalSpec rev = detail::proposal_from(prop, h);
        const double log_ratio =
            prop.log_pi + rev.log_density_at(cur.x) - cur.log_pi - cur_prop.log_density_at(y);
        if (log_u < log_ratio) {
          cur = std::move(prop);
          accept = true;
        }
      }
    }

    if (adapting) {
      const double step = gain / static_cast<double>(t + 10);
      log_h += step * ((accept ? 1.0 : 0.0) - target_accept);
      log_h = std::clamp(log_h, -40.0, 40.0);
    } else if (accept) {
      ++eval_accepts;
    }
  }

  TuneResult result;
  result.h = std::exp(log_h);
  result.achieved_rate = static_cast<double>(eval_accepts) / static_cast<double>(eval_iters);
  result.budget_exhausted = std::abs(result.achieved_rate - target_accept) > 0.1;
  return result;
}

}  // namespace pdmala
