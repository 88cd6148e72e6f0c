#pragma once

#include <atomic>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "pdmala/target_model.hpp"

namespace pdmala {

/// Recovery equation variant. The standard model uses
///   dR/dt = -(W - a + b R)/c;
/// the literal variant replaces R by the time variable t in that term, for
/// anyone wanting the exact printed form of the equations.
enum class FhnVariant { StandardBR, LiteralBT };

/// Parameterization carrying the Exp(1) prior on the observation-noise
/// parameter: standard deviation, variance, or precision.
enum class NoiseParam { Sd, Variance, Precision };

struct FhnDataset {
  Vector times;  // k observation times, strictly increasing, > 0
  Matrix obs;    // k x 2 observed (W, R)
};

struct FhnConfig {
  Eigen::Vector2d init_state{-1.0, 1.0};
  Eigen::Vector3d true_params{0.2, 0.2, 3.0};
  double noise_sd = 0.5;
  int n_obs = 200;
  double t_end = 20.0;
  FhnVariant variant = FhnVariant::StandardBR;
  double rk_max_step = 0.0125;
  double prior_sd = 1.0;        // independent N(0, prior_sd^2) on each of (a,b,c)
  NoiseParam noise_param = NoiseParam::Sd;
  double noise_prior_rate = 1.0;
};

struct FhnTrajectory {
  Matrix states;                                  // k x 2 solution at the observation times
  std::vector<Eigen::Matrix<double, 2, 3>> sens;  // d(W,R)/d(a,b,c) at each time
  bool finite = true;
};

namespace detail {

// Joint state layout: [W, R, S00, S01, S02, S10, S11, S12] where
// S(i,p) = d u_i / d theta_p. The sensitivity system is
// dS/dt = J_u S + F_theta with J_u the state Jacobian of the vector field.
using FhnJoint = Eigen::Matrix<double, 8, 1>;

inline FhnJoint fhn_rhs(double t, const FhnJoint& y, const Eigen::Vector3d& theta,
                        FhnVariant variant) {
  const double a = theta[0], b = theta[1], c = theta[2];
  const double w = y[0], r = y[1];
  const double phi = w - w * w * w / 3.0 + r;
  const double rterm = variant == FhnVariant::StandardBR ? r : t;

  FhnJoint dy;
  dy[0] = c * phi;
  dy[1] = -(w - a + b * rterm) / c;

  const double j00 = c * (1.0 - w * w);
  const double j01 = c;
  const double j10 = -1.0 / c;
  const double j11 = variant == FhnVariant::StandardBR ? -b / c : 0.0;

  const double fw[3] = {0.0, 0.0, phi};
  const double fr[3] = {1.0 / c, -rterm / c, (w - a + b * rterm) / (c * c)};

  for (int p = 0; p < 3; ++p) {
    const double s0 = y[2 + p];
    const double s1 = y[5 + p];
    dy[2 + p] = j00 * s0 + j01 * s1 + fw[p];
    dy[5 + p] = j10 * s0 + j11 * s1 + fr[p];
  }
  return dy;
}

}  // namespace detail

/// Classical fixed-step RK4 on the joint state and forward-sensitivity
/// system, from t = 0 at the given initial state (sensitivities start at
/// zero). Returns finite = false on blow-up; callers map that to a -inf
/// log density.
inline FhnTrajectory fhn_solve(const Eigen::Vector3d& theta, const Vector& obs_times,
                               const Eigen::Vector2d& init_state,
                               FhnVariant variant = FhnVariant::StandardBR,
                               double rk_max_step = 0.0125) {
  const Eigen::Index k = obs_times.size();
  FhnTrajectory traj;
  traj.states.resize(k, 2);
  traj.sens.assign(static_cast<size_t>(k), Eigen::Matrix<double, 2, 3>::Zero());
  if (k == 0) return traj;
  for (Eigen::Index i = 0; i + 1 < k; ++i) {
    if (!(obs_times[i] < obs_times[i + 1])) {
      throw BadConfig("fhn_solve: observation times must be strictly increasing");
    }
  }
  if (obs_times[0] < 0.0) throw BadConfig("fhn_solve: observation times must be nonnegative");
  if (theta[2] == 0.0) {
    traj.finite = false;
    return traj;
  }

  detail::FhnJoint y = detail::FhnJoint::Zero();
  y[0] = init_state[0];
  y[1] = init_state[1];
  double t = 0.0;

  for (Eigen::Index i = 0; i < k; ++i) {
    const double target = obs_times[i];
    const long n_sub = std::max(1L, static_cast<long>(std::ceil((target - t) / rk_max_step - 1e-12)));
    const double h = (target - t) / static_cast<double>(n_sub);
    for (long s = 0; s < n_sub; ++s) {
      const detail::FhnJoint k1 = detail::fhn_rhs(t, y, theta, variant);
      const detail::FhnJoint k2 = detail::fhn_rhs(t + 0.5 * h, y + 0.5 * h * k1, theta, variant);
      const detail::FhnJoint k3 = detail::fhn_rhs(t + 0.5 * h, y + 0.5 * h * k2, theta, variant);
      const detail::FhnJoint k4 = detail::fhn_rhs(t + h, y + h * k3, theta, variant);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
      if (!y.allFinite() || std::abs(y[0]) > 1e6 || std::abs(y[1]) > 1e6) {
        traj.finite = false;
        return traj;
      }
    }
    t = target;
    traj.states(i, 0) = y[0];
    traj.states(i, 1) = y[1];
    auto& s = traj.sens[static_cast<size_t>(i)];
    for (int p = 0; p < 3; ++p) {
      s(0, p) = y[2 + p];
      s(1, p) = y[5 + p];
    }
  }
  return traj;
}

/// Integrates at the configured true parameters and adds Gaussian noise of
/// the configured standard deviation. Deterministic given the seed.
inline FhnDataset generate_fhn_dataset(const FhnConfig& cfg, std::uint64_t seed) {
  FhnDataset data;
  data.times.resize(cfg.n_obs);
  const double dt = cfg.t_end / cfg.n_obs;
  for (int i = 0; i < cfg.n_obs; ++i) data.times[i] = dt * (i + 1);
  const FhnTrajectory traj =
      fhn_solve(cfg.true_params, data.times, cfg.init_state, cfg.variant, cfg.rk_max_step);
  if (!traj.finite) {
    throw NonFiniteTrajectory("generate_fhn_dataset: trajectory blew up at the true parameters");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  data.obs = traj.states;
  for (Eigen::Index i = 0; i < data.obs.rows(); ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) data.obs(i, j) += cfg.noise_sd * n01(rng);
  }
  return data;
}

/// Bayesian inference for (a, b, c) in the FitzHugh-Nagumo equations
///   dW/dt = c (W - W^3/3 + R),   dR/dt = -(W - a + b R)/c,
/// observed at k times with iid Gaussian noise of known standard deviation.
/// The metric is the expected Fisher information (1/sigma^2) sum_t S_t^T S_t
/// plus the prior curvature; metric partials come from central differences
/// of the metric (second-order sensitivities are deliberately avoided).
class FitzHughNagumoModel : public TargetModel {
 public:
  FitzHughNagumoModel(FhnDataset data, FhnConfig cfg)
      : data_(std::move(data)), cfg_(cfg) {
    if (data_.obs.rows() != data_.times.size() || data_.obs.cols() != 2) {
      throw DimensionMismatch("FitzHughNagumoModel: observations must be k x 2");
    }
    if (!(cfg_.noise_sd > 0.0)) throw BadConfig("FitzHughNagumoModel: noise sd must be positive");
    if (!(cfg_.prior_sd > 0.0)) throw BadConfig("FitzHughNagumoModel: prior sd must be positive");
  }

  Eigen::Index dim() const override { return 3; }

  bool in_support(const StateVector& theta) const override {
    return theta.allFinite() && std::abs(theta[2]) > 1e-12;
  }

  double log_density(const StateVector& theta) const override {
    const FhnTrajectory traj = solve_cached(theta);
    if (!traj.finite) return -std::numeric_limits<double>::infinity();
    const double rss = (data_.obs - traj.states).squaredNorm();
    return -rss / (2.0 * cfg_.noise_sd * cfg_.noise_sd) -
           theta.squaredNorm() / (2.0 * cfg_.prior_sd * cfg_.prior_sd);
  }

  Vector grad_log_density(const StateVector& theta) const override {
    const FhnTrajectory traj = solve_cached(theta);
    if (!traj.finite) throw NonFiniteTrajectory("FHN gradient requested at a blow-up point");
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (Eigen::Index t = 0; t < data_.times.size(); ++t) {
      const Eigen::Vector2d resid = data_.obs.row(t).transpose() - traj.states.row(t).transpose();
      g += traj.sens[static_cast<size_t>(t)].transpose() * resid;
    }
    g /= cfg_.noise_sd * cfg_.noise_sd;
    g -= theta / (cfg_.prior_sd * cfg_.prior_sd);
    return g;
  }

  bool has_metric() const override { return true; }

  SpdMatrix metric(const StateVector& theta) const override {
    const FhnTrajectory traj = solve_cached(theta);
    if (!traj.finite) throw NonFiniteTrajectory("FHN metric requested at a blow-up point");
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    for (const auto& s : traj.sens) g += s.transpose() * s;
    g /= cfg_.noise_sd * cfg_.noise_sd;
    g.diagonal().array() += 1.0 / (cfg_.prior_sd * cfg_.prior_sd);
    return chol_factor(g);
  }

  PartialsTensor metric_partials(const StateVector& theta) const override {
    return fd_metric_partials(*this, theta);
  }

  /// Exp(rate) prior on the observation-noise parameter under the
  /// configured parameterization; carried as model configuration (the
  /// noise parameter is held fixed during sampling).
  double log_noise_prior(double sigma) const {
    if (!(sigma > 0.0)) return -std::numeric_limits<double>::infinity();
    double param = sigma;
    if (cfg_.noise_param == NoiseParam::Variance) param = sigma * sigma;
    if (cfg_.noise_param == NoiseParam::Precision) param = 1.0 / (sigma * sigma);
    return std::log(cfg_.noise_prior_rate) - cfg_.noise_prior_rate * param;
  }

  const FhnDataset& dataset() const { return data_; }
  const FhnConfig& config() const { return cfg_; }

 private:
  // One fresh solve per distinct theta per thread; the small ring keeps the
  // centre point alive across the finite-difference sweep of the metric.
  // Keyed by a unique per-instance token so entries from a destroyed model
  // can never alias a new one.
  FhnTrajectory solve_cached(const StateVector& theta) const {
    struct Slot {
      std::uint64_t token = 0;
      Eigen::Vector3d theta;
      FhnTrajectory traj;
    };
    thread_local std::vector<Slot> ring(8);
    thread_local size_t next = 0;
    const Eigen::Vector3d th(theta[0], theta[1], theta[2]);
    for (const auto& slot : ring) {
      if (slot.token == cache_token_ && slot.theta == th) return slot.traj;
    }
    FhnTrajectory traj = fhn_solve(th, data_.times, cfg_.init_state, cfg_.variant, cfg_.rk_max_step);
    ring[next] = Slot{cache_token_, th, traj};
    next = (next + 1) % ring.size();
    return traj;
  }

  static std::uint64_t new_cache_token() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  FhnDataset data_;
  FhnConfig cfg_;
  std::uint64_t cache_token_ = new_cache_token();
};

}  // namespace pdmala
