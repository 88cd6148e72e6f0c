#pragma once

#include <optional>
#include <thread>

#include "pdmala/samplers.hpp"

namespace pdmala {

/// Euler-Maruyama ensemble parameters. The step must be small enough that
/// at most 1% of paths go non-finite, or the run is flagged invalid.
struct EnsembleConfig {
  int n_paths = 0;
  long n_steps = 0;
  double step = 0.0;
  long burn_in = 0;
  std::function<StateVector(Rng&)> x0_sampler;
  std::uint64_t seed = 0;
  int thin = 10;
  int n_threads = 0;  // 0: hardware concurrency
};

struct SampleCloud {
  Matrix samples;  // retained states, one per row
  double frozen_fraction = 0.0;
  long n_retained() const { return samples.rows(); }
};

/// One Euler-Maruyama step x + h b(x) + sqrtV(x) * noise; the noise vector
/// already carries the sqrt(h) scale. Returns nullopt when the drift or
/// volatility evaluation fails or produces non-finite values; the caller
/// freezes the path.
inline std::optional<StateVector> em_step(const DiffusionSpec& spec, const StateVector& x,
                                          double h, const Vector& noise) {
  try {
    const Vector b = spec.drift(x);
    const Matrix l = spec.volatility_chol(x);
    if (!b.allFinite() || !l.allFinite()) return std::nullopt;
    StateVector next = x + h * b + l.triangularView<Eigen::Lower>() * noise;
    if (!next.allFinite()) return std::nullopt;
    return next;
  } catch (const NotPositiveDefinite&) {
    return std::nullopt;
  } catch (const NonFiniteDensity&) {
    return std::nullopt;
  } catch (const NonFiniteTrajectory&) {
    return std::nullopt;
  }
}

/// Simulates n_paths independent trajectories and retains post-burn-in
/// states thinned by cfg.thin. Paths are seeded individually, so the result
/// does not depend on the thread count. Paths that go non-finite are frozen
/// and their samples excluded; more than 1% frozen raises InvalidRun.
inline SampleCloud simulate_ensemble(const DiffusionSpec& spec, const EnsembleConfig& cfg) {
  if (cfg.n_paths < 1) throw BadConfig("simulate_ensemble: n_paths must be >= 1");
  if (cfg.n_steps < 1) throw BadConfig("simulate_ensemble: n_steps must be >= 1");
  if (!(cfg.step > 0.0)) throw BadConfig("simulate_ensemble: step must be positive");
  if (cfg.burn_in >= cfg.n_steps) throw BadConfig("simulate_ensemble: burn_in must be < n_steps");
  if (!cfg.x0_sampler) throw BadConfig("simulate_ensemble: x0_sampler not set");

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int n_threads = std::max(1, std::min(cfg.n_threads > 0 ? cfg.n_threads : hw, cfg.n_paths));
  const double sqrt_h = std::sqrt(cfg.step);

  std::vector<std::vector<Vector>> kept_per_path(static_cast<size_t>(cfg.n_paths));
  std::vector<uint8_t> frozen(static_cast<size_t>(cfg.n_paths), 0);

  const auto worker = [&](int tid) {
    std::normal_distribution<double> n01;
    for (int p = tid; p < cfg.n_paths; p += n_threads) {
      std::seed_seq ss{cfg.seed, static_cast<std::uint64_t>(p)};
      Rng rng(ss);
      StateVector x = cfg.x0_sampler(rng);
      const Eigen::Index d = x.size();
      Vector noise(d);
      auto& kept = kept_per_path[static_cast<size_t>(p)];
      kept.reserve(static_cast<size_t>((cfg.n_steps - cfg.burn_in) / cfg.thin + 1));
      for (long s = 1; s <= cfg.n_steps; ++s) {
        for (Eigen::Index k = 0; k < d; ++k) noise[k] = sqrt_h * n01(rng);
        auto next = em_step(spec, x, cfg.step, noise);
        if (!next) {
          frozen[static_cast<size_t>(p)] = 1;
          kept.clear();
          break;
        }
        x = std::move(*next);
        if (s > cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0) kept.push_back(x);
      }
    }
  };

  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  long n_frozen = 0;
  long n_kept = 0;
  for (int p = 0; p < cfg.n_paths; ++p) {
    n_frozen += frozen[static_cast<size_t>(p)];
    n_kept += static_cast<long>(kept_per_path[static_cast<size_t>(p)].size());
  }

  SampleCloud cloud;
  cloud.frozen_fraction = static_cast<double>(n_frozen) / static_cast<double>(cfg.n_paths);
  if (cloud.frozen_fraction > 0.01) {
    throw InvalidRun("simulate_ensemble: " + std::to_string(n_frozen) + " of " +
                     std::to_string(cfg.n_paths) + " paths went non-finite; reduce the step");
  }

  Eigen::Index d = 0;
  for (const auto& kept : kept_per_path) {
    if (!kept.empty()) {
      d = kept.front().size();
      break;
    }
  }
  cloud.samples.resize(n_kept, d);
  long row = 0;
  for (const auto& kept : kept_per_path) {
    for (const auto& s : kept) cloud.samples.row(row++) = s;
  }
  return cloud;
}

/// Histogram comparison of one coordinate's marginal against a claimed
/// (unnormalized) density.
struct DensityComparison {
  int coord = 0;
  std::vector<double> edges;
  std::vector<double> empirical;
  std::vector<double> reference;
  double tv_distance = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DimensionMismatch("tv_distance: length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

struct CompareOptions {
  double lo = -6.0;
  double hi = 6.0;
  double threshold = 0.03;
  double integration_pad = 2.0;  // box half-extension for the other coordinates
  int integration_points = 201;  // per other coordinate
  int bin_subdivisions = 4;      // quadrature points per bin for the tested coordinate
};

namespace detail {

// Unnormalized marginal of exp(log_density) in coordinate `coord` at value z,
// integrating the other coordinates over a bounded tensor grid. d <= 3.
inline double marginal_unnormalized(const std::function<double(const StateVector&)>& log_density,
                                    Eigen::Index d, int coord, double z, const CompareOptions& opt,
                                    double log_shift) {
  std::vector<Eigen::Index> others;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j != coord) others.push_back(j);
  }
  StateVector x(d);
  x[coord] = z;
  if (others.empty()) return std::exp(log_density(x) - log_shift);

  const double a = opt.lo - opt.integration_pad;
  const double b = opt.hi + opt.integration_pad;
  const int n = opt.integration_points;
  const double dx = (b - a) / (n - 1);

  const std::function<double(size_t)> integrate = [&](size_t level) -> double {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      x[others[level]] = a + i * dx;
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      const double v = level + 1 == others.size() ? std::exp(log_density(x) - log_shift)
                                                  : integrate(level + 1);
      acc += w * v;
    }
    return acc * dx;
  };
  return integrate(0);
}

}  // namespace detail

/// Total-variation comparison of per-coordinate marginals of the cloud
/// against a claimed log density (normalized numerically on the grid).
/// Requires at least 10^4 retained samples.
inline std::vector<DensityComparison> compare_density(
    const SampleCloud& cloud, const std::function<double(const StateVector&)>& claimed_log_density,
    const std::vector<int>& coords, int bins, const CompareOptions& opt = {}) {
  if (cloud.n_retained() < 10000) {
    throw InsufficientSamples("compare_density: need >= 10^4 retained samples, have " +
                              std::to_string(cloud.n_retained()));
  }
  const Eigen::Index d = cloud.samples.cols();
  if (d > 3) throw BadConfig("compare_density: marginal integration supports d <= 3");
  if (bins < 2) throw BadConfig("compare_density: need at least 2 bins");

  // Shift the claimed density by its maximum over a probe grid so the
  // exponentials stay in range regardless of normalization.
  double log_shift = -std::numeric_limits<double>::infinity();
  {
    const int probe = 9;
    StateVector x(d);
    std::vector<int> idx(static_cast<size_t>(d), 0);
    const long total = static_cast<long>(std::pow(probe, static_cast<int>(d)));
    for (long t = 0; t < total; ++t) {
      long rem = t;
      for (Eigen::Index j = 0; j < d; ++j) {
        const int i = static_cast<int>(rem % probe);
        rem /= probe;
        x[j] = opt.lo + (opt.hi - opt.lo) * i / (probe - 1);
      }
      log_shift = std::max(log_shift, claimed_log_density(x));
    }
  }

  std::vector<DensityComparison> out;
  for (const int coord : coords) {
    if (coord < 0 || coord >= d) throw DimensionMismatch("compare_density: coordinate out of range");
    DensityComparison cmp;
    cmp.coord = coord;
    cmp.threshold = opt.threshold;
    const double width = (opt.hi - opt.lo) / bins;
    cmp.edges.resize(static_cast<size_t>(bins) + 1);
    for (int k = 0; k <= bins; ++k) cmp.edges[static_cast<size_t>(k)] = opt.lo + k * width;

    // Empirical bin masses; samples outside [lo, hi) are dropped and the
    // masses renormalized.
    cmp.empirical.assign(static_cast<size_t>(bins), 0.0);
    long n_in = 0;
    for (long i = 0; i < cloud.samples.rows(); ++i) {
      const double v = cloud.samples(i, coord);
      if (v < opt.lo || v >= opt.hi) continue;
      const int k = std::min(static_cast<int>((v - opt.lo) / width), bins - 1);
      cmp.empirical[static_cast<size_t>(k)] += 1.0;
      ++n_in;
    }
    if (n_in == 0) throw InsufficientSamples("compare_density: no samples inside the grid");
    for (auto& e : cmp.empirical) e /= static_cast<double>(n_in);

    // Reference masses: trapezoid over bin_subdivisions points per bin of
    // the numerically integrated marginal, then normalized.
    cmp.reference.assign(static_cast<size_t>(bins), 0.0);
    const int sub = opt.bin_subdivisions;
    double total_mass = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double left = cmp.edges[static_cast<size_t>(k)];
      double mass = 0.0;
      const double dz = width / sub;
      for (int s = 0; s <= sub; ++s) {
        const double z = left + s * dz;
        const double w = (s == 0 || s == sub) ? 0.5 : 1.0;
        mass += w * detail::marginal_unnormalized(claimed_log_density, d, coord, z, opt, log_shift);
      }
      cmp.reference[static_cast<size_t>(k)] = mass * dz;
      total_mass += cmp.reference[static_cast<size_t>(k)];
    }
    for (auto& r : cmp.reference) r /= total_mass;

    cmp.tv_distance = tv_distance(cmp.empirical, cmp.reference);
    cmp.pass = cmp.tv_distance <= cmp.threshold;
    out.push_back(std::move(cmp));
  }
  return out;
}

}  // namespace pdmala
