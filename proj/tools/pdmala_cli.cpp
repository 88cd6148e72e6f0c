// Benchmark and verification front end for the pdmala library.
//
// Subcommands:
//   run            replicated chains for each configured sampler, ESS tables
//   tune           step-size search only (Robbins-Monro or ESS grid)
//   verify         diffusion-lab invariant checks; exit code reflects pass/fail
//   make-synthetic write synthetic logistic and FitzHugh-Nagumo datasets
//
// Configuration comes from a JSON file (--config); command-line flags win
// over config values. (config, base_seed) determines every numeric output.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

#include "pdmala/pdmala.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdmala;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool save_traces = false;
  bool no_intercept = false;
  bool fhn_literal_bt = false;
};

json load_config(const CliOptions& opt) {
  if (opt.config_path.empty()) return json::object();
  std::ifstream in(opt.config_path);
  if (!in) throw BadConfig("cannot open config file: " + opt.config_path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::parse_error& e) {
    throw BadConfig("config " + opt.config_path + " is not valid JSON: " + e.what());
  }
  return cfg;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw BadConfig("config field \"" + key + "\" has the wrong type");
  }
}

struct ResolvedModel {
  std::shared_ptr<const TargetModel> model;
  std::string dataset_label;
  Vector x0;
};

FhnDataset load_fhn_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingDataset("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw BadConfig("dataset " + path + " is empty");
  std::vector<double> t, w, r;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    double tv, wv, rv;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &tv, &wv, &rv) != 3) {
      throw BadConfig("dataset " + path + ": expected t,W,R at line " + std::to_string(line_no));
    }
    t.push_back(tv);
    w.push_back(wv);
    r.push_back(rv);
  }
  FhnDataset data;
  data.times = Eigen::Map<Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
  data.obs.resize(static_cast<Eigen::Index>(t.size()), 2);
  for (size_t i = 0; i < t.size(); ++i) {
    data.obs(static_cast<Eigen::Index>(i), 0) = w[i];
    data.obs(static_cast<Eigen::Index>(i), 1) = r[i];
  }
  return data;
}

void write_fhn_csv(const FhnDataset& data, const std::string& path) {
  std::ofstream out(path);
  out << "t,W,R\n";
  out.precision(12);
  for (Eigen::Index i = 0; i < data.times.size(); ++i) {
    out << data.times[i] << ',' << data.obs(i, 0) << ',' << data.obs(i, 1) << '\n';
  }
}

void write_logistic_csv(const LogisticData& data, const std::string& path) {
  std::ofstream out(path);
  out << "y";
  // column 0 is the intercept the loader re-adds, so skip it here
  for (Eigen::Index j = 1; j < data.x.cols(); ++j) out << ",x" << j;
  out << '\n';
  out.precision(12);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    out << data.y[i];
    for (Eigen::Index j = 1; j < data.x.cols(); ++j) out << ',' << data.x(i, j);
    out << '\n';
  }
}

FhnConfig fhn_config_from(const json& model_cfg, const CliOptions& opt) {
  const json fhn = model_cfg.contains("fhn") ? model_cfg.at("fhn") : json::object();
  FhnConfig cfg;
  cfg.noise_sd = get_or(fhn, "noise_sd", cfg.noise_sd);
  cfg.prior_sd = get_or(fhn, "prior_sd", cfg.prior_sd);
  cfg.n_obs = get_or(fhn, "n_obs", cfg.n_obs);
  cfg.t_end = get_or(fhn, "t_end", cfg.t_end);
  cfg.rk_max_step = get_or(fhn, "rk_max_step", cfg.rk_max_step);
  if (get_or(fhn, "literal_bT", false) || opt.fhn_literal_bt) cfg.variant = FhnVariant::LiteralBT;
  const std::string noise_param = get_or<std::string>(fhn, "noise_param", "sd");
  if (noise_param == "sd") {
    cfg.noise_param = NoiseParam::Sd;
  } else if (noise_param == "variance") {
    cfg.noise_param = NoiseParam::Variance;
  } else if (noise_param == "precision") {
    cfg.noise_param = NoiseParam::Precision;
  } else {
    throw BadConfig("config field \"noise_param\" must be sd, variance or precision, got \"" +
                    noise_param + "\"");
  }
  if (fhn.contains("true_params")) {
    const auto tp = fhn.at("true_params").get<std::vector<double>>();
    if (tp.size() != 3) throw BadConfig("config field \"true_params\" must have 3 entries");
    cfg.true_params = Eigen::Vector3d(tp[0], tp[1], tp[2]);
  }
  return cfg;
}

ResolvedModel resolve_model(const json& cfg, const CliOptions& opt) {
  const json model_cfg = cfg.contains("model") ? cfg.at("model") : json::object();
  const std::string kind = get_or<std::string>(model_cfg, "kind", "logistic");
  ResolvedModel out;
  out.dataset_label = get_or<std::string>(cfg, "dataset_label", "");

  if (kind == "logistic") {
    LogisticData data;
    if (model_cfg.contains("csv")) {
      const std::string path = model_cfg.at("csv").get<std::string>();
      data = load_logistic_csv(path, !opt.no_intercept && !get_or(model_cfg, "no_intercept", false));
      if (out.dataset_label.empty()) out.dataset_label = fs::path(path).stem().string();
    } else {
      const json syn = model_cfg.contains("synthetic") ? model_cfg.at("synthetic") : json::object();
      data = make_synthetic_logistic(get_or(syn, "n", 250), get_or(syn, "d", 7),
                                     get_or<std::uint64_t>(syn, "seed", 1));
      if (out.dataset_label.empty()) out.dataset_label = "synthetic-logistic";
    }
    const double alpha = get_or(model_cfg, "alpha", 100.0);
    out.model = std::make_shared<LogisticModel>(data, alpha);
    out.x0 = Vector::Zero(out.model->dim());
  } else if (kind == "fhn") {
    const FhnConfig fhn_cfg = fhn_config_from(model_cfg, opt);
    FhnDataset data;
    const json fhn = model_cfg.contains("fhn") ? model_cfg.at("fhn") : json::object();
    if (fhn.contains("csv")) {
      data = load_fhn_csv(fhn.at("csv").get<std::string>());
      if (out.dataset_label.empty()) {
        out.dataset_label = fs::path(fhn.at("csv").get<std::string>()).stem().string();
      }
    } else {
      data = generate_fhn_dataset(fhn_cfg, get_or<std::uint64_t>(fhn, "seed", 1));
      if (out.dataset_label.empty()) out.dataset_label = "synthetic-fhn";
    }
    out.model = std::make_shared<FitzHughNagumoModel>(data, fhn_cfg);
    out.x0 = fhn_cfg.true_params;
  } else if (kind == "gaussian-example") {
    auto base = std::make_shared<GaussianModel>(GaussianModel::standard(2));
    out.model = std::make_shared<ExampleMetricModel>(
        base, [](double x2) { return 1.0 + x2 * x2; }, [](double x2) { return 2.0 * x2; });
    if (out.dataset_label.empty()) out.dataset_label = "gaussian-example";
    out.x0 = Vector::Zero(2);
  } else {
    throw BadConfig("unknown model kind: \"" + kind + "\"");
  }

  if (cfg.contains("x0")) {
    const auto x0 = cfg.at("x0").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(x0.size()) != out.model->dim()) {
      throw BadConfig("config field \"x0\" has length " + std::to_string(x0.size()) +
                      ", model dimension is " + std::to_string(out.model->dim()));
    }
    out.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  }
  return out;
}

std::vector<Family> resolve_families(const json& cfg) {
  std::vector<Family> families;
  const auto names =
      get_or<std::vector<std::string>>(cfg, "samplers", {"pmala", "mmala"});
  families.reserve(names.size());
  for (const auto& n : names) families.push_back(family_from_name(n));
  if (families.empty()) throw BadConfig("config field \"samplers\" is empty");
  return families;
}

struct StepChoice {
  double h = 0.0;
  double achieved_rate = std::numeric_limits<double>::quiet_NaN();
  bool tuned = false;
  bool budget_exhausted = false;
};

// ESS-grid alternative: short pilot chains on a log-spaced grid around the
// Robbins-Monro answer, keep the h with the best min-ESS per iteration.
double ess_grid_search(Family family, const TargetModel& model, const Vector& x0, double h_center,
                       int pilot_iters, std::uint64_t seed, const std::vector<double>& factors) {
  double best_h = h_center;
  double best_rate = -1.0;
  for (const double f : factors) {
    const double h = h_center * f;
    const ChainTrace trace = run_chain(family, model, x0, StepSize(h), pilot_iters, seed);
    double min_ess = 0.0;
    try {
      const EssReport r = make_ess_report(trace, pilot_iters / 5);
      min_ess = std::isnan(r.min) ? 0.0 : r.min;
    } catch (const Error&) {
      min_ess = 0.0;
    }
    const double rate = min_ess / static_cast<double>(pilot_iters);
    if (rate > best_rate) {
      best_rate = rate;
      best_h = h;
    }
  }
  return best_h;
}

StepChoice choose_step(const json& cfg, Family family, const TargetModel& model, const Vector& x0,
                       std::uint64_t base_seed) {
  const std::string name = family_name(family);
  if (cfg.contains("step_sizes") && cfg.at("step_sizes").contains(name)) {
    StepChoice c;
    c.h = cfg.at("step_sizes").at(name).get<double>();
    if (!(c.h > 0.0)) throw BadConfig("config step size for " + name + " must be positive");
    return c;
  }
  const json tune = cfg.contains("tune") ? cfg.at("tune") : json::object();
  const double target = get_or(tune, "target_accept", 0.574);
  const int budget = get_or(tune, "budget", 2000);
  const std::string mode = get_or<std::string>(tune, "mode", "accept-rate");

  StepChoice c;
  c.tuned = true;
  const TuneResult rm = tune_step_size(family, model, x0, target, budget, base_seed ^ 0x9E3779B9);
  c.h = rm.h;
  c.achieved_rate = rm.achieved_rate;
  c.budget_exhausted = rm.budget_exhausted;
  if (mode == "ess-grid") {
    const auto factors = get_or<std::vector<double>>(tune, "grid", {0.25, 0.5, 1.0, 2.0, 4.0});
    const int pilot = get_or(tune, "pilot_iters", 1000);
    c.h = ess_grid_search(family, model, x0, rm.h, pilot, base_seed ^ 0x51ED2701, factors);
  } else if (mode != "accept-rate") {
    throw BadConfig("config field \"tune.mode\" must be accept-rate or ess-grid, got \"" + mode +
                    "\"");
  }
  return c;
}

void write_trace(const ChainTrace& trace, const std::string& method, int replicate,
                 const fs::path& dir) {
  const std::string stem = "trace_" + method + "_" + std::to_string(replicate);
  const fs::path bin_path = dir / (stem + ".bin");
  std::ofstream bin(bin_path, std::ios::binary);
  // row-major little-endian float64
  for (Eigen::Index i = 0; i < trace.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < trace.samples.cols(); ++j) {
      const double v = trace.samples(i, j);
      bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
  json side;
  side["shape"] = {trace.samples.rows(), trace.samples.cols()};
  side["dtype"] = "float64";
  side["byte_order"] = "little-endian";
  side["layout"] = "row-major";
  side["method"] = method;
  side["replicate"] = replicate;
  side["seed"] = trace.rng_seed;
  side["h"] = trace.h_used;
  side["wall_time_s"] = trace.wall_time_s;
  side["accepted"] = trace.accepted;
  std::ofstream(dir / (stem + ".json")) << side.dump(2) << '\n';
}

json ess_report_json(const EssReport& r) {
  const auto num_or_null = [](double v) -> json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  json j;
  j["per_param_ess"] = json::array();
  for (Eigen::Index i = 0; i < r.per_param_ess.size(); ++i) {
    j["per_param_ess"].push_back(num_or_null(r.per_param_ess[i]));
  }
  j["min"] = num_or_null(r.min);
  j["median"] = num_or_null(r.median);
  j["max"] = num_or_null(r.max);
  j["acceptance_rate"] = r.acceptance_rate;
  j["wall_time_s"] = r.wall_time_s;
  j["min_ess_per_s"] = num_or_null(r.min_ess_per_s);
  return j;
}

int cmd_run(const json& cfg, const CliOptions& opt, bool tune_only) {
  const ResolvedModel resolved = resolve_model(cfg, opt);
  const std::vector<Family> families = resolve_families(cfg);
  const int n_iters = get_or(cfg, "n_iters", 5000);
  const int burn_in = get_or(cfg, "burn_in", 1000);
  const int n_replicates = get_or(cfg, "n_replicates", 1);
  const std::uint64_t base_seed = opt.seed_set ? opt.seed : get_or<std::uint64_t>(cfg, "base_seed", 42);
  const bool save_traces = opt.save_traces || get_or(cfg, "save_traces", false);
  if (n_replicates < 1) throw BadConfig("config field \"n_replicates\" must be >= 1");
  if (n_iters < 1) throw BadConfig("config field \"n_iters\" must be >= 1");
  if (burn_in < 0 || burn_in >= n_iters + burn_in) throw BadConfig("config field \"burn_in\" is invalid");

  const fs::path out_dir = opt.out_dir;
  fs::create_directories(out_dir);

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int threads_cfg = opt.threads > 0 ? opt.threads : get_or(cfg, "threads", 0);
  const int n_threads = std::max(1, threads_cfg > 0 ? threads_cfg : hw);

  std::ofstream csv;
  if (!tune_only) {
    csv.open(out_dir / "aggregate.csv");
    csv << summary_csv_header() << '\n';
  }
  json tuned_out = json::object();
  json reports = json::array();

  for (const Family family : families) {
    const std::string method = family_name(family);
    const StepChoice step = choose_step(cfg, family, *resolved.model, resolved.x0, base_seed);
    std::cout << method << ": h = " << step.h;
    if (step.tuned) {
      std::cout << " (tuned, acceptance " << step.achieved_rate
                << (step.budget_exhausted ? ", warning: tuning budget exhausted" : "") << ")";
    }
    std::cout << '\n';
    tuned_out[method] = {{"h", step.h},
                         {"tuned", step.tuned},
                         {"achieved_rate", step.achieved_rate},
                         {"budget_exhausted", step.budget_exhausted}};
    if (tune_only) continue;

    std::vector<ChainTrace> traces(static_cast<size_t>(n_replicates));
    std::vector<std::string> errors(static_cast<size_t>(n_replicates));
    const auto worker = [&](int tid) {
      for (int rep = tid; rep < n_replicates; rep += n_threads) {
        try {
          traces[static_cast<size_t>(rep)] =
              run_chain(family, *resolved.model, resolved.x0, StepSize(step.h), n_iters + burn_in,
                        base_seed + static_cast<std::uint64_t>(rep));
        } catch (const Error& e) {
          errors[static_cast<size_t>(rep)] = e.what();
        }
      }
    };
    if (n_threads == 1 || n_replicates == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < std::min(n_threads, n_replicates); ++t) pool.emplace_back(worker, t);
      for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw Error("replicate failed: " + e);
    }

    for (int rep = 0; rep < n_replicates; ++rep) {
      const auto& trace = traces[static_cast<size_t>(rep)];
      json entry;
      entry["method"] = method;
      entry["replicate"] = rep;
      entry["seed"] = trace.rng_seed;
      entry["h"] = trace.h_used;
      entry["ess"] = ess_report_json(make_ess_report(trace, burn_in));
      reports.push_back(std::move(entry));
      if (save_traces) write_trace(trace, method, rep, out_dir);
    }

    const ReplicateSummary summary = summarize(traces, burn_in);
    csv << summary_csv_row(resolved.dataset_label, method, summary) << '\n';
    std::cout << method << ": min-ESS mean " << summary.ess_min_mean << ", min-ESS/s "
              << summary.min_ess_per_s_mean << ", cpu " << summary.cpu_s_mean << " s\n";
  }

  if (!tune_only) std::ofstream(out_dir / "ess_reports.json") << reports.dump(2) << '\n';
  std::ofstream(out_dir / "tuned.json") << tuned_out.dump(2) << '\n';
  return 0;
}

struct VerifyCheck {
  std::string label;
  bool pass = false;
  std::string detail;
};

int cmd_verify(const json& cfg, const CliOptions& opt) {
  const json vcfg = cfg.contains("verify") ? cfg.at("verify") : json::object();
  const int n_paths = get_or(vcfg, "n_paths", 200);
  const long n_steps = get_or<long>(vcfg, "n_steps", 200000);
  const double step = get_or(vcfg, "step", 0.01);
  const long ens_burn = get_or<long>(vcfg, "burn_in", 20000);
  const std::uint64_t seed = opt.seed_set ? opt.seed : get_or<std::uint64_t>(vcfg, "seed", 7);
  const std::string mmala_claim = get_or<std::string>(vcfg, "mmala_claim", "pi_f");
  const int threads = opt.threads > 0 ? opt.threads : get_or(vcfg, "threads", 0);
  if (mmala_claim != "pi_f" && mmala_claim != "pi") {
    throw BadConfig("config field \"verify.mmala_claim\" must be pi_f or pi, got \"" + mmala_claim +
                    "\"");
  }

  const fs::path out_dir = opt.out_dir;
  fs::create_directories(out_dir);

  auto base = std::make_shared<GaussianModel>(GaussianModel::standard(2));
  const auto example = std::make_shared<ExampleMetricModel>(
      base, [](double x2) { return 1.0 + x2 * x2; }, [](double x2) { return 2.0 * x2; });

  std::vector<VerifyCheck> checks;
  json tv_records = json::array();

  // Omega/Gamma identities on the example metric and a Hessian-type metric.
  {
    VerifyCheck c{"omega-gamma-identity", true, ""};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    const LogisticModel logistic(make_synthetic_logistic(120, 5, seed + 1), 100.0);
    for (int rep = 0; rep < 100 && c.pass; ++rep) {
      Vector x(2);
      x << n01(rng), n01(rng);
      const MetricBundle b = make_metric_bundle(*example, x);
      const Vector gamma = gamma_drift(b);
      const Vector omega = omega_drift(b);
      const double want = x[1] / (1.0 + x[1] * x[1]);
      if (gamma.cwiseAbs().maxCoeff() > 1e-9 || std::abs(omega[0]) > 1e-9 ||
          std::abs(omega[1] - want) > 1e-9) {
        c.pass = false;
        c.detail = "example metric drift mismatch";
      }
      Vector beta(5);
      for (int i = 0; i < 5; ++i) beta[i] = 0.6 * n01(rng);
      const MetricBundle lb = make_metric_bundle(logistic, beta);
      if ((omega_drift(lb) - gamma_drift(lb)).cwiseAbs().maxCoeff() > 1e-8) {
        c.pass = false;
        c.detail = "logistic omega != gamma";
      }
    }
    checks.push_back(c);
  }

  // Lemma: half-corrected drift equals pmala drift, pointwise and pathwise.
  {
    VerifyCheck c{"lemma1-equivalence", true, ""};
    const DiffusionSpec half = assemble_diffusion(*example, Family::MmalaHalf);
    const DiffusionSpec pmala = assemble_diffusion(*example, Family::Pmala);
    std::mt19937_64 rng(seed + 2);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 100 && c.pass; ++rep) {
      Vector x(2);
      x << n01(rng), n01(rng);
      if ((half.drift(x) - pmala.drift(x)).cwiseAbs().maxCoeff() > 1e-8) {
        c.pass = false;
        c.detail = "drift mismatch";
      }
    }
    Vector xh(2), xp(2);
    xh << 0.1, 0.3;
    xp = xh;
    for (int s = 0; s < 1000 && c.pass; ++s) {
      Vector noise(2);
      for (int k = 0; k < 2; ++k) noise[k] = std::sqrt(0.01) * n01(rng);
      xh = *em_step(half, xh, 0.01, noise);
      xp = *em_step(pmala, xp, 0.01, noise);
      if ((xh - xp).cwiseAbs().maxCoeff() > 1e-8) {
        c.pass = false;
        c.detail = "pathwise divergence";
      }
    }
    checks.push_back(c);
  }

  // Stationarity residuals: pmala solves the balance equation everywhere;
  // the uncorrected simplified drift fails it once div(A) is nonzero,
  // probed on A(x) = diag(1 + x1^2, 1) where Gamma_1 = x1.
  {
    VerifyCheck c{"fokker-planck-residual", true, ""};
    Matrix cov(2, 2);
    cov << 1.0, 0.5, 0.5, 1.0;
    auto corr = std::make_shared<GaussianModel>(Vector::Zero(2), cov);
    std::vector<DiagonalMetricModel::Entry> entries(2);
    entries[0].value = [](const StateVector& x) { return 1.0 / (1.0 + x[0] * x[0]); };
    entries[0].gradient = [](const StateVector& x) {
      Vector g = Vector::Zero(2);
      const double u = 1.0 + x[0] * x[0];
      g[0] = -2.0 * x[0] / (u * u);
      return g;
    };
    entries[1].value = [](const StateVector&) { return 1.0; };
    entries[1].gradient = [](const StateVector&) { return Vector(Vector::Zero(2)); };
    const DiagonalMetricModel diag_a(corr, std::move(entries));

    for (const TargetModel* model :
         {static_cast<const TargetModel*>(example.get()), static_cast<const TargetModel*>(&diag_a)}) {
      const auto log_pi = [model](const StateVector& x) { return model->log_density(x); };
      const DiffusionSpec pmala = assemble_diffusion(*model, Family::Pmala);
      std::mt19937_64 rng(seed + 3);
      std::normal_distribution<double> n01;
      for (int rep = 0; rep < 50 && c.pass; ++rep) {
        Vector x(2);
        x << n01(rng), n01(rng);
        const Vector r = fokker_planck_residual(pmala, log_pi, x, 3e-5);
        const double scale = std::max(pmala.drift(x).cwiseAbs().maxCoeff(), 1e-3);
        if (r.cwiseAbs().maxCoeff() / scale > 1e-4) {
          c.pass = false;
          c.detail = "pmala residual too large";
        }
      }
    }

    const auto log_pi = [&](const StateVector& x) { return diag_a.log_density(x); };
    const DiffusionSpec simplified = assemble_diffusion(diag_a, Family::Simplified);
    Vector probe(2);
    probe << 1.0, 0.0;
    const Vector r = fokker_planck_residual(simplified, log_pi, probe, 3e-5);
    const double scale = std::max(simplified.drift(probe).cwiseAbs().maxCoeff(), 1e-3);
    if (r.cwiseAbs().maxCoeff() / scale < 1e-2) {
      c.pass = false;
      c.detail = "simplified residual unexpectedly small";
    }
    checks.push_back(c);
  }

  // Ensemble marginals: which density does each diffusion actually keep?
  {
    EnsembleConfig ecfg;
    ecfg.n_paths = n_paths;
    ecfg.n_steps = n_steps;
    ecfg.step = step;
    ecfg.burn_in = ens_burn;
    ecfg.seed = seed + 4;
    ecfg.n_threads = threads;
    ecfg.x0_sampler = [](Rng& rng) {
      std::normal_distribution<double> n01;
      StateVector x(2);
      x[0] = n01(rng);
      x[1] = n01(rng);
      return x;
    };

    const auto log_phi2 = [](const StateVector& x) { return -0.5 * x.squaredNorm(); };
    const auto log_phi2_f = [](const StateVector& x) {
      return -0.5 * x.squaredNorm() + std::log(1.0 + x[1] * x[1]);
    };

    const auto record = [&](const std::string& label, const DensityComparison& cmp,
                            bool expect_pass) {
      json rec;
      rec["spec_label"] = label;
      rec["coord"] = cmp.coord;
      rec["tv_distance"] = cmp.tv_distance;
      rec["threshold"] = cmp.threshold;
      rec["pass"] = cmp.pass;
      tv_records.push_back(rec);
      VerifyCheck c{label, cmp.pass == expect_pass,
                    "tv = " + std::to_string(cmp.tv_distance) +
                        ", threshold = " + std::to_string(cmp.threshold)};
      checks.push_back(c);
    };

    const DiffusionSpec mmala = assemble_diffusion(*example, Family::MmalaUncorrected);
    const SampleCloud mmala_cloud = simulate_ensemble(mmala, ecfg);
    const auto claimed = mmala_claim == "pi_f"
                             ? std::function<double(const StateVector&)>(log_phi2_f)
                             : std::function<double(const StateVector&)>(log_phi2);
    record("mmala-x2-marginal-vs-claim", compare_density(mmala_cloud, claimed, {1}, 60).front(),
           true);
    {
      CompareOptions opt_phi;
      opt_phi.threshold = 0.05;
      const DensityComparison vs_phi =
          compare_density(mmala_cloud, log_phi2, {1}, 60, opt_phi).front();
      // the uncorrected diffusion must NOT match plain phi
      json rec;
      rec["spec_label"] = "mmala-x2-marginal-vs-phi";
      rec["coord"] = vs_phi.coord;
      rec["tv_distance"] = vs_phi.tv_distance;
      rec["threshold"] = vs_phi.threshold;
      rec["pass"] = vs_phi.tv_distance >= 0.05;
      tv_records.push_back(rec);
      checks.push_back({"mmala-x2-marg-away-from-phi", vs_phi.tv_distance >= 0.05,
                        "tv = " + std::to_string(vs_phi.tv_distance)});
    }

    EnsembleConfig pcfg = ecfg;
    pcfg.seed = seed + 5;
    const DiffusionSpec pmala = assemble_diffusion(*example, Family::Pmala);
    const SampleCloud pmala_cloud = simulate_ensemble(pmala, pcfg);
    record("pmala-x2-marginal-vs-phi", compare_density(pmala_cloud, log_phi2, {1}, 60).front(),
           true);
  }

  bool all_pass = true;
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.label;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << '\n';
  }
  std::ofstream(out_dir / "verify_report.json") << tv_records.dump(2) << '\n';
  std::cout << (all_pass ? "verification passed" : "verification FAILED") << '\n';
  return all_pass ? 0 : 1;
}

int cmd_make_synthetic(const json& cfg, const CliOptions& opt) {
  const std::uint64_t seed = opt.seed_set ? opt.seed : get_or<std::uint64_t>(cfg, "base_seed", 42);
  const fs::path out_dir = opt.out_dir;
  fs::create_directories(out_dir);

  const json model_cfg = cfg.contains("model") ? cfg.at("model") : json::object();
  const json syn = model_cfg.contains("synthetic") ? model_cfg.at("synthetic") : json::object();
  const LogisticData logistic =
      make_synthetic_logistic(get_or(syn, "n", 250), get_or(syn, "d", 7), seed);
  write_logistic_csv(logistic, (out_dir / "synthetic_logistic.csv").string());

  const FhnConfig fhn_cfg = fhn_config_from(model_cfg, opt);
  const FhnDataset fhn = generate_fhn_dataset(fhn_cfg, seed);
  write_fhn_csv(fhn, (out_dir / "synthetic_fhn.csv").string());

  std::cout << "wrote " << (out_dir / "synthetic_logistic.csv").string() << " and "
            << (out_dir / "synthetic_fhn.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin-diffusion MALA samplers: benchmark and verification harness"};
  app.require_subcommand(1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "JSON configuration file")->expected(1);
  app.add_option("--threads", opt.threads, "worker threads (default: hardware parallelism)");
  auto* seed_opt = app.add_option("--seed", opt.seed, "base RNG seed (overrides config)");
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_flag("--save-traces", opt.save_traces, "persist per-replicate traces");
  app.add_flag("--no-intercept", opt.no_intercept, "do not append an intercept column");
  app.add_flag("--fhn-literal-bT", opt.fhn_literal_bt,
               "use the literal bT recovery equation (T read as time)");

  auto* run = app.add_subcommand("run", "replicated sampler benchmark");
  auto* tune = app.add_subcommand("tune", "step-size tuning only");
  auto* verify = app.add_subcommand("verify", "diffusion-lab invariant checks");
  auto* make_synth = app.add_subcommand("make-synthetic", "write synthetic datasets");
  for (auto* sub : {run, tune, verify, make_synth}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  opt.seed_set = seed_opt->count() > 0;

  try {
    const json cfg = load_config(opt);
    if (run->parsed()) return cmd_run(cfg, opt, false);
    if (tune->parsed()) return cmd_run(cfg, opt, true);
    if (verify->parsed()) return cmd_verify(cfg, opt);
    if (make_synth->parsed()) return cmd_make_synthetic(cfg, opt);
  } catch (const BadConfig& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const MissingDataset& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return 2;
  } catch (const InsufficientSamples& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
