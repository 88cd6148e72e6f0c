#pragma once

#include <atomic>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pdmala/target_model.hpp"

namespace pdmala {

struct LogisticData {
  Matrix x;          // n x d design, intercept column first when appended
  Vector y;          // n responses in {0, 1}
  Vector true_beta;  // empty unless the data is synthetic
};

/// Synthetic generator for tests and CI: intercept column plus d-1 standard
/// normal covariates, true beta ~ N(0, I), Bernoulli responses.
inline LogisticData make_synthetic_logistic(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw BadConfig("make_synthetic_logistic: need n >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;

  LogisticData data;
  data.x.resize(n, d);
  data.x.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < d; ++j) data.x(i, j) = n01(rng);
  }
  data.true_beta.resize(d);
  for (int j = 0; j < d; ++j) data.true_beta[j] = n01(rng);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-data.x.row(i).dot(data.true_beta)));
    data.y[i] = u01(rng) < p ? 1.0 : 0.0;
  }
  return data;
}

/// CSV schema: header row; one response column named "y" with values {0,1};
/// every other column a numeric covariate. An intercept column is prepended
/// unless add_intercept is false.
inline LogisticData load_logistic_csv(const std::string& path, bool add_intercept = true) {
  std::ifstream in(path);
  if (!in) throw MissingDataset("cannot open dataset file: " + path);

  const auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      const auto b = f.find_first_not_of(" \t\r");
      const auto e = f.find_last_not_of(" \t\r");
      fields.push_back(b == std::string::npos ? std::string{} : f.substr(b, e - b + 1));
    }
    return fields;
  };

  std::string line;
  if (!std::getline(in, line)) throw BadConfig("dataset " + path + " is empty");
  const auto header = split(line);
  int y_col = -1;
  for (size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "y") y_col = static_cast<int>(j);
  }
  if (y_col < 0) throw BadConfig("dataset " + path + " has no response column named \"y\"");

  std::vector<std::vector<double>> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw BadConfig("dataset " + path + ": line " + std::to_string(line_no) +
                      " has wrong field count");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        size_t used = 0;
        row.push_back(std::stod(f, &used));
        if (used != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        throw BadConfig("dataset " + path + ": non-numeric field \"" + f + "\" at line " +
                        std::to_string(line_no));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw BadConfig("dataset " + path + " has no data rows");

  const int n = static_cast<int>(rows.size());
  const int n_cov = static_cast<int>(header.size()) - 1;
  const int d = n_cov + (add_intercept ? 1 : 0);
  LogisticData data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    int out_j = 0;
    if (add_intercept) data.x(i, out_j++) = 1.0;
    for (size_t j = 0; j < rows[static_cast<size_t>(i)].size(); ++j) {
      const double v = rows[static_cast<size_t>(i)][j];
      if (static_cast<int>(j) == y_col) {
        if (v != 0.0 && v != 1.0) {
          throw BadConfig("dataset " + path + ": response must be 0 or 1, got " +
                          std::to_string(v));
        }
        data.y[i] = v;
      } else {
        data.x(i, out_j++) = v;
      }
    }
  }
  return data;
}

/// Bayesian logistic regression with Gaussian prior beta ~ N(0, alpha I)
/// and Fisher-information metric G(beta) = X^T Lambda X + alpha^{-1} I,
/// Lambda_ii = s_i (1 - s_i). The metric is the Hessian of the negative
/// log posterior, so its partials satisfy the symmetry condition and
/// Omega = Gamma on this model.
class LogisticModel : public TargetModel {
 public:
  LogisticModel(Matrix design, Vector responses, double prior_var = 100.0)
      : x_(std::move(design)), y_(std::move(responses)), prior_var_(prior_var) {
    if (x_.rows() != y_.size()) throw DimensionMismatch("LogisticModel: X rows != y length");
    if (!(prior_var_ > 0.0)) throw BadConfig("LogisticModel: prior variance must be positive");
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (y_[i] != 0.0 && y_[i] != 1.0) throw BadConfig("LogisticModel: responses must be 0/1");
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(x_);
    if (qr.rank() < x_.cols()) {
      std::cerr << "LogisticModel: design matrix is column-rank-deficient (rank " << qr.rank()
                << " of " << x_.cols() << ")\n";
    }
  }

  explicit LogisticModel(const LogisticData& data, double prior_var = 100.0)
      : LogisticModel(data.x, data.y, prior_var) {}

  Eigen::Index dim() const override { return x_.cols(); }

  double log_density(const StateVector& beta) const override {
    const Vector& eta = linear_predictor(beta).eta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      // y*eta - log(1 + exp(eta)), overflow-safe
      ll += y_[i] * eta[i] - (std::max(eta[i], 0.0) + std::log1p(std::exp(-std::abs(eta[i]))));
    }
    return ll - beta.squaredNorm() / (2.0 * prior_var_);
  }

  Vector grad_log_density(const StateVector& beta) const override {
    const Vector& s = linear_predictor(beta).s;
    return x_.transpose() * (y_ - s) - beta / prior_var_;
  }

  bool has_metric() const override { return true; }

  SpdMatrix metric(const StateVector& beta) const override {
    const Vector& s = linear_predictor(beta).s;
    const Vector lambda = s.array() * (1.0 - s.array());
    Matrix g = x_.transpose() * lambda.asDiagonal() * x_;
    g.diagonal().array() += 1.0 / prior_var_;
    return chol_factor(g);
  }

  PartialsTensor metric_partials(const StateVector& beta) const override {
    const Eigen::Index d = dim();
    const Vector& s = linear_predictor(beta).s;
    const Vector u = (s.array() * (1.0 - s.array()) * (1.0 - 2.0 * s.array())).matrix();
    std::vector<Matrix> slices;
    slices.reserve(static_cast<size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
      const Vector w = u.cwiseProduct(x_.col(k));
      slices.emplace_back(x_.transpose() * w.asDiagonal() * x_);
    }
    return PartialsTensor(std::move(slices));
  }

  double prior_var() const { return prior_var_; }
  const Matrix& design() const { return x_; }
  const Vector& responses() const { return y_; }

 private:
  static Vector sigmoid(const Vector& eta) {
    Vector s(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      s[i] = eta[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-eta[i]))
                           : std::exp(eta[i]) / (1.0 + std::exp(eta[i]));
    }
    return s;
  }

  struct Predictor {
    Vector eta;
    Vector s;
  };

  // log density, gradient, metric and partials all need eta = X beta and the
  // link values; a small per-thread memo avoids recomputing them four times
  // per sampler step. Keyed by a unique per-instance token so entries from a
  // destroyed model can never alias a new one.
  const Predictor& linear_predictor(const StateVector& beta) const {
    struct Slot {
      std::uint64_t token = 0;
      Vector beta;
      Predictor pred;
    };
    thread_local std::vector<Slot> ring(4);
    thread_local size_t next = 0;
    for (const auto& slot : ring) {
      if (slot.token == cache_token_ && slot.beta.size() == beta.size() && slot.beta == beta) {
        return slot.pred;
      }
    }
    Slot& slot = ring[next];
    next = (next + 1) % ring.size();
    slot.token = cache_token_;
    slot.beta = beta;
    slot.pred.eta = x_ * beta;
    slot.pred.s = sigmoid(slot.pred.eta);
    return slot.pred;
  }

  static std::uint64_t new_cache_token() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  Matrix x_;
  Vector y_;
  double prior_var_;
  std::uint64_t cache_token_ = new_cache_token();
};

}  // namespace pdmala
