#include <catch2/catch.hpp>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <random>

#include "pdmala/geometry.hpp"
#include "pdmala/models/logistic.hpp"

using namespace pdmala;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& contents) {
    static int counter = 0;
    path = (std::filesystem::temp_directory_path() /
            ("pdmala_logistic_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
             ".csv"))
               .string();
    std::ofstream out(path);
    out << contents;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("log density at beta = 0 is -n log 2", "[logistic]") {
  const LogisticData data = make_synthetic_logistic(37, 3, 1);
  const LogisticModel model(data, 10.0);
  CHECK(model.log_density(Vector::Zero(3)) == Approx(-37.0 * std::log(2.0)));
}

TEST_CASE("saturated likelihood does not overflow", "[logistic]") {
  Matrix x(1, 1);
  x << 1.0;
  Vector y(1);
  y << 1.0;
  const LogisticModel model(x, y, 1e4);
  Vector beta(1);
  beta << 500.0;
  const double ld = model.log_density(beta);
  CHECK(std::isfinite(ld));
  // likelihood term saturates to 0; only the prior remains
  CHECK(ld == Approx(-500.0 * 500.0 / (2.0 * 1e4)).margin(1e-12));
}

TEST_CASE("analytic gradient matches finite differences", "[logistic]") {
  const LogisticModel model(make_synthetic_logistic(120, 5, 77), 100.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 10; ++rep) {
    Vector beta(5);
    for (Eigen::Index i = 0; i < 5; ++i) beta[i] = 0.8 * n01(rng);
    const Vector fd = fd_gradient(model, beta);
    const Vector an = model.grad_log_density(beta);
    CHECK((fd - an).cwiseAbs().maxCoeff() / (1.0 + an.cwiseAbs().maxCoeff()) < 1e-5);
  }
}

TEST_CASE("metric partials vanish at beta = 0 for an all-ones design", "[logistic]") {
  Matrix x = Matrix::Ones(25, 1);
  Vector y = Vector::Zero(25);
  y.head(12).setOnes();
  const LogisticModel model(x, y, 50.0);
  // (1 - 2s) = 0 at s = 1/2, so every slice is zero
  const PartialsTensor t = model.metric_partials(Vector::Zero(1));
  CHECK(t.slice(0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("metric partials match finite differences of the metric", "[logistic]") {
  const LogisticModel model(make_synthetic_logistic(90, 4, 13), 50.0);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  Vector beta(4);
  for (Eigen::Index i = 0; i < 4; ++i) beta[i] = 0.5 * n01(rng);
  const PartialsTensor an = model.metric_partials(beta);
  const PartialsTensor fd = fd_metric_partials(model, beta);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double scale = 1.0 + an.slice(j).cwiseAbs().maxCoeff();
    CHECK((an.slice(j) - fd.slice(j)).cwiseAbs().maxCoeff() / scale < 1e-3);
  }
}

TEST_CASE("fisher metric satisfies the symmetry condition", "[logistic]") {
  const LogisticModel model(make_synthetic_logistic(150, 6, 29), 100.0);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 50; ++rep) {
    Vector beta(6);
    for (Eigen::Index i = 0; i < 6; ++i) beta[i] = 0.7 * n01(rng);
    CHECK(symmetry_defect(model.metric_partials(beta)) <= 1e-9);
    const MetricBundle b = make_metric_bundle(model, beta);
    CHECK((omega_drift(b) - gamma_drift(b)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("rank-deficient designs construct with a warning, not an error", "[logistic]") {
  Matrix x(10, 3);
  x.col(0).setOnes();
  x.col(1).setLinSpaced(10, -1.0, 1.0);
  x.col(2) = 2.0 * x.col(1);  // duplicate direction
  Vector y = Vector::Zero(10);
  y.head(5).setOnes();
  const LogisticModel model(x, y, 10.0);  // warns on stderr
  CHECK(model.dim() == 3);
  CHECK(std::isfinite(model.log_density(Vector::Zero(3))));
}

TEST_CASE("csv loader honours the schema", "[logistic]") {
  const TempCsv csv("x1,y,x2\n0.5,1,2.0\n-0.25,0,1.5\n0.75,1,0.0\n");
  const LogisticData with = load_logistic_csv(csv.path, true);
  CHECK(with.x.rows() == 3);
  CHECK(with.x.cols() == 3);  // intercept + 2 covariates
  CHECK(with.x(0, 0) == 1.0);
  CHECK(with.x(1, 1) == Approx(-0.25));
  CHECK(with.y[0] == 1.0);
  CHECK(with.y[1] == 0.0);

  const LogisticData without = load_logistic_csv(csv.path, false);
  CHECK(without.x.cols() == 2);
  CHECK(without.x(2, 1) == Approx(0.0));
}

TEST_CASE("csv loader rejects malformed input", "[logistic]") {
  CHECK_THROWS_AS(load_logistic_csv("/nonexistent/file.csv"), MissingDataset);

  const TempCsv no_y("a,b\n1,2\n");
  CHECK_THROWS_AS(load_logistic_csv(no_y.path), BadConfig);

  const TempCsv bad_y("y,x\n2,0.5\n");
  CHECK_THROWS_AS(load_logistic_csv(bad_y.path), BadConfig);

  const TempCsv bad_field("y,x\n1,zebra\n");
  CHECK_THROWS_AS(load_logistic_csv(bad_field.path), BadConfig);
}

TEST_CASE("synthetic generation is deterministic and mode-consistent", "[logistic]") {
  const LogisticData a = make_synthetic_logistic(500, 5, 2024);
  const LogisticData b = make_synthetic_logistic(500, 5, 2024);
  CHECK((a.x.array() == b.x.array()).all());
  CHECK((a.y.array() == b.y.array()).all());

  // Newton iteration with the Fisher metric (exact Hessian here) finds the
  // posterior mode; it should sit near the generating coefficients.
  const LogisticModel model(a, 100.0);
  Vector beta = Vector::Zero(5);
  for (int it = 0; it < 50; ++it) {
    const Vector g = model.grad_log_density(beta);
    if (g.norm() < 1e-10) break;
    beta += model.metric(beta).solve(g);
  }
  CHECK(model.grad_log_density(beta).norm() < 1e-8);
  const SpdMatrix cov = model.metric(beta).inverse();
  for (Eigen::Index j = 0; j < 5; ++j) {
    const double sd = std::sqrt(cov.matrix()(j, j));
    CHECK(std::abs(beta[j] - a.true_beta[j]) < 3.0 * sd);
  }
}
