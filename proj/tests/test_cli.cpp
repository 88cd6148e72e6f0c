#include <catch2/catch.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pdmala_cli_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::string& args, const fs::path& dir, std::string* output = nullptr) {
  const fs::path log = dir / "cli_output.log";
  const std::string cmd = "cd " + dir.string() + " && " + PDMALA_CLI_PATH + " " + args + " > " +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(status);
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p);
  out << contents;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The cpu_s and min_ess_per_s columns carry measured wall time, which is not
// reproducible; everything else must match byte for byte across runs.
std::string mask_timing_columns(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      out << line << '\n';
      header = false;
      continue;
    }
    std::stringstream ls(line);
    std::string field;
    int idx = 0;
    while (std::getline(ls, field, ',')) {
      if (idx > 0) out << ',';
      out << (idx >= 8 ? std::string("T") : field);
      ++idx;
    }
    out << '\n';
  }
  return out.str();
}

const char* kRunConfig = R"({
  "dataset_label": "smoke",
  "model": {"kind": "logistic", "synthetic": {"n": 100, "d": 4, "seed": 3}, "alpha": 100.0},
  "samplers": ["pmala", "mmala"],
  "tune": {"target_accept": 0.574, "budget": 1200},
  "n_iters": 1500,
  "burn_in": 300,
  "n_replicates": 2,
  "base_seed": 11
})";

}  // namespace

TEST_CASE("make-synthetic writes deterministic datasets", "[cli]") {
  TempDir dir;
  REQUIRE(run_cli("make-synthetic --out a --seed 5", dir.path) == 0);
  REQUIRE(run_cli("make-synthetic --out b --seed 5", dir.path) == 0);
  REQUIRE(fs::exists(dir.path / "a" / "synthetic_logistic.csv"));
  REQUIRE(fs::exists(dir.path / "a" / "synthetic_fhn.csv"));
  CHECK(read_file(dir.path / "a" / "synthetic_logistic.csv") ==
        read_file(dir.path / "b" / "synthetic_logistic.csv"));
  CHECK(read_file(dir.path / "a" / "synthetic_fhn.csv") ==
        read_file(dir.path / "b" / "synthetic_fhn.csv"));

  REQUIRE(run_cli("make-synthetic --out c --seed 6", dir.path) == 0);
  CHECK(read_file(dir.path / "a" / "synthetic_logistic.csv") !=
        read_file(dir.path / "c" / "synthetic_logistic.csv"));
}

TEST_CASE("run writes the declared artifacts and is reproducible", "[cli]") {
  TempDir dir;
  write_file(dir.path / "cfg.json", kRunConfig);
  REQUIRE(run_cli("run --config cfg.json --out out1", dir.path) == 0);
  REQUIRE(fs::exists(dir.path / "out1" / "aggregate.csv"));
  REQUIRE(fs::exists(dir.path / "out1" / "ess_reports.json"));
  REQUIRE(fs::exists(dir.path / "out1" / "tuned.json"));

  const std::string csv1 = read_file(dir.path / "out1" / "aggregate.csv");
  CHECK(csv1.rfind("dataset,method,", 0) == 0);
  CHECK(csv1.find("smoke,pmala,") != std::string::npos);
  CHECK(csv1.find("smoke,mmala,") != std::string::npos);

  REQUIRE(run_cli("run --config cfg.json --out out2", dir.path) == 0);
  const std::string csv2 = read_file(dir.path / "out2" / "aggregate.csv");
  CHECK(mask_timing_columns(csv1) == mask_timing_columns(csv2));

  const json reports = json::parse(read_file(dir.path / "out1" / "ess_reports.json"));
  REQUIRE(reports.is_array());
  CHECK(reports.size() == 4);  // 2 methods x 2 replicates
  for (const auto& r : reports) {
    CHECK(r.at("ess").at("min").get<double>() > 0.0);
    CHECK(r.at("ess").at("per_param_ess").size() == 4);
  }
}

TEST_CASE("run can persist traces with sidecars", "[cli]") {
  TempDir dir;
  write_file(dir.path / "cfg.json", kRunConfig);
  REQUIRE(run_cli("run --config cfg.json --out out --save-traces", dir.path) == 0);
  REQUIRE(fs::exists(dir.path / "out" / "trace_pmala_0.bin"));
  REQUIRE(fs::exists(dir.path / "out" / "trace_pmala_0.json"));
  const json side = json::parse(read_file(dir.path / "out" / "trace_pmala_0.json"));
  const auto shape = side.at("shape").get<std::vector<long>>();
  REQUIRE(shape.size() == 2);
  CHECK(shape[0] == 1800);  // n_iters + burn_in
  CHECK(shape[1] == 4);
  CHECK(side.at("dtype") == "float64");
  CHECK(fs::file_size(dir.path / "out" / "trace_pmala_0.bin") ==
        static_cast<std::uintmax_t>(shape[0] * shape[1] * 8));
}

TEST_CASE("unknown sampler names are rejected with a message", "[cli]") {
  TempDir dir;
  write_file(dir.path / "cfg.json", R"({"samplers": ["warp-drive"]})");
  std::string output;
  CHECK(run_cli("run --config cfg.json --out out", dir.path, &output) == 2);
  CHECK(output.find("warp-drive") != std::string::npos);
}

TEST_CASE("missing dataset files are reported", "[cli]") {
  TempDir dir;
  write_file(dir.path / "cfg.json",
             R"({"model": {"kind": "logistic", "csv": "no_such_file.csv"}})");
  std::string output;
  CHECK(run_cli("run --config cfg.json --out out", dir.path, &output) == 2);
  CHECK(output.find("no_such_file.csv") != std::string::npos);
}

TEST_CASE("run accepts a csv dataset produced by make-synthetic", "[cli]") {
  TempDir dir;
  REQUIRE(run_cli("make-synthetic --out data --seed 9", dir.path) == 0);
  write_file(dir.path / "cfg.json", R"({
    "model": {"kind": "logistic", "csv": "data/synthetic_logistic.csv", "alpha": 100.0},
    "samplers": ["pmala"],
    "step_sizes": {"pmala": 0.8},
    "n_iters": 800, "burn_in": 200, "n_replicates": 1, "base_seed": 4
  })");
  REQUIRE(run_cli("run --config cfg.json --out out", dir.path) == 0);
  const json reports = json::parse(read_file(dir.path / "out" / "ess_reports.json"));
  CHECK(reports.at(0).at("ess").at("per_param_ess").size() == 7);  // intercept + 6 covariates

  // --no-intercept drops the added column
  REQUIRE(run_cli("run --config cfg.json --out out_ni --no-intercept", dir.path) == 0);
  const json ni = json::parse(read_file(dir.path / "out_ni" / "ess_reports.json"));
  CHECK(ni.at(0).at("ess").at("per_param_ess").size() == 6);
}

TEST_CASE("outputs do not depend on the worker thread count", "[cli]") {
  TempDir dir;
  write_file(dir.path / "cfg.json", kRunConfig);
  REQUIRE(run_cli("run --config cfg.json --out one --threads 1", dir.path) == 0);
  REQUIRE(run_cli("run --config cfg.json --out two --threads 2", dir.path) == 0);
  CHECK(mask_timing_columns(read_file(dir.path / "one" / "aggregate.csv")) ==
        mask_timing_columns(read_file(dir.path / "two" / "aggregate.csv")));
}

TEST_CASE("tune emits step sizes without sampling", "[cli]") {
  TempDir dir;
  write_file(dir.path / "cfg.json", kRunConfig);
  REQUIRE(run_cli("tune --config cfg.json --out out", dir.path) == 0);
  const json tuned = json::parse(read_file(dir.path / "out" / "tuned.json"));
  CHECK(tuned.at("pmala").at("h").get<double>() > 0.0);
  CHECK(tuned.at("pmala").at("tuned").get<bool>());
  CHECK_FALSE(fs::exists(dir.path / "out" / "ess_reports.json"));

  write_file(dir.path / "grid.json", R"({
    "model": {"kind": "logistic", "synthetic": {"n": 100, "d": 4, "seed": 3}},
    "samplers": ["pmala"],
    "tune": {"target_accept": 0.574, "budget": 800, "mode": "ess-grid",
             "grid": [0.5, 1.0, 2.0], "pilot_iters": 500},
    "n_iters": 200, "burn_in": 50, "n_replicates": 1, "base_seed": 2
  })");
  REQUIRE(run_cli("tune --config grid.json --out grid_out", dir.path) == 0);
  const json grid_tuned = json::parse(read_file(dir.path / "grid_out" / "tuned.json"));
  CHECK(grid_tuned.at("pmala").at("h").get<double>() > 0.0);
}

TEST_CASE("verify gates on the invariant checks", "[cli]") {
  TempDir dir;
  write_file(dir.path / "ok.json",
             R"({"verify": {"n_paths": 60, "n_steps": 30000, "step": 0.01, "burn_in": 4000, "seed": 7}})");
  std::string output;
  CHECK(run_cli("verify --config ok.json --out vout --threads 2", dir.path, &output) == 0);
  CHECK(output.find("[PASS] omega-gamma-identity") != std::string::npos);
  REQUIRE(fs::exists(dir.path / "vout" / "verify_report.json"));
  const json report = json::parse(read_file(dir.path / "vout" / "verify_report.json"));
  REQUIRE(report.is_array());
  for (const auto& rec : report) {
    CHECK(rec.contains("spec_label"));
    CHECK(rec.contains("tv_distance"));
    CHECK(rec.contains("threshold"));
    CHECK(rec.contains("pass"));
  }

  // deliberately mislabel the claimed density for the uncorrected diffusion
  write_file(dir.path / "bad.json",
             R"({"verify": {"n_paths": 60, "n_steps": 30000, "step": 0.01, "burn_in": 4000, "seed": 7, "mmala_claim": "pi"}})");
  CHECK(run_cli("verify --config bad.json --out vbad --threads 2", dir.path, &output) == 1);
  CHECK(output.find("[FAIL] mmala-x2-marginal-vs-claim") != std::string::npos);

  // far too few paths for a density comparison
  write_file(dir.path / "tiny.json",
             R"({"verify": {"n_paths": 10, "n_steps": 2000, "step": 0.01, "burn_in": 500, "seed": 7}})");
  CHECK(run_cli("verify --config tiny.json --out vtiny", dir.path, &output) == 3);
  CHECK(output.find("retained samples") != std::string::npos);
}

TEST_CASE("fhn model runs end to end", "[cli]") {
  TempDir dir;
  write_file(dir.path / "cfg.json", R"({
    "model": {"kind": "fhn", "fhn": {"seed": 2, "n_obs": 40, "t_end": 8.0}},
    "samplers": ["pmala"],
    "step_sizes": {"pmala": 0.4},
    "n_iters": 300, "burn_in": 100, "n_replicates": 1, "base_seed": 21
  })");
  REQUIRE(run_cli("run --config cfg.json --out out", dir.path) == 0);
  const json reports = json::parse(read_file(dir.path / "out" / "ess_reports.json"));
  CHECK(reports.at(0).at("ess").at("per_param_ess").size() == 3);
}
