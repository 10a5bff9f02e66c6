#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tessgof/harness.hpp"
#include "tessgof/tessellation_io.hpp"

using namespace tessgof;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json desk_json() {
  std::ifstream in(TESSGOF_CONFIG_DIR "/paper_table1_desk.json");
  return json::parse(in);
}

json tiny_json(int calib, int test) {
  json j = desk_json();
  j["replications"] = {{"calibration", calib}, {"test", test}};
  return j;
}

std::string config_error_field(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tessgof_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TESSGOF_CLI) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct ScopedEnv {
  explicit ScopedEnv(const char* value) { setenv("TESSGOF_WORKERS", value, 1); }
  ~ScopedEnv() { unsetenv("TESSGOF_WORKERS"); }
};

}  // namespace

TEST_CASE("bundled desk config") {
  const ExperimentConfig c = parse_config(desk_json());
  REQUIRE(c.models.size() == 6);
  CHECK(c.models[0].name == "Bin-Vor");
  CHECK(c.models[5].name == "Fb-Lag");
  CHECK(c.statistics.size() == 3);
  CHECK(c.window.edge_length == doctest::Approx(std::cbrt(1.0 / 3)).epsilon(1e-15));
  CHECK(c.n_calibration == 200);
  CHECK(c.hash.size() == 16);
  CHECK(parse_config(config_to_json(c)).hash == c.hash);

  json moved = desk_json();
  moved["output_dir"] = "elsewhere";
  moved["workers"] = 3;
  CHECK(parse_config(moved).hash == c.hash);
  moved["master_seed"] = 1;
  CHECK(parse_config(moved).hash != c.hash);

  const ExperimentConfig full = load_config(TESSGOF_CONFIG_DIR "/paper_table1_full.json");
  CHECK(full.models[3].points.n == 325);
  CHECK(full.models[4].points.n == 324);
  CHECK(full.n_test == 1000);
}

TEST_CASE("config validation names the field") {
  json j = desk_json();
  j["models"][1]["points"]["gamma"] = 1.5;
  CHECK(config_error_field(j) == "models[1].points.gamma");

  j = desk_json();
  j["statistics"][0]["quantile"] = 1.2;
  CHECK(config_error_field(j) == "statistics[0].quantile");

  j = desk_json();
  j["models"][2]["radii"]["value"] = 0.1;  // 100 balls of radius 0.1 fill 126% of the window
  CHECK(config_error_field(j) == "models[2].radii");

  j = desk_json();
  j["models"][5]["radii"]["volume_fraction"] = 0.7;
  CHECK(config_error_field(j) == "models[5].radii.volume_fraction");

  j = desk_json();
  j["models"][0]["points"]["colour"] = "red";
  CHECK(config_error_field(j) == "models[0].points.colour");

  j = desk_json();
  j["schema"] = "tessgof/experiment/v0";
  CHECK(config_error_field(j) == "schema");

  j = desk_json();
  j["models"][1]["name"] = "Bin-Vor";
  CHECK(config_error_field(j) == "models[1].name");

  j = desk_json();
  j["models"][1]["points"]["r0"] = 0.4;
  CHECK(config_error_field(j) == "models[1].points.r0");

  j = desk_json();
  j["master_seed"] = -4;
  CHECK(config_error_field(j) == "master_seed");

  j = desk_json();
  j["models"][3].erase("radii");
  CHECK(config_error_field(j) == "models[3].radii");

  j = desk_json();
  j["alpha"] = 0.0;
  CHECK(config_error_field(j) == "alpha");

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("statistic strings") {
  StatisticSpec s = parse_statistic("area:quantile=0.4");
  CHECK(s.kind == StatisticSpec::Kind::area);
  CHECK(*s.quantile == 0.4);
  s = parse_statistic("persistence:quantile=0.7,q=1");
  CHECK(s.kind == StatisticSpec::Kind::persistence);
  CHECK(s.q_dim == 1);
  s = parse_statistic("edge_betti:threshold=0.01,M=inf");
  CHECK(s.M == kInfinity);
  s = parse_statistic(R"({"kind": "localized_betti", "M": 0.2, "b": 0.01, "d": 0.02})");
  CHECK(s.d == 0.02);
  CHECK(parse_statistic(statistic_to_json(s), "x").name() == s.name());
  CHECK_THROWS_AS(parse_statistic("area"), ConfigError);
  CHECK_THROWS_AS(parse_statistic("volume:quantile=0.5"), ConfigError);
  CHECK_THROWS_AS(parse_statistic("area:quantile=abc"), ConfigError);
}

TEST_CASE("the six desk models") {
  const ExperimentConfig c = parse_config(desk_json());
  for (const ModelSpec& m : c.models) {
    const ModelSample s = sample_model(m, c.window, 7);
    CAPTURE(m.name);
    CHECK(s.tess.generators().size() == static_cast<std::size_t>(m.points.n));
    CHECK(s.tess.euler_characteristic() == 0);
    s.tess.validate();
    double phi = 0.0;
    bool any_radius = false;
    for (const MarkedPoint& g : s.tess.generators()) {
      phi += 4.0 / 3.0 * std::numbers::pi * std::pow(g.radius, 3);
      any_radius = any_radius || g.radius > 0;
    }
    CHECK(any_radius == m.laguerre);
    if (m.name == "Fb-Lag") CHECK(phi / c.window.volume() == doctest::Approx(0.6).epsilon(1e-12));
  }
  const ModelSample a = sample_model(c.models[1], c.window, 11), b = sample_model(c.models[1], c.window, 11);
  for (std::size_t i = 0; i < a.tess.generators().size(); ++i)
    CHECK(a.tess.generators()[i].location == b.tess.generators()[i].location);
}

TEST_CASE("replication seeds") {
  std::set<std::uint64_t> seen;
  for (const char* m : {"Bin-Vor", "St-Vor"})
    for (std::uint64_t phase : {kCalibrationPhase, kTestPhase})
      for (int r = 0; r < 50; ++r) seen.insert(replication_seed(1, m, phase, r));
  CHECK(seen.size() == 200);
  CHECK(replication_seed(1, "Bin-Vor", 0, 3) == replication_seed(1, "Bin-Vor", 0, 3));
  CHECK(replication_seed(1, "Bin-Vor", 0, 3) != replication_seed(2, "Bin-Vor", 0, 3));
}

TEST_CASE("replications do not depend on the worker count") {
  ExperimentConfig c = parse_config(tiny_json(6, 2));
  c.workers = 1;
  const ReplicationSet one = simulate(c, c.models[0], kCalibrationPhase, 6, 2);
  c.workers = 3;
  const ReplicationSet three = simulate(c, c.models[0], kCalibrationPhase, 6, 2);
  CHECK(one.seeds == three.seeds);
  for (std::size_t k = 0; k < c.statistics.size(); ++k)
    for (int r = 0; r < 6; ++r) CHECK(one.obs[k][r].values == three.obs[k][r].values);
  REQUIRE(one.diagrams.size() == 2);
  CHECK(one.diagrams[1].features.size() == three.diagrams[1].features.size());
}

TEST_CASE("seed reuse between phases is refused") {
  json j = tiny_json(4, 3);
  j["models"] = json::array({j["models"][0]});
  const ExperimentConfig c = parse_config(j);
  CHECK_THROWS_AS(power_table(c, kCalibrationPhase, kCalibrationPhase), SeedReuseError);
  const StudyResult ok = power_table(c);
  REQUIRE(ok.power.size() == 3);
  CHECK(ok.power[0].rate.size() == 1);
}

TEST_CASE("calibration through the model") {
  json j = tiny_json(10, 2);
  const ExperimentConfig c = parse_config(j);
  const Calibration a = calibrate(c, c.models[0], c.statistics[0], 10, 5);
  const Calibration b = calibrate(c, c.models[0], c.statistics[0], 10, 5);
  CHECK(a.values == b.values);
  CHECK(a.threshold == b.threshold);
  CHECK(a.seeds.size() == 10);
  StatisticSpec fixed;
  fixed.threshold = 0.004;
  CHECK(calibrate(c, c.models[0], fixed, 3, 5).threshold == 0.004);
  CHECK_THROWS_AS(calibrate(c, c.models[0], fixed, 1, 5), DomainError);
}

TEST_CASE("run_experiment writes deterministic artifacts") {
  json j = tiny_json(3, 2);
  j["outputs"]["density_max_samples"] = 500;
  const fs::path d1 = scratch_dir("run1"), d2 = scratch_dir("run2");
  ExperimentConfig c = parse_config(j);
  c.output_dir = d1.string();
  c.workers = 1;
  const auto files = run_experiment(c);
  c.output_dir = d2.string();
  c.workers = 3;
  CHECK(run_experiment(c) == files);

  int csvs = 0;
  for (const std::string& f : files) {
    CAPTURE(f);
    if (f == "config.json") {
      json a = json::parse(slurp(d1 / f)), b = json::parse(slurp(d2 / f));
      for (json* x : {&a, &b}) x->erase("output_dir"), x->erase("workers");
      CHECK(a == b);
      continue;
    }
    CHECK(slurp(d1 / f) == slurp(d2 / f));
    if (f.ends_with(".csv")) {
      ++csvs;
      CHECK(slurp(d1 / f).starts_with("# config_hash=" + c.hash + "\n# master_seed=" + std::to_string(c.master_seed) + "\n"));
    }
  }
  CHECK(csvs >= 3 + 3 + 6 + 18);

  std::istringstream power(slurp(d1 / "power_0_area_quantile_0.4.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(power, line))
    if (!line.starts_with("#")) {
      CHECK(std::count(line.begin(), line.end(), ',') == 6);
      ++rows;
    }
  CHECK(rows == 7);
  CHECK(json::parse(slurp(d1 / "manifest.json"))["config_hash"] == c.hash);
}

TEST_CASE("testing imported tessellations") {
  json j = tiny_json(30, 2);
  const ExperimentConfig c = parse_config(j);
  const StatisticSpec area = parse_statistic("area:quantile=0.4");

  const fs::path dir = scratch_dir("import");
  const std::string own = (dir / "own.tess").string();
  export_tessellation(own, sample_model(c.model("Bin-Vor"), c.window, 424242).tess);
  const ImportTest same = run_gof_on_import(own, c, "Bin-Vor", area, 0.05);
  CHECK(std::abs(same.report.z) < 4);
  CHECK(same.calibration.n_reps == 30);

  const Tessellation fb = sample_model(c.model("Fb-Vor"), c.window, 99).tess;
  const ImportTest other = run_gof_on_tessellation(fb, c, "Bin-Vor", area, 0.05);
  CHECK(other.report.reject);
  const json rep = report_to_json(other, c, "Bin-Vor");
  CHECK(rep["schema"] == kReportSchema);
  CHECK(rep["reject"] == true);
  CHECK(rep["config_hash"] == c.hash);

  std::ofstream(dir / "bad.tess") << "tessgof-tessellation,1\nwindow,1,1\n";
  CHECK_THROWS_AS(run_gof_on_import((dir / "bad.tess").string(), c, "Bin-Vor", area, 0.05), ParseError);
  CHECK_THROWS_AS(run_gof_on_import(own, c, "No-Such", area, 0.05), ConfigError);
}

TEST_CASE("worker override") {
  CHECK(effective_workers(2) == 2);
  {
    ScopedEnv env("3");
    CHECK(effective_workers(0) == 3);
  }
  {
    ScopedEnv env("many");
    CHECK_THROWS_AS(effective_workers(0), ConfigError);
  }
}

TEST_CASE("command line") {
  const fs::path dir = scratch_dir("cli");
  json bad = desk_json();
  bad["models"][1]["points"]["gamma"] = 1.5;
  std::ofstream(dir / "bad.json") << bad.dump();
  CHECK(run_cli("run " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("run " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("export-formats") == 0);

  json j = tiny_json(4, 2);
  j["models"] = json::array({j["models"][0], j["models"][2]});
  j["statistics"] = json::array({j["statistics"][0]});
  j["outputs"]["densities"] = false;
  j["output_dir"] = (dir / "out").string();
  std::ofstream(dir / "tiny.json") << j.dump();
  CHECK(run_cli("run " + (dir / "tiny.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "power_0_area_quantile_0.4.csv"));

  CHECK(run_cli("sample --config " + (dir / "tiny.json").string() + " --model Fb-Vor --seed 3 --out " +
                (dir / "fb.tess").string()) == 0);
  CHECK(run_cli("test --data " + (dir / "fb.tess").string() + " --null " + (dir / "tiny.json").string() +
                " --stat area:quantile=0.4 --reps 8 --out " + (dir / "report.json").string()) == 0);
  const json rep = json::parse(slurp(dir / "report.json"));
  CHECK(rep["n_calibration"] == 8);
  CHECK(rep["null_model"] == "Bin-Vor");

  std::ofstream(dir / "bad.tess") << "not a tessellation\n";
  CHECK(run_cli("test --data " + (dir / "bad.tess").string() + " --null " + (dir / "tiny.json").string() +
                " --stat area:quantile=0.4") == 5);

  json slow = j;
  slow["models"] = json::array({j["models"][1]});
  slow["models"][0]["points"]["max_iterations"] = 3;
  std::ofstream(dir / "slow.json") << slow.dump();
  CHECK(run_cli("run " + (dir / "slow.json").string()) == 3);
}

TEST_CASE("format description") {
  const std::string s = format_description();
  CHECK(s.find("tessgof-tessellation,1") != std::string::npos);
  CHECK(s.find(kConfigSchema) != std::string::npos);
  CHECK(s.find("Exit codes") != std::string::npos);
}
