#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "reflectmc/config.hpp"
#include "reflectmc/csv.hpp"
#include "reflectmc/digest.hpp"
#include "reflectmc/plot.hpp"
#include "reflectmc/runner.hpp"

using namespace reflectmc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("reflectmc_test_" + name);
  fs::remove_all(dir);
  return dir;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("a run writes outputs and a consistent manifest") {
  auto cfg = parse_config(json::parse(R"({"experiment": "chordlen", "volume": {"kind": "cube"},
                                          "dims": [10, 20, 40], "samples": 2000, "seed": 5})"));
  auto dir = scratch_dir("chord");
  auto m = run_experiment(cfg, dir);
  CHECK(m["status"] == "complete");
  CHECK(m["schema_version"] == kSchemaVersion);
  auto on_disk = read_json(dir / "manifest.json");
  CHECK(on_disk["config_sha256"] == sha256_file(dir / "config.json"));
  REQUIRE(on_disk["outputs"].size() >= 2);
  for (const auto& o : on_disk["outputs"]) {
    CHECK(sha256_file(dir / o["file"].get<std::string>()) == o["sha256"]);
  }
  std::ifstream csv(dir / "chord_lengths.csv");
  auto t = read_csv(csv);
  CHECK(t.rows.size() == 3);

  auto svg = render_plot(dir / "manifest.json", "chordlen");
  CHECK(fs::exists(svg));
  CHECK_THROWS_AS(render_plot(dir / "manifest.json", "nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(render_plot(dir / "missing.json", "chordlen"), MissingInputError);
}

TEST_CASE("identical configs give identical files") {
  auto cfg = parse_config(json::parse(R"({"experiment": "sd-series",
      "volume": {"kind": "ball", "dim": 6}, "sigma_p": [0.05], "particles": 30, "steps": 10,
      "epsilon": 1.0, "seed": 9})"));
  auto a = scratch_dir("det_a");
  auto b = scratch_dir("det_b");
  run_experiment(cfg, a, {1});
  run_experiment(cfg, b, {3});
  CHECK(slurp(a / "sd_series.csv") == slurp(b / "sd_series.csv"));
  CHECK(slurp(a / "config.json") == slurp(b / "config.json"));
}

TEST_CASE("a failing run still leaves a manifest") {
  auto cfg = parse_config(json::parse(R"({"experiment": "diskmap-density",
      "volume": {"kind": "ball", "dim": 10}, "sigma_p": 0.05, "steps": 5, "L": 3, "seed": 1})"));
  auto dir = scratch_dir("fail");
  CHECK_THROWS_AS(run_experiment(cfg, dir), ConfigError);
  auto m = read_json(dir / "manifest.json");
  CHECK(m["status"] == "failed");
  CHECK(m["error"].get<std::string>().find("/L") != std::string::npos);
}

TEST_CASE("every experiment kind runs at toy size") {
  const char* configs[] = {
      R"({"experiment": "psd-sweep", "volume": {"kind": "cube", "dim": 4}, "sigma_p": [0.3],
          "particles": 20, "steps": 16, "epsilon": 1, "seed": 2})",
      R"({"experiment": "phase-map", "volume": {"kind": "cube"}, "dims": [3, 4, 5],
          "sigma_p": [0.2, 2.0], "particles": 10, "steps": 16, "seeds_per_cell": 2,
          "epsilon": 1, "seed": 2})",
      R"({"experiment": "diskmap-density", "volume": {"kind": "ball", "dim": 20}, "sigma_p": 0.05,
          "particles": 50, "steps": 10, "bins": 16, "seed": 2})",
      R"({"experiment": "diskmap-density", "volume": {"kind": "ball", "dim": 20}, "sigma_p": 0.05,
          "particles": 50, "steps": 10, "bins": 16, "diskmap_mode": "project", "seed": 2})",
      R"({"experiment": "wavepacket", "sigma_p": 0.032, "particles": 200, "steps": 20, "seed": 2})",
      R"({"experiment": "noisy-chain", "volume": {"kind": "ball", "dim": 5}, "sigma_p": [0.05],
          "L": 25, "particles": 20, "steps": 10, "epsilon": 1, "seed": 2})",
      R"({"experiment": "acceptance-rate", "volume": {"kind": "cube", "dim": 10},
          "sigma_p": [0.01, 1.0], "chains": 10, "steps": 20, "seed": 2})",
  };
  int k = 0;
  for (const char* text : configs) {
    auto cfg = parse_config(json::parse(text));
    auto dir = scratch_dir("kind" + std::to_string(k++));
    auto m = run_experiment(cfg, dir);
    CHECK(m["status"] == "complete");
    CHECK(m["outputs"].size() >= 1);
  }
}
