#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "motcorr/config.hpp"
#include "motcorr/errors.hpp"

using namespace motcorr;
using nlohmann::json;

TEST_SUITE_BEGIN("config");

namespace {
json minimal() {
  return json{{"run", {{"duration_s", 1.0e-4}, {"seed", 7}}}};
}
} // namespace

TEST_CASE("minimal config parses with defaults") {
  const auto cfg = parse_run_config(minimal());
  CHECK(cfg.seed == 7);
  CHECK(cfg.seed_set);
  CHECK(cfg.trajectory.duration == doctest::Approx(1.0e-4));
  CHECK(cfg.trajectory.atom.f_ground == 4);
  CHECK(cfg.analyzer.kind == AnalyzerConfig::Kind::Circular);
}

TEST_CASE("unknown keys are rejected with a field-level message") {
  auto j = minimal();
  j["field"] = {{"intensity_per_bean", 1.0}};
  try {
    parse_run_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("intensity_per_bean") != std::string::npos);
  }
  auto j2 = minimal();
  j2["run"]["duration_sec"] = 1.0;
  CHECK_THROWS_AS(parse_run_config(j2), ConfigError);
}

TEST_CASE("seed is mandatory") {
  json j{{"run", {{"duration_s", 1.0e-4}}}};
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);
}

TEST_CASE("type errors become ConfigError") {
  auto j = minimal();
  j["run"]["seed"] = "not-a-number";
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);
  auto j2 = minimal();
  j2["motion"] = {{"model", "teleport"}};
  CHECK_THROWS_AS(parse_run_config(j2), ConfigError);
  auto j3 = minimal();
  j3["detection"] = {{"direction", {1.0, 0.0}}};
  CHECK_THROWS_AS(parse_run_config(j3), ConfigError);
}

TEST_CASE("module validation failures surface as ConfigError") {
  auto j = minimal();
  j["run"]["duration_s"] = 0.0;
  CHECK_THROWS_AS(parse_run_config(j), ConfigError);
  auto j2 = minimal();
  j2["detection"] = {{"quantum_efficiency", 2.0}};
  CHECK_THROWS_AS(parse_run_config(j2), ConfigError);
}

TEST_CASE("out-of-envelope values warn but parse") {
  auto j = minimal();
  j["field"] = {{"intensity_per_beam", 10.0}, {"detuning_gamma", -0.5}};
  const auto cfg = parse_run_config(j);
  CHECK(cfg.warnings.size() == 2);
}

TEST_CASE("canonical hash is stable and key-order independent") {
  auto j = minimal();
  j["field"] = {{"intensity_per_beam", 1.3}, {"detuning_gamma", -2.2}};
  json j2{{"field", {{"detuning_gamma", -2.2}, {"intensity_per_beam", 1.3}}},
          {"run", {{"seed", 7}, {"duration_s", 1.0e-4}}}};
  CHECK(parse_run_config(j).hash() == parse_run_config(j2).hash());
  j["field"]["intensity_per_beam"] = 1.4;
  CHECK(parse_run_config(j).hash() != parse_run_config(j2).hash());
}

TEST_CASE("load_run_config: IO and parse error categories") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "motcorr_cfg_test";
  fs::create_directories(dir);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), IoError);
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS(load_run_config(bad), ConfigError);
  const auto good = dir / "good.json";
  std::ofstream(good) << minimal().dump();
  CHECK_NOTHROW(load_run_config(good));
  fs::remove_all(dir);
}

TEST_SUITE_END();
