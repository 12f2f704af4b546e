#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motcorr/detection.hpp"
#include "motcorr/trajectory.hpp"

namespace motcorr {

// Full run description, loaded from a JSON config file with sections named
// after the modules. Unknown keys are rejected (no silent typos); values
// outside the experimentally explored envelope only produce warnings.
struct RunConfig {
  TrajectoryConfig trajectory;
  DetectionGeometry detection;
  AnalyzerConfig analyzer;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_truth;  // path for the pre-detection truth stream
  std::string output_clicks; // path for the detected click stream

  std::vector<std::string> warnings; // filled during validation

  nlohmann::json to_json() const;
  std::uint32_t hash() const; // CRC-32 of the canonical serialization
};

// Throws ConfigError with a field-level message on any problem.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace motcorr
