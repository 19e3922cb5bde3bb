#pragma once

// Run configuration: a JSON document mapping one-to-one onto LevelSpec,
// TaskSpec, TrainParams and the environment preset.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiemp/agent.hpp"

namespace hiemp {

/// Malformed or invalid configuration. what() names the line and column for
/// syntax errors and the offending field path otherwise.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalSettings {
  int episodes = 400;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
};

struct RunConfig {
  std::string preset;
  PresetOverrides env_overrides;
  std::vector<LevelSpec> levels;
  int phase1_epochs = 0;
  std::optional<TaskSpec> task;
  int phase2_episodes = 0;
  EvalSettings eval;
  TrainParams train;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/out";

  int k() const { return static_cast<int>(levels.size()); }
  EnvModel make_env() const { return make_preset(preset, env_overrides); }
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON rendering (every field, fixed key order).
std::string config_to_json(const RunConfig& cfg);

}  // namespace hiemp
