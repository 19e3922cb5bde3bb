#pragma once

// Single-file agent checkpoints: magic "HIEMP1", a version word, the run
// configuration as JSON, then level specs, the task spec, every net and the
// start buffers, all little-endian. Optimizer moments are not stored.

#include <filesystem>

#include "hiemp/agent.hpp"
#include "hiemp/config.hpp"

namespace hiemp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  Agent agent;
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Agent& agent);

/// Throws RuntimeAbort on a missing file, bad magic, version mismatch or a
/// truncated or inconsistent payload.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hiemp
