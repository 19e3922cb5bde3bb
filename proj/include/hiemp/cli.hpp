#pragma once

// Command-line driver: train, eval, plot and oracle subcommands.
//
// Exit status: 0 on success, 2 on a configuration or usage error, 3 on a
// runtime abort.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace hiemp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  int phase = 1;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  int log_every = 10;         // epochs or chunks between progress lines; 0 silences them
  int oracle_actions = 3;     // grid points per action dimension
  std::optional<int> oracle_n;  // horizon; defaults to the top-level skill budget
};

int cmd_train(const CommandOptions& opts);
int cmd_eval(const CommandOptions& opts);
int cmd_plot(const CommandOptions& opts);
int cmd_oracle(const CommandOptions& opts);

/// git-style blob hash: SHA-1 over "blob <size>\0" followed by the bytes, as hex.
std::string blob_hash(const std::string& bytes);

int run_cli(int argc, char** argv);

}  // namespace hiemp
