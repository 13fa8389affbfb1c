#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aarank/io.hpp"

namespace aarank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitReplayMismatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNotConverged = 4;

const char* version();

/// Game source from a command-line spec: a builtin id, "random:3x3x3",
/// "synthetic:20x2", "ising:3x3", or a path to a GameFile.
nlohmann::json game_source(const std::string& spec, std::uint64_t game_seed, double field,
                           double coupling, bool strict);
GameSpec load_game(const nlohmann::json& source, std::vector<std::string>& warnings);

struct CommandOutput {
  /// RunRecord: command, resolved config, result, timings.
  nlohmann::json record;
  std::string csv;
  std::string summary;
  int exit_code = kExitOk;
};

/// Runs "rank", "sweep", "scaling", "ising" or "cost" from a resolved config.
CommandOutput run_command(const std::string& command, const nlohmann::json& config);

/// Re-runs a RunRecord. With `check`, compares the ranking outputs to the
/// recorded ones and sets kExitReplayMismatch on any difference.
CommandOutput replay(const nlohmann::json& record, bool check, std::string& report);

/// Writes PREFIX.json and PREFIX.csv.
void write_outputs(const CommandOutput& out, const std::string& prefix);

}  // namespace aarank::cli
