#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hamcg {

/// A validated run description. `canonical` is the config with every default
/// filled in, serialised with sorted keys; its FNV-1a hash identifies the run.
struct RunConfig {
  std::string scenario;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: leave the process setting alone
  std::string canonical;
};

/// Parses and validates a JSON config. All unknown keys and type errors are
/// collected and reported together as one ConfigInvalid error.
RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

std::vector<std::string> scenario_names();

enum ExitCode { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_verification = 4 };

struct RunOutcome {
  int exit_code = exit_ok;
  std::vector<std::string> artifacts;  // relative to the output directory, manifest last
  std::string summary;                 // one line per result, for stdout
};

/// Runs one scenario and writes its artifacts plus manifest.json into `out`.
/// Library errors propagate; verification failures are reported through
/// exit_code.
RunOutcome run(const RunConfig& config, const std::filesystem::path& out);

}  // namespace hamcg
