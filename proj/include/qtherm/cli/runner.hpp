#pragma once

#include "qtherm/cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qtherm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitConvergence = 3;

struct RunOptions {
  std::ostream* log = nullptr; ///< progress lines; null = silent
};

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json manifest; ///< also written to manifest.json on success
  nlohmann::json error;    ///< set when exit_code != 0
  std::vector<std::filesystem::path> files;
};

[[nodiscard]] nlohmann::json violations_json(const std::vector<Violation>& violations);

/// Validates `config`, runs the experiment and writes its data files plus
/// manifest.json into config.output_dir.
[[nodiscard]] RunOutcome run(const RunConfig& config, const RunOptions& options = {});

} // namespace qtherm::cli
