#pragma once

// Command layer behind the lambda-echo executable: run, preset and sweep,
// plus the artifact writers they share.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lambda_echo/analysis.hpp"
#include "lambda_echo/config.hpp"

namespace lambda_echo {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitValidation = 3,
  kExitIo = 4,
};

/// Fixed 9-significant-digit scientific notation, locale independent; -0
/// prints as 0.00000000e+00.
std::string format_number(double x);

struct RunResult {
  ProtocolRun run;
  EchoWindow window;
  std::vector<EchoEvent> echoes;
  ValidationReport validation;
};

/// Validates (throws SequenceError) and runs the configured protocol.
RunResult execute(const RunConfig& config);

/// Writes trace, signal, echoes, summary and (when recorded) per-subgroup
/// files into dir. Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> write_artifacts(const RunResult& result,
                                                   const RunConfig& config,
                                                   const std::filesystem::path& dir,
                                                   OutputFormat format);

struct RunOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<OutputFormat> format;
  bool per_subgroup = false;
};

/// Each returns an ExitCode; diagnostics go to err, a short report to out.
int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err);
int cmd_preset(const std::string& name, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err);
int cmd_sweep(const std::filesystem::path& config_path, const std::string& param,
              double from, double to, int steps, const std::filesystem::path& out_dir,
              std::ostream& out, std::ostream& err);

/// Parameter paths accepted by cmd_sweep.
inline constexpr const char* kSweepReadArea = "read.area_pi";

}  // namespace lambda_echo
