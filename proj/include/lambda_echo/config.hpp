#pragma once

// JSON run configuration. Times in us, detunings in kHz, rates in 1/us,
// pulse areas in units of pi (area_pi), phases in rad.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "lambda_echo/analysis.hpp"
#include "lambda_echo/dynamics.hpp"
#include "lambda_echo/ensemble.hpp"
#include "lambda_echo/presets.hpp"
#include "lambda_echo/sequence.hpp"

#include "json.hpp"

namespace lambda_echo {

enum class OutputFormat { Csv, Json };

struct AnalysisOptions {
  std::optional<EchoWindow> window;  ///< default_window(seq) when empty
  double threshold = kDefaultThreshold;
};

struct OutputOptions {
  std::string dir = "out";
  OutputFormat format = OutputFormat::Csv;
  bool per_subgroup = false;
};

struct RunConfig {
  EnsembleSpec ensemble;
  DecayParams decays;
  PulseSequence sequence;
  SimConfig sim;
  AnalysisOptions analysis;
  OutputOptions outputs;
};

/// Schema violation; field() is the JSON path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown keys are rejected. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
/// Throws IoError if unreadable, ConfigError on malformed JSON or schema.
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

RunConfig preset_config(const Preset& preset);

OutputFormat parse_format(const std::string& name);
std::string to_string(OutputFormat format);
std::string to_string(DetuningModel model);
std::string to_string(Transition transition);

}  // namespace lambda_echo
