#pragma once

// Declarative pulse sequences: square pulses on either optical transition,
// area <-> Rabi conversion, and validation.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lambda_echo/dynamics.hpp"

namespace lambda_echo {

enum class Transition { Probe13, Couple23 };

/// A square pulse. Times in us, area and phase in radians.
struct Pulse {
  std::string label;
  Transition transition = Transition::Probe13;
  double t_start = 0.0;
  double duration = 0.0;
  double area = 0.0;
  double phase = 0.0;

  double t_end() const { return t_start + duration; }
  double t_mid() const { return t_start + 0.5 * duration; }
  /// Complex Rabi frequency |Omega| * exp(i*phase) held over the pulse.
  Complex rabi() const;
};

struct PulseSequence {
  std::vector<Pulse> pulses;  ///< ordered by t_start
  double t_end = 0.0;         ///< simulation horizon

  /// First pulse with this label, or nullptr.
  const Pulse* find(const std::string& label) const;
  Pulse* find(const std::string& label);
};

/// Integrator and sampling settings.
struct SimConfig {
  /// Largest integrator step in us; 0 selects the automatic rule.
  double dt = 0.0;
  double sample_stride = 0.05;
  /// Keep full per-subgroup states at pulse boundaries and snapshot_times.
  bool record_per_subgroup = false;
  std::vector<double> snapshot_times;
  /// Worker threads for subgroup evolution; 0 uses the hardware count.
  unsigned workers = 0;
  /// Track trace, Hermiticity and positivity over every sample.
  bool track_invariants = false;
};

/// Omega = area / duration for a square pulse.
double area_to_rabi(double area, double duration);

/// Returns n if area == (4n - 1) * pi / 2 for an integer n >= 1.
std::optional<int> phase_recovery_order(double area);

/// Data pulses are probe pulses labeled "D" or "D<digits>". If there is no
/// such pulse the earliest probe pulse plays the role.
std::vector<std::size_t> data_pulse_indices(const PulseSequence& seq);

struct ValidationIssue {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;

  bool ok() const { return errors.empty(); }
  std::string summary() const;
};

ValidationReport validate_sequence(const PulseSequence& seq);

class SequenceError : public std::invalid_argument {
 public:
  explicit SequenceError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

}  // namespace lambda_echo
