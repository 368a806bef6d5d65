#include "lambda_echo/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lambda_echo {

namespace {

constexpr double kTimeTolerance = 1e-9;

bool is_data_label(const std::string& label) {
  if (label.empty() || label[0] != 'D') return false;
  return std::all_of(label.begin() + 1, label.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::string describe(const Pulse& p, std::size_t index) {
  std::ostringstream os;
  os << "pulse " << index;
  if (!p.label.empty()) os << " (" << p.label << ")";
  return os.str();
}

}  // namespace

Complex Pulse::rabi() const {
  return std::polar(area_to_rabi(area, duration), phase);
}

const Pulse* PulseSequence::find(const std::string& label) const {
  auto it = std::find_if(pulses.begin(), pulses.end(),
                         [&](const Pulse& p) { return p.label == label; });
  return it == pulses.end() ? nullptr : &*it;
}

Pulse* PulseSequence::find(const std::string& label) {
  auto it = std::find_if(pulses.begin(), pulses.end(),
                         [&](const Pulse& p) { return p.label == label; });
  return it == pulses.end() ? nullptr : &*it;
}

double area_to_rabi(double area, double duration) {
  if (!(duration > 0.0)) {
    throw std::invalid_argument("area_to_rabi: duration must be > 0");
  }
  return area / duration;
}

std::optional<int> phase_recovery_order(double area) {
  // area = (4n - 1) pi / 2  <=>  n = (2 area / pi + 1) / 4
  const double n = (2.0 * area / std::numbers::pi + 1.0) / 4.0;
  const double rounded = std::round(n);
  if (rounded < 1.0) return std::nullopt;
  const double expected = (4.0 * rounded - 1.0) * std::numbers::pi / 2.0;
  if (std::abs(area - expected) > 1e-9 * std::max(1.0, expected)) {
    return std::nullopt;
  }
  return static_cast<int>(rounded);
}

std::vector<std::size_t> data_pulse_indices(const PulseSequence& seq) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seq.pulses.size(); ++i) {
    const Pulse& p = seq.pulses[i];
    if (p.transition == Transition::Probe13 && is_data_label(p.label)) {
      out.push_back(i);
    }
  }
  if (!out.empty()) return out;

  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < seq.pulses.size(); ++i) {
    const Pulse& p = seq.pulses[i];
    if (p.transition != Transition::Probe13) continue;
    if (!first || p.t_start < seq.pulses[*first].t_start) first = i;
  }
  if (first) out.push_back(*first);
  return out;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& e : errors) os << "error[" << e.code << "]: " << e.message << '\n';
  for (const auto& w : warnings) os << "warning[" << w.code << "]: " << w.message << '\n';
  return os.str();
}

ValidationReport validate_sequence(const PulseSequence& seq) {
  ValidationReport report;
  auto error = [&](std::string code, std::string message) {
    report.errors.push_back(
        {ValidationIssue::Severity::Error, std::move(code), std::move(message)});
  };
  auto warn = [&](std::string code, std::string message) {
    report.warnings.push_back({ValidationIssue::Severity::Warning,
                               std::move(code), std::move(message)});
  };

  if (!std::isfinite(seq.t_end) || seq.t_end <= 0.0) {
    error("horizon", "t_end must be a positive number of microseconds");
  }

  double last_end = 0.0;
  for (std::size_t i = 0; i < seq.pulses.size(); ++i) {
    const Pulse& p = seq.pulses[i];
    const std::string who = describe(p, i);
    if (!std::isfinite(p.t_start) || !std::isfinite(p.duration) ||
        !std::isfinite(p.area) || !std::isfinite(p.phase)) {
      error("non_finite", who + " has a non-finite field");
      continue;
    }
    if (p.t_start < 0.0) error("negative_time", who + " starts before t = 0");
    if (p.duration <= 0.0) error("duration", who + " must have duration > 0");
    if (p.area < 0.0) error("area", who + " must have area >= 0");
    if (i > 0 && p.t_start < seq.pulses[i - 1].t_start) {
      error("order", who + " starts before the pulse preceding it");
    }
    last_end = std::max(last_end, p.t_end());

    if (p.label == "R" && p.transition == Transition::Probe13 &&
        !phase_recovery_order(p.area)) {
      std::ostringstream os;
      os << who << " has area " << p.area / std::numbers::pi
         << " pi; recovering locked coherence needs (4n - 1) pi / 2";
      warn("phase_recovery", os.str());
    }
  }

  for (std::size_t i = 0; i < seq.pulses.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.pulses.size(); ++j) {
      const Pulse& a = seq.pulses[i];
      const Pulse& b = seq.pulses[j];
      if (a.transition != b.transition) continue;
      const bool overlap = a.t_start < b.t_end() - kTimeTolerance &&
                           b.t_start < a.t_end() - kTimeTolerance;
      if (overlap) {
        error("overlap", describe(a, i) + " overlaps " + describe(b, j) +
                             " on the same transition");
      }
    }
  }

  if (!seq.pulses.empty() && std::isfinite(seq.t_end) &&
      seq.t_end <= last_end) {
    error("horizon", "t_end must exceed the end of the last pulse");
  }
  return report;
}

SequenceError::SequenceError(ValidationReport report)
    : std::invalid_argument("invalid pulse sequence:\n" + report.summary()),
      report_(std::move(report)) {}

}  // namespace lambda_echo
