#pragma once

// Named protocols: the optically locked, double-rephased echo sequence and
// the textbook echo sequences it builds on.

#include <string>
#include <vector>

#include "lambda_echo/dynamics.hpp"
#include "lambda_echo/ensemble.hpp"
#include "lambda_echo/sequence.hpp"

namespace lambda_echo {

struct Preset {
  std::string name;
  PulseSequence sequence;
  EnsembleSpec ensemble;
  DecayParams decays;
  SimConfig sim;
};

/// fig1, fig3, fig4f, two_pulse, stimulated, multi_data.
const std::vector<std::string>& preset_names();

/// Throws std::invalid_argument for an unknown name.
Preset preset(const std::string& name);

/// Ensemble used by every preset: 161 subgroups over 800 kHz, 340 kHz FWHM,
/// detuning shared by both optical transitions.
EnsembleSpec default_ensemble();

/// D(0.1 pi, 1 us) @5, W(pi/2) @20, C1(pi) @20.1, C2(pi) @60, R(3 pi/2) @60.1,
/// RR(pi) @90, 100 ns pulses except D, horizon 120 us.
PulseSequence locked_echo_sequence();

/// pi/2 labeled D at t1, pi at t2, short pulses; echo expected at 2 t2 - t1.
PulseSequence two_pulse_sequence(double t1, double t2);

/// Three pi/2 pulses; echo expected at t3 + (t2 - t1).
PulseSequence stimulated_sequence(double t1, double t2, double t3);

/// Duration of the short pulses used by two_pulse and stimulated.
inline constexpr double kHardPulseDuration = 0.02;

}  // namespace lambda_echo
