#pragma once

// Echo detection and classification, inversion and Bloch-vector readouts,
// and the protocol-level checks built on them.

#include <span>
#include <string>
#include <vector>

#include "lambda_echo/dynamics.hpp"
#include "lambda_echo/ensemble.hpp"
#include "lambda_echo/presets.hpp"
#include "lambda_echo/sequence.hpp"

namespace lambda_echo {

/// A macroscopic coherence signal on the sample grid of a trace.
struct EchoSignal {
  std::vector<double> times;
  std::vector<Complex> values;
  std::vector<double> inversion;  ///< <rho33> - <rho11>
  double stride = 0.0;
};

/// S(t) of the trace as is.
EchoSignal raw_signal(const EnsembleTrace& trace);

/// Part of S(t) odd in the data-pulse field: (S(phi) - S(phi + pi)) / 2 with
/// every data pulse shifted by pi in the second run. It drops free-induction
/// signals and echoes of the other pulses, which carry no data. Inversion is
/// taken from `base`.
EchoSignal data_signal(const EnsembleTrace& base, const EnsembleTrace& flipped);

/// Copy of seq with pi added to the phase of every data pulse.
PulseSequence flip_data_phase(const PulseSequence& seq);

struct ProtocolRun {
  EnsembleTrace trace;  ///< run with the phases as given
  EchoSignal signal;    ///< data-odd signal
};

/// Runs the ensemble twice (data phase 0 and pi) and extracts the data signal.
ProtocolRun run_protocol(const EnsembleSpec& spec, const PulseSequence& seq,
                         const DecayParams& decays, const SimConfig& sim);

enum class EchoSign { Emissive, Absorptive };

struct EchoEvent {
  double t_peak = 0.0;
  double amplitude = 0.0;  ///< |S| at the peak
  Complex value;           ///< S at the peak sample
  EchoSign sign = EchoSign::Emissive;
  bool inverted = false;
  double inversion = 0.0;
  std::string after_pulse;  ///< label of the last pulse ending before t_peak
};

struct EchoWindow {
  double begin = 0.0;
  double end = 0.0;
};

inline constexpr double kDefaultThreshold = 0.05;

/// From the end of the first probe pulse that is not a data pulse to t_end.
EchoWindow default_window(const PulseSequence& seq);

/// Largest |S| between the end of the first data pulse and the next pulse.
double free_induction_reference(const EchoSignal& signal, const PulseSequence& seq);

/// Local maxima of |S| inside the window, outside every pulse interval, with
/// |S| >= threshold * free_induction_reference. Peak times are refined by a
/// parabola through the three samples around the maximum.
///
/// Sign: Absorptive when S at the peak projects positively onto S just after
/// the first data pulse (the linear absorption response), Emissive otherwise.
std::vector<EchoEvent> detect_echoes(const EchoSignal& signal,
                                     const PulseSequence& seq, EchoWindow window,
                                     double threshold = kDefaultThreshold);

/// Largest |S| over samples in the window that lie outside every pulse.
double peak_amplitude(const EchoSignal& signal, const PulseSequence& seq,
                      EchoWindow window);

/// <rho33> - <rho11> at the sample nearest t. Throws std::out_of_range.
double inversion_metric(const EnsembleTrace& trace, double t);

struct BlochVector {
  double u = 0.0;  ///< 2 Re rho13
  double v = 0.0;  ///< 2 Im rho13
  double w = 0.0;  ///< rho33 - rho11

  double norm_squared() const { return u * u + v * v + w * w; }
};

BlochVector bloch_vector(const DensityMatrix& rho);

/// Needs a snapshot at t; throws std::invalid_argument otherwise.
BlochVector bloch_vector(const EnsembleTrace& trace, std::size_t subgroup, double t);

/// Echo times implied by free-precession bookkeeping for a sequence with
/// data, W, R and RR pulses: E1 = end(R) + start(W) - mid(D),
/// E2 = 2 mid(RR) - E1.
double predicted_first_echo(const PulseSequence& seq);
double predicted_second_echo(const PulseSequence& seq);

struct SweepRow {
  double phi_r = 0.0;  ///< read-pulse area, rad
  double e2_amplitude = 0.0;
};

/// Replaces the area of the pulse labeled R by each value in turn, runs the
/// protocol and reports the strongest echo detected after RR (0 if none).
std::vector<SweepRow> phase_condition_sweep(const EnsembleSpec& spec,
                                            const PulseSequence& base,
                                            const DecayParams& decays,
                                            const SimConfig& sim,
                                            std::span<const double> areas);
std::vector<SweepRow> phase_condition_sweep(const Preset& base,
                                            std::span<const double> areas);

struct PhaseCheckpoint {
  std::string name;
  double t = 0.0;
  double residual = 0.0;  ///< |phase error| wrapped into [0, pi]
};

struct BookkeepingReport {
  double delta = 0.0;
  std::vector<PhaseCheckpoint> checkpoints;

  double max_residual() const;
  bool passed(double tolerance = 0.05) const { return max_residual() < tolerance; }
};

/// Follows the phase of one subgroup's data coherence through D, W, C1+C2,
/// R and RR and compares it with the exp(+-i delta t) chain. Needs pulses
/// labeled D, W, C1, C2, R, RR and a weak data pulse (area <= 0.1 pi);
/// throws std::invalid_argument otherwise. Decay is off.
BookkeepingReport phase_bookkeeping_check(const PulseSequence& seq, double delta,
                                          DetuningModel model,
                                          double max_step = 0.0);

struct TransferReport {
  double max_replica_error = 0.0;  ///< |rho22 after C1 - rho33 before C1|
  double max_flip_error = 0.0;     ///< |rho13 after C2 + rho13 before C1|,
                                   ///< free precession removed
};

/// Per-subgroup check of the C1/C2 coherence transfer without decay.
TransferReport coherence_transfer_check(const EnsembleSpec& spec,
                                        const PulseSequence& seq,
                                        double max_step = 0.0);

struct StorageComparison {
  double locked_amplitude = 0.0;
  double unlocked_amplitude = 0.0;
  double ratio = 0.0;
};

/// Locked protocol with C2 starting `storage` us after C1 against a plain
/// stimulated echo (D, W, R = pi/2) read out at the same time, both with
/// optical population decay gamma31 and no spin decay. Amplitudes are peak
/// |S| of the data signal within 2 us of the predicted echo (E2 for the
/// locked run).
StorageComparison locked_vs_unlocked(double storage, double gamma31,
                                     const SimConfig& sim = {});

}  // namespace lambda_echo
