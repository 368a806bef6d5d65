#pragma once

// Inhomogeneously broadened ensemble: a uniform detuning grid with Gaussian
// weights, each subgroup evolved independently from |1><1| and reduced to
// macroscopic observables in ascending subgroup order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lambda_echo/dynamics.hpp"
#include "lambda_echo/sequence.hpp"

namespace lambda_echo {

/// kHz -> rad/us.
constexpr double khz_to_rad_per_us(double khz) {
  return khz * 2.0 * 3.14159265358979323846 * 1e-3;
}
constexpr double rad_per_us_to_khz(double w) {
  return w / (2.0 * 3.14159265358979323846 * 1e-3);
}

struct EnsembleSpec {
  int n_subgroups = 161;  ///< odd, so the grid contains delta = 0
  double span_khz = 800.0;
  double fwhm_khz = 340.0;
  DetuningModel model = DetuningModel::OpticalOnly;

  /// Throws std::invalid_argument on an even count or non-positive widths.
  void validate() const;
};

/// Detunings in rad/us, ascending and symmetric about zero.
std::vector<double> make_grid(const EnsembleSpec& spec);

/// w_k proportional to exp(-4 ln2 delta_k^2 / fwhm^2), summing to one.
/// Detunings and fwhm share units.
std::vector<double> gaussian_weights(std::span<const double> detunings,
                                     double fwhm);

/// Integrator step used when SimConfig::dt is zero:
/// min(shortest pulse / 50, 1 / (20 max|delta|), 0.002 us).
double default_step(const PulseSequence& seq, std::span<const double> detunings);

/// Within a pulse the step is further capped at this fraction of the
/// inverse generalized Rabi frequency.
inline constexpr double kRabiStepFraction = 0.01;

/// Evolves one subgroup from |1><1| and calls visit(k, rho) for every
/// instant k of the ascending list `instants` (all within [0, t_end]).
/// Drives are piecewise constant between pulse edges; undriven intervals use
/// the exact free propagator, driven ones fixed RK4 steps of at most
/// max_step.
template <typename Visitor>
void evolve_subgroup(double delta, DetuningModel model,
                     const PulseSequence& seq, const DecayParams& decays,
                     double max_step, std::span<const double> instants,
                     Visitor&& visit);

/// Convenience wrapper returning the states at `instants`.
std::vector<DensityMatrix> subgroup_states(double delta, DetuningModel model,
                                           const PulseSequence& seq,
                                           const DecayParams& decays,
                                           double max_step,
                                           std::span<const double> instants);

struct MacroSample {
  Complex coherence13;  ///< S(t) = sum_k w_k rho13_k
  Complex coherence12;
  double pop1 = 0.0;
  double pop2 = 0.0;
  double pop3 = 0.0;
};

struct Snapshot {
  double t = 0.0;
  std::vector<DensityMatrix> states;  ///< one per subgroup, grid order
};

struct InvariantReport {
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 1.0;
  std::size_t samples_checked = 0;
};

/// Result of one ensemble run. Treated as immutable once produced.
struct EnsembleTrace {
  EnsembleSpec spec;
  std::vector<double> detunings;  ///< rad/us
  std::vector<double> weights;
  double step = 0.0;
  double stride = 0.0;
  std::vector<double> times;
  std::vector<MacroSample> macro;
  std::vector<Snapshot> snapshots;  ///< empty unless per-subgroup recording
  InvariantReport invariants;       ///< filled when tracking is enabled

  /// Index of the sample nearest t; throws std::out_of_range outside.
  std::size_t nearest_sample(double t) const;
  /// Snapshot recorded at t (within 1e-9 us) or nullptr.
  const Snapshot* snapshot_at(double t) const;
};

/// Validates the sequence (throws SequenceError) and the sampling
/// (std::invalid_argument if stride < dt), then evolves every subgroup.
EnsembleTrace evolve_ensemble(const EnsembleSpec& spec, const PulseSequence& seq,
                              const DecayParams& decays, const SimConfig& sim);

// ---------------------------------------------------------------------------

namespace detail {

struct Segment {
  double begin;
  double end;
  Complex omega_probe;
  Complex omega_coupling;
};

/// Splits [0, t_end] at every pulse edge and instant. Each segment carries
/// the drive active over it; instants_at_end[s] lists the instants that fall
/// on the end of segment s.
struct Timeline {
  std::vector<Segment> segments;
  std::vector<std::vector<std::size_t>> instants_at_end;
  std::vector<std::size_t> instants_at_start;  ///< instants at t = 0
};

Timeline build_timeline(const PulseSequence& seq,
                        std::span<const double> instants);

}  // namespace detail

template <typename Visitor>
void evolve_subgroup(double delta, DetuningModel model,
                     const PulseSequence& seq, const DecayParams& decays,
                     double max_step, std::span<const double> instants,
                     Visitor&& visit) {
  const detail::Timeline timeline = detail::build_timeline(seq, instants);
  DensityMatrix rho = DensityMatrix::pure(Level::Ground);
  for (std::size_t k : timeline.instants_at_start) visit(k, rho);

  for (std::size_t s = 0; s < timeline.segments.size(); ++s) {
    const detail::Segment& seg = timeline.segments[s];
    DriveState drive;
    drive.omega_probe = seg.omega_probe;
    drive.omega_coupling = seg.omega_coupling;
    drive.delta = delta;
    drive.model = model;
    const double length = seg.end - seg.begin;
    if (length > 0.0) {
      if (drive.undriven()) {
        rho = free_flight(rho, drive, decays, length);
      } else {
        const double h =
            std::min(max_step, kRabiStepFraction / generalized_rabi(drive));
        const auto n = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(length / h - 1e-9)));
        const double sub = length / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) rho = step_fixed(rho, drive, decays, sub);
      }
    }
    for (std::size_t k : timeline.instants_at_end[s]) visit(k, rho);
  }
}

}  // namespace lambda_echo
