#include "lambda_echo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace lambda_echo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEdgeTolerance = 1e-9;

bool inside_pulse(const PulseSequence& seq, double t) {
  return std::any_of(seq.pulses.begin(), seq.pulses.end(), [&](const Pulse& p) {
    return t >= p.t_start - kEdgeTolerance && t <= p.t_end() + kEdgeTolerance;
  });
}

const Pulse& require(const PulseSequence& seq, const std::string& label) {
  const Pulse* p = seq.find(label);
  if (p == nullptr) throw std::invalid_argument("sequence has no pulse labeled " + label);
  return *p;
}

const Pulse& first_data_pulse(const PulseSequence& seq) {
  const auto idx = data_pulse_indices(seq);
  if (idx.empty()) throw std::invalid_argument("sequence has no data pulse");
  return seq.pulses[idx.front()];
}

double wrapped(double phase) { return std::abs(std::remainder(phase, 2.0 * kPi)); }

// First sample strictly after t, or npos.
std::size_t first_sample_after(const EchoSignal& s, double t) {
  auto it = std::upper_bound(s.times.begin(), s.times.end(), t + kEdgeTolerance);
  return it == s.times.end() ? SIZE_MAX : static_cast<std::size_t>(it - s.times.begin());
}

}  // namespace

EchoSignal raw_signal(const EnsembleTrace& trace) {
  EchoSignal s;
  s.times = trace.times;
  s.stride = trace.stride;
  s.values.reserve(trace.macro.size());
  s.inversion.reserve(trace.macro.size());
  for (const MacroSample& m : trace.macro) {
    s.values.push_back(m.coherence13);
    s.inversion.push_back(m.pop3 - m.pop1);
  }
  return s;
}

EchoSignal data_signal(const EnsembleTrace& base, const EnsembleTrace& flipped) {
  if (base.times.size() != flipped.times.size()) {
    throw std::invalid_argument("data_signal: traces sampled differently");
  }
  EchoSignal s = raw_signal(base);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    s.values[i] = 0.5 * (base.macro[i].coherence13 - flipped.macro[i].coherence13);
  }
  return s;
}

PulseSequence flip_data_phase(const PulseSequence& seq) {
  PulseSequence out = seq;
  for (std::size_t i : data_pulse_indices(seq)) out.pulses[i].phase += kPi;
  return out;
}

ProtocolRun run_protocol(const EnsembleSpec& spec, const PulseSequence& seq,
                         const DecayParams& decays, const SimConfig& sim) {
  ProtocolRun run{evolve_ensemble(spec, seq, decays, sim), {}};
  if (data_pulse_indices(seq).empty()) {
    run.signal = raw_signal(run.trace);
    std::fill(run.signal.values.begin(), run.signal.values.end(), Complex{});
    return run;
  }
  SimConfig plain = sim;
  plain.record_per_subgroup = false;
  plain.track_invariants = false;
  const EnsembleTrace flipped = evolve_ensemble(spec, flip_data_phase(seq), decays, plain);
  run.signal = data_signal(run.trace, flipped);
  return run;
}

EchoWindow default_window(const PulseSequence& seq) {
  const auto data = data_pulse_indices(seq);
  double begin = 0.0;
  bool found = false;
  for (std::size_t i = 0; i < seq.pulses.size(); ++i) {
    const Pulse& p = seq.pulses[i];
    if (p.transition != Transition::Probe13) continue;
    if (std::find(data.begin(), data.end(), i) != data.end()) continue;
    begin = p.t_end();
    found = true;
    break;
  }
  if (!found && !data.empty()) {
    for (std::size_t i : data) begin = std::max(begin, seq.pulses[i].t_end());
  }
  return {begin, seq.t_end};
}

double free_induction_reference(const EchoSignal& signal, const PulseSequence& seq) {
  const auto data = data_pulse_indices(seq);
  if (data.empty()) return 0.0;
  const Pulse& d = seq.pulses[data.front()];
  double until = seq.t_end;
  for (const Pulse& p : seq.pulses) {
    if (p.t_start >= d.t_end() - kEdgeTolerance && &p != &d) until = std::min(until, p.t_start);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < signal.times.size(); ++i) {
    const double t = signal.times[i];
    if (t > d.t_end() + kEdgeTolerance && t < until - kEdgeTolerance) {
      best = std::max(best, std::abs(signal.values[i]));
    }
  }
  return best;
}

std::vector<EchoEvent> detect_echoes(const EchoSignal& signal,
                                     const PulseSequence& seq, EchoWindow window,
                                     double threshold) {
  if (!(window.end > window.begin)) throw std::invalid_argument("detect_echoes: empty window");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("detect_echoes: threshold must lie in (0, 1)");
  }
  std::vector<EchoEvent> events;
  const double reference = free_induction_reference(signal, seq);
  if (reference <= 0.0) return events;

  const auto data = data_pulse_indices(seq);
  const std::size_t ref_index = first_sample_after(signal, seq.pulses[data.front()].t_end());
  const Complex ref_value = ref_index == SIZE_MAX ? Complex{} : signal.values[ref_index];

  const std::size_t n = signal.times.size();
  std::vector<char> excluded(n);
  for (std::size_t i = 0; i < n; ++i) excluded[i] = inside_pulse(seq, signal.times[i]);

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double t = signal.times[i];
    if (t < window.begin || t > window.end) continue;
    if (excluded[i - 1] || excluded[i] || excluded[i + 1]) continue;
    const double left = std::abs(signal.values[i - 1]);
    const double mid = std::abs(signal.values[i]);
    const double right = std::abs(signal.values[i + 1]);
    if (!(mid > left && mid >= right)) continue;
    if (mid < threshold * reference) continue;

    EchoEvent e;
    const double curvature = left - 2.0 * mid + right;
    const double offset = curvature < 0.0 ? 0.5 * (left - right) / curvature : 0.0;
    e.t_peak = t + offset * signal.stride;
    e.amplitude = mid - 0.25 * (left - right) * offset;
    e.value = signal.values[i];
    e.sign = (e.value * std::conj(ref_value)).real() > 0.0 ? EchoSign::Absorptive
                                                            : EchoSign::Emissive;
    e.inversion = signal.inversion[i];
    e.inverted = e.inversion > 0.0;
    double last_end = -1.0;
    for (const Pulse& p : seq.pulses) {
      if (p.t_end() <= e.t_peak && p.t_end() > last_end) {
        last_end = p.t_end();
        e.after_pulse = p.label;
      }
    }
    events.push_back(std::move(e));
  }
  return events;
}

double peak_amplitude(const EchoSignal& signal, const PulseSequence& seq,
                      EchoWindow window) {
  double best = 0.0;
  for (std::size_t i = 0; i < signal.times.size(); ++i) {
    const double t = signal.times[i];
    if (t < window.begin || t > window.end || inside_pulse(seq, t)) continue;
    best = std::max(best, std::abs(signal.values[i]));
  }
  return best;
}

double inversion_metric(const EnsembleTrace& trace, double t) {
  const MacroSample& m = trace.macro.at(trace.nearest_sample(t));
  return m.pop3 - m.pop1;
}

BlochVector bloch_vector(const DensityMatrix& rho) {
  const Complex c = rho(Level::Ground, Level::Excited);
  return {2.0 * c.real(), 2.0 * c.imag(),
          rho.population(Level::Excited) - rho.population(Level::Ground)};
}

BlochVector bloch_vector(const EnsembleTrace& trace, std::size_t subgroup, double t) {
  const Snapshot* snap = trace.snapshot_at(t);
  if (snap == nullptr) {
    throw std::invalid_argument("bloch_vector: no per-subgroup snapshot at this time");
  }
  return bloch_vector(snap->states.at(subgroup));
}

double predicted_first_echo(const PulseSequence& seq) {
  const Pulse& d = first_data_pulse(seq);
  return require(seq, "R").t_end() + (require(seq, "W").t_start - d.t_mid());
}

double predicted_second_echo(const PulseSequence& seq) {
  return 2.0 * require(seq, "RR").t_mid() - predicted_first_echo(seq);
}

std::vector<SweepRow> phase_condition_sweep(const EnsembleSpec& spec,
                                            const PulseSequence& base,
                                            const DecayParams& decays,
                                            const SimConfig& sim,
                                            std::span<const double> areas) {
  if (areas.empty()) throw std::invalid_argument("phase_condition_sweep: no areas");
  require(base, "R");
  const Pulse& rr = require(base, "RR");
  const EchoWindow window{rr.t_end(), base.t_end};

  std::vector<SweepRow> rows;
  rows.reserve(areas.size());
  for (double area : areas) {
    PulseSequence seq = base;
    seq.find("R")->area = area;
    const ProtocolRun run = run_protocol(spec, seq, decays, sim);
    SweepRow row{area, 0.0};
    for (const EchoEvent& e : detect_echoes(run.signal, seq, window)) {
      row.e2_amplitude = std::max(row.e2_amplitude, e.amplitude);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> phase_condition_sweep(const Preset& base,
                                            std::span<const double> areas) {
  return phase_condition_sweep(base.ensemble, base.sequence, base.decays, base.sim,
                               areas);
}

double BookkeepingReport::max_residual() const {
  double worst = 0.0;
  for (const auto& c : checkpoints) worst = std::max(worst, c.residual);
  return worst;
}

BookkeepingReport phase_bookkeeping_check(const PulseSequence& seq, double delta,
                                          DetuningModel model, double max_step) {
  const Pulse& d = require(seq, "D");
  const Pulse& w = require(seq, "W");
  const Pulse& c1 = require(seq, "C1");
  const Pulse& c2 = require(seq, "C2");
  require(seq, "R");
  require(seq, "RR");
  for (std::size_t i : data_pulse_indices(seq)) {
    if (seq.pulses[i].area > 0.1 * kPi * (1.0 + 1e-9)) {
      throw std::invalid_argument(
          "phase_bookkeeping_check: data pulse too strong for the linear phase chain");
    }
  }
  if (ValidationReport report = validate_sequence(seq); !report.ok()) {
    throw SequenceError(std::move(report));
  }

  const double t_e1 = predicted_first_echo(seq);
  const double t_e2 = predicted_second_echo(seq);
  std::map<double, std::size_t> slot;
  for (double t : {d.t_end(), w.t_start, c1.t_start, c1.t_end(), c2.t_start,
                   c2.t_end(), t_e1, t_e2}) {
    slot.emplace(t, 0);
  }
  std::vector<double> instants;
  for (auto& [t, k] : slot) {
    k = instants.size();
    instants.push_back(t);
  }
  if (instants.back() > seq.t_end) {
    throw std::invalid_argument("phase_bookkeeping_check: echoes fall after t_end");
  }

  const double step = max_step > 0.0 ? max_step
                                     : default_step(seq, std::vector<double>{delta});
  const DecayParams none{};
  const PulseSequence flipped = flip_data_phase(seq);
  auto odd_part = [&](double detuning) {
    const auto plus = subgroup_states(detuning, model, seq, none, step, instants);
    const auto minus = subgroup_states(detuning, model, flipped, none, step, instants);
    std::vector<Matrix3> out(instants.size());
    for (std::size_t k = 0; k < instants.size(); ++k) {
      out[k] = 0.5 * (plus[k].matrix() - minus[k].matrix());
    }
    return std::make_pair(out, plus);
  };
  const auto [odd, full] = odd_part(delta);
  const auto [odd0, full0] = odd_part(0.0);
  (void)full0;

  auto c13 = [&](const std::vector<Matrix3>& m, double t) { return m[slot.at(t)](0, 2); };
  auto full_at = [&](double t, int i, int j) { return full[slot.at(t)].matrix()(i, j); };

  BookkeepingReport report;
  report.delta = delta;
  auto add = [&](std::string name, double t, double phase_error) {
    report.checkpoints.push_back({std::move(name), t, wrapped(phase_error)});
  };
  add("free precession after data", w.t_start,
      std::arg(c13(odd, w.t_start)) - std::arg(c13(odd, d.t_end())) -
          delta * (w.t_start - d.t_end()));
  add("phase held during storage", c2.t_start,
      std::arg(full_at(c2.t_start, 0, 1)) - std::arg(full_at(c1.t_end(), 0, 1)));
  add("pi shift from C1 and C2", c2.t_end(),
      std::arg(full_at(c2.t_end(), 0, 2)) - std::arg(full_at(c1.t_start, 0, 2)) - kPi);
  add("rephased at E1", t_e1, std::arg(c13(odd, t_e1)) - std::arg(c13(odd0, t_e1)));
  add("E1 in phase with data", t_e1,
      std::arg(c13(odd0, t_e1)) - std::arg(c13(odd0, d.t_end())));
  add("rephased at E2", t_e2, std::arg(c13(odd, t_e2)) - std::arg(c13(odd0, t_e2)));
  add("E2 opposite to data", t_e2,
      std::arg(c13(odd0, t_e2)) - std::arg(c13(odd0, d.t_end())) - kPi);
  return report;
}

TransferReport coherence_transfer_check(const EnsembleSpec& spec,
                                        const PulseSequence& seq, double max_step) {
  const Pulse& c1 = require(seq, "C1");
  const Pulse& c2 = require(seq, "C2");
  const std::vector<double> grid = make_grid(spec);
  const double step = max_step > 0.0 ? max_step : default_step(seq, grid);
  const std::vector<double> instants{c1.t_start, c1.t_end(), c2.t_end()};
  const DecayParams none{};

  TransferReport report;
  for (double delta : grid) {
    const auto states = subgroup_states(delta, spec.model, seq, none, step, instants);
    const double replica = std::abs(states[1].population(Level::Spin) -
                                    states[0].population(Level::Excited));
    const double rate =
        precession_rate(Level::Ground, Level::Excited, delta, spec.model);
    const Complex expected = -states[0](Level::Ground, Level::Excited) *
                             std::polar(1.0, rate * (c2.t_end() - c1.t_start));
    const double flip = std::abs(states[2](Level::Ground, Level::Excited) - expected);
    report.max_replica_error = std::max(report.max_replica_error, replica);
    report.max_flip_error = std::max(report.max_flip_error, flip);
  }
  return report;
}

StorageComparison locked_vs_unlocked(double storage, double gamma31,
                                     const SimConfig& sim) {
  if (!(storage > 0.0) || !std::isfinite(storage)) {
    throw std::invalid_argument("locked_vs_unlocked: storage must be > 0");
  }
  DecayParams decays;
  decays.gamma31 = gamma31;
  decays.validate();

  const PulseSequence fig1 = locked_echo_sequence();
  const double read_to_rephase = require(fig1, "RR").t_start - require(fig1, "R").t_start;
  const double tail = fig1.t_end - require(fig1, "RR").t_start;

  PulseSequence locked = fig1;
  Pulse& c1 = *locked.find("C1");
  Pulse& c2 = *locked.find("C2");
  Pulse& r = *locked.find("R");
  Pulse& rr = *locked.find("RR");
  c2.t_start = c1.t_start + storage;
  r.t_start = c2.t_end();
  rr.t_start = r.t_start + read_to_rephase;
  locked.t_end = rr.t_start + tail;

  PulseSequence unlocked = locked;
  std::erase_if(unlocked.pulses, [](const Pulse& p) {
    return p.label == "C1" || p.label == "C2" || p.label == "RR";
  });
  unlocked.find("R")->area = 0.5 * kPi;

  const EnsembleSpec spec = default_ensemble();
  constexpr double kHalfWidth = 2.0;

  const ProtocolRun locked_run = run_protocol(spec, locked, decays, sim);
  const double t_locked = predicted_second_echo(locked);
  const ProtocolRun unlocked_run = run_protocol(spec, unlocked, decays, sim);
  const double t_unlocked = predicted_first_echo(locked);

  StorageComparison out;
  out.locked_amplitude = peak_amplitude(locked_run.signal, locked,
                                        {t_locked - kHalfWidth, t_locked + kHalfWidth});
  out.unlocked_amplitude = peak_amplitude(
      unlocked_run.signal, unlocked, {t_unlocked - kHalfWidth, t_unlocked + kHalfWidth});
  out.ratio = out.locked_amplitude / out.unlocked_amplitude;
  return out;
}

}  // namespace lambda_echo
