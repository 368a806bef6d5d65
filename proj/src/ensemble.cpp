#include "lambda_echo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace lambda_echo {

namespace {

constexpr double kMergeTolerance = 1e-9;

struct SubgroupRow {
  Complex c13;
  Complex c12;
  double p1;
  double p2;
  double p3;
};

std::vector<double> sample_times(double t_end, double stride) {
  const auto n = static_cast<std::size_t>(std::floor(t_end / stride + 1e-9));
  std::vector<double> out(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out[k] = static_cast<double>(k) * stride;
  return out;
}

unsigned resolve_workers(unsigned requested, std::size_t jobs) {
  unsigned n = requested != 0 ? requested : std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

void EnsembleSpec::validate() const {
  if (n_subgroups <= 0 || n_subgroups % 2 == 0) {
    throw std::invalid_argument("ensemble: n_subgroups must be a positive odd number");
  }
  if (!(span_khz > 0.0) || !std::isfinite(span_khz)) {
    throw std::invalid_argument("ensemble: span must be > 0");
  }
  if (!(fwhm_khz > 0.0) || !std::isfinite(fwhm_khz)) {
    throw std::invalid_argument("ensemble: fwhm must be > 0");
  }
}

std::vector<double> make_grid(const EnsembleSpec& spec) {
  spec.validate();
  const int n = spec.n_subgroups;
  const int half = n / 2;
  std::vector<double> grid(static_cast<std::size_t>(n));
  if (n == 1) return {0.0};
  const double spacing_khz = spec.span_khz / static_cast<double>(n - 1);
  // Built from the integer offset so that grid[half + j] == -grid[half - j].
  for (int j = -half; j <= half; ++j) {
    grid[static_cast<std::size_t>(j + half)] =
        khz_to_rad_per_us(static_cast<double>(j) * spacing_khz);
  }
  return grid;
}

std::vector<double> gaussian_weights(std::span<const double> detunings,
                                     double fwhm) {
  if (!(fwhm > 0.0)) throw std::invalid_argument("gaussian_weights: fwhm must be > 0");
  std::vector<double> w(detunings.size());
  const double c = 4.0 * std::numbers::ln2 / (fwhm * fwhm);
  double total = 0.0;
  for (std::size_t k = 0; k < detunings.size(); ++k) {
    w[k] = std::exp(-c * detunings[k] * detunings[k]);
    total += w[k];
  }
  for (double& x : w) x /= total;
  return w;
}

double default_step(const PulseSequence& seq, std::span<const double> detunings) {
  double step = 0.002;
  for (const Pulse& p : seq.pulses) step = std::min(step, p.duration / 50.0);
  double max_delta = 0.0;
  for (double d : detunings) max_delta = std::max(max_delta, std::abs(d));
  if (max_delta > 0.0) step = std::min(step, 1.0 / (20.0 * max_delta));
  return step;
}

std::vector<DensityMatrix> subgroup_states(double delta, DetuningModel model,
                                           const PulseSequence& seq,
                                           const DecayParams& decays,
                                           double max_step,
                                           std::span<const double> instants) {
  std::vector<DensityMatrix> out(instants.size());
  evolve_subgroup(delta, model, seq, decays, max_step, instants,
                  [&](std::size_t k, const DensityMatrix& rho) { out[k] = rho; });
  return out;
}

namespace detail {

Timeline build_timeline(const PulseSequence& seq,
                        std::span<const double> instants) {
  if (!std::is_sorted(instants.begin(), instants.end())) {
    throw std::invalid_argument("evolve_subgroup: instants must be ascending");
  }
  if (!instants.empty() && instants.front() < -kMergeTolerance) {
    throw std::out_of_range("evolve_subgroup: instant before t = 0");
  }
  const double horizon = instants.empty() ? seq.t_end : instants.back();

  std::vector<double> cuts{0.0, horizon};
  for (const Pulse& p : seq.pulses) {
    if (p.t_start < horizon) cuts.push_back(p.t_start);
    if (p.t_end() < horizon) cuts.push_back(p.t_end());
  }
  for (double t : instants) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> points;
  for (double t : cuts) {
    if (points.empty() || t - points.back() > kMergeTolerance) points.push_back(t);
  }

  Timeline tl;
  tl.segments.reserve(points.size());
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    Segment seg{points[i], points[i + 1], {}, {}};
    const double mid = 0.5 * (seg.begin + seg.end);
    for (const Pulse& p : seq.pulses) {
      if (p.t_start <= mid && mid < p.t_end()) {
        if (p.transition == Transition::Probe13) {
          seg.omega_probe += p.rabi();
        } else {
          seg.omega_coupling += p.rabi();
        }
      }
    }
    tl.segments.push_back(seg);
  }
  tl.instants_at_end.resize(tl.segments.size());

  std::size_t cursor = 0;
  for (std::size_t k = 0; k < instants.size(); ++k) {
    while (cursor < points.size() && points[cursor] < instants[k] - kMergeTolerance) {
      ++cursor;
    }
    if (cursor == 0) {
      tl.instants_at_start.push_back(k);
    } else {
      tl.instants_at_end[cursor - 1].push_back(k);
    }
  }
  return tl;
}

}  // namespace detail

std::size_t EnsembleTrace::nearest_sample(double t) const {
  if (times.empty() || t < times.front() - 0.5 * stride ||
      t > times.back() + 0.5 * stride) {
    throw std::out_of_range("time outside the trace");
  }
  const double k = std::round(t / stride);
  return std::min(static_cast<std::size_t>(std::max(k, 0.0)), times.size() - 1);
}

const Snapshot* EnsembleTrace::snapshot_at(double t) const {
  for (const Snapshot& s : snapshots) {
    if (std::abs(s.t - t) <= kMergeTolerance) return &s;
  }
  return nullptr;
}

EnsembleTrace evolve_ensemble(const EnsembleSpec& spec, const PulseSequence& seq,
                              const DecayParams& decays, const SimConfig& sim) {
  if (ValidationReport report = validate_sequence(seq); !report.ok()) {
    throw SequenceError(std::move(report));
  }
  spec.validate();
  decays.validate();

  EnsembleTrace trace;
  trace.spec = spec;
  trace.detunings = make_grid(spec);
  trace.weights =
      gaussian_weights(trace.detunings, khz_to_rad_per_us(spec.fwhm_khz));
  trace.step = sim.dt > 0.0 ? sim.dt : default_step(seq, trace.detunings);
  trace.stride = sim.sample_stride;
  if (!(sim.sample_stride > 0.0) || sim.sample_stride < trace.step) {
    throw std::invalid_argument("sample stride must be >= the integrator step");
  }
  trace.times = sample_times(seq.t_end, sim.sample_stride);

  // Instants to visit: samples, then optional snapshot times, merged.
  std::vector<double> snapshot_times;
  if (sim.record_per_subgroup) {
    snapshot_times.push_back(0.0);
    for (const Pulse& p : seq.pulses) {
      snapshot_times.push_back(p.t_start);
      snapshot_times.push_back(p.t_end());
    }
    for (double t : sim.snapshot_times) {
      if (t < 0.0 || t > seq.t_end) {
        throw std::out_of_range("snapshot time outside [0, t_end]");
      }
      snapshot_times.push_back(t);
    }
    std::sort(snapshot_times.begin(), snapshot_times.end());
    std::vector<double> unique;
    for (double t : snapshot_times) {
      if (unique.empty() || t - unique.back() > kMergeTolerance) unique.push_back(t);
    }
    snapshot_times = std::move(unique);
  }

  // One visit per distinct instant; a sample and a snapshot may share one.
  struct Event {
    double t;
    bool is_sample;
    std::size_t index;
  };
  std::vector<Event> events;
  for (std::size_t i = 0; i < trace.times.size(); ++i) events.push_back({trace.times[i], true, i});
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    events.push_back({snapshot_times[i], false, i});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  std::vector<double> instants;
  std::vector<std::size_t> role_sample;
  std::vector<std::size_t> role_snapshot;
  for (const Event& e : events) {
    if (instants.empty() || e.t - instants.back() > kMergeTolerance) {
      instants.push_back(e.t);
      role_sample.push_back(SIZE_MAX);
      role_snapshot.push_back(SIZE_MAX);
    }
    (e.is_sample ? role_sample : role_snapshot).back() = e.index;
  }

  const std::size_t n_groups = trace.detunings.size();
  const std::size_t n_samples = trace.times.size();
  std::vector<SubgroupRow> rows(n_groups * n_samples);
  trace.snapshots.resize(snapshot_times.size());
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    trace.snapshots[i].t = snapshot_times[i];
    trace.snapshots[i].states.resize(n_groups);
  }
  std::vector<InvariantReport> checks(n_groups);

  auto run_group = [&](std::size_t g) {
    InvariantReport& check = checks[g];
    evolve_subgroup(
        trace.detunings[g], spec.model, seq, decays, trace.step, instants,
        [&](std::size_t k, const DensityMatrix& rho) {
          if (role_snapshot[k] != SIZE_MAX) {
            trace.snapshots[role_snapshot[k]].states[g] = rho;
          }
          const std::size_t s = role_sample[k];
          if (s == SIZE_MAX) return;
          rows[g * n_samples + s] = {rho(Level::Ground, Level::Excited),
                                     rho(Level::Ground, Level::Spin),
                                     rho.population(Level::Ground),
                                     rho.population(Level::Spin),
                                     rho.population(Level::Excited)};
          if (sim.track_invariants) {
            check.max_trace_error =
                std::max(check.max_trace_error, std::abs(rho.trace() - 1.0));
            check.max_hermiticity_error =
                std::max(check.max_hermiticity_error, rho.hermiticity_error());
            check.min_eigenvalue = std::min(check.min_eigenvalue, rho.min_eigenvalue());
            ++check.samples_checked;
          }
        });
  };

  const unsigned workers = resolve_workers(sim.workers, n_groups);
  if (workers <= 1) {
    for (std::size_t g = 0; g < n_groups; ++g) run_group(g);
  } else {
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t g = w; g < n_groups; g += workers) run_group(g);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  // Reduction in ascending subgroup order.
  trace.macro.assign(n_samples, MacroSample{});
  for (std::size_t g = 0; g < n_groups; ++g) {
    const double w = trace.weights[g];
    for (std::size_t s = 0; s < n_samples; ++s) {
      const SubgroupRow& r = rows[g * n_samples + s];
      MacroSample& m = trace.macro[s];
      m.coherence13 += w * r.c13;
      m.coherence12 += w * r.c12;
      m.pop1 += w * r.p1;
      m.pop2 += w * r.p2;
      m.pop3 += w * r.p3;
    }
  }

  if (sim.track_invariants) {
    for (const InvariantReport& c : checks) {
      trace.invariants.max_trace_error =
          std::max(trace.invariants.max_trace_error, c.max_trace_error);
      trace.invariants.max_hermiticity_error =
          std::max(trace.invariants.max_hermiticity_error, c.max_hermiticity_error);
      trace.invariants.min_eigenvalue =
          std::min(trace.invariants.min_eigenvalue, c.min_eigenvalue);
      trace.invariants.samples_checked += c.samples_checked;
    }
  }
  return trace;
}

}  // namespace lambda_echo
