#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lambda_echo/ensemble.hpp"
#include "lambda_echo/presets.hpp"

using namespace lambda_echo;

namespace {

constexpr double kPi = std::numbers::pi;

PulseSequence single_pulse(double area, double t_end = 20.0) {
  PulseSequence seq;
  seq.pulses = {{"D", Transition::Probe13, 1.0, kHardPulseDuration, area, 0.0}};
  seq.t_end = t_end;
  return seq;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("unit conversion") {
  CHECK(khz_to_rad_per_us(1000.0) == doctest::Approx(2.0 * kPi));
  CHECK(rad_per_us_to_khz(khz_to_rad_per_us(340.0)) == doctest::Approx(340.0));
}

TEST_CASE("grid is uniform and symmetric") {
  const EnsembleSpec spec{161, 800.0, 340.0, DetuningModel::OpticalOnly};
  const auto grid = make_grid(spec);
  REQUIRE(grid.size() == 161);
  CHECK(grid[80] == 0.0);
  CHECK(grid.front() == doctest::Approx(-khz_to_rad_per_us(400.0)));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(grid[k] == -grid[grid.size() - 1 - k]);
    if (k > 0) CHECK(grid[k] - grid[k - 1] == doctest::Approx(khz_to_rad_per_us(5.0)));
  }
  CHECK(make_grid({1, 800.0, 340.0, DetuningModel::OpticalOnly}) == std::vector<double>{0.0});
}

TEST_CASE("ensemble spec validation") {
  CHECK_THROWS_AS((EnsembleSpec{160, 800.0, 340.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((EnsembleSpec{0, 800.0, 340.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((EnsembleSpec{161, 0.0, 340.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((EnsembleSpec{161, 800.0, -1.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW(default_ensemble().validate());
}

TEST_CASE("gaussian weights") {
  const std::vector<double> x{-2.0, -1.0, 0.0, 1.0, 2.0};
  const auto w = gaussian_weights(x, 2.0);
  double sum = 0.0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[3] / w[2] == doctest::Approx(0.5));
  CHECK(w[0] == w[4]);
  CHECK(w[4] / w[2] == doctest::Approx(std::pow(0.5, 4.0)));
  CHECK_THROWS_AS(gaussian_weights(x, 0.0), std::invalid_argument);
}

TEST_CASE("default step rule") {
  const std::vector<double> wide{-100.0, 0.0, 100.0};
  CHECK(default_step(preset("fig1").sequence, wide) == doctest::Approx(1.0 / 2000.0));
  const std::vector<double> narrow{-1.0, 0.0, 1.0};
  CHECK(default_step(preset("fig1").sequence, narrow) == doctest::Approx(0.002));
  CHECK(default_step(two_pulse_sequence(5.0, 20.0), narrow) ==
        doctest::Approx(kHardPulseDuration / 50.0));
}

TEST_CASE("no pulses leaves the ground state") {
  PulseSequence seq;
  seq.t_end = 5.0;
  const auto trace = evolve_ensemble(default_ensemble(), seq, {}, {});
  CHECK(trace.times.size() == 101);
  for (const auto& m : trace.macro) {
    CHECK(m.coherence13 == Complex(0.0));
    CHECK(m.pop1 == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("free induction matches the weighted detuning sum") {
  const EnsembleSpec spec{41, 800.0, 340.0, DetuningModel::OpticalOnly};
  const auto seq = single_pulse(kPi / 2.0);
  const auto trace = evolve_ensemble(spec, seq, {}, {});

  // Oracle: each subgroup leaves the pulse with rho13_k and then precesses
  // freely, so S(t) = sum_k w_k rho13_k exp(i delta_k (t - t_p)).
  const double t_p = seq.pulses[0].t_end();
  std::vector<double> delta(41);
  std::vector<double> w(41);
  double norm = 0.0;
  for (int k = 0; k < 41; ++k) {
    delta[k] = khz_to_rad_per_us(-400.0 + 20.0 * k);
    const double f = (-400.0 + 20.0 * k) / 340.0;
    w[k] = std::exp(-4.0 * std::log(2.0) * f * f);
    norm += w[k];
  }
  std::vector<Complex> after(41);
  for (int k = 0; k < 41; ++k) {
    const auto s = subgroup_states(delta[k], spec.model, seq, {}, trace.step,
                                   std::vector<double>{t_p});
    after[k] = s[0](Level::Ground, Level::Excited);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double t = trace.times[i];
    if (t < t_p + 0.1) continue;
    Complex s = 0.0;
    for (int k = 0; k < 41; ++k) s += w[k] / norm * after[k] * std::polar(1.0, delta[k] * (t - t_p));
    worst = std::max(worst, std::abs(trace.macro[i].coherence13 - s));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("free induction decays with the Gaussian envelope") {
  const auto seq = single_pulse(kPi / 2.0, 6.0);
  EnsembleSpec spec{401, 2000.0, 340.0, DetuningModel::OpticalOnly};
  const auto trace = evolve_ensemble(spec, seq, {}, {});
  const double fwhm = khz_to_rad_per_us(340.0);
  // A finite pi/2 pulse starts the free decay 2 tau / pi before its end.
  const double t_p = seq.pulses[0].t_end() - 2.0 * seq.pulses[0].duration / kPi;
  const double s0 = std::abs(trace.macro[trace.nearest_sample(1.05)].coherence13);
  for (double t : {1.5, 2.0, 3.0}) {
    const double measured = std::abs(trace.macro[trace.nearest_sample(t)].coherence13) / s0;
    const double tau = t - t_p;
    const double tau0 = 1.05 - t_p;
    const double expected = std::exp(-fwhm * fwhm * (tau * tau - tau0 * tau0) / (16.0 * std::log(2.0)));
    CHECK(measured == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("single-subgroup ensemble equals the subgroup evolution") {
  const auto p = preset("fig1");
  EnsembleSpec spec = p.ensemble;
  spec.n_subgroups = 1;
  SimConfig sim;
  sim.sample_stride = 1.0;
  const auto trace = evolve_ensemble(spec, p.sequence, {}, sim);
  const auto states =
      subgroup_states(0.0, spec.model, p.sequence, {}, trace.step, trace.times);
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    CHECK(trace.macro[i].coherence13 == states[i](Level::Ground, Level::Excited));
    CHECK(trace.macro[i].coherence12 == states[i](Level::Ground, Level::Spin));
    CHECK(trace.macro[i].pop3 == states[i].population(Level::Excited));
  }
}

TEST_CASE("results do not depend on the worker count") {
  const auto p = preset("fig3");
  SimConfig sim;
  sim.workers = 1;
  const auto a = evolve_ensemble(p.ensemble, p.sequence, {}, sim);
  for (unsigned workers : {2u, 3u, 7u}) {
    sim.workers = workers;
    const auto b = evolve_ensemble(p.ensemble, p.sequence, {}, sim);
    REQUIRE(a.macro.size() == b.macro.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.macro.size(); ++i) {
      identical = identical && a.macro[i].coherence13 == b.macro[i].coherence13 &&
                  a.macro[i].pop1 == b.macro[i].pop1 && a.macro[i].pop2 == b.macro[i].pop2;
    }
    CHECK_MESSAGE(identical, workers);
  }
}

TEST_CASE("macroscopic bounds on a strong data pulse") {
  auto p = preset("fig3");
  p.sim.track_invariants = true;
  const auto trace = evolve_ensemble(p.ensemble, p.sequence, p.decays, p.sim);
  for (const auto& m : trace.macro) {
    CHECK(std::abs(m.coherence13) <= 0.5);
    CHECK(m.pop1 + m.pop2 + m.pop3 == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(trace.invariants.samples_checked == trace.times.size() * 161);
  CHECK(trace.invariants.max_hermiticity_error == 0.0);
}

TEST_CASE("decay drains the excited state into the ground state") {
  DecayParams d;
  d.gamma31 = 0.5;
  const auto trace = evolve_ensemble(default_ensemble(), single_pulse(kPi), d, {});
  const auto& last = trace.macro.back();
  CHECK(last.pop3 < 1e-3);
  CHECK(last.pop1 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(last.coherence13) < 1e-3);
}

TEST_CASE("per-subgroup snapshots") {
  auto p = preset("fig1");
  p.sim.record_per_subgroup = true;
  p.sim.snapshot_times = {75.0};
  const auto trace = evolve_ensemble(p.ensemble, p.sequence, p.decays, p.sim);
  REQUIRE(trace.snapshot_at(0.0) != nullptr);
  CHECK(trace.snapshot_at(0.0)->states.size() == 161);
  for (const auto& pulse : p.sequence.pulses) {
    CHECK(trace.snapshot_at(pulse.t_start) != nullptr);
    CHECK(trace.snapshot_at(pulse.t_end()) != nullptr);
  }
  const Snapshot* s = trace.snapshot_at(75.0);
  REQUIRE(s != nullptr);
  Complex sum = 0.0;
  for (std::size_t k = 0; k < 161; ++k) sum += trace.weights[k] * s->states[k](Level::Ground, Level::Excited);
  CHECK(std::abs(sum - trace.macro[trace.nearest_sample(75.0)].coherence13) < 1e-15);
  CHECK(trace.snapshot_at(33.3) == nullptr);
}

TEST_CASE("sampling and lookup errors") {
  const auto p = preset("fig1");
  SimConfig sim;
  sim.dt = 0.01;
  sim.sample_stride = 0.005;
  CHECK_THROWS_AS(evolve_ensemble(p.ensemble, p.sequence, {}, sim), std::invalid_argument);

  PulseSequence bad = p.sequence;
  bad.pulses[1].t_start = 5.5;
  CHECK_THROWS_AS(evolve_ensemble(p.ensemble, bad, {}, {}), SequenceError);

  SimConfig late;
  late.record_per_subgroup = true;
  late.snapshot_times = {500.0};
  CHECK_THROWS_AS(evolve_ensemble(p.ensemble, p.sequence, {}, late), std::out_of_range);

  PulseSequence empty;
  empty.t_end = 1.0;
  const auto trace = evolve_ensemble(p.ensemble, empty, {}, {});
  CHECK(trace.nearest_sample(0.52) == 10);
  CHECK_THROWS_AS(trace.nearest_sample(2.0), std::out_of_range);
  CHECK_THROWS_AS(trace.nearest_sample(-0.1), std::out_of_range);
}

TEST_CASE("subgroup instants must be ascending") {
  const auto seq = single_pulse(kPi);
  CHECK_THROWS_AS(subgroup_states(0.0, DetuningModel::OpticalOnly, seq, {}, 0.001,
                                  std::vector<double>{2.0, 1.0}),
                  std::invalid_argument);
}

}  // TEST_SUITE
