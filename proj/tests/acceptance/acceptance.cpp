// Acceptance criteria 1-10. Usage: acceptance [N ...]; no arguments runs all.
// Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lambda_echo/analysis.hpp"
#include "lambda_echo/commands.hpp"
#include "lambda_echo/config.hpp"
#include "lambda_echo/presets.hpp"

using namespace lambda_echo;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

ProtocolRun run_preset(const Preset& p) {
  return run_protocol(p.ensemble, p.sequence, p.decays, p.sim);
}

void fig1_reproduction(Outcome& o) {
  const Preset p = preset("fig1");
  const ProtocolRun run = run_preset(p);
  const auto echoes = detect_echoes(run.signal, p.sequence, {61.0, 120.0});
  o.detail << "echoes=" << echoes.size();
  for (const auto& e : echoes) {
    o.detail << " (t=" << fmt(e.t_peak, 5) << " "
             << (e.sign == EchoSign::Absorptive ? "Absorptive" : "Emissive")
             << " inversion=" << fmt(inversion_metric(run.trace, e.t_peak), 3) << ")";
  }
  o.check(echoes.size() == 2, "exactly two echoes");
  if (echoes.size() != 2) return;
  const EchoEvent& e1 = echoes[0];
  const EchoEvent& e2 = echoes[1];
  o.check(std::abs(e1.t_peak - 75.1) <= 0.5, "E1 at 75.1 +- 0.5");
  o.check(e1.sign == EchoSign::Absorptive, "E1 Absorptive");
  o.check(inversion_metric(run.trace, e1.t_peak) > 0.0, "E1 inversion > 0");
  o.check(std::abs(e2.t_peak - 105.1) <= 0.5, "E2 at 105.1 +- 0.5");
  o.check(e2.sign == EchoSign::Emissive, "E2 Emissive");
  o.check(inversion_metric(run.trace, e2.t_peak) < 0.0, "E2 inversion < 0");
}

void eq1_sweep(Outcome& o) {
  const Preset p = preset("fig1");
  const std::vector<double> multiples{1.5, 0.5, 1.0, 2.0, 3.0, 3.5};
  std::vector<double> areas;
  for (double m : multiples) areas.push_back(m * kPi);
  const auto rows = phase_condition_sweep(p, areas);
  const double ref = rows[0].e2_amplitude;
  o.detail << "E2(3pi/2)=" << fmt(ref);
  o.check(ref > 0.0, "E2 present at 3pi/2");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double rel = ref > 0.0 ? rows[i].e2_amplitude / ref : 0.0;
    o.detail << " " << fmt(multiples[i], 2) << "pi:" << fmt(rel, 3);
    if (multiples[i] == 3.5) {
      o.check(std::abs(rel - 1.0) <= 0.10, "7pi/2 within 10% of 3pi/2");
    } else {
      o.check(rel < 0.05, fmt(multiples[i], 2) + "pi below 5% of 3pi/2");
    }
  }
}

void integrator_oracle(Outcome& o) {
  std::mt19937_64 rng(20240531);
  const double limit = 2.0 * kPi * 10.0;
  std::uniform_real_distribution<double> omega_dist(0.05 * limit, limit);
  std::uniform_real_distribution<double> delta_dist(-limit, limit);
  std::vector<double> instants;
  for (int k = 1; k <= 200; ++k) instants.push_back(0.05 * k);

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double omega = omega_dist(rng);
    const double delta = delta_dist(rng);
    PulseSequence seq;
    seq.pulses = {{"P", Transition::Probe13, 0.0, 10.0, omega * 10.0, 0.0}};
    seq.t_end = 10.5;
    const auto states = subgroup_states(delta, DetuningModel::OpticalOnly, seq, {},
                                        default_step(seq, std::vector<double>{delta}),
                                        instants);
    const double g2 = omega * omega + delta * delta;
    for (std::size_t k = 0; k < instants.size(); ++k) {
      const double s = std::sin(std::sqrt(g2) * instants[k] / 2.0);
      const double exact = omega * omega / g2 * s * s;
      worst = std::max(worst, std::abs(states[k].population(Level::Excited) - exact));
    }
  }
  o.detail << "max |rho33 - analytic| = " << fmt(worst, 3);
  o.check(worst <= 1e-6, "error within 1e-6");
}

void conservation(Outcome& o) {
  for (const std::string& name : preset_names()) {
    Preset p = preset(name);
    p.sim.track_invariants = true;
    const EnsembleTrace trace = evolve_ensemble(p.ensemble, p.sequence, p.decays, p.sim);
    const InvariantReport& inv = trace.invariants;
    o.detail << " " << name << "(tr " << fmt(inv.max_trace_error, 2) << ", herm "
             << fmt(inv.max_hermiticity_error, 2) << ", eig "
             << fmt(inv.min_eigenvalue, 2) << ")";
    o.check(inv.samples_checked > 0, name + " invariants tracked");
    o.check(inv.max_trace_error < 1e-9, name + " trace");
    o.check(inv.max_hermiticity_error == 0.0, name + " Hermiticity");
    o.check(inv.min_eigenvalue >= -1e-8, name + " positivity");
  }
}

void echo_timing(Outcome& o) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto snap = [](double t) { return std::round(t * 100.0) / 100.0; };
  for (int set = 0; set < 3; ++set) {
    const double t1 = snap(2.0 + 4.0 * u(rng));
    const double t2 = snap(t1 + 8.0 + 12.0 * u(rng));
    const double t3 = snap(t2 + 5.0 + 15.0 * u(rng));

    Preset two = preset("two_pulse");
    two.sequence = two_pulse_sequence(t1, t2);
    const ProtocolRun a = run_preset(two);
    const auto ea = detect_echoes(a.signal, two.sequence, default_window(two.sequence));
    const double stride = a.signal.stride;
    const double want_a = 2.0 * t2 - t1;
    o.detail << " two(" << fmt(t1) << "," << fmt(t2) << ")->";
    o.check(ea.size() == 1, "one two-pulse echo");
    if (!ea.empty()) {
      o.detail << fmt(ea[0].t_peak, 5) << "/" << fmt(want_a, 5);
      o.check(std::abs(ea[0].t_peak - want_a) <= stride, "two-pulse echo at 2 t2 - t1");
    }

    Preset three = preset("stimulated");
    three.sequence = stimulated_sequence(t1, t2, t3);
    const ProtocolRun b = run_preset(three);
    const double want_b = t3 + (t2 - t1);
    const auto eb = detect_echoes(b.signal, three.sequence,
                                  {three.sequence.find("P3")->t_end(), three.sequence.t_end});
    o.detail << " stim(" << fmt(t1) << "," << fmt(t2) << "," << fmt(t3) << ")->";
    const EchoEvent* best = nullptr;
    for (const auto& e : eb) {
      if (!best || e.amplitude > best->amplitude) best = &e;
    }
    o.check(best != nullptr, "stimulated echo detected");
    if (best) {
      o.detail << fmt(best->t_peak, 5) << "/" << fmt(want_b, 5);
      o.check(std::abs(best->t_peak - want_b) <= stride, "stimulated echo at t3 + t2 - t1");
    }
  }
}

void coherence_transfer(Outcome& o) {
  EnsembleSpec spec = default_ensemble();
  spec.model = DetuningModel::OpticalOnly;
  const TransferReport r = coherence_transfer_check(spec, locked_echo_sequence());
  o.detail << "replica " << fmt(r.max_replica_error, 3) << ", flip "
           << fmt(r.max_flip_error, 3);
  o.check(r.max_replica_error <= 1e-6, "rho22 replica within 1e-6");
  o.check(r.max_flip_error <= 1e-6, "rho13 sign flip within 1e-6");
}

void phase_bookkeeping(Outcome& o) {
  const Preset p = preset("fig1");
  for (double khz : {10.0, -10.0}) {
    const BookkeepingReport r =
        phase_bookkeeping_check(p.sequence, khz_to_rad_per_us(khz), p.ensemble.model);
    o.detail << " " << fmt(khz) << "kHz max residual " << fmt(r.max_residual(), 3);
    for (const auto& c : r.checkpoints) {
      o.check(c.residual < 0.05, fmt(khz) + " kHz " + c.name);
    }
  }
}

void storage_extension(Outcome& o) {
  std::vector<double> ratios;
  for (double storage : {10.0, 20.0, 40.0}) {
    const StorageComparison c = locked_vs_unlocked(storage, 0.2);
    ratios.push_back(c.ratio);
    o.detail << " T=" << fmt(storage) << ":" << fmt(c.ratio, 4);
  }
  o.check(ratios[2] > 10.0, "ratio > 10 at 40 us");
  o.check(ratios[0] <= ratios[1] && ratios[1] <= ratios[2], "ratio nondecreasing");
}

void ordering(Outcome& o) {
  const Preset p = preset("multi_data");
  const ProtocolRun run = run_preset(p);
  const double stride = run.signal.stride;
  const auto echoes =
      detect_echoes(run.signal, p.sequence, {p.sequence.find("RR")->t_end(), p.sequence.t_end});
  std::vector<double> data;
  for (std::size_t i : data_pulse_indices(p.sequence)) data.push_back(p.sequence.pulses[i].t_mid());
  o.detail << "E2 echoes at";
  for (const auto& e : echoes) o.detail << " " << fmt(e.t_peak, 5);
  o.check(echoes.size() == data.size(), "one E2 echo per data pulse");
  if (echoes.size() != data.size()) return;
  for (std::size_t i = 1; i < echoes.size(); ++i) {
    const double gap = echoes[i].t_peak - echoes[i - 1].t_peak;
    const double want = data[i] - data[i - 1];
    o.check(gap > 0.0, "same order as data");
    o.check(std::abs(gap - want) <= stride, "gap " + std::to_string(i) + " matches data gap");
  }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(Outcome& o) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "lambda_echo_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  RunConfig cfg = preset_config(preset("fig1"));
  cfg.outputs.per_subgroup = true;
  cfg.sim.record_per_subgroup = true;
  auto write_config = [&](const fs::path& path, unsigned workers) {
    RunConfig c = cfg;
    c.sim.workers = workers;
    std::ofstream(path) << to_json(c).dump(2);
  };
  write_config(root / "one.json", 1);
  write_config(root / "four.json", 4);

  std::ostringstream sink;
  const int a = cmd_run(root / "one.json", {root / "a", std::nullopt, false}, sink, sink);
  const int b = cmd_run(root / "one.json", {root / "b", std::nullopt, false}, sink, sink);
  const int c = cmd_run(root / "four.json", {root / "c", std::nullopt, false}, sink, sink);
  o.check(a == 0 && b == 0 && c == 0, "runs succeed");

  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const std::string name = entry.path().filename().string();
    const std::string ref = slurp(entry.path());
    o.check(!ref.empty(), name + " non-empty");
    o.check(ref == slurp(root / "b" / name), name + " identical on repeat");
    o.check(ref == slurp(root / "c" / name), name + " identical with 4 workers");
    ++files;
  }
  o.detail << files << " artifacts compared across repeat and 1 vs 4 workers";
  o.check(files >= 5, "all artifacts written");
  fs::remove_all(root);
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "Fig. 1 reproduction", fig1_reproduction},
      {2, "Eq. (1) sweep", eq1_sweep},
      {3, "integrator oracle", integrator_oracle},
      {4, "conservation suite", conservation},
      {5, "echo-timing identities", echo_timing},
      {6, "coherence transfer", coherence_transfer},
      {7, "phase bookkeeping", phase_bookkeeping},
      {8, "storage extension", storage_extension},
      {9, "ordering", ordering},
      {10, "determinism", determinism},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) {
      continue;
    }
    Outcome o;
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.str().c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
