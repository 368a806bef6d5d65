#include "lambda_echo/presets.hpp"

#include <numbers>
#include <stdexcept>

namespace lambda_echo {

namespace {

constexpr double kPi = std::numbers::pi;

Pulse probe(std::string label, double t, double duration, double area_pi) {
  return {std::move(label), Transition::Probe13, t, duration, area_pi * kPi, 0.0};
}

Pulse couple(std::string label, double t, double duration, double area_pi) {
  return {std::move(label), Transition::Couple23, t, duration, area_pi * kPi, 0.0};
}

Preset make(std::string name, PulseSequence seq) {
  Preset p;
  p.name = std::move(name);
  p.sequence = std::move(seq);
  p.ensemble = default_ensemble();
  return p;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "fig1", "fig3", "fig4f", "two_pulse", "stimulated", "multi_data"};
  return names;
}

EnsembleSpec default_ensemble() {
  EnsembleSpec spec;
  spec.n_subgroups = 161;
  spec.span_khz = 800.0;
  spec.fwhm_khz = 340.0;
  spec.model = DetuningModel::SharedUpper;
  return spec;
}

PulseSequence locked_echo_sequence() {
  PulseSequence seq;
  seq.pulses = {
      probe("D", 5.0, 1.0, 0.1),    probe("W", 20.0, 0.1, 0.5),
      couple("C1", 20.1, 0.1, 1.0), couple("C2", 60.0, 0.1, 1.0),
      probe("R", 60.1, 0.1, 1.5),   probe("RR", 90.0, 0.1, 1.0),
  };
  seq.t_end = 120.0;
  return seq;
}

PulseSequence two_pulse_sequence(double t1, double t2) {
  PulseSequence seq;
  seq.pulses = {probe("D", t1, kHardPulseDuration, 0.5),
                probe("P2", t2, kHardPulseDuration, 1.0)};
  seq.t_end = 2.0 * t2 - t1 + 15.0;
  return seq;
}

PulseSequence stimulated_sequence(double t1, double t2, double t3) {
  PulseSequence seq;
  seq.pulses = {probe("D", t1, kHardPulseDuration, 0.5),
                probe("W", t2, kHardPulseDuration, 0.5),
                probe("P3", t3, kHardPulseDuration, 0.5)};
  seq.t_end = t3 + (t2 - t1) + 15.0;
  return seq;
}

Preset preset(const std::string& name) {
  if (name == "fig1") return make(name, locked_echo_sequence());
  if (name == "fig3") {
    PulseSequence seq = locked_echo_sequence();
    seq.find("D")->area = 0.5 * kPi;
    return make(name, std::move(seq));
  }
  if (name == "fig4f") {
    PulseSequence seq = locked_echo_sequence();
    seq.find("R")->area = 0.5 * kPi;
    return make(name, std::move(seq));
  }
  if (name == "two_pulse") return make(name, two_pulse_sequence(5.0, 20.0));
  if (name == "stimulated") return make(name, stimulated_sequence(5.0, 20.0, 40.0));
  if (name == "multi_data") {
    PulseSequence seq = locked_echo_sequence();
    std::erase_if(seq.pulses, [](const Pulse& p) { return p.label == "D"; });
    const std::vector<Pulse> data{probe("D1", 1.0, 1.0, 0.05),
                                  probe("D2", 5.0, 1.0, 0.05),
                                  probe("D3", 9.0, 1.0, 0.05)};
    seq.pulses.insert(seq.pulses.begin(), data.begin(), data.end());
    return make(name, std::move(seq));
  }
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace lambda_echo
