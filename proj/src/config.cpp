#include "lambda_echo/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace lambda_echo {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

// Object view that tracks its JSON path and rejects keys it was not asked for.
class Section {
 public:
  Section(const json& node, std::string path,
          std::initializer_list<const char*> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& [key, value] : node_.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) throw ConfigError(child(key), "unknown key");
    }
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const char* key) const {
    return node_.contains(key) && !node_.at(key).is_null();
  }

  const json& at(const char* key) const {
    if (!node_.contains(key)) throw ConfigError(child(key), "missing");
    return node_.at(key);
  }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(child(key), "must be finite");
    return x;
  }
  double number(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  double non_negative(const char* key, double fallback) const {
    const double x = number(key, fallback);
    if (x < 0.0) throw ConfigError(child(key), "must be >= 0");
    return x;
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const char* key, std::string fallback) const {
    return has(key) ? text(key) : fallback;
  }

  unsigned count(const char* key, unsigned fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(child(key), "expected a non-negative integer");
    }
    return static_cast<unsigned>(v.get<long long>());
  }

 private:
  const json& node_;
  std::string path_;
};

DetuningModel parse_model(const std::string& name, const std::string& field) {
  if (name == "optical_only") return DetuningModel::OpticalOnly;
  if (name == "shared_upper") return DetuningModel::SharedUpper;
  throw ConfigError(field, "expected \"optical_only\" or \"shared_upper\", got \"" +
                               name + "\"");
}

Transition parse_transition(const std::string& name, const std::string& field) {
  if (name == "probe13") return Transition::Probe13;
  if (name == "couple23") return Transition::Couple23;
  throw ConfigError(field, "expected \"probe13\" or \"couple23\", got \"" + name + "\"");
}

EnsembleSpec parse_ensemble(const json& node) {
  const Section s(node, "ensemble", {"n_subgroups", "span_khz", "fwhm_khz", "detuning_model"});
  EnsembleSpec spec;
  if (s.has("n_subgroups")) {
    const json& v = s.at("n_subgroups");
    if (!v.is_number_integer()) throw ConfigError(s.child("n_subgroups"), "expected an integer");
    const long long n = v.get<long long>();
    if (n < 1 || n % 2 == 0 || n > 100001) {
      throw ConfigError(s.child("n_subgroups"), "must be a positive odd integer");
    }
    spec.n_subgroups = static_cast<int>(n);
  }
  spec.span_khz = s.number("span_khz", spec.span_khz);
  if (!(spec.span_khz > 0.0)) throw ConfigError(s.child("span_khz"), "must be > 0");
  spec.fwhm_khz = s.number("fwhm_khz", spec.fwhm_khz);
  if (!(spec.fwhm_khz > 0.0)) throw ConfigError(s.child("fwhm_khz"), "must be > 0");
  if (s.has("detuning_model")) {
    spec.model = parse_model(s.text("detuning_model"), s.child("detuning_model"));
  }
  return spec;
}

DecayParams parse_decays(const json& node) {
  const Section s(node, "decays",
                  {"Gamma31", "Gamma32", "Gamma21", "gamma13", "gamma23", "gamma12"});
  DecayParams d;
  d.gamma31 = s.non_negative("Gamma31", 0.0);
  d.gamma32 = s.non_negative("Gamma32", 0.0);
  d.gamma21 = s.non_negative("Gamma21", 0.0);
  d.dephasing13 = s.non_negative("gamma13", 0.0);
  d.dephasing23 = s.non_negative("gamma23", 0.0);
  d.dephasing12 = s.non_negative("gamma12", 0.0);
  return d;
}

Pulse parse_pulse(const json& node, const std::string& path) {
  const Section s(node, path,
                  {"label", "transition", "t_start_us", "duration_us", "area_pi", "phase_rad"});
  Pulse p;
  p.label = s.text("label", "");
  p.transition = parse_transition(s.text("transition"), s.child("transition"));
  p.t_start = s.number("t_start_us");
  p.duration = s.number("duration_us");
  p.area = s.number("area_pi") * kPi;
  p.phase = s.number("phase_rad", 0.0);
  return p;
}

SimConfig parse_sim(const json& node) {
  const Section s(node, "sim",
                  {"dt_us", "sample_stride_us", "record_per_subgroup", "workers",
                   "snapshot_times_us", "track_invariants"});
  SimConfig sim;
  if (s.has("dt_us")) {
    sim.dt = s.number("dt_us");
    if (!(sim.dt > 0.0)) throw ConfigError(s.child("dt_us"), "must be > 0 (or null for automatic)");
  }
  sim.sample_stride = s.number("sample_stride_us", sim.sample_stride);
  if (!(sim.sample_stride > 0.0)) throw ConfigError(s.child("sample_stride_us"), "must be > 0");
  if (sim.dt > 0.0 && sim.sample_stride < sim.dt) {
    throw ConfigError(s.child("sample_stride_us"), "must be >= dt_us");
  }
  sim.record_per_subgroup = s.boolean("record_per_subgroup", false);
  sim.workers = s.count("workers", 0);
  sim.track_invariants = s.boolean("track_invariants", false);
  if (s.has("snapshot_times_us")) {
    const json& v = s.at("snapshot_times_us");
    if (!v.is_array()) throw ConfigError(s.child("snapshot_times_us"), "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string field = s.child("snapshot_times_us") + "[" + std::to_string(i) + "]";
      if (!v[i].is_number()) throw ConfigError(field, "expected a number");
      const double t = v[i].get<double>();
      if (!std::isfinite(t) || t < 0.0) throw ConfigError(field, "must be a finite time >= 0");
      sim.snapshot_times.push_back(t);
    }
  }
  return sim;
}

AnalysisOptions parse_analysis(const json& node) {
  const Section s(node, "analysis", {"echo_window_us", "threshold"});
  AnalysisOptions a;
  if (s.has("echo_window_us")) {
    const json& v = s.at("echo_window_us");
    const std::string field = s.child("echo_window_us");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(field, "expected [begin, end]");
    }
    a.window = EchoWindow{v[0].get<double>(), v[1].get<double>()};
    if (!(a.window->end > a.window->begin)) throw ConfigError(field, "window is empty");
  }
  a.threshold = s.number("threshold", a.threshold);
  if (!(a.threshold > 0.0 && a.threshold < 1.0)) {
    throw ConfigError(s.child("threshold"), "must lie in (0, 1)");
  }
  return a;
}

OutputOptions parse_outputs(const json& node) {
  const Section s(node, "outputs", {"dir", "format", "per_subgroup"});
  OutputOptions o;
  o.dir = s.text("dir", o.dir);
  if (s.has("format")) {
    try {
      o.format = parse_format(s.text("format"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(s.child("format"), e.what());
    }
  }
  o.per_subgroup = s.boolean("per_subgroup", false);
  return o;
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw std::invalid_argument("expected \"csv\" or \"json\", got \"" + name + "\"");
}

std::string to_string(OutputFormat format) {
  return format == OutputFormat::Csv ? "csv" : "json";
}

std::string to_string(DetuningModel model) {
  return model == DetuningModel::OpticalOnly ? "optical_only" : "shared_upper";
}

std::string to_string(Transition transition) {
  return transition == Transition::Probe13 ? "probe13" : "couple23";
}

RunConfig parse_config(const json& doc) {
  const Section root(doc, "", {"ensemble", "decays", "pulses", "t_end_us", "sim", "analysis",
                               "outputs"});
  RunConfig cfg;
  if (root.has("ensemble")) cfg.ensemble = parse_ensemble(root.at("ensemble"));
  if (root.has("decays")) cfg.decays = parse_decays(root.at("decays"));
  if (root.has("pulses")) {
    const json& list = root.at("pulses");
    if (!list.is_array()) throw ConfigError("pulses", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.sequence.pulses.push_back(parse_pulse(list[i], "pulses[" + std::to_string(i) + "]"));
    }
  }
  cfg.sequence.t_end = root.number("t_end_us");
  if (root.has("sim")) cfg.sim = parse_sim(root.at("sim"));
  if (root.has("analysis")) cfg.analysis = parse_analysis(root.at("analysis"));
  if (root.has("outputs")) cfg.outputs = parse_outputs(root.at("outputs"));
  cfg.sim.record_per_subgroup = cfg.sim.record_per_subgroup || cfg.outputs.per_subgroup;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
  json doc;
  doc["ensemble"] = {{"n_subgroups", cfg.ensemble.n_subgroups},
                     {"span_khz", cfg.ensemble.span_khz},
                     {"fwhm_khz", cfg.ensemble.fwhm_khz},
                     {"detuning_model", to_string(cfg.ensemble.model)}};
  doc["decays"] = {{"Gamma31", cfg.decays.gamma31}, {"Gamma32", cfg.decays.gamma32},
                   {"Gamma21", cfg.decays.gamma21}, {"gamma13", cfg.decays.dephasing13},
                   {"gamma23", cfg.decays.dephasing23}, {"gamma12", cfg.decays.dephasing12}};
  json pulses = json::array();
  for (const Pulse& p : cfg.sequence.pulses) {
    pulses.push_back({{"label", p.label},
                      {"transition", to_string(p.transition)},
                      {"t_start_us", p.t_start},
                      {"duration_us", p.duration},
                      {"area_pi", p.area / kPi},
                      {"phase_rad", p.phase}});
  }
  doc["pulses"] = std::move(pulses);
  doc["t_end_us"] = cfg.sequence.t_end;
  doc["sim"] = {{"dt_us", cfg.sim.dt > 0.0 ? json(cfg.sim.dt) : json(nullptr)},
                {"sample_stride_us", cfg.sim.sample_stride},
                {"record_per_subgroup", cfg.sim.record_per_subgroup},
                {"workers", cfg.sim.workers},
                {"snapshot_times_us", cfg.sim.snapshot_times},
                {"track_invariants", cfg.sim.track_invariants}};
  doc["analysis"] = {
      {"echo_window_us", cfg.analysis.window
                             ? json::array({cfg.analysis.window->begin, cfg.analysis.window->end})
                             : json(nullptr)},
      {"threshold", cfg.analysis.threshold}};
  doc["outputs"] = {{"dir", cfg.outputs.dir},
                    {"format", to_string(cfg.outputs.format)},
                    {"per_subgroup", cfg.outputs.per_subgroup}};
  return doc;
}

RunConfig preset_config(const Preset& preset) {
  RunConfig cfg;
  cfg.ensemble = preset.ensemble;
  cfg.decays = preset.decays;
  cfg.sequence = preset.sequence;
  cfg.sim = preset.sim;
  return cfg;
}

}  // namespace lambda_echo
