#include "lambda_echo/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace lambda_echo {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const char* sign_name(EchoSign s) {
  return s == EchoSign::Absorptive ? "Absorptive" : "Emissive";
}

// The value a reader of the CSV sees, so JSON and CSV agree digit for digit.
double rounded(double x) { return std::strtod(format_number(x).c_str(), nullptr); }

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

  std::string csv() const {
    std::string s;
    for (std::size_t i = 0; i < columns_.size(); ++i) s += (i ? "," : "") + columns_[i];
    s += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
      s += '\n';
    }
    return s;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

// Columns are stored as arrays keyed by name, in column order.
ojson columnar(const std::vector<std::string>& names,
               const std::vector<std::vector<double>>& columns) {
  ojson doc = ojson::object();
  for (std::size_t c = 0; c < names.size(); ++c) {
    ojson values = ojson::array();
    for (double x : columns[c]) values.push_back(rounded(x));
    doc[names[c]] = std::move(values);
  }
  return doc;
}

std::vector<std::vector<double>> trace_columns(const EnsembleTrace& trace) {
  std::vector<std::vector<double>> cols(7);
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const MacroSample& m = trace.macro[i];
    cols[0].push_back(trace.times[i]);
    cols[1].push_back(m.coherence13.real());
    cols[2].push_back(m.coherence13.imag());
    cols[3].push_back(std::abs(m.coherence13));
    cols[4].push_back(m.pop1);
    cols[5].push_back(m.pop2);
    cols[6].push_back(m.pop3);
  }
  return cols;
}

std::vector<std::vector<double>> signal_columns(const EchoSignal& signal) {
  std::vector<std::vector<double>> cols(4);
  for (std::size_t i = 0; i < signal.times.size(); ++i) {
    cols[0].push_back(signal.times[i]);
    cols[1].push_back(signal.values[i].real());
    cols[2].push_back(signal.values[i].imag());
    cols[3].push_back(std::abs(signal.values[i]));
  }
  return cols;
}

std::string emit(const std::vector<std::string>& names,
                 const std::vector<std::vector<double>>& cols, OutputFormat format) {
  if (format == OutputFormat::Json) return columnar(names, cols).dump(1) + "\n";
  Table t(names);
  const std::size_t n = cols.empty() ? 0 : cols.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> cells;
    for (const auto& c : cols) cells.push_back(format_number(c[i]));
    t.row(std::move(cells));
  }
  return t.csv();
}

std::string emit_echoes(const std::vector<EchoEvent>& echoes, OutputFormat format) {
  if (format == OutputFormat::Json) {
    ojson list = ojson::array();
    for (const EchoEvent& e : echoes) {
      list.push_back({{"t_peak_us", rounded(e.t_peak)},
                      {"amplitude", rounded(e.amplitude)},
                      {"im_sign", sign_name(e.sign)},
                      {"inverted", e.inverted},
                      {"inversion", rounded(e.inversion)},
                      {"after_pulse", e.after_pulse}});
    }
    return list.dump(1) + "\n";
  }
  Table t({"t_peak_us", "amplitude", "im_sign", "inverted", "inversion", "after_pulse"});
  for (const EchoEvent& e : echoes) {
    t.row({format_number(e.t_peak), format_number(e.amplitude), sign_name(e.sign),
           e.inverted ? "true" : "false", format_number(e.inversion), e.after_pulse});
  }
  return t.csv();
}

std::string emit_subgroups(const EnsembleTrace& trace, OutputFormat format) {
  const std::vector<std::string> names{"delta_khz", "t_us",     "rho11",    "rho22",
                                       "rho33",     "re_rho12", "im_rho12", "re_rho13",
                                       "im_rho13",  "re_rho23", "im_rho23"};
  std::vector<std::vector<double>> cols(names.size());
  for (std::size_t k = 0; k < trace.detunings.size(); ++k) {
    for (const Snapshot& snap : trace.snapshots) {
      const Matrix3& m = snap.states[k].matrix();
      const double row[] = {rad_per_us_to_khz(trace.detunings[k]), snap.t,
                            m(0, 0).real(), m(1, 1).real(), m(2, 2).real(),
                            m(0, 1).real(), m(0, 1).imag(), m(0, 2).real(),
                            m(0, 2).imag(), m(1, 2).real(), m(1, 2).imag()};
      for (std::size_t c = 0; c < names.size(); ++c) cols[c].push_back(row[c]);
    }
  }
  return emit(names, cols, format);
}

std::string emit_summary(const RunResult& result) {
  const EnsembleTrace& trace = result.run.trace;
  ojson doc;
  doc["n_subgroups"] = trace.detunings.size();
  doc["step_us"] = rounded(trace.step);
  doc["sample_stride_us"] = rounded(trace.stride);
  doc["n_samples"] = trace.times.size();
  doc["echo_window_us"] = {rounded(result.window.begin), rounded(result.window.end)};
  doc["n_echoes"] = result.echoes.size();
  ojson warnings = ojson::array();
  for (const auto& w : result.validation.warnings) {
    warnings.push_back({{"code", w.code}, {"message", w.message}});
  }
  doc["warnings"] = std::move(warnings);
  if (trace.invariants.samples_checked > 0) {
    doc["invariants"] = {
        {"samples_checked", trace.invariants.samples_checked},
        {"max_trace_error", rounded(trace.invariants.max_trace_error)},
        {"max_hermiticity_error", rounded(trace.invariants.max_hermiticity_error)},
        {"min_eigenvalue", rounded(trace.invariants.min_eigenvalue)}};
  }
  return doc.dump(1) + "\n";
}

void report_echoes(const RunResult& result, std::ostream& out) {
  out << result.echoes.size() << " echo(es) in [" << result.window.begin << ", "
      << result.window.end << "] us\n";
  for (const EchoEvent& e : result.echoes) {
    out << "  t=" << format_number(e.t_peak) << " us  |S|=" << format_number(e.amplitude)
        << "  " << sign_name(e.sign) << (e.inverted ? "  inverted" : "") << "  after "
        << e.after_pulse << '\n';
  }
}

// Shared error mapping for the three commands.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SequenceError& e) {
    err << e.what();
    return kExitValidation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
}

int run_and_write(const RunConfig& cfg, const fs::path& dir, std::ostream& out,
                  std::ostream& err) {
  const RunResult result = execute(cfg);
  for (const auto& w : result.validation.warnings) {
    err << "warning[" << w.code << "]: " << w.message << '\n';
  }
  const auto written = write_artifacts(result, cfg, dir, cfg.outputs.format);
  report_echoes(result, out);
  for (const auto& p : written) out << "wrote " << p.string() << '\n';
  return kExitOk;
}

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) x = 0.0;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, 8);
  return std::string(buf, res.ptr);
}

RunResult execute(const RunConfig& cfg) {
  RunResult result;
  result.validation = validate_sequence(cfg.sequence);
  if (!result.validation.ok()) throw SequenceError(result.validation);
  result.run = run_protocol(cfg.ensemble, cfg.sequence, cfg.decays, cfg.sim);
  result.window = cfg.analysis.window.value_or(default_window(cfg.sequence));
  result.echoes =
      detect_echoes(result.run.signal, cfg.sequence, result.window, cfg.analysis.threshold);
  return result;
}

std::vector<fs::path> write_artifacts(const RunResult& result, const RunConfig& cfg,
                                      const fs::path& dir, OutputFormat format) {
  ensure_dir(dir);
  const std::string ext = format == OutputFormat::Csv ? ".csv" : ".json";
  std::vector<fs::path> written;
  auto put = [&](const std::string& stem, const std::string& ext_, const std::string& body) {
    const fs::path p = dir / (stem + ext_);
    write_file(p, body);
    written.push_back(p);
  };
  put("trace", ext,
      emit({"t_us", "re_S", "im_S", "abs_S", "pop1", "pop2", "pop3"},
           trace_columns(result.run.trace), format));
  put("signal", ext,
      emit({"t_us", "re_S", "im_S", "abs_S"}, signal_columns(result.run.signal), format));
  put("echoes", ext, emit_echoes(result.echoes, format));
  if (cfg.outputs.per_subgroup || cfg.sim.record_per_subgroup) {
    put("subgroups", ext, emit_subgroups(result.run.trace, format));
  }
  put("summary", ".json", emit_summary(result));
  return written;
}

int cmd_run(const fs::path& config_path, const RunOverrides& overrides, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = load_config(config_path);
    if (overrides.out) cfg.outputs.dir = overrides.out->string();
    if (overrides.format) cfg.outputs.format = *overrides.format;
    if (overrides.per_subgroup) {
      cfg.outputs.per_subgroup = true;
      cfg.sim.record_per_subgroup = true;
    }
    return run_and_write(cfg, cfg.outputs.dir, out, err);
  });
}

int cmd_preset(const std::string& name, const fs::path& out_dir, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    Preset p;
    try {
      p = preset(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("preset", e.what());
    }
    RunConfig materialized = preset_config(p);
    materialized.outputs.dir = out_dir.string();
    const std::string text = to_json(materialized).dump(2) + "\n";
    // Run exactly what a later `run --config` on the emitted file would see.
    const RunConfig cfg = parse_config(nlohmann::json::parse(text));
    if (ValidationReport report = validate_sequence(cfg.sequence); !report.ok()) {
      throw SequenceError(std::move(report));
    }
    ensure_dir(out_dir);
    write_file(out_dir / "config.json", text);
    out << "wrote " << (out_dir / "config.json").string() << '\n';
    return run_and_write(cfg, out_dir, out, err);
  });
}

int cmd_sweep(const fs::path& config_path, const std::string& param, double from, double to,
              int steps, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (param != kSweepReadArea) {
      throw ConfigError("param", "unknown parameter path \"" + param + "\" (supported: " +
                                     kSweepReadArea + ")");
    }
    if (steps < 2) throw ConfigError("steps", "must be >= 2");
    if (!std::isfinite(from) || !std::isfinite(to)) {
      throw ConfigError("from/to", "must be finite");
    }
    const RunConfig cfg = load_config(config_path);
    if (ValidationReport report = validate_sequence(cfg.sequence); !report.ok()) {
      throw SequenceError(std::move(report));
    }
    if (cfg.sequence.find("R") == nullptr || cfg.sequence.find("RR") == nullptr) {
      throw ConfigError(param, "sequence needs pulses labeled R and RR");
    }
    std::vector<double> areas;
    for (int i = 0; i < steps; ++i) {
      const double x = from + (to - from) * static_cast<double>(i) / (steps - 1);
      areas.push_back(x * std::numbers::pi);
    }
    const auto rows =
        phase_condition_sweep(cfg.ensemble, cfg.sequence, cfg.decays, cfg.sim, areas);

    std::vector<std::vector<double>> cols(2);
    for (const SweepRow& r : rows) {
      cols[0].push_back(r.phi_r);
      cols[1].push_back(r.e2_amplitude);
      out << "phi_r=" << format_number(r.phi_r) << " rad  E2=" << format_number(r.e2_amplitude)
          << '\n';
    }
    ensure_dir(out_dir);
    const fs::path path =
        out_dir / (cfg.outputs.format == OutputFormat::Csv ? "sweep.csv" : "sweep.json");
    write_file(path, emit({"phi_r_rad", "e2_amplitude"}, cols, cfg.outputs.format));
    out << "wrote " << path.string() << '\n';
    return kExitOk;
  });
}

}  // namespace lambda_echo
