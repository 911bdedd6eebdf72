#include "acsplit/commands.hpp"

#include "acsplit/errors.hpp"
#include "acsplit/report_io.hpp"
#include "acsplit/selftest.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace acsplit {

namespace fs = std::filesystem;

void CommandOverrides::apply(ExperimentConfig& config) const {
  if (seed) config.seed = *seed;
  if (out_dir) config.out_dir = *out_dir;
  if (threads) config.threads = *threads;
  if (bit_repro) config.bit_repro = true;
}

namespace {

ExperimentConfig load(const std::string& path, const CommandOverrides& overrides, ExperimentKind expected) {
  ExperimentConfig c = load_config(path);
  overrides.apply(c);
  if (c.kind != expected) {
    throw ConfigError("config kind does not match the subcommand", "experiment.kind");
  }
  c.validate();
  return c;
}

fs::path output_path(const ExperimentConfig& c, const std::string& suffix) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / (c.name + suffix);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'", "experiment.out_dir");
  return out;
}

// Shared error handling for the experiment subcommands.
template <class Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error";
    if (!e.key().empty()) log << " [" << e.key() << "]";
    log << ": " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ExperimentError& e) {
    log << "experiment failed: " << e.what() << '\n';
    return kExitExperimentFailure;
  } catch (const ResourceError& e) {
    log << "experiment failed: " << e.what() << '\n';
    return kExitExperimentFailure;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

void add_timing(nlohmann::json& doc, const ExperimentConfig& c, std::chrono::steady_clock::time_point start) {
  // Wall time would break byte-identical outputs.
  if (c.bit_repro) return;
  doc["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<ProbePoint> run_probe_series(const ExperimentConfig& c) {
  // Level l runs at dt / 2^l; every level reads the tape of the finest one.
  std::vector<ProbePoint> series;
  const std::size_t finest = std::size_t{1} << c.halvings;
  for (std::size_t level = 0; level <= c.halvings; ++level) {
    SchemeConfig model = c.model;
    model.dt = c.model.dt / static_cast<double>(std::size_t{1} << level);
    const std::size_t shared = finest >> level;
    ProbePoint point;
    point.dt = model.dt;
    if (c.probe_kind == ProbeKind::Moment) {
      ProbeSpec spec = c.probe;
      spec.tape_refinement = c.probe.tape_refinement * shared;
      const Estimate e = moment_probe(model, spec, c.seed, c.threads);
      point.estimate = e.value;
      point.std_error = e.std_error;
      point.samples = e.samples;
      point.divergent = e.divergent;
    } else {
      ExpProbeSpec spec = c.exp_probe;
      spec.tape_refinement = c.exp_probe.tape_refinement * shared;
      const ExpProbeResult r = exp_integrability_probe(model, spec, c.seed, c.threads);
      point.estimate = r.estimate;
      point.std_error = r.std_error;
      point.samples = r.samples;
      point.divergent = r.divergent;
      point.log_estimate = r.log_estimate;
      point.max_exponent = r.max_exponent;
      point.tail_events = r.tail_events;
    }
    series.push_back(point);
  }
  return series;
}

int cmd_rates(const std::string& config_path, const CommandOverrides& overrides, std::ostream& log) {
  return guarded(log, [&] {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig c = load(config_path, overrides, ExperimentKind::Rates);
    const RateReport report = run_rate_experiment(c.rate_experiment());

    nlohmann::json doc = to_json(report);
    doc["name"] = c.name;
    doc["bit_repro"] = c.bit_repro;
    add_timing(doc, c, start);
    write_json_file(output_path(c, ".json").string(), doc);
    auto csv = open_output(output_path(c, ".csv"));
    write_rate_csv(csv, report);
    auto long_csv = open_output(output_path(c, "_long.csv"));
    write_rate_long_csv(long_csv, report);

    for (std::size_t i = 0; i < report.dts.size(); ++i) {
      log << "dt=" << format_real(report.dts[i]) << " error=" << format_real(report.errors[i])
          << " stderr=" << format_real(report.std_errors[i]) << '\n';
    }
    log << "slope=" << format_real(report.fit.slope) << " ci=[" << format_real(report.fit.ci_low) << ", "
        << format_real(report.fit.ci_high) << "] divergent=" << report.meta.divergent << '\n';
    return kExitOk;
  });
}

int cmd_probe(const std::string& config_path, const CommandOverrides& overrides, std::ostream& log) {
  return guarded(log, [&] {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig c = load(config_path, overrides, ExperimentKind::Probe);

    nlohmann::json doc;
    doc["name"] = c.name;
    doc["kind"] = "probe";
    doc["bit_repro"] = c.bit_repro;
    const std::vector<ProbePoint> series = run_probe_series(c);
    nlohmann::json points = nlohmann::json::array();
    std::vector<double> estimates;
    std::size_t total_tail = 0;
    std::size_t total_divergent = 0;
    for (const ProbePoint& point : series) {
      total_divergent += point.divergent;
      if (point.tail_events) total_tail += *point.tail_events;
      estimates.push_back(point.estimate);
      points.push_back(to_json(point));
      log << "dt=" << format_real(point.dt) << " estimate=" << format_real(point.estimate)
          << " stderr=" << format_real(point.std_error);
      if (point.tail_events) log << " tail_events=" << *point.tail_events;
      log << '\n';
    }

    if (c.probe_kind == ProbeKind::Moment) {
      doc["probe"] = "moment";
      doc["functional"] = to_string(c.probe.functional);
      doc["q"] = c.probe.q;
      doc["p"] = c.probe.p;
      doc["aggregation"] = to_string(c.probe.aggregation);
    } else {
      doc["probe"] = "exp-integrability";
      doc["c"] = c.exp_probe.c;
      doc["target"] = c.exp_probe.target == PathTarget::GridValues ? "grid" : "interpolant";
      doc["substeps"] = c.exp_probe.substeps;
      doc["tail_events"] = total_tail;
    }
    doc["points"] = points;
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t i = 1; i < estimates.size(); ++i) {
      const double r = estimates[i] / estimates[i - 1];
      ratios.push_back(std::isfinite(r) ? nlohmann::json(r) : nlohmann::json(nullptr));
    }
    doc["refinement_ratios"] = ratios;
    const std::size_t samples = c.probe_kind == ProbeKind::Moment ? c.probe.samples : c.exp_probe.samples;
    doc["meta"] = to_json(describe_run(c.model, samples, c.seed, total_divergent));
    add_timing(doc, c, start);
    write_json_file(output_path(c, ".json").string(), doc);
    if (total_tail > 0) log << "tail events: " << total_tail << " (exponent overflow; reported, not a failure)\n";
    return kExitOk;
  });
}

int cmd_run(const std::string& config_path, const CommandOverrides& overrides, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig c = load(config_path, overrides, ExperimentKind::Run);
    const LaplacianSpectrum spectrum(c.model.modes);
    const NoiseTape tape =
        make_tape(c.model.noise, spectrum, c.model.steps(), c.model.dt, RngStream{c.seed, 0, StreamPurpose::Tape});
    const TrajectoryRecord rec = run_trajectory(c.model, tape, RecordSpec{c.record_every, false, true});

    auto csv = open_output(output_path(c, "_trajectory.csv"));
    write_trajectory_csv(csv, rec);

    nlohmann::json doc;
    doc["name"] = c.name;
    doc["kind"] = "run";
    doc["steps"] = c.model.steps();
    doc["dt"] = c.model.dt;
    doc["divergence_step"] = rec.divergence_step ? nlohmann::json(*rec.divergence_step) : nlohmann::json(nullptr);
    doc["final_time"] = rec.times.back();
    doc["meta"] = to_json(describe_run(c.model, 1, c.seed, rec.diverged() ? 1 : 0));
    write_json_file(output_path(c, "_run.json").string(), doc);

    if (rec.diverged()) {
      log << "diverged at step " << *rec.divergence_step
          << " (t = " << static_cast<double>(*rec.divergence_step) * c.model.dt << ")\n";
    } else {
      log << "completed " << c.model.steps() << " steps\n";
    }
    return kExitOk;
  });
}

int cmd_selftest(std::ostream& log, const std::string& corrupt) {
  std::size_t failed = 0;
  for (const auto& r : run_selftest(corrupt)) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  log << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << '\n';
  return failed == 0 ? kExitOk : kExitExperimentFailure;
}

}  // namespace acsplit
