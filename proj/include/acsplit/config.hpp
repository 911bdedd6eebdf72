#pragma once

/**
 * Experiment configuration files.
 *
 * INI-style text: `[section]` headers followed by `key = value` lines;
 * `#` and `;` start comments. Sections:
 *
 *   [experiment]  name, kind (run | rates | probe), seed, threads, bit_repro, out_dir
 *   [model]       scheme, modes, horizon, dt, dt0, noise (white | diagonal), gamma, scale,
 *                 initial (zero | sine | bump | constant), initial_amplitude,
 *                 initial_width, initial_mode
 *   [rates]       dts (comma list), dt_ref, space_norm (l2 | lq | sup), q, time,
 *                 moment, samples, min_refinement, max_divergent_fraction
 *   [probe]       probe (moment | exp-integrability), functional, q, p, aggregation,
 *                 samples, tape_refinement, halvings, c, target (grid | interpolant),
 *                 substeps, require_regular_noise, max_divergent_fraction
 *   [run]         record_every
 *
 * Real values accept the form `2^-k` besides ordinary decimal notation.
 * Unknown sections or keys are rejected.
 */

#include "acsplit/error_lab.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace acsplit {

enum class ExperimentKind { Run, Rates, Probe };
enum class ProbeKind { Moment, ExpIntegrability };

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::Run;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  bool bit_repro = false;
  std::string out_dir = ".";

  SchemeConfig model;

  std::vector<double> dts;
  double dt_ref = 0.0;
  ErrorSpec error;

  ProbeKind probe_kind = ProbeKind::Moment;
  ProbeSpec probe;
  ExpProbeSpec exp_probe;
  /// Probe at dt, dt/2, ..., dt/2^halvings on shared tapes.
  std::size_t halvings = 0;

  std::size_t record_every = 1;

  /// Revalidates every module-level invariant the chosen kind depends on.
  void validate() const;
  RateExperiment rate_experiment() const;
};

/// Throws ConfigError naming the offending key.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);
/// Canonical form; parse_config(write_config(c)) reproduces c exactly.
void write_config(std::ostream& os, const ExperimentConfig& config);

/// Accepts decimal notation or `2^-k` / `2^k`.
double parse_real(const std::string& text, const std::string& key);
/// Shortest decimal text that round-trips.
std::string format_real(double v);

}  // namespace acsplit
