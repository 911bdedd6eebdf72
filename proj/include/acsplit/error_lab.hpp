#pragma once

/**
 * Monte Carlo strong-error estimation and statistical probes.
 *
 * Strong errors are measured against the same scheme run at a much finer
 * reference step on the same noise tape (coupled refinement). The L^p(Omega)
 * norm is estimated by the plug-in (mean err^p)^{1/p}; its standard error
 * comes from the delta method applied to the sample mean of err^p.
 *
 * Samples whose path blows up are excluded and counted. More than
 * `max_divergent_fraction` of them aborts the experiment with ExperimentError.
 */

#include "acsplit/integrators.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace acsplit {

/// How per-time errors of one path are combined.
enum class TimeAggregation {
  Endpoint,   ///< value at t_N
  PathSup,    ///< E[ sup_n value_n ]
  MomentSup,  ///< sup_n E[ value_n ]
};

std::string to_string(TimeAggregation t);
TimeAggregation parse_time_aggregation(const std::string& name);

struct ErrorSpec {
  Norm space_norm = Norm::l2();
  TimeAggregation time = TimeAggregation::PathSup;
  double moment = 2.0;  ///< p
  std::size_t samples = 100;
  /// dt_coarse / dt_ref must be at least this.
  std::size_t min_refinement = 8;
  double max_divergent_fraction = 0.01;

  /// Requires p >= q >= 2 (q = 2 for L2 and sup), q even, samples >= 1.
  void validate() const;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;    ///< samples that entered the estimate
  std::size_t divergent = 0;  ///< samples excluded for blow-up
};

/// Everything that identifies a Monte Carlo run besides the per-point numbers.
struct RunMetadata {
  std::string scheme;
  std::string noise;
  std::string initial;
  std::size_t modes = 0;
  double horizon = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t divergent = 0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;  ///< 95% interval for the slope (Student t, n - 2 dof)
  double ci_high = 0.0;
};

/// Weighted least squares of log(error) on log(dt). Empty weights = uniform.
/// Throws ConfigError for fewer than 3 points, nonpositive values or zero spread.
RateFit fit_rate(std::span<const double> dts, std::span<const double> errors,
                 std::span<const double> weights = {});

struct RateReport {
  std::vector<double> dts;  ///< strictly decreasing
  std::vector<double> errors;
  std::vector<double> std_errors;
  RateFit fit;
  double dt_ref = 0.0;
  ErrorSpec error;
  RunMetadata meta;
};

struct RateExperiment {
  SchemeConfig model;  ///< dt is ignored; dts below are used instead
  std::vector<double> dts;
  double dt_ref = 0.0;
  ErrorSpec error;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void validate() const;
};

/// All step sizes share one tape and one reference path per sample.
RateReport run_rate_experiment(const RateExperiment& experiment);

/// Strong error of `coarse` against the same scheme at dt_ref.
Estimate strong_error(const SchemeConfig& coarse, double dt_ref, const ErrorSpec& spec, std::uint64_t seed,
                      std::size_t threads = 0);

enum class Functional {
  SupLqPow,  ///< ||X_n||_{Lq}^p
  SupH1Sq,   ///< ||X_n||_{H1}^2
  IntH2Sq,   ///< int_0^T ||X||_{H2}^2 dt, trapezoid over t_n
  SupH2Pow,  ///< ||X_n||_{H2}^p
};

std::string to_string(Functional f);
Functional parse_functional(const std::string& name);

struct ProbeSpec {
  Functional functional = Functional::SupLqPow;
  int q = 4;
  double p = 4.0;
  /// PathSup or MomentSup; ignored for IntH2Sq.
  TimeAggregation aggregation = TimeAggregation::MomentSup;
  std::size_t samples = 200;
  /// Tape step = dt / tape_refinement, so probes at dt and dt/2 can share paths.
  std::size_t tape_refinement = 1;
  double max_divergent_fraction = 0.01;

  void validate() const;
};

Estimate moment_probe(const SchemeConfig& config, const ProbeSpec& spec, std::uint64_t seed,
                      std::size_t threads = 0);

enum class PathTarget {
  GridValues,   ///< X^N at t_n, left-endpoint rule
  Interpolant,  ///< Z^N(t_n + tau) = Phi_tau(X_n), sub-sampled in tau
};

struct ExpProbeSpec {
  double c = 1.0;
  PathTarget target = PathTarget::GridValues;
  std::size_t substeps = 4;  ///< tau samples per step for the interpolant
  std::size_t samples = 500;
  std::size_t tape_refinement = 1;
  double max_divergent_fraction = 0.01;
  /// The bound holds for H^1-regular noise; reject rougher Q unless disabled.
  bool require_regular_noise = true;

  void validate(const QSpec& noise) const;
};

struct ExpProbeResult {
  double estimate = 0.0;  ///< E[exp(c int ||.||_sup^2 dt)]; +inf if any term overflows
  double std_error = 0.0;
  double log_estimate = 0.0;  ///< log of the estimate, finite even with tail events
  double max_exponent = 0.0;
  std::size_t tail_events = 0;  ///< samples whose exponent overflows exp()
  std::size_t samples = 0;
  std::size_t divergent = 0;
};

/// Integral c int_0^T ||path||_sup^2 dt for one recorded trajectory.
double exp_exponent(const LaplacianSpectrum& spectrum, const TrajectoryRecord& record, double dt,
                    const ExpProbeSpec& spec);

ExpProbeResult exp_integrability_probe(const SchemeConfig& config, const ExpProbeSpec& spec, std::uint64_t seed,
                                       std::size_t threads = 0);

RunMetadata describe_run(const SchemeConfig& config, std::size_t samples, std::uint64_t seed,
                         std::size_t divergent);

/// Plug-in estimate (mean v^p)^{1/p} with delta-method standard error.
Estimate lp_moment(std::span<const double> values, double p);

}  // namespace acsplit
