#include "acsplit/error_lab.hpp"

#include "acsplit/errors.hpp"
#include "acsplit/flow.hpp"
#include "acsplit/parallel.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace acsplit {

std::string to_string(TimeAggregation t) {
  switch (t) {
    case TimeAggregation::Endpoint: return "endpoint";
    case TimeAggregation::PathSup: return "path-sup";
    case TimeAggregation::MomentSup: return "moment-sup";
  }
  return "unknown";
}

TimeAggregation parse_time_aggregation(const std::string& name) {
  if (name == "endpoint") return TimeAggregation::Endpoint;
  if (name == "path-sup") return TimeAggregation::PathSup;
  if (name == "moment-sup") return TimeAggregation::MomentSup;
  throw ConfigError("unknown time aggregation '" + name + "'", "time");
}

std::string to_string(Functional f) {
  switch (f) {
    case Functional::SupLqPow: return "sup-lq-pow";
    case Functional::SupH1Sq: return "sup-h1-sq";
    case Functional::IntH2Sq: return "int-h2-sq";
    case Functional::SupH2Pow: return "sup-h2-pow";
  }
  return "unknown";
}

Functional parse_functional(const std::string& name) {
  if (name == "sup-lq-pow") return Functional::SupLqPow;
  if (name == "sup-h1-sq") return Functional::SupH1Sq;
  if (name == "int-h2-sq") return Functional::IntH2Sq;
  if (name == "sup-h2-pow") return Functional::SupH2Pow;
  throw ConfigError("unknown functional '" + name + "'", "functional");
}

void ErrorSpec::validate() const {
  double q = 2.0;
  if (space_norm.kind == NormKind::Lq) {
    q = space_norm.param;
    if (q < 2.0 || std::round(q) != q || static_cast<long>(q) % 2 != 0) {
      throw ConfigError("error norm Lq needs q = 2m, m >= 1", "q");
    }
  } else if (space_norm.kind == NormKind::Sobolev) {
    throw ConfigError("strong errors are measured in L2, Lq or sup", "space_norm");
  }
  if (!(moment >= q)) throw ConfigError("moment p must satisfy p >= q >= 2", "moment");
  if (samples == 0) throw ConfigError("samples must be >= 1", "samples");
  if (min_refinement == 0) throw ConfigError("min_refinement must be >= 1", "min_refinement");
  if (!(max_divergent_fraction >= 0.0 && max_divergent_fraction < 1.0)) {
    throw ConfigError("max_divergent_fraction must lie in [0, 1)", "max_divergent_fraction");
  }
}

void ProbeSpec::validate() const {
  if (functional == Functional::SupLqPow && (q < 2 || q % 2 != 0)) {
    throw ConfigError("probe Lq needs q = 2m, m >= 1", "q");
  }
  if (!(p >= 1.0)) throw ConfigError("probe exponent p must be >= 1", "p");
  if (samples == 0) throw ConfigError("samples must be >= 1", "samples");
  if (tape_refinement == 0) throw ConfigError("tape_refinement must be >= 1", "tape_refinement");
}

void ExpProbeSpec::validate(const QSpec& noise) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("exp probe constant c must be positive", "c");
  if (substeps == 0) throw ConfigError("substeps must be >= 1", "substeps");
  if (samples == 0) throw ConfigError("samples must be >= 1", "samples");
  if (tape_refinement == 0) throw ConfigError("tape_refinement must be >= 1", "tape_refinement");
  if (require_regular_noise && !noise.is_zero() &&
      (noise.kind == QSpec::Kind::White || noise.gamma < 2.0)) {
    throw ConfigError("exponential integrability probe needs H1-regular noise (diagonal, gamma >= 2)", "gamma");
  }
}

namespace {

void check_divergence(std::size_t divergent, std::size_t total, double max_fraction) {
  if (static_cast<double>(divergent) > max_fraction * static_cast<double>(total)) {
    throw ExperimentError(std::to_string(divergent) + " of " + std::to_string(total) +
                          " samples diverged (limit " + std::to_string(max_fraction * 100.0) + "%)");
  }
}

NoiseTape sample_tape(const SchemeConfig& config, const LaplacianSpectrum& spectrum, double dt_tape,
                      std::size_t tape_steps, std::uint64_t seed, std::size_t sample) {
  return make_tape(config.noise, spectrum, tape_steps, dt_tape, RngStream{seed, sample, StreamPurpose::Tape});
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(std::span<const double> v) {
  MeanSe r;
  if (v.empty()) return r;
  const double n = static_cast<double>(v.size());
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

Estimate root_of_mean(const MeanSe& m, double p) {
  Estimate e;
  e.value = std::pow(m.mean, 1.0 / p);
  e.std_error = m.mean > 0.0 ? std::pow(m.mean, 1.0 / p - 1.0) * m.se / p : 0.0;
  return e;
}

// Combines per-sample per-time values v[i][n] into an L^p(Omega) estimate.
Estimate aggregate_lp(const std::vector<std::vector<double>>& v, TimeAggregation time, double p) {
  std::vector<double> per_sample;
  per_sample.reserve(v.size());
  switch (time) {
    case TimeAggregation::Endpoint:
      for (const auto& s : v) per_sample.push_back(s.back());
      return lp_moment(per_sample, p);
    case TimeAggregation::PathSup:
      for (const auto& s : v) per_sample.push_back(*std::max_element(s.begin(), s.end()));
      return lp_moment(per_sample, p);
    case TimeAggregation::MomentSup: {
      Estimate best;
      if (v.empty()) return best;
      bool first = true;
      std::vector<double> powered(v.size());
      for (std::size_t n = 0; n < v.front().size(); ++n) {
        for (std::size_t i = 0; i < v.size(); ++i) powered[i] = std::pow(v[i][n], p);
        const Estimate e = root_of_mean(mean_and_se(powered), p);
        if (first || e.value > best.value) best = e;
        first = false;
      }
      best.samples = v.size();
      return best;
    }
  }
  return {};
}

// Same for functionals that are already p-th powers: estimate E[...] directly.
Estimate aggregate_mean(const std::vector<std::vector<double>>& v, TimeAggregation time) {
  std::vector<double> per_sample;
  per_sample.reserve(v.size());
  Estimate out;
  out.samples = v.size();
  if (v.empty()) return out;
  if (time == TimeAggregation::MomentSup) {
    std::vector<double> column(v.size());
    bool first = true;
    for (std::size_t n = 0; n < v.front().size(); ++n) {
      for (std::size_t i = 0; i < v.size(); ++i) column[i] = v[i][n];
      const MeanSe m = mean_and_se(column);
      if (first || m.mean > out.value) {
        out.value = m.mean;
        out.std_error = m.se;
      }
      first = false;
    }
    return out;
  }
  for (const auto& s : v) {
    per_sample.push_back(time == TimeAggregation::Endpoint ? s.back() : *std::max_element(s.begin(), s.end()));
  }
  const MeanSe m = mean_and_se(per_sample);
  out.value = m.mean;
  out.std_error = m.se;
  return out;
}

}  // namespace

Estimate lp_moment(std::span<const double> values, double p) {
  std::vector<double> powered(values.size());
  std::transform(values.begin(), values.end(), powered.begin(), [p](double v) { return std::pow(v, p); });
  Estimate e = root_of_mean(mean_and_se(powered), p);
  e.samples = values.size();
  return e;
}

RateFit fit_rate(std::span<const double> dts, std::span<const double> errors, std::span<const double> weights) {
  const std::size_t n = dts.size();
  if (n < 3) throw ConfigError("fit_rate: need at least 3 points");
  if (errors.size() != n || (!weights.empty() && weights.size() != n)) {
    throw ConfigError("fit_rate: input lengths differ");
  }
  std::vector<double> x(n), y(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(dts[i] > 0.0) || !(errors[i] > 0.0)) throw ConfigError("fit_rate: step sizes and errors must be positive");
    x[i] = std::log(dts[i]);
    y[i] = std::log(errors[i]);
    if (!weights.empty()) {
      if (!(weights[i] > 0.0)) throw ConfigError("fit_rate: weights must be positive");
      w[i] = weights[i];
    }
  }
  const double sw = std::accumulate(w.begin(), w.end(), 0.0);
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += w[i] * x[i];
    ym += w[i] * y[i];
  }
  xm /= sw;
  ym /= sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 1e-12 * sw)) throw ConfigError("fit_rate: step sizes have no spread");

  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += w[i] * r * r;
  }
  const double dof = static_cast<double>(n - 2);
  const double se = std::sqrt(rss / dof / sxx);
  const double t = boost::math::quantile(boost::math::students_t(dof), 0.975);
  fit.ci_low = fit.slope - t * se;
  fit.ci_high = fit.slope + t * se;
  return fit;
}

void RateExperiment::validate() const {
  error.validate();
  if (dts.empty()) throw ConfigError("dts must not be empty", "dts");
  if (!(dt_ref > 0.0)) throw ConfigError("dt_ref must be positive", "dt_ref");
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (i > 0 && !(dts[i] < dts[i - 1])) throw ConfigError("dts must be strictly decreasing", "dts");
    std::size_t factor = 0;
    try {
      factor = coarsening_factor(dts[i], dt_ref);
    } catch (const ConfigError&) {
      throw ConfigError("dt_ref " + std::to_string(dt_ref) + " does not divide dt " + std::to_string(dts[i]),
                        "dt_ref");
    }
    if (factor < error.min_refinement) {
      throw ConfigError("dt_ref must be at most dt / " + std::to_string(error.min_refinement) + " for every dt",
                        "dt_ref");
    }
    SchemeConfig c = model;
    c.dt = dts[i];
    c.validate();
  }
  SchemeConfig ref = model;
  ref.dt = dt_ref;
  ref.validate();
}

RunMetadata describe_run(const SchemeConfig& config, std::size_t samples, std::uint64_t seed,
                         std::size_t divergent) {
  RunMetadata m;
  m.scheme = to_string(config.scheme);
  m.noise = config.noise.describe();
  m.initial = config.x0.describe();
  m.modes = config.modes;
  m.horizon = config.horizon;
  m.samples = samples;
  m.seed = seed;
  m.divergent = divergent;
  return m;
}

RateReport run_rate_experiment(const RateExperiment& experiment) {
  experiment.validate();
  const auto& dts = experiment.dts;
  const LaplacianSpectrum spectrum(experiment.model.modes);

  SchemeConfig ref_config = experiment.model;
  ref_config.dt = experiment.dt_ref;
  const std::size_t ref_steps = ref_config.steps();

  std::vector<std::size_t> factors;
  std::size_t stride = 0;
  for (double dt : dts) {
    factors.push_back(coarsening_factor(dt, experiment.dt_ref));
    stride = std::gcd(stride, factors.back());
  }

  const std::size_t m = experiment.error.samples;
  // errors[i][d][n]: sample i, step size d, coarse time n.
  std::vector<std::vector<std::vector<double>>> errors(m);
  std::vector<char> diverged(m, 0);

  parallel_for(m, experiment.threads, [&](std::size_t i) {
    const NoiseTape tape = sample_tape(ref_config, spectrum, experiment.dt_ref, ref_steps, experiment.seed, i);
    const TrajectoryRecord ref = run_trajectory(ref_config, tape, RecordSpec{stride, true, false});
    if (ref.diverged()) {
      diverged[i] = 1;
      return;
    }
    auto& out = errors[i];
    out.resize(dts.size());
    for (std::size_t d = 0; d < dts.size(); ++d) {
      SchemeConfig coarse = experiment.model;
      coarse.dt = dts[d];
      const TrajectoryRecord path = run_trajectory(coarse, tape, RecordSpec{1, true, false});
      if (path.diverged()) {
        diverged[i] = 1;
        return;
      }
      const std::size_t ratio = factors[d] / stride;
      out[d].resize(path.states.size());
      for (std::size_t n = 0; n < path.states.size(); ++n) {
        SpectralField diff = path.states[n];
        const auto& r = ref.states[n * ratio].coeffs;
        for (std::size_t k = 0; k < diff.size(); ++k) diff.coeffs[k] -= r[k];
        out[d][n] = norm(spectrum, diff, experiment.error.space_norm);
      }
    }
  });

  const std::size_t n_div = static_cast<std::size_t>(std::count(diverged.begin(), diverged.end(), 1));
  check_divergence(n_div, m, experiment.error.max_divergent_fraction);

  RateReport report;
  report.dts = dts;
  report.dt_ref = experiment.dt_ref;
  report.error = experiment.error;
  report.meta = describe_run(experiment.model, m - n_div, experiment.seed, n_div);
  for (std::size_t d = 0; d < dts.size(); ++d) {
    std::vector<std::vector<double>> per_sample;
    per_sample.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      if (!diverged[i]) per_sample.push_back(errors[i][d]);
    }
    const Estimate e = aggregate_lp(per_sample, experiment.error.time, experiment.error.moment);
    report.errors.push_back(e.value);
    report.std_errors.push_back(e.std_error);
  }
  const bool fittable = dts.size() >= 3 && std::all_of(report.errors.begin(), report.errors.end(),
                                                        [](double e) { return e > 0.0; });
  if (fittable) {
    report.fit = fit_rate(report.dts, report.errors);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.fit = RateFit{nan, nan, nan, nan};
  }
  return report;
}

Estimate strong_error(const SchemeConfig& coarse, double dt_ref, const ErrorSpec& spec, std::uint64_t seed,
                      std::size_t threads) {
  RateExperiment e;
  e.model = coarse;
  e.dts = {coarse.dt};
  e.dt_ref = dt_ref;
  e.error = spec;
  e.seed = seed;
  e.threads = threads;
  const RateReport r = run_rate_experiment(e);
  Estimate out;
  out.value = r.errors.front();
  out.std_error = r.std_errors.front();
  out.samples = r.meta.samples;
  out.divergent = r.meta.divergent;
  return out;
}

namespace {

// Runs config on one tape per sample and maps each trajectory to a per-time series.
template <class PerPath>
std::vector<std::optional<std::vector<double>>> collect_paths(const SchemeConfig& config, std::size_t samples,
                                                              std::size_t tape_refinement, std::uint64_t seed,
                                                              std::size_t threads, PerPath&& per_path) {
  config.validate();
  const LaplacianSpectrum spectrum(config.modes);
  const double dt_tape = config.dt / static_cast<double>(tape_refinement);
  const std::size_t tape_steps = config.steps() * tape_refinement;
  std::vector<std::optional<std::vector<double>>> out(samples);
  parallel_for(samples, threads, [&](std::size_t i) {
    const NoiseTape tape = sample_tape(config, spectrum, dt_tape, tape_steps, seed, i);
    const TrajectoryRecord rec = run_trajectory(config, tape, RecordSpec{1, true, false});
    if (rec.diverged()) return;
    out[i] = per_path(spectrum, rec);
  });
  return out;
}

}  // namespace

Estimate moment_probe(const SchemeConfig& config, const ProbeSpec& spec, std::uint64_t seed, std::size_t threads) {
  spec.validate();
  const double dt = config.dt;
  auto paths = collect_paths(config, spec.samples, spec.tape_refinement, seed, threads,
                             [&](const LaplacianSpectrum& spectrum, const TrajectoryRecord& rec) {
    std::vector<double> v(rec.states.size());
    for (std::size_t n = 0; n < v.size(); ++n) {
      const SpectralField& x = rec.states[n];
      switch (spec.functional) {
        case Functional::SupLqPow:
          v[n] = std::pow(norm(spectrum, x, Norm::lq(spec.q)), spec.p);
          break;
        case Functional::SupH1Sq: {
          const double h = norm(spectrum, x, Norm::sobolev(1.0));
          v[n] = h * h;
          break;
        }
        case Functional::IntH2Sq: {
          const double h = norm(spectrum, x, Norm::sobolev(2.0));
          v[n] = h * h;
          break;
        }
        case Functional::SupH2Pow:
          v[n] = std::pow(norm(spectrum, x, Norm::sobolev(2.0)), spec.p);
          break;
      }
    }
    if (spec.functional == Functional::IntH2Sq) {
      double integral = 0.0;
      for (std::size_t n = 0; n + 1 < v.size(); ++n) integral += 0.5 * dt * (v[n] + v[n + 1]);
      return std::vector<double>{integral};
    }
    return v;
  });

  std::vector<std::vector<double>> kept;
  for (auto& p : paths) {
    if (p) kept.push_back(std::move(*p));
  }
  const std::size_t n_div = spec.samples - kept.size();
  check_divergence(n_div, spec.samples, spec.max_divergent_fraction);
  const TimeAggregation agg =
      spec.functional == Functional::IntH2Sq ? TimeAggregation::Endpoint : spec.aggregation;
  Estimate e = aggregate_mean(kept, agg);
  e.divergent = n_div;
  return e;
}

double exp_exponent(const LaplacianSpectrum& spectrum, const TrajectoryRecord& record, double dt,
                    const ExpProbeSpec& spec) {
  double integral = 0.0;
  // Left-endpoint rule over [t_n, t_{n+1}), n < N.
  for (std::size_t n = 0; n + 1 < record.states.size(); ++n) {
    const GridField g = spectrum.to_grid(record.states[n]);
    if (spec.target == PathTarget::GridValues) {
      const double s = norm(g, Norm::sup());
      integral += dt * s * s;
    } else {
      const double h = dt / static_cast<double>(spec.substeps);
      for (std::size_t i = 0; i < spec.substeps; ++i) {
        const double s = norm(apply_phi(g, h * static_cast<double>(i)), Norm::sup());
        integral += h * s * s;
      }
    }
  }
  return spec.c * integral;
}

ExpProbeResult exp_integrability_probe(const SchemeConfig& config, const ExpProbeSpec& spec, std::uint64_t seed,
                                       std::size_t threads) {
  spec.validate(config.noise);
  auto paths = collect_paths(config, spec.samples, spec.tape_refinement, seed, threads,
                             [&](const LaplacianSpectrum& spectrum, const TrajectoryRecord& rec) {
    return std::vector<double>{exp_exponent(spectrum, rec, config.dt, spec)};
  });

  std::vector<double> exponents;
  for (const auto& p : paths) {
    if (p) exponents.push_back(p->front());
  }
  ExpProbeResult r;
  r.samples = exponents.size();
  r.divergent = spec.samples - r.samples;
  check_divergence(r.divergent, spec.samples, spec.max_divergent_fraction);
  if (exponents.empty()) return r;

  const double overflow = std::log(std::numeric_limits<double>::max());
  r.max_exponent = *std::max_element(exponents.begin(), exponents.end());
  r.tail_events = static_cast<std::size_t>(
      std::count_if(exponents.begin(), exponents.end(), [overflow](double e) { return e > overflow; }));
  double lse = 0.0;
  for (double e : exponents) lse += std::exp(e - r.max_exponent);
  r.log_estimate = r.max_exponent + std::log(lse) - std::log(static_cast<double>(exponents.size()));
  if (r.tail_events > 0) {
    r.estimate = std::numeric_limits<double>::infinity();
    r.std_error = std::numeric_limits<double>::infinity();
    return r;
  }
  std::vector<double> values(exponents.size());
  std::transform(exponents.begin(), exponents.end(), values.begin(), [](double e) { return std::exp(e); });
  const MeanSe m = mean_and_se(values);
  r.estimate = m.mean;
  r.std_error = m.se;
  return r;
}

}  // namespace acsplit
