#include "acsplit/error_lab.hpp"
#include "acsplit/errors.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace acsplit;

namespace {
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

std::vector<double> halvings(int from, int to) {
  std::vector<double> v;
  for (int k = from; k <= to; ++k) v.push_back(std::ldexp(1.0, -k));
  return v;
}

SchemeConfig quiet(std::size_t modes, double dt, double horizon, InitialProfile x0) {
  SchemeConfig c;
  c.modes = modes;
  c.dt = dt;
  c.horizon = horizon;
  c.noise = QSpec::diagonal(1.0, 0.0);
  c.x0 = x0;
  return c;
}

ErrorSpec few(std::size_t samples, TimeAggregation time = TimeAggregation::Endpoint) {
  ErrorSpec e;
  e.samples = samples;
  e.time = time;
  return e;
}
}  // namespace

TEST_CASE("rate fit on exact power laws") {
  const auto dts = halvings(2, 7);
  for (double rate : {1.0, 0.25, 0.5, 2.0}) {
    std::vector<double> errors;
    for (double dt : dts) errors.push_back(3.0 * std::pow(dt, rate));
    const RateFit f = fit_rate(dts, errors);
    CHECK(f.slope == doctest::Approx(rate).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(f.ci_high - f.ci_low < 1e-8);
  }
}

TEST_CASE("rate fit with alternating noise") {
  const auto dts = halvings(3, 10);
  std::vector<double> errors;
  for (std::size_t i = 0; i < dts.size(); ++i) errors.push_back(std::sqrt(dts[i]) * (i % 2 ? 0.95 : 1.05));
  const RateFit f = fit_rate(dts, errors);
  CHECK(std::abs(f.slope - 0.5) < 0.02);
  CHECK(f.ci_low < 0.5);
  CHECK(f.ci_high > 0.5);
}

TEST_CASE("rate fit interval matches an independent regression") {
  // Ordinary least squares with a t(3) interval, computed with a statistics package.
  const auto dts = halvings(1, 5);
  const std::vector<double> errors{1.0, 0.6, 0.3, 0.16, 0.07};
  const RateFit f = fit_rate(dts, errors);
  CHECK(f.slope == doctest::Approx(0.9579893131042757).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(0.750754788399759).epsilon(1e-12));
  CHECK(f.ci_low == doctest::Approx(0.8209924589132482).epsilon(1e-10));
  CHECK(f.ci_high == doctest::Approx(1.0949861672953032).epsilon(1e-10));

  const std::vector<double> w(5, 4.0);
  CHECK(fit_rate(dts, errors, w).slope == doctest::Approx(f.slope).epsilon(1e-14));
}

TEST_CASE("rate fit rejects degenerate input") {
  const std::vector<double> two{0.1, 0.05};
  CHECK_THROWS_AS(fit_rate(two, two), ConfigError);
  const std::vector<double> same{0.1, 0.1, 0.1};
  CHECK_THROWS_AS(fit_rate(same, std::vector<double>{1.0, 2.0, 3.0}), ConfigError);
  CHECK_THROWS_AS(fit_rate(halvings(1, 3), std::vector<double>{1.0, 0.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(fit_rate(halvings(1, 3), std::vector<double>{1.0, 0.5}), ConfigError);
}

TEST_CASE("plug-in moment estimate") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const Estimate e = lp_moment(v, 2.0);
  CHECK(e.value == doctest::Approx(2.7386127875258306).epsilon(1e-14));
  // Delta method: (1/p) m^{1/p - 1} sd(v^p) / sqrt(n) with m = 7.5 and sd^2 = 43.
  CHECK(e.std_error == doctest::Approx(0.5 / std::sqrt(7.5) * std::sqrt(43.0 / 4.0)).epsilon(1e-12));
  CHECK(e.samples == 4);
  const std::vector<double> flat(10, 0.3);
  CHECK(lp_moment(flat, 4.0).value == doctest::Approx(0.3));
  CHECK(lp_moment(flat, 4.0).std_error < 1e-15);
}

TEST_CASE("error spec validation") {
  ErrorSpec e;
  CHECK_NOTHROW(e.validate());
  e.space_norm = Norm::lq(4);
  e.moment = 2.0;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e.moment = 4.0;
  CHECK_NOTHROW(e.validate());
  e.space_norm = Norm::lq(3);
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e = ErrorSpec{};
  e.samples = 0;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e = ErrorSpec{};
  e.max_divergent_fraction = 1.0;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  CHECK(parse_time_aggregation(to_string(TimeAggregation::MomentSup)) == TimeAggregation::MomentSup);
  CHECK_THROWS_AS(parse_time_aggregation("sometimes"), ConfigError);
}

TEST_CASE("rate experiment validation") {
  RateExperiment x;
  x.model = quiet(4, 0.1, 0.5, InitialProfile::zero());
  x.dts = {0.1, 0.05, 0.025};
  x.dt_ref = 0.025 / 8;
  CHECK_NOTHROW(x.validate());

  x.dts = {0.05, 0.1, 0.025};
  CHECK_THROWS_AS(x.validate(), ConfigError);

  x.dts = {0.1, 0.05, 0.025};
  x.dt_ref = 0.003;
  try {
    x.validate();
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "dt_ref");
  }

  x.dt_ref = 0.025 / 4;
  CHECK_THROWS_AS(x.validate(), ConfigError);
  x.error.min_refinement = 4;
  CHECK_NOTHROW(x.validate());
}

TEST_CASE("reference step equal to the coarse step gives zero error") {
  SchemeConfig c = quiet(16, 0.01, 0.2, InitialProfile::bump(1.0, 0.25));
  c.noise = QSpec::white();
  ErrorSpec e = few(5, TimeAggregation::PathSup);
  e.min_refinement = 1;
  const Estimate est = strong_error(c, 0.01, e, 3);
  CHECK(est.value == 0.0);
  CHECK(est.samples == 5);
}

TEST_CASE("deterministic one-mode error tracks the ODE and halves with dt") {
  const auto x0 = InitialProfile::sine(1, 0.5);
  const LaplacianSpectrum sp(1);
  const double ref = oracle::galerkin_endpoint(x0.build(sp).coeffs, 1.0)[0];
  std::vector<double> errors;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const SchemeConfig c = quiet(1, dt, 1.0, x0);
    const Estimate est = strong_error(c, 1e-2 / 1024, few(1), 1);
    const LaplacianSpectrum s1(1);
    const NoiseTape tape = make_tape(c.noise, s1, c.steps(), dt, RngStream{1});
    const double direct = std::abs(run_trajectory(c, tape).states.back().coeffs[0] - ref);
    CHECK(est.value == doctest::Approx(direct).epsilon(0.02));
    errors.push_back(est.value);
  }
  CHECK(errors[0] / errors[1] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(errors[1] / errors[2] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("deterministic rate experiment has slope one") {
  RateExperiment x;
  x.model = quiet(4, 0.1, 0.5, InitialProfile::bump(1.5, 0.25));
  // Coarser steps are pre-asymptotic for this profile.
  x.dts = halvings(6, 9);
  x.dt_ref = std::ldexp(1.0, -14);
  x.error = few(1, TimeAggregation::PathSup);
  const RateReport r = run_rate_experiment(x);
  CHECK(r.dts == x.dts);
  CHECK(std::abs(r.fit.slope - 1.0) < 0.15);
  CHECK(r.meta.divergent == 0);
}

TEST_CASE("noisy rate experiment is deterministic across thread counts") {
  RateExperiment x;
  x.model = quiet(32, 0.1, 0.25, InitialProfile::bump(1.0, 0.25));
  x.model.noise = QSpec::diagonal(1.0);
  x.dts = halvings(3, 5);
  x.dt_ref = std::ldexp(1.0, -9);
  x.error = few(6, TimeAggregation::MomentSup);
  x.seed = 11;
  x.threads = 1;
  const RateReport a = run_rate_experiment(x);
  x.threads = 3;
  const RateReport b = run_rate_experiment(x);
  CHECK(a.errors == b.errors);
  CHECK(a.std_errors == b.std_errors);
  for (std::size_t i = 1; i < a.errors.size(); ++i) CHECK(a.errors[i] < a.errors[i - 1]);
  x.seed = 12;
  CHECK(run_rate_experiment(x).errors != a.errors);
}

TEST_CASE("coupled errors shrink under refinement in every noise regime") {
  for (QSpec q : {QSpec::white(), QSpec::diagonal(1.1), QSpec::diagonal(2.0)}) {
    CAPTURE(q.describe());
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RateExperiment x;
      x.model = quiet(64, 0.1, 0.25, InitialProfile::bump(1.0, 0.25));
      x.model.noise = q;
      x.dts = halvings(4, 6);
      x.dt_ref = std::ldexp(1.0, -10);
      x.error = few(4, TimeAggregation::PathSup);
      x.seed = seed;
      const RateReport r = run_rate_experiment(x);
      for (std::size_t i = 1; i < r.errors.size(); ++i) ratios.push_back(r.errors[i] / r.errors[i - 1]);
    }
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    CHECK(ratios[ratios.size() / 2] < 1.0);
  }
}

TEST_CASE("too many divergent samples abort") {
  SchemeConfig c = quiet(1, 0.1, 1.0, InitialProfile::constant(50.0));
  c.scheme = Scheme::PlainExpEuler;
  CHECK_THROWS_AS(strong_error(c, 0.1 / 8, few(4), 1), ExperimentError);
}

TEST_CASE("moment probes") {
  SUBCASE("zero noise from zero gives zero for every functional") {
    for (Functional f : {Functional::SupLqPow, Functional::SupH1Sq, Functional::IntH2Sq, Functional::SupH2Pow}) {
      ProbeSpec p;
      p.functional = f;
      p.samples = 3;
      const Estimate e = moment_probe(quiet(16, 0.01, 0.1, InitialProfile::zero()), p, 1);
      CHECK(e.value == 0.0);
      CHECK(e.std_error == 0.0);
    }
  }
  SUBCASE("integrated H2 norm of a small decaying mode") {
    // X(t) ~ eps e^{(1 - pi^2) t} e_1, so int ||X||_H2^2 = pi^4 eps^2 (1 - e^{-2 a T}) / (2a), a = pi^2 - 1.
    const double eps = 1e-3, a = kPi2 - 1.0, horizon = 0.1;
    ProbeSpec p;
    p.functional = Functional::IntH2Sq;
    p.samples = 1;
    const Estimate e = moment_probe(quiet(8, 1e-3, horizon, InitialProfile::sine(1, eps)), p, 1);
    const double exact = kPi2 * kPi2 * eps * eps * (1.0 - std::exp(-2.0 * a * horizon)) / (2.0 * a);
    CHECK(e.value == doctest::Approx(exact).epsilon(1e-3));
  }
  SUBCASE("H1 moments with H1-regular noise are stable in dt") {
    SchemeConfig c = quiet(64, 0.01, 0.5, InitialProfile::zero());
    c.noise = QSpec::diagonal(2.0);
    ProbeSpec p;
    p.functional = Functional::SupH1Sq;
    p.samples = 40;
    p.tape_refinement = 2;
    const double coarse = moment_probe(c, p, 5).value;
    c.dt = 0.005;
    p.tape_refinement = 1;
    const double fine = moment_probe(c, p, 5).value;
    CHECK(coarse > 0.0);
    CHECK(fine / coarse == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("H1 moments with white noise grow with the number of modes") {
    SchemeConfig c = quiet(64, 0.005, 0.1, InitialProfile::zero());
    c.noise = QSpec::white();
    ProbeSpec p;
    p.functional = Functional::SupH1Sq;
    p.samples = 10;
    double last = 0.0;
    for (std::size_t k : {64u, 128u, 256u}) {
      c.modes = k;
      const double v = moment_probe(c, p, 5).value;
      CHECK(v > 1.5 * last);
      last = v;
    }
  }
  SUBCASE("spec validation") {
    ProbeSpec p;
    p.q = 3;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = ProbeSpec{};
    p.tape_refinement = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK(parse_functional(to_string(Functional::IntH2Sq)) == Functional::IntH2Sq);
  }
}

TEST_CASE("exponential integrability probe") {
  SchemeConfig c = quiet(32, 0.01, 0.2, InitialProfile::zero());
  ExpProbeSpec spec;
  spec.samples = 4;
  SUBCASE("zero path gives exactly one") {
    for (PathTarget t : {PathTarget::GridValues, PathTarget::Interpolant}) {
      spec.target = t;
      const ExpProbeResult r = exp_integrability_probe(c, spec, 1);
      CHECK(r.estimate == 1.0);
      CHECK(r.log_estimate == 0.0);
      CHECK(r.tail_events == 0);
    }
  }
  SUBCASE("vanishing constant tends to one") {
    c.noise = QSpec::diagonal(2.0);
    c.x0 = InitialProfile::sine(1, 1.0);
    spec.c = 1e-9;
    const ExpProbeResult r = exp_integrability_probe(c, spec, 1);
    CHECK(std::abs(r.estimate - 1.0) < 1e-8);
  }
  SUBCASE("huge constant overflows into tail events, not an error") {
    c.noise = QSpec::diagonal(2.0);
    c.x0 = InitialProfile::sine(1, 1.0);
    spec.c = 1e4;
    const ExpProbeResult r = exp_integrability_probe(c, spec, 1);
    CHECK(r.tail_events == 4);
    CHECK(std::isinf(r.estimate));
    CHECK(std::isfinite(r.log_estimate));
    CHECK(r.log_estimate > 709.0);
  }
  SUBCASE("left-endpoint exponent by hand") {
    // Constant-in-time sup norm s gives c T s^2 with the left-endpoint rule.
    const LaplacianSpectrum sp(4);
    TrajectoryRecord rec;
    const SpectralField e1 = InitialProfile::sine(1, 1.0).build(sp);
    for (int n = 0; n <= 4; ++n) {
      rec.times.push_back(0.1 * n);
      rec.step_indices.push_back(static_cast<std::size_t>(n));
      rec.states.push_back(e1);
    }
    ExpProbeSpec s;
    s.c = 2.0;
    const double sup = norm(sp, e1, Norm::sup());
    CHECK(exp_exponent(sp, rec, 0.1, s) == doctest::Approx(2.0 * 0.4 * sup * sup));
  }
  SUBCASE("rough noise is rejected") {
    c.noise = QSpec::white();
    CHECK_THROWS_AS(exp_integrability_probe(c, spec, 1), ConfigError);
    c.noise = QSpec::diagonal(1.1);
    CHECK_THROWS_AS(exp_integrability_probe(c, spec, 1), ConfigError);
    spec.require_regular_noise = false;
    CHECK_NOTHROW(exp_integrability_probe(c, spec, 1));
  }
}

TEST_CASE("run metadata") {
  SchemeConfig c = quiet(16, 0.01, 0.3, InitialProfile::bump(2.0, 0.25));
  const RunMetadata m = describe_run(c, 7, 99, 1);
  CHECK(m.scheme == "splitting");
  CHECK(m.modes == 16);
  CHECK(m.horizon == 0.3);
  CHECK(m.samples == 7);
  CHECK(m.seed == 99);
  CHECK(m.divergent == 1);
  CHECK_FALSE(m.noise.empty());
  CHECK_FALSE(m.initial.empty());
}
