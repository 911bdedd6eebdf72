#include "acsplit/errors.hpp"
#include "acsplit/flow.hpp"
#include "acsplit/integrators.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace acsplit;

namespace {
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

double l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

SchemeConfig deterministic(std::size_t modes, double dt, double horizon, InitialProfile x0) {
  SchemeConfig c;
  c.modes = modes;
  c.dt = dt;
  c.horizon = horizon;
  c.noise = QSpec::diagonal(1.0, 0.0);
  c.x0 = x0;
  return c;
}

SpectralField run_zero_noise(const SchemeConfig& c) {
  const LaplacianSpectrum sp(c.modes);
  const NoiseTape tape = make_tape(c.noise, sp, c.steps(), c.dt, RngStream{1});
  return run_trajectory(c, tape, RecordSpec{c.steps()}).states.back();
}
}  // namespace

TEST_CASE("scheme names") {
  for (Scheme s : {Scheme::SplittingExact, Scheme::AuxExpEuler, Scheme::PlainExpEuler}) {
    CHECK(parse_scheme(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_scheme("euler"), ConfigError);
}

TEST_CASE("initial profiles") {
  const LaplacianSpectrum sp(64);
  const SpectralField s = InitialProfile::sine(3, 0.7).build(sp);
  CHECK(s.coeffs[2] == 0.7);
  CHECK(norm(sp, s, Norm::l2()) == doctest::Approx(0.7));
  CHECK_THROWS_AS(InitialProfile::sine(65).build(sp), ConfigError);
  CHECK_THROWS_AS(InitialProfile::bump(1.0, 0.6).build(sp), ConfigError);

  const GridField b = sp.to_grid(InitialProfile::bump(2.0, 0.25).build(sp));
  CHECK(b.values[31] == doctest::Approx(2.0 * std::exp(1.0 - 1.0 / (1.0 - std::pow((32.0 / 65.0 - 0.5) / 0.25, 2))))
                            .epsilon(1e-6));
  for (double v : InitialProfile::zero().build(sp).coeffs) CHECK(v == 0.0);
}

TEST_CASE("step counts") {
  SchemeConfig c = deterministic(4, 0.1, 1.0, InitialProfile::zero());
  CHECK(c.steps() == 10);
  c.dt = std::ldexp(1.0, -9);
  c.horizon = 0.5;
  CHECK(c.steps() == 256);
  c.dt = 0.3;
  CHECK_THROWS_AS(c.steps(), ConfigError);
  c.dt = 0.6;
  c.horizon = 1.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero noise keeps the zero state") {
  for (Scheme s : {Scheme::SplittingExact, Scheme::AuxExpEuler, Scheme::PlainExpEuler}) {
    SchemeConfig c = deterministic(32, 0.01, 0.5, InitialProfile::zero());
    c.scheme = s;
    for (double v : run_zero_noise(c).coeffs) CHECK(v == 0.0);
  }
}

TEST_CASE("small states follow the linearisation") {
  // Near zero Phi_dt is multiplication by e^dt, so one step scales mode k by e^{(1 - lambda_k) dt}.
  const double eps = 1e-6, dt = 0.01;
  const LaplacianSpectrum one(1);
  const SpectralField x1 = splitting_step(one, SpectralField(std::vector<double>{eps}), dt, SpectralField(1));
  CHECK(x1.coeffs[0] == doctest::Approx(std::exp((1.0 - kPi2) * dt) * eps).epsilon(1e-8));

  const LaplacianSpectrum sp(16);
  const SpectralField x = splitting_step(sp, InitialProfile::sine(3, eps).build(sp), dt, SpectralField(16));
  CHECK(x.coeffs[2] == doctest::Approx(std::exp((1.0 - 9.0 * kPi2) * dt) * eps).epsilon(1e-8));
}

TEST_CASE("splitting and the auxiliary exponential Euler step coincide") {
  const LaplacianSpectrum sp(128);
  std::mt19937_64 gen(31);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    SpectralField x(128), inc(128);
    for (std::size_t k = 0; k < 128; ++k) {
      x.coeffs[k] = 2.0 * nd(gen) / static_cast<double>(k + 1);
      inc.coeffs[k] = 0.05 * nd(gen) / static_cast<double>(k + 1);
    }
    for (double dt : {1e-4, 1e-3, 0.05}) {
      const SpectralField a = splitting_step(sp, x, dt, inc);
      const SpectralField b = aux_exp_euler_step(sp, x, dt, inc);
      CHECK(l2_diff(a.coeffs, b.coeffs) <= 1e-11 * (1.0 + norm(sp, x, Norm::l2())));
      CHECK(scheme_step(Scheme::SplittingExact, sp, x, dt, inc).coeffs == a.coeffs);
    }
  }
}

TEST_CASE("one splitting step by hand") {
  const LaplacianSpectrum sp(8);
  const SpectralField x = InitialProfile::bump(1.5, 0.3).build(sp);
  SpectralField inc(8);
  inc.coeffs[1] = 0.01;
  const double dt = 0.02;
  std::vector<double> g = oracle::to_grid(x.coeffs);
  for (double& v : g) v = phi(v, dt);
  std::vector<double> expected = oracle::to_spectral(g);
  for (std::size_t k = 0; k < 8; ++k) {
    expected[k] = std::exp(-sp.eigenvalue(k) * dt) * expected[k] + inc.coeffs[k];
  }
  CHECK(l2_diff(splitting_step(sp, x, dt, inc).coeffs, expected) < 1e-13);
}

TEST_CASE("deterministic runs converge to the Galerkin ODE") {
  SUBCASE("K = 8, T = 0.5") {
    const SchemeConfig c = deterministic(8, 1e-3, 0.5, InitialProfile::bump(1.0, 0.25));
    const LaplacianSpectrum sp(8);
    const auto ref = oracle::galerkin_endpoint(c.x0.build(sp).coeffs, 0.5);
    CHECK(l2_diff(run_zero_noise(c).coeffs, ref) < 5e-3);
  }
  SUBCASE("K = 64, twice the bump") {
    const SchemeConfig c = deterministic(64, 1e-4, 0.1, InitialProfile::bump(2.0, 0.25));
    const LaplacianSpectrum sp(64);
    const auto ref = oracle::galerkin_endpoint(c.x0.build(sp).coeffs, 0.1);
    CHECK(l2_diff(run_zero_noise(c).coeffs, ref) < 1e-3);
  }
  SUBCASE("halving the step halves the error") {
    const LaplacianSpectrum sp(8);
    const auto x0 = InitialProfile::sine(1, 1.5);
    const auto ref = oracle::galerkin_endpoint(x0.build(sp).coeffs, 0.4);
    std::vector<double> errors;
    for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
      errors.push_back(l2_diff(run_zero_noise(deterministic(8, dt, 0.4, x0)).coeffs, ref));
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double ratio = errors[i - 1] / errors[i];
      CHECK(ratio > 1.7);
      CHECK(ratio < 2.3);
    }
  }
}

TEST_CASE("plain exponential Euler blows up where splitting does not") {
  // With one mode the grid value obeys z <- e^{-pi^2 dt} (z + dt (z - z^3)).
  SchemeConfig c = deterministic(1, 0.1, 1.0, InitialProfile::constant(50.0));
  c.scheme = Scheme::PlainExpEuler;
  const LaplacianSpectrum sp(1);
  const NoiseTape tape = make_tape(c.noise, sp, c.steps(), c.dt, RngStream{1});
  const TrajectoryRecord rec = run_trajectory(c, tape);
  REQUIRE(rec.diverged());

  double z = 50.0;
  std::size_t oracle_step = 0;
  for (std::size_t n = 1; n <= 10 && oracle_step == 0; ++n) {
    z = std::exp(-kPi2 * 0.1) * (z + 0.1 * (z - z * z * z));
    if (!std::isfinite(z)) oracle_step = n;
  }
  REQUIRE(oracle_step > 0);
  CHECK(*rec.divergence_step == oracle_step);
  CHECK(rec.times.back() < 1.0);

  c.scheme = Scheme::SplittingExact;
  const TrajectoryRecord ok = run_trajectory(c, tape);
  CHECK_FALSE(ok.diverged());
  CHECK(ok.states.back().all_finite());

  SchemeConfig wide = deterministic(64, 0.1, 1.0, InitialProfile::constant(50.0));
  wide.scheme = Scheme::PlainExpEuler;
  const LaplacianSpectrum sp64(64);
  const TrajectoryRecord rec64 = run_trajectory(wide, make_tape(wide.noise, sp64, 10, 0.1, RngStream{1}));
  REQUIRE(rec64.diverged());
  CHECK(*rec64.divergence_step <= 10);
  for (std::size_t n = 1; n < rec64.states.size(); ++n) {
    CHECK(norm(sp64, rec64.states[n], Norm::l2()) > norm(sp64, rec64.states[n - 1], Norm::l2()));
  }
}

TEST_CASE("successive refinements on one tape get closer for every scheme") {
  const LaplacianSpectrum sp(32);
  const double fine = std::ldexp(1.0, -9);
  const NoiseTape tape = make_tape(QSpec::diagonal(1.0), sp, 256, fine, RngStream{21});
  for (Scheme s : {Scheme::SplittingExact, Scheme::AuxExpEuler, Scheme::PlainExpEuler}) {
    CAPTURE(to_string(s));
    SchemeConfig c;
    c.scheme = s;
    c.modes = 32;
    c.horizon = 0.5;
    c.noise = QSpec::diagonal(1.0);
    c.x0 = InitialProfile::sine(1, 0.5);
    std::vector<std::vector<double>> ends;
    for (int k = 5; k <= 9; ++k) {
      c.dt = std::ldexp(1.0, -k);
      ends.push_back(run_trajectory(c, tape, RecordSpec{c.steps()}).states.back().coeffs);
    }
    for (std::size_t i = 2; i < ends.size(); ++i) {
      CHECK(l2_diff(ends[i], ends[i - 1]) < l2_diff(ends[i - 1], ends[i - 2]));
    }
  }
}

TEST_CASE("piecewise flow interpolant") {
  const LaplacianSpectrum sp(16);
  const SpectralField x = InitialProfile::bump(1.2, 0.4).build(sp);
  const GridField g0 = sp.to_grid(x);
  const GridField z0 = zn_eval(sp, x, 0.0, 0.01);
  for (std::size_t j = 0; j < 16; ++j) CHECK(z0.values[j] == g0.values[j]);
  const GridField zt = zn_eval(sp, x, 0.004, 0.01);
  for (std::size_t j = 0; j < 16; ++j) CHECK(zt.values[j] == doctest::Approx(phi(g0.values[j], 0.004)));
  CHECK_THROWS_AS(zn_eval(sp, x, 0.01, 0.01), DomainError);
  CHECK_THROWS_AS(zn_eval(sp, x, -1e-3, 0.01), DomainError);
}

TEST_CASE("recording") {
  const LaplacianSpectrum sp(8);
  SUBCASE("zero horizon records only the initial state") {
    const SchemeConfig c = deterministic(8, 0.01, 0.0, InitialProfile::sine(2, 0.3));
    const TrajectoryRecord rec = run_trajectory(c, make_tape(c.noise, sp, 0, 0.01, RngStream{1}));
    REQUIRE(rec.times.size() == 1);
    CHECK(rec.times[0] == 0.0);
    CHECK(rec.states[0].coeffs == c.x0.build(sp).coeffs);
  }
  SUBCASE("stride always includes the final time") {
    const SchemeConfig c = deterministic(8, 0.01, 0.1, InitialProfile::sine(2, 0.3));
    const TrajectoryRecord rec = run_trajectory(c, make_tape(c.noise, sp, 10, 0.01, RngStream{1}), {3, false, true});
    CHECK(rec.step_indices == std::vector<std::size_t>{0, 3, 6, 9, 10});
    CHECK(rec.states.empty());
    CHECK(rec.norms.size() == 5);
    CHECK(rec.times.back() == doctest::Approx(0.1));
  }
  SUBCASE("tape mismatches") {
    const SchemeConfig c = deterministic(8, 0.01, 0.1, InitialProfile::zero());
    CHECK_THROWS_AS(run_trajectory(c, make_tape(c.noise, sp, 5, 0.01, RngStream{1})), ConfigError);
    const LaplacianSpectrum other(4);
    CHECK_THROWS_AS(run_trajectory(c, make_tape(c.noise, other, 10, 0.01, RngStream{1})), ConfigError);
    CHECK_THROWS_AS(run_trajectory(c, make_tape(c.noise, sp, 10, 0.01, RngStream{1}), {0}), ConfigError);
  }
}

TEST_CASE("coarse runs use aggregated tape increments") {
  const LaplacianSpectrum sp(32);
  SchemeConfig c;
  c.modes = 32;
  c.dt = 0.004;
  c.horizon = 0.04;
  c.noise = QSpec::white();
  c.x0 = InitialProfile::bump(1.0, 0.25);
  const NoiseTape tape = make_tape(c.noise, sp, 40, 0.001, RngStream{8});
  const TrajectoryRecord rec = run_trajectory(c, tape);

  SpectralField x = c.x0.build(sp);
  for (std::size_t n = 0; n < 10; ++n) {
    x = splitting_step(sp, x, c.dt, convolution_increment(tape, sp.eigenvalues(), n, 4));
  }
  CHECK(l2_diff(rec.states.back().coeffs, x.coeffs) < 1e-13);
}

TEST_CASE("norm snapshot of the first eigenfunction") {
  const LaplacianSpectrum sp(256);
  const NormSnapshot n = snapshot_norms(sp, InitialProfile::sine(1, 1.0).build(sp));
  CHECK(n.l2 == doctest::Approx(1.0));
  CHECK(n.h1 == doctest::Approx(std::numbers::pi));
  CHECK(n.h2 == doctest::Approx(kPi2));
  CHECK(n.sup == doctest::Approx(std::numbers::sqrt2).epsilon(1e-4));
  CHECK(std::abs(n.l4 - std::pow(1.5, 0.25)) < 1e-4);
}
