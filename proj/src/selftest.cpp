#include "acsplit/selftest.hpp"

#include "acsplit/flow.hpp"
#include "acsplit/integrators.hpp"
#include "acsplit/noise.hpp"
#include "acsplit/spectral.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace acsplit {

namespace {

constexpr std::uint64_t kSelfTestSeed = 20190626;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

SelfTestResult transform_roundtrip(bool corrupt) {
  const LaplacianSpectrum sp(64);
  std::mt19937_64 gen(kSelfTestSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpectralField c(64);
  for (double& v : c.coeffs) v = u(gen);
  SpectralField back = sp.to_spectral(sp.to_grid(c));
  if (corrupt) back.coeffs[0] += 1e-6;
  double err = 0.0;
  for (std::size_t k = 0; k < 64; ++k) err = std::max(err, std::abs(back.coeffs[k] - c.coeffs[k]));
  return {"transform-roundtrip", err <= 1e-12, "max error " + fmt(err)};
}

SelfTestResult flow_semigroup(bool corrupt) {
  std::mt19937_64 gen(kSelfTestSeed + 1);
  std::uniform_real_distribution<double> z(-5.0, 5.0), t(0.0, 0.5);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = z(gen), s = t(gen), r = t(gen);
    const double lhs = phi(phi(x, s), corrupt ? r * 1.01 : r);
    worst = std::max(worst, std::abs(lhs - phi(x, s + r)) / (1.0 + std::abs(x)));
  }
  return {"flow-semigroup", worst <= 1e-11, "max scaled defect " + fmt(worst)};
}

SelfTestResult drift_bounds(bool corrupt) {
  // One-sided, rate and local Lipschitz constants for dt <= 0.5, |z| <= 5.
  const double c1 = corrupt ? 0.5 : 2.0, c2 = 5.0, c3 = 4.0;
  std::mt19937_64 gen(kSelfTestSeed + 2);
  std::uniform_real_distribution<double> z(-5.0, 5.0), t(0.0, 0.5);
  std::size_t violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double a = z(gen), b = z(gen);
    double dt = t(gen);
    if (dt == 0.0) dt = 0.25;
    const double d = a - b;
    const double slack = 1e-12 * (1.0 + std::abs(a) + std::abs(b));
    if (std::abs(phi(a, dt) - phi(b, dt)) > std::exp(dt) * std::abs(d) + slack) ++violations;
    if ((psi(a, dt) - psi(b, dt)) * d > c1 * d * d + slack) ++violations;
    if (std::abs(psi(a, dt) - drift(a)) > c2 * dt * (1.0 + std::pow(std::abs(a), 5)) + slack) ++violations;
    if (std::abs(psi(a, dt) - psi(b, dt)) > c3 * std::abs(d) * (1.0 + a * a + b * b) + slack) ++violations;
  }
  return {"drift-bounds", violations == 0, std::to_string(violations) + " violations in 1e5 samples"};
}

SelfTestResult ou_variance(bool corrupt) {
  const LaplacianSpectrum sp(1);
  const double dt = 0.01;
  const std::size_t n = 100000;
  const NoiseTape tape = make_tape(QSpec::white(), sp, n, dt, RngStream{kSelfTestSeed, 0, StreamPurpose::SelfTest});
  double ss = 0.0, s4 = 0.0;
  for (double g : tape.raw()) {
    ss += g * g;
    s4 += g * g * g * g;
  }
  const double var = ss / static_cast<double>(n);
  const double se = std::sqrt((s4 / static_cast<double>(n) - var * var) / static_cast<double>(n));
  double expected = ou_increment_variance(1.0, std::numbers::pi * std::numbers::pi, dt);
  if (corrupt) expected *= 1.5;
  const bool ok = std::abs(var - expected) <= 3.0 * se;
  return {"ou-variance", ok, "sample " + fmt(var) + " expected " + fmt(expected) + " se " + fmt(se)};
}

SelfTestResult stationary_law(bool corrupt) {
  // Mode 1 of omega at t = 2 from omega(0) = 0, many independent paths.
  const LaplacianSpectrum sp(1);
  const double dt = 0.01;
  const std::size_t steps = 200, paths = 20000;
  double ss = 0.0, s4 = 0.0;
  for (std::size_t i = 0; i < paths; ++i) {
    const NoiseTape tape =
        make_tape(QSpec::white(), sp, steps, dt, RngStream{kSelfTestSeed + 7, i, StreamPurpose::SelfTest});
    const double omega = convolution_increment(tape, sp.eigenvalues(), 0, steps).coeffs[0];
    ss += omega * omega;
    s4 += omega * omega * omega * omega;
  }
  const double var = ss / static_cast<double>(paths);
  const double se = std::sqrt((s4 / static_cast<double>(paths) - var * var) / static_cast<double>(paths));
  double expected = stationary_variance(QSpec::white(), 1);
  if (corrupt) expected *= 1.5;
  return {"stationary-variance", std::abs(var - expected) <= 3.0 * se,
          "sample " + fmt(var) + " expected " + fmt(expected) + " se " + fmt(se)};
}

SelfTestResult step_equivalence(bool corrupt) {
  const LaplacianSpectrum sp(64);
  std::mt19937_64 gen(kSelfTestSeed + 3);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    SpectralField x(64), inc(64);
    for (std::size_t k = 0; k < 64; ++k) {
      x.coeffs[k] = nd(gen) / static_cast<double>(k + 1);
      inc.coeffs[k] = 0.01 * nd(gen);
    }
    const double dt = 1e-3;
    const SpectralField a = splitting_step(sp, x, dt, inc);
    const SpectralField b = corrupt ? plain_exp_euler_step(sp, x, dt, inc) : aux_exp_euler_step(sp, x, dt, inc);
    double d = 0.0;
    for (std::size_t k = 0; k < 64; ++k) d += (a.coeffs[k] - b.coeffs[k]) * (a.coeffs[k] - b.coeffs[k]);
    worst = std::max(worst, std::sqrt(d) / (1.0 + norm(sp, x, Norm::l2())));
  }
  return {"step-equivalence", worst <= 1e-11, "max scaled difference " + fmt(worst)};
}

SelfTestResult noise_coupling(bool corrupt) {
  const LaplacianSpectrum sp(32);
  const std::size_t m = 8, coarse = 16;
  const double dt_f = 1e-3;
  const NoiseTape tape =
      make_tape(QSpec::white(), sp, m * coarse, dt_f, RngStream{kSelfTestSeed + 4, 0, StreamPurpose::SelfTest});
  std::vector<double> fine(32, 0.0), coarse_state(32, 0.0), inc(32);
  const auto lam = sp.eigenvalues();
  double worst = 0.0;
  for (std::size_t n = 0; n < coarse; ++n) {
    for (std::size_t j = 0; j < m; ++j) {
      auto row = tape.step(n * m + j);
      for (std::size_t k = 0; k < 32; ++k) fine[k] = std::exp(-lam[k] * dt_f) * fine[k] + row[k];
    }
    convolution_increment(tape, lam, n, corrupt ? m - 1 : m, inc);
    for (std::size_t k = 0; k < 32; ++k) {
      coarse_state[k] = std::exp(-lam[k] * dt_f * static_cast<double>(m)) * coarse_state[k] + inc[k];
      worst = std::max(worst, std::abs(coarse_state[k] - fine[k]));
    }
  }
  return {"noise-coupling", worst <= 1e-12, "max difference " + fmt(worst)};
}

using Check = std::function<SelfTestResult(bool)>;

const std::vector<std::pair<std::string, Check>>& checks() {
  static const std::vector<std::pair<std::string, Check>> all{
      {"transform-roundtrip", transform_roundtrip}, {"flow-semigroup", flow_semigroup},
      {"drift-bounds", drift_bounds},         {"ou-variance", ou_variance},
      {"stationary-variance", stationary_law},      {"step-equivalence", step_equivalence},
      {"noise-coupling", noise_coupling},
  };
  return all;
}

}  // namespace

std::vector<std::string> selftest_names() {
  std::vector<std::string> names;
  for (const auto& [name, check] : checks()) names.push_back(name);
  return names;
}

std::vector<SelfTestResult> run_selftest(const std::string& corrupt) {
  std::vector<SelfTestResult> results;
  for (const auto& [name, check] : checks()) {
    try {
      results.push_back(check(name == corrupt));
    } catch (const std::exception& e) {
      results.push_back({name, false, std::string("exception: ") + e.what()});
    }
  }
  return results;
}

}  // namespace acsplit
