#include "acsplit/integrators.hpp"

#include "acsplit/errors.hpp"
#include "acsplit/flow.hpp"

#include <cmath>
#include <sstream>

namespace acsplit {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::SplittingExact: return "splitting";
    case Scheme::AuxExpEuler: return "aux-exp-euler";
    case Scheme::PlainExpEuler: return "plain-exp-euler";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "splitting") return Scheme::SplittingExact;
  if (name == "aux-exp-euler") return Scheme::AuxExpEuler;
  if (name == "plain-exp-euler") return Scheme::PlainExpEuler;
  throw ConfigError("unknown scheme '" + name + "'", "scheme");
}

InitialProfile InitialProfile::sine(std::size_t mode, double amplitude) {
  InitialProfile p;
  p.kind = Kind::Sine;
  p.mode = mode;
  p.amplitude = amplitude;
  return p;
}

InitialProfile InitialProfile::bump(double amplitude, double width) {
  InitialProfile p;
  p.kind = Kind::Bump;
  p.amplitude = amplitude;
  p.width = width;
  return p;
}

InitialProfile InitialProfile::constant(double value) {
  InitialProfile p;
  p.kind = Kind::Constant;
  p.amplitude = value;
  return p;
}

SpectralField InitialProfile::build(const LaplacianSpectrum& spectrum) const {
  switch (kind) {
    case Kind::Zero:
      return SpectralField(spectrum.modes());
    case Kind::Sine: {
      if (mode < 1 || mode > spectrum.modes()) {
        throw ConfigError("sine profile mode " + std::to_string(mode) + " outside 1.." +
                              std::to_string(spectrum.modes()),
                          "initial_mode");
      }
      SpectralField c(spectrum.modes());
      c.coeffs[mode - 1] = amplitude;
      return c;
    }
    case Kind::Bump: {
      if (!(width > 0.0 && width <= 0.5)) throw ConfigError("bump width must lie in (0, 0.5]", "initial_width");
      const double a = amplitude;
      const double w = width;
      return spectrum.to_spectral(spectrum.sample([a, w](double x) {
        const double r = (x - 0.5) / w;
        if (std::abs(r) >= 1.0) return 0.0;
        return a * std::exp(1.0 - 1.0 / (1.0 - r * r));
      }));
    }
    case Kind::Constant: {
      const double a = amplitude;
      return spectrum.to_spectral(spectrum.sample([a](double) { return a; }));
    }
  }
  return SpectralField(spectrum.modes());
}

std::string InitialProfile::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Zero: os << "zero"; break;
    case Kind::Sine: os << "sine(mode=" << mode << ",amplitude=" << amplitude << ")"; break;
    case Kind::Bump: os << "bump(amplitude=" << amplitude << ",width=" << width << ")"; break;
    case Kind::Constant: os << "constant(" << amplitude << ")"; break;
  }
  return os.str();
}

std::size_t SchemeConfig::steps() const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive", "dt");
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be nonnegative", "horizon");
  const double n = std::round(horizon / dt);
  if (std::abs(n * dt - horizon) > 1e-9 * std::max(horizon, dt)) {
    throw ConfigError("horizon " + std::to_string(horizon) + " is not a multiple of dt " + std::to_string(dt),
                      "dt");
  }
  return static_cast<std::size_t>(n);
}

void SchemeConfig::validate() const {
  if (modes == 0) throw ConfigError("modes must be >= 1", "modes");
  if (!(dt0 > 0.0 && dt0 < 1.0)) throw ConfigError("dt0 must lie in (0, 1)", "dt0");
  if (!(dt <= dt0)) throw ConfigError("dt exceeds the cap dt0", "dt");
  steps();
  noise.validate();
}

namespace {

// Work buffers for one path; avoids per-step allocation in long runs.
class StepKernel {
 public:
  StepKernel(const LaplacianSpectrum& spectrum, Scheme scheme, double dt)
      : spectrum_(spectrum), scheme_(scheme), dt_(dt), flow_(dt), decay_(spectrum.modes()),
        grid_(spectrum.modes()), spec_(spectrum.modes()) {
    if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
    for (std::size_t k = 0; k < decay_.size(); ++k) decay_[k] = std::exp(-spectrum.eigenvalue(k) * dt);
  }

  /// x <- step(x) + increment.
  void advance(std::vector<double>& x, std::span<const double> increment) {
    spectrum_.to_grid(x, grid_);
    switch (scheme_) {
      case Scheme::SplittingExact:
        for (double& v : grid_) v = flow_.phi(v);
        spectrum_.to_spectral(grid_, x);
        break;
      case Scheme::AuxExpEuler:
        for (double& v : grid_) v = flow_.psi(v);
        spectrum_.to_spectral(grid_, spec_);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += dt_ * spec_[k];
        break;
      case Scheme::PlainExpEuler:
        for (double& v : grid_) v = drift(v);
        spectrum_.to_spectral(grid_, spec_);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += dt_ * spec_[k];
        break;
    }
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = decay_[k] * x[k] + increment[k];
  }

 private:
  const LaplacianSpectrum& spectrum_;
  Scheme scheme_;
  double dt_;
  FlowStep flow_;
  std::vector<double> decay_;
  std::vector<double> grid_;
  std::vector<double> spec_;
};

}  // namespace

SpectralField scheme_step(Scheme scheme, const LaplacianSpectrum& spectrum, const SpectralField& x,
                          double dt, const SpectralField& increment) {
  if (x.size() != spectrum.modes() || increment.size() != spectrum.modes()) {
    throw ConfigError("step: field length does not match spectrum");
  }
  StepKernel kernel(spectrum, scheme, dt);
  SpectralField out = x;
  kernel.advance(out.coeffs, increment.coeffs);
  return out;
}

SpectralField splitting_step(const LaplacianSpectrum& spectrum, const SpectralField& x, double dt,
                             const SpectralField& increment) {
  return scheme_step(Scheme::SplittingExact, spectrum, x, dt, increment);
}

SpectralField aux_exp_euler_step(const LaplacianSpectrum& spectrum, const SpectralField& x, double dt,
                                 const SpectralField& increment) {
  return scheme_step(Scheme::AuxExpEuler, spectrum, x, dt, increment);
}

SpectralField plain_exp_euler_step(const LaplacianSpectrum& spectrum, const SpectralField& x, double dt,
                                   const SpectralField& increment) {
  return scheme_step(Scheme::PlainExpEuler, spectrum, x, dt, increment);
}

GridField zn_eval(const LaplacianSpectrum& spectrum, const SpectralField& x_prev, double tau, double dt) {
  if (!(tau >= 0.0 && tau < dt)) throw DomainError("zn_eval: tau must lie in [0, dt)");
  return apply_phi(spectrum.to_grid(x_prev), tau);
}

NormSnapshot snapshot_norms(const LaplacianSpectrum& spectrum, const SpectralField& x) {
  const GridField g = spectrum.to_grid(x);
  NormSnapshot s;
  s.l2 = norm(spectrum, x, Norm::l2());
  s.l4 = norm(g, Norm::lq(4));
  s.sup = norm(g, Norm::sup());
  s.h1 = norm(spectrum, x, Norm::sobolev(1.0));
  s.h2 = norm(spectrum, x, Norm::sobolev(2.0));
  return s;
}

TrajectoryRecord run_trajectory(const SchemeConfig& config, const NoiseTape& tape, const RecordSpec& record) {
  config.validate();
  if (record.every == 0) throw ConfigError("record interval must be >= 1", "record_every");
  const std::size_t n_steps = config.steps();
  const LaplacianSpectrum spectrum(config.modes);

  TrajectoryRecord out;
  SpectralField x = config.x0.build(spectrum);
  auto push = [&](std::size_t n) {
    out.times.push_back(static_cast<double>(n) * config.dt);
    out.step_indices.push_back(n);
    if (record.states) out.states.push_back(x);
    if (record.norms) out.norms.push_back(snapshot_norms(spectrum, x));
  };
  push(0);
  if (n_steps == 0) return out;

  if (tape.modes() != config.modes) throw ConfigError("tape mode count does not match config", "modes");
  const std::size_t factor = coarsening_factor(config.dt, tape.dt_fine());
  if (n_steps * factor > tape.steps()) throw ConfigError("tape is shorter than the horizon", "horizon");

  StepKernel kernel(spectrum, config.scheme, config.dt);
  const IncrementAggregator aggregate(tape, spectrum.eigenvalues(), factor);
  std::vector<double> increment(config.modes);
  for (std::size_t n = 0; n < n_steps; ++n) {
    aggregate(n, increment);
    kernel.advance(x.coeffs, increment);
    if (!x.all_finite()) {
      out.divergence_step = n + 1;
      return out;
    }
    if ((n + 1) % record.every == 0 || n + 1 == n_steps) push(n + 1);
  }
  return out;
}

}  // namespace acsplit
