#pragma once

/**
 * Time integrators for dX = (AX + X - X^3) dt + dW^Q on (0, 1), Dirichlet.
 *
 * The splitting scheme alternates the exact reaction flow and the exact
 * linear-plus-noise step:
 *
 *   Y_n     = Phi_dt(X_n)                              (pointwise, grid)
 *   X_{n+1} = S(dt) Y_n + int_{t_n}^{t_{n+1}} S(t_{n+1} - s) dW^Q(s)
 *
 * Because Phi_dt = id + dt Psi_dt it coincides with the exponential Euler
 * method for the drift Psi_dt. PlainExpEuler uses F itself and is only
 * stable for small states; it serves as a divergence baseline.
 */

#include "acsplit/noise.hpp"
#include "acsplit/spectral.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace acsplit {

enum class Scheme { SplittingExact, AuxExpEuler, PlainExpEuler };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

/// Named initial conditions; all lie in H^2 and vanish at the boundary except
/// Constant, which is interpolated on the interior nodes (Gibbs at the walls).
struct InitialProfile {
  enum class Kind { Zero, Sine, Bump, Constant };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double width = 0.25;   ///< Bump half-width, in (0, 0.5].
  std::size_t mode = 1;  ///< Sine mode, 1-based.

  static InitialProfile zero() { return {}; }
  static InitialProfile sine(std::size_t mode, double amplitude = 1.0);
  /// amplitude * exp(1 - 1 / (1 - r^2)), r = (x - 1/2) / width, zero for |r| >= 1.
  static InitialProfile bump(double amplitude, double width);
  static InitialProfile constant(double value);

  SpectralField build(const LaplacianSpectrum& spectrum) const;
  std::string describe() const;
};

struct SchemeConfig {
  Scheme scheme = Scheme::SplittingExact;
  std::size_t modes = 512;
  double dt = 1e-3;
  double horizon = 1.0;
  QSpec noise;
  InitialProfile x0;
  /// Cap on dt.
  double dt0 = 0.5;

  /// Number of steps N with N dt == horizon; throws ConfigError otherwise.
  std::size_t steps() const;
  void validate() const;
};

// One step of each scheme given the convolution increment over that step.
SpectralField splitting_step(const LaplacianSpectrum& spectrum, const SpectralField& x, double dt,
                             const SpectralField& increment);
SpectralField aux_exp_euler_step(const LaplacianSpectrum& spectrum, const SpectralField& x, double dt,
                                 const SpectralField& increment);
SpectralField plain_exp_euler_step(const LaplacianSpectrum& spectrum, const SpectralField& x, double dt,
                                   const SpectralField& increment);
SpectralField scheme_step(Scheme scheme, const LaplacianSpectrum& spectrum, const SpectralField& x,
                          double dt, const SpectralField& increment);

/// Z^N(t_{n-1} + tau) = Phi_tau(X_{n-1}) on the grid, for 0 <= tau < dt.
GridField zn_eval(const LaplacianSpectrum& spectrum, const SpectralField& x_prev, double tau, double dt);

struct NormSnapshot {
  double l2 = 0.0;
  double l4 = 0.0;
  double sup = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
};

NormSnapshot snapshot_norms(const LaplacianSpectrum& spectrum, const SpectralField& x);

struct RecordSpec {
  std::size_t every = 1;  ///< record t_n for n divisible by `every`, plus t_N
  bool states = true;
  bool norms = false;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<std::size_t> step_indices;
  std::vector<SpectralField> states;
  std::vector<NormSnapshot> norms;
  /// First step whose result was not finite; the run stops there.
  std::optional<std::size_t> divergence_step;

  bool diverged() const noexcept { return divergence_step.has_value(); }
};

/// Runs one path on `tape`. The config step must be an integer multiple of the
/// tape step and the tape must cover the horizon.
TrajectoryRecord run_trajectory(const SchemeConfig& config, const NoiseTape& tape,
                                const RecordSpec& record = {});

}  // namespace acsplit
