#pragma once

/**
 * Q-Wiener forcing with diagonal covariance Q e_k = q_k e_k, and exact
 * sampling of the stochastic convolution omega(t) = int_0^t S(t-s) dW^Q(s).
 *
 * Each mode of omega is an Ornstein-Uhlenbeck process. A NoiseTape holds its
 * exact Gaussian increments on a fine grid of step dt_f:
 *
 *   g[k][j] = sqrt(q_k) int_{s_j}^{s_{j+1}} e^{-lambda_k (s_{j+1} - s)} d beta_k(s)
 *           ~ N(0, q_k (1 - e^{-2 lambda_k dt_f}) / (2 lambda_k)),
 *
 * and coarser increments are aggregated from it pathwise, so solvers at
 * different step sizes see the same noise realisation.
 */

#include "acsplit/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace acsplit {

struct QSpec {
  enum class Kind { White, Diagonal };

  Kind kind = Kind::White;
  double gamma = 0.0;  ///< q_k = scale * lambda_k^{-gamma}
  double scale = 1.0;

  static QSpec white() { return {}; }
  static QSpec diagonal(double gamma, double scale = 1.0);

  /// Throws ConfigError for gamma < 0 or scale < 0.
  void validate() const;
  bool is_zero() const noexcept { return kind == Kind::Diagonal && scale == 0.0; }
  std::string describe() const;
};

/// q_k for the 1-based mode index k.
double q_value(const QSpec& spec, std::size_t k);

/// sum_{k <= K} q_k lambda_k^s, the squared HS norm of (-A)^{s/2} Q^{1/2} truncated at K.
double hs_norm_sq(const QSpec& spec, double s, std::size_t modes);

/// q_k / (2 lambda_k), the stationary variance of mode k (1-based) of omega.
double stationary_variance(const QSpec& spec, std::size_t k);

/// Variance of one exact OU increment over a step dt; q dt in the lambda -> 0 limit.
double ou_increment_variance(double q, double lambda, double dt);

/// Purpose tags keep streams used for different things disjoint.
enum class StreamPurpose : std::uint64_t { Tape = 1, SelfTest = 2, Synthetic = 3 };

/// Reproducible random stream keyed by (seed, sample, purpose).
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t sample = 0;
  StreamPurpose purpose = StreamPurpose::Tape;

  std::mt19937_64 engine() const;
};

class NoiseTape {
 public:
  NoiseTape() = default;
  NoiseTape(std::size_t modes, std::size_t steps, double dt_fine, std::uint64_t seed,
            std::vector<double> data);

  std::size_t modes() const noexcept { return modes_; }
  std::size_t steps() const noexcept { return steps_; }
  double dt_fine() const noexcept { return dt_fine_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Increments of all modes over fine step j.
  std::span<const double> step(std::size_t j) const {
    return {data_.data() + j * modes_, modes_};
  }
  double operator()(std::size_t k, std::size_t j) const { return data_[j * modes_ + k]; }
  std::span<const double> raw() const noexcept { return data_; }

  friend bool operator==(const NoiseTape&, const NoiseTape&) = default;

 private:
  std::size_t modes_ = 0;
  std::size_t steps_ = 0;
  double dt_fine_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> data_;  // step-major: data_[j * modes_ + k]
};

/// Largest tape (modes * steps entries) make_tape will allocate.
inline constexpr std::size_t kMaxTapeEntries = std::size_t{1} << 27;

/// Throws ResourceError when modes * steps exceeds kMaxTapeEntries.
NoiseTape make_tape(const QSpec& spec, const LaplacianSpectrum& spectrum, std::size_t steps,
                    double dt_fine, const RngStream& rng);

/// Aggregates fine tape increments into increments over m fine steps.
class IncrementAggregator {
 public:
  IncrementAggregator(const NoiseTape& tape, std::span<const double> lambda, std::size_t factor);

  std::size_t factor() const noexcept { return factor_; }
  std::size_t coarse_steps() const noexcept { return tape_.steps() / factor_; }
  void operator()(std::size_t coarse_step, std::span<double> out) const;

 private:
  const NoiseTape& tape_;
  std::size_t factor_;
  std::vector<double> decay_;  // e^{-lambda_k dt_f}
};

/// Exact OU increment over coarse step [n m dt_f, (n+1) m dt_f]:
///   sum_{j<m} e^{-lambda_k (m-1-j) dt_f} g[k][n m + j].
/// `lambda` is taken explicitly so tests can use synthetic spectra.
SpectralField convolution_increment(const NoiseTape& tape, std::span<const double> lambda,
                                    std::size_t coarse_step, std::size_t factor);
void convolution_increment(const NoiseTape& tape, std::span<const double> lambda,
                           std::size_t coarse_step, std::size_t factor, std::span<double> out);

/// Integer m with m * dt_fine == dt (relative tolerance 1e-9), else ConfigError.
std::size_t coarsening_factor(double dt, double dt_fine);

// Regression fixtures. Binary layout: "ACSTAPE1", u64 modes, u64 steps,
// f64 dt_fine, u64 seed, then modes*steps f64 in step-major order.
void write_tape_binary(std::ostream& os, const NoiseTape& tape);
NoiseTape read_tape_binary(std::istream& is);
/// CSV: a "# modes=..,steps=..,dt_fine=..,seed=.." header, then one row per fine step.
void write_tape_csv(std::ostream& os, const NoiseTape& tape);

}  // namespace acsplit
