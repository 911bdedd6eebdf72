#include "acsplit/noise.hpp"

#include "acsplit/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace acsplit {

QSpec QSpec::diagonal(double gamma, double scale) {
  QSpec s;
  s.kind = Kind::Diagonal;
  s.gamma = gamma;
  s.scale = scale;
  return s;
}

void QSpec::validate() const {
  if (kind == Kind::Diagonal) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("noise: gamma must be >= 0", "gamma");
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("noise: scale must be >= 0", "scale");
  }
}

std::string QSpec::describe() const {
  if (kind == Kind::White) return "white";
  std::ostringstream os;
  os << "diagonal(gamma=" << gamma << ",scale=" << scale << ")";
  return os.str();
}

double q_value(const QSpec& spec, std::size_t k) {
  if (k == 0) throw DomainError("q_value: mode index is 1-based");
  if (spec.kind == QSpec::Kind::White) return 1.0;
  if (spec.scale == 0.0) return 0.0;
  const double w = static_cast<double>(k) * std::numbers::pi;
  return spec.scale * std::pow(w * w, -spec.gamma);
}

double hs_norm_sq(const QSpec& spec, double s, std::size_t modes) {
  double acc = 0.0;
  // Smallest terms first.
  for (std::size_t k = modes; k >= 1; --k) {
    const double w = static_cast<double>(k) * std::numbers::pi;
    acc += q_value(spec, k) * std::pow(w * w, s);
  }
  return acc;
}

double stationary_variance(const QSpec& spec, std::size_t k) {
  const double w = static_cast<double>(k) * std::numbers::pi;
  return q_value(spec, k) / (2.0 * w * w);
}

double ou_increment_variance(double q, double lambda, double dt) {
  if (lambda == 0.0) return q * dt;
  return q * (-std::expm1(-2.0 * lambda * dt)) / (2.0 * lambda);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 RngStream::engine() const {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(sample + 0x632be59bd9b4e019ULL));
  const std::uint64_t c = splitmix64(b ^ static_cast<std::uint64_t>(purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return std::mt19937_64(seq);
}

NoiseTape::NoiseTape(std::size_t modes, std::size_t steps, double dt_fine, std::uint64_t seed,
                     std::vector<double> data)
    : modes_(modes), steps_(steps), dt_fine_(dt_fine), seed_(seed), data_(std::move(data)) {
  if (data_.size() != modes_ * steps_) throw ConfigError("tape: data size does not match modes * steps");
}

NoiseTape make_tape(const QSpec& spec, const LaplacianSpectrum& spectrum, std::size_t steps,
                    double dt_fine, const RngStream& rng) {
  spec.validate();
  if (!(dt_fine > 0.0)) throw ConfigError("tape: dt_fine must be positive", "dt_ref");
  const std::size_t modes = spectrum.modes();
  if (steps != 0 && modes > kMaxTapeEntries / steps) {
    throw ResourceError("tape: " + std::to_string(modes) + " x " + std::to_string(steps) +
                        " entries exceeds the cap of " + std::to_string(kMaxTapeEntries));
  }

  std::vector<double> sd(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    sd[k] = std::sqrt(ou_increment_variance(q_value(spec, k + 1), spectrum.eigenvalue(k), dt_fine));
  }

  std::vector<double> data(modes * steps, 0.0);
  if (!spec.is_zero()) {
    auto gen = rng.engine();
    std::normal_distribution<double> normal;
    for (std::size_t j = 0; j < steps; ++j) {
      double* row = data.data() + j * modes;
      for (std::size_t k = 0; k < modes; ++k) row[k] = sd[k] * normal(gen);
    }
  }
  return NoiseTape(modes, steps, dt_fine, rng.seed, std::move(data));
}

std::size_t coarsening_factor(double dt, double dt_fine) {
  if (!(dt > 0.0) || !(dt_fine > 0.0)) throw ConfigError("time steps must be positive");
  const double ratio = dt / dt_fine;
  const double m = std::round(ratio);
  if (m < 1.0 || std::abs(ratio - m) > 1e-9 * m) {
    throw ConfigError("step " + std::to_string(dt) + " is not an integer multiple of the tape step " +
                      std::to_string(dt_fine));
  }
  return static_cast<std::size_t>(m);
}

IncrementAggregator::IncrementAggregator(const NoiseTape& tape, std::span<const double> lambda,
                                         std::size_t factor)
    : tape_(tape), factor_(factor), decay_(lambda.size()) {
  if (factor == 0) throw ConfigError("convolution_increment: factor must be >= 1");
  if (lambda.size() != tape.modes()) throw ConfigError("convolution_increment: mode count mismatch");
  for (std::size_t k = 0; k < lambda.size(); ++k) decay_[k] = std::exp(-lambda[k] * tape.dt_fine());
}

void IncrementAggregator::operator()(std::size_t coarse_step, std::span<double> out) const {
  if (out.size() != tape_.modes()) throw ConfigError("convolution_increment: mode count mismatch");
  if ((coarse_step + 1) * factor_ > tape_.steps()) {
    throw ConfigError("convolution_increment: coarse step " + std::to_string(coarse_step) +
                      " runs past the end of the tape");
  }
  const std::size_t first = coarse_step * factor_;
  auto row0 = tape_.step(first);
  std::copy(row0.begin(), row0.end(), out.begin());
  // Horner form of the weighted sum; identical to the fine OU recursion.
  for (std::size_t j = 1; j < factor_; ++j) {
    auto row = tape_.step(first + j);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = decay_[k] * out[k] + row[k];
  }
}

void convolution_increment(const NoiseTape& tape, std::span<const double> lambda,
                           std::size_t coarse_step, std::size_t factor, std::span<double> out) {
  IncrementAggregator(tape, lambda, factor)(coarse_step, out);
}

SpectralField convolution_increment(const NoiseTape& tape, std::span<const double> lambda,
                                    std::size_t coarse_step, std::size_t factor) {
  SpectralField out(tape.modes());
  convolution_increment(tape, lambda, coarse_step, factor, out.coeffs);
  return out;
}

namespace {

constexpr std::array<char, 8> kTapeMagic{'A', 'C', 'S', 'T', 'A', 'P', 'E', '1'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("tape: truncated binary stream");
  return v;
}

}  // namespace

void write_tape_binary(std::ostream& os, const NoiseTape& tape) {
  os.write(kTapeMagic.data(), kTapeMagic.size());
  put<std::uint64_t>(os, tape.modes());
  put<std::uint64_t>(os, tape.steps());
  put<double>(os, tape.dt_fine());
  put<std::uint64_t>(os, tape.seed());
  const auto raw = tape.raw();
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size() * sizeof(double)));
}

NoiseTape read_tape_binary(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kTapeMagic) throw ConfigError("tape: bad magic");
  const auto modes = get<std::uint64_t>(is);
  const auto steps = get<std::uint64_t>(is);
  const auto dt_fine = get<double>(is);
  const auto seed = get<std::uint64_t>(is);
  if (steps != 0 && modes > kMaxTapeEntries / steps) throw ResourceError("tape: header exceeds entry cap");
  std::vector<double> data(modes * steps);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!is) throw ConfigError("tape: truncated binary stream");
  return NoiseTape(modes, steps, dt_fine, seed, std::move(data));
}

void write_tape_csv(std::ostream& os, const NoiseTape& tape) {
  const auto old_precision = os.precision(17);
  os << "# modes=" << tape.modes() << ",steps=" << tape.steps() << ",dt_fine=" << tape.dt_fine()
     << ",seed=" << tape.seed() << '\n';
  for (std::size_t j = 0; j < tape.steps(); ++j) {
    auto row = tape.step(j);
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << row[k];
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace acsplit
