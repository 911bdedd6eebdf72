#include "acsplit/spectral.hpp"

#include "acsplit/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace acsplit {

namespace detail {

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per size and shared.
class SineTransform {
 public:
  explicit SineTransform(std::size_t n) : n_(n) {
    std::vector<double> in(n), out(n);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), out.data(), FFTW_RODFT00,
                             FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
    if (plan_ == nullptr) throw ResourceError("fftw: failed to create DST-I plan");
  }
  ~SineTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  SineTransform(const SineTransform&) = delete;
  SineTransform& operator=(const SineTransform&) = delete;

  /// Unnormalized DST-I: out_k = 2 sum_j in_j sin(pi (j+1)(k+1) / (n+1)).
  void execute(const double* in, double* out) const {
    fftw_execute_r2r(plan_, const_cast<double*>(in), out);
  }

  static std::shared_ptr<const SineTransform> get(std::size_t n) {
    static std::mutex cache_mutex;
    static std::map<std::size_t, std::shared_ptr<const SineTransform>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_shared<const SineTransform>(n);
    return slot;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

namespace {

bool finite_range(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

bool SpectralField::all_finite() const noexcept { return finite_range(coeffs); }
bool GridField::all_finite() const noexcept { return finite_range(values); }

LaplacianSpectrum::LaplacianSpectrum(std::size_t modes) : lambda_(modes) {
  if (modes == 0) throw ConfigError("spectrum needs at least one mode", "modes");
  for (std::size_t k = 0; k < modes; ++k) {
    const double w = static_cast<double>(k + 1) * std::numbers::pi;
    lambda_[k] = w * w;
  }
  dst_ = detail::SineTransform::get(modes);
}

double LaplacianSpectrum::node(std::size_t j) const noexcept {
  return static_cast<double>(j + 1) / static_cast<double>(modes() + 1);
}

void LaplacianSpectrum::check_size(std::size_t n, const char* what) const {
  if (n != modes()) {
    throw ConfigError(std::string(what) + ": length " + std::to_string(n) +
                      " does not match spectrum size " + std::to_string(modes()));
  }
}

void LaplacianSpectrum::to_grid(std::span<const double> in, std::span<double> out) const {
  check_size(in.size(), "to_grid input");
  check_size(out.size(), "to_grid output");
  dst_->execute(in.data(), out.data());
  const double scale = std::numbers::sqrt2 / 2.0;
  for (double& v : out) v *= scale;
}

void LaplacianSpectrum::to_spectral(std::span<const double> in, std::span<double> out) const {
  check_size(in.size(), "to_spectral input");
  check_size(out.size(), "to_spectral output");
  dst_->execute(in.data(), out.data());
  // DST-I applied twice is 2(K+1) times the identity.
  const double scale = 1.0 / (std::numbers::sqrt2 * static_cast<double>(modes() + 1));
  for (double& v : out) v *= scale;
}

GridField LaplacianSpectrum::to_grid(const SpectralField& c) const {
  GridField g(modes());
  to_grid(c.coeffs, g.values);
  return g;
}

SpectralField LaplacianSpectrum::to_spectral(const GridField& g) const {
  SpectralField c(modes());
  to_spectral(g.values, c.coeffs);
  return c;
}

void LaplacianSpectrum::semigroup_inplace(std::span<double> coeffs, double t) const {
  if (!(t >= 0.0)) throw DomainError("semigroup: time must be nonnegative");
  check_size(coeffs.size(), "semigroup");
  if (t == 0.0) return;
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] *= std::exp(-lambda_[k] * t);
}

SpectralField LaplacianSpectrum::semigroup(const SpectralField& c, double t) const {
  SpectralField out = c;
  semigroup_inplace(out.coeffs, t);
  return out;
}

SpectralField LaplacianSpectrum::fractional_power(const SpectralField& c, double r) const {
  check_size(c.size(), "fractional_power");
  SpectralField out = c;
  if (r == 0.0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out.coeffs[k] *= std::pow(lambda_[k], 0.5 * r);
  return out;
}

namespace {

int even_exponent(double q) {
  const double rounded = std::round(q);
  if (rounded != q || rounded < 2.0 || static_cast<long>(rounded) % 2 != 0) {
    throw DomainError("Lq norm requires q = 2m with m >= 1, got q = " + std::to_string(q));
  }
  return static_cast<int>(rounded);
}

double integer_power(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

double norm(const GridField& g, Norm kind) {
  switch (kind.kind) {
    case NormKind::Sup: {
      double m = 0.0;
      for (double v : g.values) m = std::max(m, std::abs(v));
      return m;
    }
    case NormKind::L2:
    case NormKind::Lq: {
      const int q = kind.kind == NormKind::L2 ? 2 : even_exponent(kind.param);
      const double h = 1.0 / static_cast<double>(g.size() + 1);
      double acc = 0.0;
      for (double v : g.values) acc += integer_power(v, q);
      return std::pow(h * acc, 1.0 / q);
    }
    case NormKind::Sobolev:
      break;
  }
  throw DomainError("Sobolev norms require a spectral field");
}

double norm(const LaplacianSpectrum& spectrum, const SpectralField& c, Norm kind) {
  switch (kind.kind) {
    case NormKind::L2: {
      double acc = 0.0;
      for (double v : c.coeffs) acc += v * v;
      return std::sqrt(acc);
    }
    case NormKind::Sobolev: {
      if (c.size() != spectrum.modes()) throw ConfigError("norm: length mismatch with spectrum");
      double acc = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double v = c.coeffs[k] * std::pow(spectrum.eigenvalue(k), 0.5 * kind.param);
        acc += v * v;
      }
      return std::sqrt(acc);
    }
    case NormKind::Lq:
      even_exponent(kind.param);
      [[fallthrough]];
    case NormKind::Sup:
      return norm(spectrum.to_grid(c), kind);
  }
  return 0.0;
}

}  // namespace acsplit
