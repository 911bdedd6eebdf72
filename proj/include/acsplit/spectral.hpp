#pragma once

/**
 * Dirichlet Laplacian on (0, 1) truncated to K sine modes.
 *
 * Eigenpairs: lambda_k = (k pi)^2, e_k(x) = sqrt(2) sin(k pi x), k = 1..K
 * (stored 0-based). A function is represented either by its coefficients in
 * {e_k} (SpectralField) or by its values on the K interior nodes
 * x_j = (j + 1) / (K + 1) (GridField). The two are related by a scaled DST-I,
 * which is an exact bijection between the two K-dimensional spaces.
 */

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace acsplit {

/// Coefficients in the orthonormal sine basis.
struct SpectralField {
  std::vector<double> coeffs;

  SpectralField() = default;
  explicit SpectralField(std::size_t modes) : coeffs(modes, 0.0) {}
  explicit SpectralField(std::vector<double> c) : coeffs(std::move(c)) {}

  std::size_t size() const noexcept { return coeffs.size(); }
  bool all_finite() const noexcept;
};

/// Nodal values at the interior grid points.
struct GridField {
  std::vector<double> values;

  GridField() = default;
  explicit GridField(std::size_t nodes) : values(nodes, 0.0) {}
  explicit GridField(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  bool all_finite() const noexcept;
};

namespace detail {
class SineTransform;
}

class LaplacianSpectrum {
 public:
  explicit LaplacianSpectrum(std::size_t modes);

  std::size_t modes() const noexcept { return lambda_.size(); }
  std::span<const double> eigenvalues() const noexcept { return lambda_; }
  /// 0-based: eigenvalue(0) == pi^2.
  double eigenvalue(std::size_t k) const { return lambda_.at(k); }
  /// Interior node x_j = (j + 1) / (K + 1).
  double node(std::size_t j) const noexcept;
  /// Quadrature weight of every interior node, 1 / (K + 1).
  double node_weight() const noexcept { return 1.0 / static_cast<double>(modes() + 1); }

  GridField to_grid(const SpectralField& c) const;
  SpectralField to_spectral(const GridField& g) const;
  // Allocation-free variants; `out` must have length K and must not alias `in`.
  void to_grid(std::span<const double> in, std::span<double> out) const;
  void to_spectral(std::span<const double> in, std::span<double> out) const;

  /// S(t) = e^{At}: coeffs[k] *= exp(-lambda_k t). Throws DomainError for t < 0.
  SpectralField semigroup(const SpectralField& c, double t) const;
  void semigroup_inplace(std::span<double> coeffs, double t) const;

  /// (-A)^{r/2}: coeffs[k] *= lambda_k^{r/2}.
  SpectralField fractional_power(const SpectralField& c, double r) const;

  /// Samples a function at the interior nodes.
  template <class F>
  GridField sample(F&& f) const {
    GridField g(modes());
    for (std::size_t j = 0; j < modes(); ++j) g.values[j] = f(node(j));
    return g;
  }

 private:
  void check_size(std::size_t n, const char* what) const;

  std::vector<double> lambda_;
  std::shared_ptr<const detail::SineTransform> dst_;
};

enum class NormKind { L2, Lq, Sup, Sobolev };

struct Norm {
  NormKind kind = NormKind::L2;
  /// q for Lq (even integer >= 2), s for Sobolev; unused otherwise.
  double param = 0.0;

  static Norm l2() { return {NormKind::L2, 2.0}; }
  static Norm lq(int q) { return {NormKind::Lq, static_cast<double>(q)}; }
  static Norm sup() { return {NormKind::Sup, 0.0}; }
  static Norm sobolev(double s) { return {NormKind::Sobolev, s}; }
};

/// L2 via Parseval, Lq/sup via grid quadrature, H^s = ||(-A)^{s/2} c||_{L2}.
double norm(const LaplacianSpectrum& spectrum, const SpectralField& c, Norm kind);

/// Grid quadrature: h sum |g_j|^q with h = 1/(K+1) and zero boundary values.
/// Sobolev norms need the spectral representation and are rejected here.
double norm(const GridField& g, Norm kind);

}  // namespace acsplit
