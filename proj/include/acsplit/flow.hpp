#pragma once

// Exact flow of the reaction ODE x' = x - x^3 and its increment quotient.

#include "acsplit/spectral.hpp"

#include <cmath>

namespace acsplit {

/// Step size together with the cap it must stay below.
struct FlowParams {
  double dt = 0.0;
  double dt0 = 0.5;

  /// Throws DomainError unless 0 <= dt <= dt0 < 1.
  void validate() const;
};

/// F(z) = z - z^3.
constexpr double drift(double z) noexcept { return z - z * z * z; }

/// Phi_dt and Psi_dt for one fixed step, with the exponential hoisted out.
class FlowStep {
 public:
  explicit FlowStep(double dt);

  double dt() const noexcept { return dt_; }
  double phi(double z) const noexcept {
    if (dt_ == 0.0) return z;
    return z / std::sqrt(e_ + z * z * one_minus_e_);
  }
  double psi(double z) const noexcept {
    if (dt_ == 0.0) return drift(z);
    const double root = std::sqrt(e_ + z * z * one_minus_e_);
    return z * one_minus_e_ * (1.0 - z * z) / (dt_ * root * (1.0 + root));
  }

 private:
  double dt_;
  double one_minus_e_;  // -expm1(-2 dt)
  double e_;
};

/// Phi_dt(z) = z / sqrt(z^2 + (1 - z^2) e^{-2 dt}). Throws DomainError for dt < 0.
double phi(double z, double dt);

/// Psi_dt(z) = (Phi_dt(z) - z) / dt with Psi_0 = F, evaluated without cancellation:
///   Psi = z (1 - E)(1 - z^2) / (dt sqrt(D) (1 + sqrt(D))),  E = e^{-2dt}, D = E + z^2 (1 - E).
double psi(double z, double dt);

GridField apply_phi(const GridField& g, double dt);
GridField apply_psi(const GridField& g, double dt);
GridField apply_drift(const GridField& g);

}  // namespace acsplit
