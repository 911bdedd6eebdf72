#include "acsplit/flow.hpp"

#include "acsplit/errors.hpp"

#include <cmath>

namespace acsplit {

void FlowParams::validate() const {
  if (!(dt0 > 0.0 && dt0 < 1.0)) throw DomainError("flow: dt0 must lie in (0, 1)");
  if (!(dt >= 0.0 && dt <= dt0)) throw DomainError("flow: dt must lie in [0, dt0]");
}

namespace {

void check_dt(double dt) {
  if (!(dt >= 0.0)) throw DomainError("flow: time step must be nonnegative");
}

}  // namespace

FlowStep::FlowStep(double dt) : dt_(dt) {
  check_dt(dt);
  one_minus_e_ = -std::expm1(-2.0 * dt);
  e_ = std::exp(-2.0 * dt);
}

double phi(double z, double dt) { return FlowStep(dt).phi(z); }

double psi(double z, double dt) { return FlowStep(dt).psi(z); }

GridField apply_phi(const GridField& g, double dt) {
  const FlowStep flow(dt);
  GridField out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out.values[j] = flow.phi(g.values[j]);
  return out;
}

GridField apply_psi(const GridField& g, double dt) {
  const FlowStep flow(dt);
  GridField out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out.values[j] = flow.psi(g.values[j]);
  return out;
}

GridField apply_drift(const GridField& g) {
  GridField out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out.values[j] = drift(g.values[j]);
  return out;
}

}  // namespace acsplit
