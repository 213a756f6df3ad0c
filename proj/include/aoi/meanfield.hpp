#pragma once

// Infinite-population (N -> infinity, gamma = N/M fixed) limit of the device
// population: drift of the empirical measure, its unique equilibrium, a
// fixed-step RK4 integrator, and finite-difference monotonicity checks.

#include "aoi/closedform.hpp"
#include "aoi/core.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace aoi::meanfield {

/// Drift components (dx_I, dx_W, dx_S). Uses only +, -, * so it can be
/// evaluated exactly on rational scalars; the components sum to zero
/// identically for every policy.
template <typename Scalar>
std::array<Scalar, 3> drift_components(Policy policy, const Scalar& lambda, const Scalar& mu, const Scalar& w,
                                       const Scalar& gamma, const Scalar& p, const Scalar& x_idle,
                                       const Scalar& x_waiting, const Scalar& x_service) {
  const Scalar one(1);
  const Scalar arrivals = lambda * x_idle;
  const Scalar access = w * (one - gamma * x_service) * x_waiting;
  // Completions split into (back to Idle, back to Waiting, leave Service).
  Scalar to_idle, to_waiting, leave_service;
  switch (policy) {
    case Policy::I:
      to_idle = mu * x_service;
      to_waiting = Scalar(0);
      leave_service = mu * x_service;
      break;
    case Policy::W:
      to_idle = mu * p * x_service;
      to_waiting = mu * (one - p) * x_service;
      leave_service = mu * x_service;
      break;
    case Policy::S:
    default:
      to_idle = mu * p * x_service;
      to_waiting = Scalar(0);
      leave_service = mu * p * x_service;
      break;
  }
  return {to_idle - arrivals, arrivals - access + to_waiting, access - leave_service};
}

/// Drift at x; throws InfeasibleOccupancy when gamma x_S > 1.
StateFractions drift(Policy policy, const SystemParams& params, const StateFractions& x);

struct Equilibrium {
  StateFractions x_star = StateFractions::Zero();
  double k_star = 0.0;
  double residual = 0.0;           // max |drift| at x_star
  double fixed_point_residual = 0.0;  // max residual of the ratio and fixed-point equations
  double stability_margin = 0.0;   // min{lambda, k*, w gamma x_W*}
};

/// Closed-form equilibrium: x_S* is the root in [0, 1/gamma) of
///   w gamma (lambda + a) x^2 - (w (lambda + a + lambda gamma) + lambda c) x + lambda w = 0
/// with a = mu (I) or mu p (W, S) and c = mu (I, W) or mu p (S).
Equilibrium equilibrium(Policy policy, const SystemParams& params);

struct Trajectory {
  std::vector<double> times;
  std::vector<StateFractions> points;
  double max_correction = 0.0;  // largest renormalisation applied to stay on the simplex
};

struct IntegrateOptions {
  double renormalize_tolerance = 1e-12;
  double step_too_large_tolerance = 1e-3;
};

/// Classical RK4 with fixed step dt from x0 to t_end, sampling every step.
Trajectory integrate(Policy policy, const SystemParams& params, const StateFractions& x0, double t_end, double dt,
                     const IntegrateOptions& options = {});

/// Equilibrium k* fed into the closed-form average AoI.
double aoi_at_equilibrium(PolicyScheme ps, const SystemParams& params);

enum class Parameter { Lambda, Mu, W, Gamma, P };
std::string_view to_string(Parameter which);
Parameter parse_parameter(std::string_view text);
double get(const SystemParams& params, Parameter which);
void set(SystemParams& params, Parameter which, double value);

/// Expected sign of a derivative: +1, -1, 0 (identically zero), or none when
/// no claim is made.
using ClaimedSign = std::optional<int>;

struct Claims {
  std::array<ClaimedSign, 3> x;  // (x_I*, x_W*, x_S*)
  ClaimedSign aoi;
};

/// Signs asserted for the equilibrium (all policies) and for the average AoI
/// (policies I and S only; policy W is reported but never asserted).
Claims claimed_signs(Policy policy, Parameter which);

struct MonotonicityPoint {
  double value = 0.0;
  std::array<double, 3> dx{};
  double aoi = 0.0;
  double daoi = 0.0;
  std::array<bool, 3> x_holds{};  // true when no claim or the claim holds
  bool aoi_holds = true;
};

struct MonotonicityReport {
  PolicyScheme ps;
  Parameter which = Parameter::Lambda;
  Claims claims;
  std::vector<MonotonicityPoint> points;
  int aoi_sign_changes = 0;   // sign changes of dAoI along the grid
  bool all_claims_hold = true;
};

/// Central finite differences (step h relative to the grid value, one-sided at
/// the p = 1 boundary) of x* and of the equilibrium AoI along a parameter grid.
MonotonicityReport monotonicity_report(PolicyScheme ps, const SystemParams& base, Parameter which,
                                       const std::vector<double>& grid, double h = 1e-4);

}  // namespace aoi::meanfield
