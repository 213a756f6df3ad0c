#include "aoi/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace aoi::meanfield {

namespace {

StateFractions raw_drift(Policy policy, const SystemParams& params, const StateFractions& x) {
  const auto d = drift_components<double>(policy, params.lambda, params.mu, params.w, params.gamma, params.p,
                                          x(kIdle), x(kWaiting), x(kService));
  return StateFractions(d[0], d[1], d[2]);
}

// Rate multiplying x_S in the x_I ratio, and in the x_W ratio.
double idle_ratio_rate(Policy policy, const SystemParams& params) {
  return policy == Policy::I ? params.mu : params.mu * params.p;
}
double waiting_ratio_rate(Policy policy, const SystemParams& params) {
  return policy == Policy::S ? params.mu * params.p : params.mu;
}

void check_equilibrium_params(Policy policy, const SystemParams& params) {
  validate(params);
  if (policy != Policy::I && !(params.p > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "p must be positive for policies W and S");
  }
}

}  // namespace

StateFractions drift(Policy policy, const SystemParams& params, const StateFractions& x) {
  if (params.gamma * x(kService) > 1.0 + 1e-12) {
    throw Error(ErrorKind::InfeasibleOccupancy,
                fmt::format("gamma * x_S = {} exceeds 1", params.gamma * x(kService)));
  }
  return raw_drift(policy, params, x);
}

Equilibrium equilibrium(Policy policy, const SystemParams& params) {
  check_equilibrium_params(policy, params);
  const double lambda = params.lambda;
  const double w = params.w;
  const double gamma = params.gamma;
  const double a = idle_ratio_rate(policy, params);
  const double c = waiting_ratio_rate(policy, params);

  const double qa = w * gamma * (lambda + a);
  const double qb = w * (lambda + a + lambda * gamma) + lambda * c;
  const double qc = lambda * w;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (!(disc >= 0.0)) {
    throw Error(ErrorKind::NoFeasibleRoot, fmt::format("negative discriminant {}", disc));
  }
  const double root = std::sqrt(disc);
  // qb > 0, so the smaller root in product form avoids cancellation.
  const double small = 2.0 * qc / (qb + root);
  const double large = (qb + root) / (2.0 * qa);
  const double cap = 1.0 / gamma;
  const bool small_ok = small >= 0.0 && small < cap;
  const bool large_ok = large >= 0.0 && large < cap;
  if (small_ok == large_ok) {
    throw Error(ErrorKind::NoFeasibleRoot,
                fmt::format("roots {} and {} do not give exactly one point in [0, {})", small, large, cap));
  }
  const double x_service = small_ok ? small : large;
  const double k = w * (1.0 - gamma * x_service);

  Equilibrium eq;
  eq.x_star << a * x_service / lambda, c * x_service / k, x_service;
  eq.k_star = k;
  eq.residual = raw_drift(policy, params, eq.x_star).cwiseAbs().maxCoeff();

  const double fixed_point = lambda * k / ((lambda + a) * k + lambda * c);
  eq.fixed_point_residual = std::max({std::abs(eq.x_star.sum() - 1.0), std::abs(fixed_point - x_service),
                                      std::abs(eq.x_star(kIdle) * lambda - a * x_service) / lambda,
                                      std::abs(eq.x_star(kWaiting) * k - c * x_service) / k});
  eq.stability_margin = std::min({lambda, k, w * gamma * eq.x_star(kWaiting)});
  return eq;
}

Trajectory integrate(Policy policy, const SystemParams& params, const StateFractions& x0, double t_end, double dt,
                     const IntegrateOptions& options) {
  validate(params);
  if (!on_simplex(x0, 1e-9)) {
    throw Error(ErrorKind::PreconditionViolation,
                fmt::format("x0 = ({}, {}, {}) is not on the simplex", x0(0), x0(1), x0(2)));
  }
  if (params.gamma * x0(kService) > 1.0 + 1e-12) {
    throw Error(ErrorKind::PreconditionViolation, "x0 occupies more channels than exist");
  }
  if (!(dt > 0.0) || !(t_end >= 0.0)) {
    throw Error(ErrorKind::PreconditionViolation, "need dt > 0 and t_end >= 0");
  }

  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.points.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.points.push_back(x0);

  StateFractions x = x0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const StateFractions k1 = raw_drift(policy, params, x);
    const StateFractions k2 = raw_drift(policy, params, x + 0.5 * dt * k1);
    const StateFractions k3 = raw_drift(policy, params, x + 0.5 * dt * k2);
    const StateFractions k4 = raw_drift(policy, params, x + dt * k3);
    StateFractions next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double excursion = std::max({-next.minCoeff(), std::abs(next.sum() - 1.0),
                                       params.gamma * next(kService) - 1.0});
    if (excursion > options.step_too_large_tolerance) {
      throw Error(ErrorKind::StepTooLarge,
                  fmt::format("step {} leaves the simplex by {}; use a smaller dt than {}", i, excursion, dt));
    }
    if (excursion > options.renormalize_tolerance) {
      StateFractions fixed = next.cwiseMax(0.0);
      fixed /= fixed.sum();
      traj.max_correction = std::max(traj.max_correction, (fixed - next).cwiseAbs().maxCoeff());
      next = fixed;
    }
    x = next;
    traj.times.push_back(static_cast<double>(i) * dt);
    traj.points.push_back(x);
  }
  return traj;
}

double aoi_at_equilibrium(PolicyScheme ps, const SystemParams& params) {
  const Equilibrium eq = equilibrium(ps.policy, params);
  return closedform::avg_aoi_total(ps, params.lambda, params.mu, eq.k_star, params.p);
}

std::string_view to_string(Parameter which) {
  switch (which) {
    case Parameter::Lambda: return "lambda";
    case Parameter::Mu: return "mu";
    case Parameter::W: return "w";
    case Parameter::Gamma: return "gamma";
    case Parameter::P: return "p";
  }
  return "?";
}

Parameter parse_parameter(std::string_view text) {
  if (text == "lambda") return Parameter::Lambda;
  if (text == "mu") return Parameter::Mu;
  if (text == "w") return Parameter::W;
  if (text == "gamma") return Parameter::Gamma;
  if (text == "p") return Parameter::P;
  throw Error(ErrorKind::InvalidParameter, fmt::format("unknown parameter '{}'", text));
}

double get(const SystemParams& params, Parameter which) {
  switch (which) {
    case Parameter::Lambda: return params.lambda;
    case Parameter::Mu: return params.mu;
    case Parameter::W: return params.w;
    case Parameter::Gamma: return params.gamma;
    case Parameter::P: return params.p;
  }
  return 0.0;
}

void set(SystemParams& params, Parameter which, double value) {
  switch (which) {
    case Parameter::Lambda: params.lambda = value; break;
    case Parameter::Mu: params.mu = value; break;
    case Parameter::W: params.w = value; break;
    case Parameter::Gamma: params.gamma = value; break;
    case Parameter::P: params.p = value; break;
  }
}

Claims claimed_signs(Policy policy, Parameter which) {
  // x_I* is a fixed multiple of x_S* for every policy, so the two always move
  // together; w and gamma signs follow from that.
  const bool aoi_claimed = policy != Policy::W;
  Claims c;
  switch (which) {
    case Parameter::Lambda:
      c.x = {-1, +1, +1};
      break;
    case Parameter::Mu:
      c.x = {+1, std::nullopt, -1};
      if (aoi_claimed) c.aoi = -1;
      break;
    case Parameter::W:
      c.x = {+1, -1, +1};
      if (aoi_claimed) c.aoi = -1;
      break;
    case Parameter::Gamma:
      c.x = {-1, +1, -1};
      if (aoi_claimed) c.aoi = +1;
      break;
    case Parameter::P:
      if (policy == Policy::I) {
        c.x = {0, 0, 0};
      } else if (policy == Policy::W) {
        c.x = {+1, -1, -1};
      } else {
        c.x = {+1, std::nullopt, -1};
      }
      if (aoi_claimed) c.aoi = -1;
      break;
  }
  return c;
}

namespace {

bool sign_holds(const ClaimedSign& claim, double derivative) {
  if (!claim) return true;
  if (*claim == 0) return std::abs(derivative) <= 1e-12;
  return *claim > 0 ? derivative > 0.0 : derivative < 0.0;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

MonotonicityReport monotonicity_report(PolicyScheme ps, const SystemParams& base, Parameter which,
                                       const std::vector<double>& grid, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::GridPointInvalid, "finite-difference step must be positive");
  MonotonicityReport report;
  report.ps = ps;
  report.which = which;
  report.claims = claimed_signs(ps.policy, which);

  auto evaluate = [&](double value) {
    SystemParams params = base;
    set(params, which, value);
    const Equilibrium eq = equilibrium(ps.policy, params);
    return std::pair{eq.x_star, closedform::avg_aoi_total(ps, params.lambda, params.mu, eq.k_star, params.p)};
  };

  int last_sign = 0;
  for (const double value : grid) {
    SystemParams at = base;
    set(at, which, value);
    try {
      validate(at);
      if (!(at.p > 0.0)) throw Error(ErrorKind::InvalidParameter, "p must be positive");
    } catch (const Error& e) {
      throw Error(ErrorKind::GridPointInvalid, fmt::format("{} = {}: {}", to_string(which), value, e.what()));
    }

    const double step = h * std::abs(value);
    double lo = value - step;
    double hi = value + step;
    if (which == Parameter::P && hi > 1.0) hi = value;  // backward difference at p = 1

    const auto [x_hi, aoi_hi] = evaluate(hi);
    const auto [x_lo, aoi_lo] = evaluate(lo);

    MonotonicityPoint pt;
    pt.value = value;
    pt.aoi = evaluate(value).second;
    for (int i = 0; i < 3; ++i) {
      pt.dx[i] = (x_hi(i) - x_lo(i)) / (hi - lo);
      pt.x_holds[i] = sign_holds(report.claims.x[i], pt.dx[i]);
      report.all_claims_hold = report.all_claims_hold && pt.x_holds[i];
    }
    pt.daoi = (aoi_hi - aoi_lo) / (hi - lo);
    pt.aoi_holds = sign_holds(report.claims.aoi, pt.daoi);
    report.all_claims_hold = report.all_claims_hold && pt.aoi_holds;

    const int s = sign_of(pt.daoi);
    if (s != 0) {
      if (last_sign != 0 && s != last_sign) ++report.aoi_sign_changes;
      last_sign = s;
    }
    report.points.push_back(pt);
  }
  return report;
}

}  // namespace aoi::meanfield
