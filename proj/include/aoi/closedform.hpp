#pragma once

// Closed-form average AoI of one device under a given stationary distribution,
// for the three feedback policies and both preemption schemes.
//
// Every formula is a function of (lambda, mu, k, p) only, where k is the
// effective waiting rate w (1 - gamma pi_S). The formulas are written term by
// term in the grouping
//
//     total = base + coupling + correction
//
// where base is the delivery-cycle term, coupling carries the scheme-specific
// part, and correction is the (negative) stationary-distribution term shared by
// WP and WOP. The preemption gap of a policy is therefore a difference of
// coupling terms.

#include "aoi/core.hpp"

namespace aoi::closedform {

template <typename Scalar>
struct AoiBreakdown {
  Scalar base{};
  Scalar coupling{};
  Scalar correction{};
  Scalar total{};
};

namespace detail {

template <typename Scalar>
void check_inputs(Scalar lambda, Scalar mu, Scalar k, Scalar p) {
  if (!(lambda > Scalar(0)) || !(mu > Scalar(0)) || !(k > Scalar(0))) {
    throw Error(ErrorKind::DivergentAoi, "lambda, mu and k must all be positive");
  }
  if (!(p > Scalar(0))) {
    throw Error(ErrorKind::DivergentAoi, "p = 0: no packet is ever delivered");
  }
  if (p > Scalar(1)) {
    throw Error(ErrorKind::InvalidParameter, "p must not exceed 1");
  }
}

}  // namespace detail

template <typename Scalar>
AoiBreakdown<Scalar> avg_aoi(PolicyScheme ps, Scalar lambda, Scalar mu, Scalar k, Scalar p) {
  detail::check_inputs(lambda, mu, k, p);
  const Scalar one(1);
  const Scalar sum = lambda + k + mu;
  AoiBreakdown<Scalar> out;

  switch (ps.policy) {
    case Policy::I:
      out.base = (one / lambda + one / k + one / mu) / p;
      out.correction = -sum / (lambda * k + k * mu + lambda * mu);
      out.coupling = ps.scheme == Scheme::WP ? sum / ((lambda + mu) * (lambda + k))
                                             : one / mu + one / (lambda + k);
      break;
    case Policy::W:
      out.base = (p / lambda + one / k + one / mu) / p;
      out.correction = -sum / (lambda * k + lambda * mu + k * mu * p);
      out.coupling = ps.scheme == Scheme::WP
                         ? sum / ((lambda + mu) * (k + lambda) - k * mu * (one - p))
                         : sum / (mu * (k * p + lambda));
      break;
    case Policy::S: {
      const Scalar mup = mu * p;
      out.base = one / lambda + one / k + one / mup;
      out.correction = -(lambda + k + mup) / (lambda * k + (k + lambda) * mup);
      out.coupling = ps.scheme == Scheme::WP ? (mup + k + lambda) / ((lambda + mup) * (lambda + k))
                                             : one / mup + one / (lambda + k);
      break;
    }
  }
  out.total = out.base + out.coupling + out.correction;
  return out;
}

template <typename Scalar>
Scalar avg_aoi_total(PolicyScheme ps, Scalar lambda, Scalar mu, Scalar k, Scalar p) {
  return avg_aoi(ps, lambda, mu, k, p).total;
}

/// Stationary distribution of the per-device chain with effective waiting rate k.
template <typename Scalar>
Fractions<Scalar> stationary(Policy policy, Scalar lambda, Scalar mu, Scalar k, Scalar p) {
  detail::check_inputs(lambda, mu, k, p);
  Fractions<Scalar> weights;
  switch (policy) {
    case Policy::I: weights << k * mu, lambda * mu, k * lambda; break;
    case Policy::W: weights << k * mu * p, lambda * mu, k * lambda; break;
    case Policy::S: weights << k * mu * p, lambda * mu * p, k * lambda; break;
  }
  return weights / weights.sum();
}

/// WOP minus WP average AoI, in the simplified single-fraction form.
template <typename Scalar>
Scalar preemption_gap(Policy policy, Scalar lambda, Scalar mu, Scalar k, Scalar p) {
  detail::check_inputs(lambda, mu, k, p);
  switch (policy) {
    case Policy::I:
      return lambda * (lambda + k + mu) / (mu * (lambda + mu) * (lambda + k));
    case Policy::W:
      return lambda * (lambda + k + mu) * (k + lambda) /
             (mu * (k * p + lambda) * (k * (lambda + mu * p) + lambda * (lambda + mu)));
    case Policy::S: {
      const Scalar mup = mu * p;
      return lambda * (lambda + k + mup) / (mup * (lambda + mup) * (lambda + k));
    }
  }
  return Scalar(0);
}

}  // namespace aoi::closedform
