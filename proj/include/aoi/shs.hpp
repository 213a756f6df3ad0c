#pragma once

// Stochastic-hybrid-system average-AoI solver.
//
// A chain is a finite CTMC whose edges carry binary reset matrices acting on a
// row age vector z (z' = z A), plus a binary growth vector per state (dz/dt = b_q).
// Component z_0 is the receiver AoI. The average AoI is sum_q v[q][0] where v
// solves
//
//     v_q * sum_{l out of q} rate_l = b_q pi_q + sum_{l into q} rate_l v_{from(l)} A_l.
//
// Self-transitions count on both sides of that balance but are excluded from
// the generator used for pi, since they leave the discrete state unchanged.

#include "aoi/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace aoi::shs {

struct Transition {
  int from = 0;
  int to = 0;
  double rate = 0.0;
  Eigen::MatrixXd reset;  // age_dim x age_dim, entries in {0, 1}
};

struct ShsChain {
  int n_states = 0;
  int age_dim = 0;
  std::vector<Transition> transitions;
  Eigen::MatrixXd growth;  // n_states x age_dim; row q is b_q

  /// Throws InvalidChain unless every structural invariant holds.
  void check() const;
};

struct AgeSolution {
  StationaryDistribution pi;
  Eigen::MatrixXd v;  // n_states x age_dim
  double avg_aoi = 0.0;
};

/// The three-state, two-age chain of one device for the given policy and scheme.
/// States are 0 = Idle, 1 = Waiting, 2 = Service; the ages are (receiver AoI,
/// age of the packet held by the device). Zero-rate failure edges (p = 1) are
/// dropped instead of being kept at rate 0.
ShsChain build_chain(PolicyScheme ps, double lambda, double mu, double p, double k);

StationaryDistribution stationary(const ShsChain& chain);

AgeSolution solve_age_system(const ShsChain& chain, const StationaryDistribution& pi);

/// build_chain -> stationary -> solve_age_system.
double average_aoi(PolicyScheme ps, double lambda, double mu, double p, double k);

/// JSON fixture format:
///   {"states": 3,
///    "transitions": [{"from": 0, "to": 1, "rate": 1.0, "reset": [[1,0],[0,0]]}, ...],
///    "growth": [[1,0],[1,1],[1,1]]}
ShsChain chain_from_json(const std::string& text);
std::string chain_to_json(const ShsChain& chain);
ShsChain load_chain(const std::filesystem::path& path);

}  // namespace aoi::shs
