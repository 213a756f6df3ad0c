#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aoi {

/// Failure categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
  InvalidParameter,
  InfeasibleOccupancy,
  DegenerateRate,
  NotIrreducible,
  SingularAgeSystem,
  NegativeSolution,
  DivergentAoi,
  NoFeasibleRoot,
  StepTooLarge,
  PreconditionViolation,
  GridPointInvalid,
  InvalidConfig,
  ChannelAccounting,
  InvalidChain,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for failures caused by bad user input rather than by the numerics.
bool is_usage_error(ErrorKind kind);

enum class Policy : std::uint8_t { I, W, S };
enum class Scheme : std::uint8_t { WP, WOP };

inline constexpr Policy kPolicies[] = {Policy::I, Policy::W, Policy::S};
inline constexpr Scheme kSchemes[] = {Scheme::WP, Scheme::WOP};

struct PolicyScheme {
  Policy policy = Policy::I;
  Scheme scheme = Scheme::WP;

  friend bool operator==(const PolicyScheme&, const PolicyScheme&) = default;
};

inline constexpr PolicyScheme kAllPolicySchemes[] = {
    {Policy::I, Scheme::WP}, {Policy::I, Scheme::WOP},
    {Policy::W, Scheme::WP}, {Policy::W, Scheme::WOP},
    {Policy::S, Scheme::WP}, {Policy::S, Scheme::WOP},
};

std::string_view to_string(Policy policy);
std::string_view to_string(Scheme scheme);
std::string to_string(const PolicyScheme& ps);
Policy parse_policy(std::string_view text);
Scheme parse_scheme(std::string_view text);

/// Rates and population parameters of one system.
///
/// gamma is kept independently of (n_devices, n_channels) so the analytical and
/// mean-field paths work without a finite population. When both counts are set,
/// validate() requires gamma == n_devices / n_channels.
struct SystemParams {
  double lambda = 1.0;
  double mu = 1.0;
  double w = 1.0;
  double p = 1.0;
  double gamma = 1.0;
  std::optional<std::int64_t> n_devices;
  std::optional<std::int64_t> n_channels;
};

/// Returns params unchanged or throws InvalidParameter naming the field.
/// p = 0 passes here; formulas that divide by p reject it themselves.
const SystemParams& validate(const SystemParams& params);

/// Parameters printed in the figure captions, used as test and preset baselines.
SystemParams trajectory_figure_params();  // lambda=0.8, mu=1, w=2, gamma=5, p=0.7
SystemParams sweep_figure_params();       // lambda=0.8, mu=1.5, w=2, gamma=5, p=0.7

/// Index of each device state inside a fractions vector.
enum DeviceMode : int { kIdle = 0, kWaiting = 1, kService = 2 };

/// Point on the 3-simplex: fractions of devices in (Idle, Waiting, Service).
template <typename Scalar>
using Fractions = Eigen::Matrix<Scalar, 3, 1>;
using StateFractions = Fractions<double>;

/// Nonnegative entries summing to one within tol.
template <typename Derived>
bool on_simplex(const Eigen::MatrixBase<Derived>& x, double tol = 1e-12) {
  using std::abs;
  return x.minCoeff() >= -tol && abs(x.sum() - 1.0) <= tol;
}

/// Probabilities of the three device states.
struct StationaryDistribution {
  Eigen::VectorXd pi;

  double idle() const { return pi(kIdle); }
  double waiting() const { return pi(kWaiting); }
  double service() const { return pi(kService); }
};

/// k = w (1 - gamma x_S); throws InfeasibleOccupancy when gamma x_S >= 1.
double effective_waiting_rate(double w, double gamma, double x_service);

/// Inclusive linear grid of `count` points; count == 1 gives {start}.
std::vector<double> linspace(double start, double end, int count);

}  // namespace aoi
