#include "aoi/core.hpp"

#include <cmath>

#include <fmt/format.h>

namespace aoi {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::InfeasibleOccupancy: return "InfeasibleOccupancy";
    case ErrorKind::DegenerateRate: return "DegenerateRate";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::SingularAgeSystem: return "SingularAgeSystem";
    case ErrorKind::NegativeSolution: return "NegativeSolution";
    case ErrorKind::DivergentAoi: return "DivergentAoi";
    case ErrorKind::NoFeasibleRoot: return "NoFeasibleRoot";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::GridPointInvalid: return "GridPointInvalid";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ChannelAccounting: return "ChannelAccounting";
    case ErrorKind::InvalidChain: return "InvalidChain";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), what)), kind_(kind) {}

bool is_usage_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::InvalidConfig:
    case ErrorKind::PreconditionViolation:
    case ErrorKind::GridPointInvalid:
    case ErrorKind::InvalidChain:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::I: return "I";
    case Policy::W: return "W";
    case Policy::S: return "S";
  }
  return "?";
}

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::WP ? "WP" : "WOP";
}

std::string to_string(const PolicyScheme& ps) {
  return fmt::format("{}-{}", to_string(ps.policy), to_string(ps.scheme));
}

Policy parse_policy(std::string_view text) {
  if (text == "I" || text == "i") return Policy::I;
  if (text == "W" || text == "w") return Policy::W;
  if (text == "S" || text == "s") return Policy::S;
  throw Error(ErrorKind::InvalidParameter, fmt::format("policy '{}' is not one of I, W, S", text));
}

Scheme parse_scheme(std::string_view text) {
  if (text == "WP" || text == "wp") return Scheme::WP;
  if (text == "WOP" || text == "wop") return Scheme::WOP;
  throw Error(ErrorKind::InvalidParameter, fmt::format("scheme '{}' is not one of wp, wop", text));
}

namespace {

void require_positive(double value, const char* field) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("{} must be positive and finite, got {}", field, value));
  }
}

}  // namespace

const SystemParams& validate(const SystemParams& params) {
  require_positive(params.lambda, "lambda");
  require_positive(params.mu, "mu");
  require_positive(params.w, "w");
  require_positive(params.gamma, "gamma");
  if (!(params.p >= 0.0 && params.p <= 1.0)) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("p must lie in [0, 1], got {}", params.p));
  }
  if (params.n_devices && *params.n_devices <= 0) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("n_devices must be positive, got {}", *params.n_devices));
  }
  if (params.n_channels && *params.n_channels <= 0) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("n_channels must be positive, got {}", *params.n_channels));
  }
  if (params.n_devices && params.n_channels) {
    const double n = static_cast<double>(*params.n_devices);
    const double m = static_cast<double>(*params.n_channels);
    if (n / m != params.gamma) {
      throw Error(ErrorKind::InvalidParameter,
                  fmt::format("gamma = {} does not equal n_devices / n_channels = {}/{}", params.gamma,
                              *params.n_devices, *params.n_channels));
    }
  }
  return params;
}

SystemParams trajectory_figure_params() {
  SystemParams params;
  params.lambda = 0.8;
  params.mu = 1.0;
  params.w = 2.0;
  params.p = 0.7;
  params.gamma = 5.0;
  return params;
}

SystemParams sweep_figure_params() {
  SystemParams params = trajectory_figure_params();
  params.mu = 1.5;
  return params;
}

double effective_waiting_rate(double w, double gamma, double x_service) {
  if (x_service < 0.0) {
    throw Error(ErrorKind::PreconditionViolation, fmt::format("x_S = {} is negative", x_service));
  }
  const double busy = gamma * x_service;
  if (busy >= 1.0) {
    throw Error(ErrorKind::InfeasibleOccupancy,
                fmt::format("gamma * x_S = {} leaves no idle channel", busy));
  }
  return w * (1.0 - busy);
}

std::vector<double> linspace(double start, double end, int count) {
  if (count < 1) throw Error(ErrorKind::InvalidParameter, "grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = start;
    return grid;
  }
  const double step = (end - start) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = start + step * i;
  grid.back() = end;
  return grid;
}

}  // namespace aoi
