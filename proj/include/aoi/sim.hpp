#pragma once

// Exact event-driven simulation of N devices contending for M channels under
// idealised CSMA, with per-device receiver AoI accounting.
//
// Each device runs three exponential clocks: arrivals (rate lambda, always on),
// backoff (rate w, while Waiting) and service (rate mu, while in Service). At a
// backoff expiry the device senses one channel chosen uniformly among M; a busy
// channel means a fresh backoff. This gives each waiting device an access rate
// of exactly w (1 - busy / M).

#include "aoi/core.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace aoi::sim {

struct StopRule {
  enum class Kind { Arrivals, Horizon };
  Kind kind = Kind::Arrivals;
  double value = 50000.0;  // system-wide arrival count, or simulated time

  static StopRule arrivals(std::uint64_t count) { return {Kind::Arrivals, static_cast<double>(count)}; }
  static StopRule horizon(double time) { return {Kind::Horizon, time}; }
};

enum class EventKind : std::uint8_t { Arrival = 0, BackoffExpiry = 1, ServiceEnd = 2 };

enum class Mode : std::uint8_t { Idle = 0, Waiting = 1, Service = 2 };

/// Snapshot handed to the observer after each event has been applied.
struct EventRecord {
  double time = 0.0;
  std::uint32_t device = 0;
  EventKind kind = EventKind::Arrival;
  Mode before = Mode::Idle;
  Mode after = Mode::Idle;
  bool delivered = false;
  double delivered_age = 0.0;
  double aoi_before = 0.0;  // receiver AoI of `device` just before the event
  double aoi_after = 0.0;
  std::int64_t n_idle = 0;
  std::int64_t n_waiting = 0;
  std::int64_t n_service = 0;
  std::int64_t busy_channels = 0;
  std::int64_t channel = -1;  // channel held by `device` after the event, or -1
};

using EventObserver = std::function<void(const EventRecord&)>;

struct SimConfig {
  SystemParams params;  // n_devices and n_channels must be set
  PolicyScheme ps;
  std::uint64_t seed = 1;
  std::uint64_t replication = 0;
  StopRule stop;
  /// Leading fraction excluded from statistics. With an arrival-count stop the
  /// window opens at arrival ceil(warmup_fraction * count).
  double warmup_fraction = 0.1;
  double sample_dt = 0.0;  // > 0 enables empirical-measure sampling
  EventObserver observer;
};

struct TrajectorySample {
  double t = 0.0;
  std::int64_t idle = 0;
  std::int64_t waiting = 0;
  std::int64_t service = 0;

  StateFractions fractions(std::int64_t n) const {
    const double inv = 1.0 / static_cast<double>(n);
    return StateFractions(idle * inv, waiting * inv, service * inv);
  }
};

struct Counts {
  std::uint64_t arrivals = 0;
  std::uint64_t delivered = 0;
  std::uint64_t failed = 0;
  std::uint64_t preempted = 0;
  std::uint64_t discarded = 0;  // WOP arrivals dropped while in service
  std::uint64_t replaced = 0;   // waiting packets replaced by a newer arrival
  std::uint64_t blocked = 0;    // backoff expiries that sensed a busy channel
  std::uint64_t events = 0;
};

struct SimResult {
  std::vector<double> avg_aoi_per_device;
  double avg_aoi_mean = 0.0;
  double avg_aoi_std_error = 0.0;
  Counts counts;
  std::vector<TrajectorySample> trajectory;
  StateFractions time_avg_fractions = StateFractions::Zero();
  double effective_k_estimate = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

SimResult run(const SimConfig& config);

/// Sampled empirical measure of a single replication; requires sample_dt > 0.
std::vector<TrajectorySample> trajectory(const SimConfig& config);

struct Replicated {
  std::vector<SimResult> runs;
  double mean = 0.0;        // mean over replications of avg_aoi_mean
  double std_error = 0.0;   // standard error across replications
  double half_width = 0.0;  // 95% normal half-width
  double k_estimate = 0.0;
};

/// Runs replications 0..n_reps-1 of `config` (replication index overrides
/// config.replication). Results are identical for any parallelism.
Replicated replicate(const SimConfig& config, int n_reps, int parallelism = 1);

/// Pointwise mean of the sampled fractions over replications with matching grids.
std::vector<std::pair<double, StateFractions>> ensemble_mean(const std::vector<SimResult>& runs, std::int64_t n);

}  // namespace aoi::sim
