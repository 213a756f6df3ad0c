#include "aoi/sim.hpp"

#include "aoi/rng.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <numeric>
#include <queue>
#include <thread>
#include <tuple>

#include <fmt/format.h>

namespace aoi::sim {

namespace {

struct Event {
  double time;
  std::uint32_t device;
  EventKind kind;

  // Min-heap order: time, then device, then kind.
  bool operator>(const Event& other) const {
    return std::tie(time, device, kind) > std::tie(other.time, other.device, other.kind);
  }
};

struct Device {
  Mode mode = Mode::Idle;
  double packet_time = 0.0;   // generation time of the held packet
  std::int64_t channel = -1;
  double receiver_stamp = 0.0;  // generation time of the last delivered packet
  double segment_start = 0.0;   // start of the not-yet-integrated AoI segment
  double aoi_integral = 0.0;
  rng::Stream arrival, backoff, pick, service, outcome;
};

void check_config(const SimConfig& config) {
  try {
    validate(config.params);
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  const auto& n = config.params.n_devices;
  const auto& m = config.params.n_channels;
  if (!n || !m) throw Error(ErrorKind::InvalidConfig, "simulation needs n_devices and n_channels");
  if (*n > std::int64_t{std::numeric_limits<std::uint32_t>::max()}) {
    throw Error(ErrorKind::InvalidConfig, "too many devices");
  }
  if (!(config.stop.value > 0.0) || !std::isfinite(config.stop.value)) {
    throw Error(ErrorKind::InvalidConfig, "stop value must be positive");
  }
  if (config.stop.kind == StopRule::Kind::Arrivals && config.stop.value != std::floor(config.stop.value)) {
    throw Error(ErrorKind::InvalidConfig, "arrival stop count must be an integer");
  }
  if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction <= 0.5)) {
    throw Error(ErrorKind::InvalidConfig, "warmup_fraction must lie in [0, 0.5]");
  }
  if (config.sample_dt < 0.0 || !std::isfinite(config.sample_dt)) {
    throw Error(ErrorKind::InvalidConfig, "sample_dt must be nonnegative");
  }
}

class Engine {
 public:
  explicit Engine(const SimConfig& config)
      : cfg_(config),
        p_(config.params),
        n_(*config.params.n_devices),
        m_(*config.params.n_channels),
        devices_(static_cast<std::size_t>(n_)),
        channel_owner_(static_cast<std::size_t>(m_), -1) {
    for (std::size_t d = 0; d < devices_.size(); ++d) {
      auto& dev = devices_[d];
      dev.arrival = rng::make_stream(cfg_.seed, cfg_.replication, d, rng::Purpose::Arrival);
      dev.backoff = rng::make_stream(cfg_.seed, cfg_.replication, d, rng::Purpose::Backoff);
      dev.pick = rng::make_stream(cfg_.seed, cfg_.replication, d, rng::Purpose::Channel);
      dev.service = rng::make_stream(cfg_.seed, cfg_.replication, d, rng::Purpose::Service);
      dev.outcome = rng::make_stream(cfg_.seed, cfg_.replication, d, rng::Purpose::Outcome);
      push(dev.arrival.exponential(p_.lambda), d, EventKind::Arrival);
    }
    counts_mode_[static_cast<int>(Mode::Idle)] = n_;

    if (cfg_.stop.kind == StopRule::Kind::Horizon) {
      window_start_ = cfg_.warmup_fraction * cfg_.stop.value;
      window_open_ = true;
    } else {
      target_arrivals_ = static_cast<std::uint64_t>(cfg_.stop.value);
      warmup_arrivals_ = static_cast<std::uint64_t>(std::ceil(cfg_.warmup_fraction * cfg_.stop.value));
      if (warmup_arrivals_ == 0) window_open_ = true;
    }
  }

  SimResult run() {
    const bool by_horizon = cfg_.stop.kind == StopRule::Kind::Horizon;
    double end_time = by_horizon ? cfg_.stop.value : 0.0;
    sample_until(0.0, /*inclusive=*/true);

    while (!queue_.empty()) {
      const Event ev = queue_.top();
      if (by_horizon && ev.time > cfg_.stop.value) break;
      queue_.pop();
      sample_until(ev.time, /*inclusive=*/false);
      advance_occupancy(ev.time);
      const bool stop = handle(ev);
      ++counts_.events;
      if (stop) {
        end_time = ev.time;
        break;
      }
    }
    sample_until(end_time, /*inclusive=*/true);
    advance_occupancy(end_time);
    return finish(end_time);
  }

 private:
  void push(double delay, std::size_t device, EventKind kind) {
    queue_.push(Event{now_ + delay, static_cast<std::uint32_t>(device), kind});
  }

  double aoi_of(const Device& dev) const { return now_ - dev.receiver_stamp; }

  // Adds the AoI integral of `dev` over [segment_start, t] clipped to the window.
  void close_segment(Device& dev, double t) {
    if (window_open_) {
      const double a = std::max(dev.segment_start, window_start_);
      if (t > a) {
        const double len = t - a;
        dev.aoi_integral += (a - dev.receiver_stamp) * len + 0.5 * len * len;
      }
    }
    dev.segment_start = t;
  }

  void advance_occupancy(double t) {
    if (window_open_) {
      const double a = std::max(last_time_, window_start_);
      if (t > a) {
        const double len = t - a;
        for (int i = 0; i < 3; ++i) occupancy_integral_[i] += static_cast<double>(counts_mode_[i]) * len;
      }
    }
    last_time_ = t;
    now_ = t;
  }

  void sample_until(double t, bool inclusive) {
    if (!(cfg_.sample_dt > 0.0)) return;
    const double slack = 1e-9 * cfg_.sample_dt;
    for (;;) {
      const double ts = static_cast<double>(next_sample_) * cfg_.sample_dt;
      const bool take = inclusive ? ts <= t + slack : ts < t;
      if (!take) break;
      samples_.push_back(TrajectorySample{ts, counts_mode_[0], counts_mode_[1], counts_mode_[2]});
      ++next_sample_;
    }
  }

  void set_mode(Device& dev, Mode mode) {
    --counts_mode_[static_cast<int>(dev.mode)];
    ++counts_mode_[static_cast<int>(mode)];
    dev.mode = mode;
  }

  void release_channel(Device& dev) {
    channel_owner_[static_cast<std::size_t>(dev.channel)] = -1;
    dev.channel = -1;
    --busy_;
  }

  bool handle(const Event& ev) {
    Device& dev = devices_[ev.device];
    EventRecord rec;
    rec.time = ev.time;
    rec.device = ev.device;
    rec.kind = ev.kind;
    rec.before = dev.mode;
    rec.aoi_before = aoi_of(dev);
    bool stop = false;

    switch (ev.kind) {
      case EventKind::Arrival:
        ++counts_.arrivals;
        push(dev.arrival.exponential(p_.lambda), ev.device, EventKind::Arrival);
        if (dev.mode == Mode::Idle) {
          dev.packet_time = now_;
          set_mode(dev, Mode::Waiting);
          push(dev.backoff.exponential(p_.w), ev.device, EventKind::BackoffExpiry);
        } else if (dev.mode == Mode::Waiting) {
          dev.packet_time = now_;
          ++counts_.replaced;
        } else if (cfg_.ps.scheme == Scheme::WP) {
          dev.packet_time = now_;  // service clock keeps running
          ++counts_.preempted;
        } else {
          ++counts_.discarded;
        }
        if (!window_open_ && counts_.arrivals == warmup_arrivals_) {
          window_open_ = true;
          window_start_ = now_;
        }
        stop = target_arrivals_ != 0 && counts_.arrivals >= target_arrivals_;
        break;

      case EventKind::BackoffExpiry: {
        const auto channel = static_cast<std::int64_t>(dev.pick.below(static_cast<std::uint64_t>(m_)));
        auto& owner = channel_owner_[static_cast<std::size_t>(channel)];
        if (owner < 0) {
          owner = ev.device;
          dev.channel = channel;
          ++busy_;
          set_mode(dev, Mode::Service);
          push(dev.service.exponential(p_.mu), ev.device, EventKind::ServiceEnd);
        } else {
          ++counts_.blocked;
          push(dev.backoff.exponential(p_.w), ev.device, EventKind::BackoffExpiry);
        }
        break;
      }

      case EventKind::ServiceEnd:
        if (dev.outcome.uniform() < p_.p) {
          ++counts_.delivered;
          close_segment(dev, now_);
          rec.delivered = true;
          rec.delivered_age = now_ - dev.packet_time;
          dev.receiver_stamp = dev.packet_time;
          release_channel(dev);
          set_mode(dev, Mode::Idle);
        } else {
          ++counts_.failed;
          switch (cfg_.ps.policy) {
            case Policy::I:
              release_channel(dev);
              set_mode(dev, Mode::Idle);
              break;
            case Policy::W:
              release_channel(dev);
              set_mode(dev, Mode::Waiting);
              push(dev.backoff.exponential(p_.w), ev.device, EventKind::BackoffExpiry);
              break;
            case Policy::S:
              push(dev.service.exponential(p_.mu), ev.device, EventKind::ServiceEnd);
              break;
          }
        }
        break;
    }

    const std::int64_t n_service = counts_mode_[static_cast<int>(Mode::Service)];
    if (busy_ != n_service || busy_ > m_) {
      throw Error(ErrorKind::ChannelAccounting,
                  fmt::format("{} busy channels but {} devices in service at t = {}", busy_, n_service, now_));
    }
    if (cfg_.observer) {
      rec.after = dev.mode;
      rec.aoi_after = aoi_of(dev);
      rec.n_idle = counts_mode_[0];
      rec.n_waiting = counts_mode_[1];
      rec.n_service = n_service;
      rec.busy_channels = busy_;
      rec.channel = dev.channel;
      cfg_.observer(rec);
    }
    return stop;
  }

  SimResult finish(double end_time) {
    SimResult out;
    out.counts = counts_;
    out.trajectory = std::move(samples_);
    out.window_start = window_open_ ? window_start_ : end_time;
    out.window_end = end_time;
    const double span = out.window_end - out.window_start;
    if (!(span > 0.0)) {
      throw Error(ErrorKind::InvalidConfig, "measurement window is empty; run longer or reduce warm-up");
    }

    out.avg_aoi_per_device.reserve(devices_.size());
    for (auto& dev : devices_) {
      close_segment(dev, end_time);
      out.avg_aoi_per_device.push_back(dev.aoi_integral / span);
    }
    const double count = static_cast<double>(devices_.size());
    const auto& v = out.avg_aoi_per_device;
    out.avg_aoi_mean = std::accumulate(v.begin(), v.end(), 0.0) / count;
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - out.avg_aoi_mean) * (x - out.avg_aoi_mean);
      out.avg_aoi_std_error = std::sqrt(ss / (count - 1.0) / count);
    }
    for (int i = 0; i < 3; ++i) out.time_avg_fractions(i) = occupancy_integral_[i] / span / count;
    out.effective_k_estimate = p_.w * (1.0 - p_.gamma * out.time_avg_fractions(kService));
    return out;
  }

  const SimConfig& cfg_;
  const SystemParams& p_;
  const std::int64_t n_;
  const std::int64_t m_;
  std::vector<Device> devices_;
  std::vector<std::int64_t> channel_owner_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;

  double now_ = 0.0;
  double last_time_ = 0.0;
  std::int64_t busy_ = 0;
  std::int64_t counts_mode_[3] = {0, 0, 0};
  double occupancy_integral_[3] = {0.0, 0.0, 0.0};
  Counts counts_;

  bool window_open_ = false;
  double window_start_ = 0.0;
  std::uint64_t target_arrivals_ = 0;
  std::uint64_t warmup_arrivals_ = 0;

  std::vector<TrajectorySample> samples_;
  std::uint64_t next_sample_ = 0;
};

}  // namespace

SimResult run(const SimConfig& config) {
  check_config(config);
  Engine engine(config);
  return engine.run();
}

std::vector<TrajectorySample> trajectory(const SimConfig& config) {
  if (!(config.sample_dt > 0.0)) throw Error(ErrorKind::InvalidConfig, "trajectory needs sample_dt > 0");
  return run(config).trajectory;
}

Replicated replicate(const SimConfig& config, int n_reps, int parallelism) {
  if (n_reps < 1) throw Error(ErrorKind::InvalidConfig, "need at least one replication");
  check_config(config);

  Replicated out;
  out.runs.resize(static_cast<std::size_t>(n_reps));
  int workers = parallelism > 0 ? parallelism : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n_reps);

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_reps));
  auto work = [&] {
    for (int i = next++; i < n_reps; i = next++) {
      try {
        SimConfig rep = config;
        rep.replication = static_cast<std::uint64_t>(i);
        out.runs[static_cast<std::size_t>(i)] = run(rep);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const double n = static_cast<double>(n_reps);
  for (const auto& r : out.runs) {
    out.mean += r.avg_aoi_mean;
    out.k_estimate += r.effective_k_estimate;
  }
  out.mean /= n;
  out.k_estimate /= n;
  if (n_reps > 1) {
    double ss = 0.0;
    for (const auto& r : out.runs) ss += (r.avg_aoi_mean - out.mean) * (r.avg_aoi_mean - out.mean);
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  out.half_width = 1.96 * out.std_error;
  return out;
}

std::vector<std::pair<double, StateFractions>> ensemble_mean(const std::vector<SimResult>& runs, std::int64_t n) {
  std::vector<std::pair<double, StateFractions>> out;
  if (runs.empty()) return out;
  std::size_t len = runs.front().trajectory.size();
  for (const auto& r : runs) len = std::min(len, r.trajectory.size());
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    StateFractions acc = StateFractions::Zero();
    for (const auto& r : runs) acc += r.trajectory[i].fractions(n);
    out.emplace_back(runs.front().trajectory[i].t, acc / static_cast<double>(runs.size()));
  }
  return out;
}

}  // namespace aoi::sim
