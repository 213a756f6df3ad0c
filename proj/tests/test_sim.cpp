#include "aoi/closedform.hpp"
#include "aoi/io.hpp"
#include "aoi/meanfield.hpp"
#include "aoi/sim.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace aoi;

namespace {

sim::SimConfig config_for(PolicyScheme ps, SystemParams params, std::int64_t n, std::int64_t m) {
  params.n_devices = n;
  params.n_channels = m;
  params.gamma = static_cast<double>(n) / static_cast<double>(m);
  sim::SimConfig cfg;
  cfg.params = params;
  cfg.ps = ps;
  return cfg;
}

sim::SimConfig desk_check(PolicyScheme ps) {
  SystemParams s;  // all rates 1, p = 1
  return config_for(ps, s, 1, 1);
}

ErrorKind kind_of(const sim::SimConfig& cfg) {
  try {
    sim::run(cfg);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidParameter;
}

}  // namespace

TEST_CASE("configuration errors") {
  auto cfg = desk_check({Policy::I, Scheme::WP});
  cfg.params.n_channels.reset();
  CHECK(kind_of(cfg) == ErrorKind::InvalidConfig);

  cfg = desk_check({Policy::I, Scheme::WP});
  cfg.params.n_devices = 0;
  CHECK_THROWS_AS(sim::run(cfg), Error);

  cfg = desk_check({Policy::I, Scheme::WP});
  cfg.warmup_fraction = 0.7;
  CHECK(kind_of(cfg) == ErrorKind::InvalidConfig);

  cfg = desk_check({Policy::I, Scheme::WP});
  cfg.sample_dt = -1.0;
  CHECK(kind_of(cfg) == ErrorKind::InvalidConfig);

  cfg = desk_check({Policy::I, Scheme::WP});
  cfg.stop = sim::StopRule::arrivals(0);
  CHECK(kind_of(cfg) == ErrorKind::InvalidConfig);

  cfg = desk_check({Policy::I, Scheme::WP});
  CHECK_THROWS_AS(sim::replicate(cfg, 0), Error);
  CHECK_THROWS_AS(sim::trajectory(cfg), Error);

  cfg = desk_check({Policy::I, Scheme::WP});
  cfg.params.gamma = 2.0;
  CHECK_THROWS_AS(sim::run(cfg), Error);
}

TEST_CASE("single device on a single channel matches the two-state closed form") {
  for (auto scheme : kSchemes) {
    auto cfg = desk_check({Policy::I, scheme});
    cfg.stop = sim::StopRule::arrivals(200000);
    const auto rep = sim::replicate(cfg, 4);
    const double expected = closedform::avg_aoi_total({Policy::I, scheme}, 1.0, 1.0, 1.0, 1.0);
    CHECK(expected == doctest::Approx(scheme == Scheme::WP ? 2.75 : 3.5));
    CHECK(rep.mean == doctest::Approx(expected).epsilon(0.02));
  }
}

TEST_CASE("single device with failures matches the closed form for every policy") {
  SystemParams s;
  s.lambda = 0.7;
  s.mu = 1.3;
  s.w = 1.6;
  s.p = 0.6;
  for (const auto& ps : kAllPolicySchemes) {
    auto cfg = config_for(ps, s, 1, 1);
    cfg.stop = sim::StopRule::arrivals(200000);
    const auto rep = sim::replicate(cfg, 4);
    INFO(to_string(ps));
    // One device never sees a busy channel, so k = w.
    CHECK(rep.mean == doctest::Approx(closedform::avg_aoi_total(ps, s.lambda, s.mu, s.w, s.p)).epsilon(0.02));
  }
}

TEST_CASE("observer sees a consistent system") {
  for (const auto& ps : kAllPolicySchemes) {
    auto cfg = config_for(ps, trajectory_figure_params(), 50, 10);
    cfg.stop = sim::StopRule::arrivals(5000);
    std::vector<std::int64_t> owner(10, -1);
    std::vector<double> last_aoi(50, 0.0), last_time(50, 0.0);
    double prev_time = 0.0;
    bool ok = true;
    int deliveries = 0;
    cfg.observer = [&](const sim::EventRecord& r) {
      ok &= r.time >= prev_time;
      prev_time = r.time;
      ok &= r.n_idle + r.n_waiting + r.n_service == 50;
      ok &= r.busy_channels == r.n_service && r.busy_channels <= 10;
      // channel held by the device matches the owner table
      for (auto& o : owner) {
        if (o == r.device) o = -1;
      }
      if (r.channel >= 0) {
        ok &= owner[static_cast<std::size_t>(r.channel)] == -1;
        owner[static_cast<std::size_t>(r.channel)] = r.device;
      }
      ok &= (r.after == sim::Mode::Service) == (r.channel >= 0);
      // AoI grows at unit slope between deliveries and drops only at one
      const double grown = last_aoi[r.device] + (r.time - last_time[r.device]);
      ok &= std::abs(r.aoi_before - grown) < 1e-9;
      if (r.delivered) {
        ++deliveries;
        ok &= r.kind == sim::EventKind::ServiceEnd;
        ok &= r.delivered_age > 0.0;
        ok &= std::abs(r.delivered_age - r.aoi_after) < 1e-9;
        ok &= r.aoi_after <= r.aoi_before;
      } else {
        ok &= r.aoi_after == r.aoi_before;
      }
      last_aoi[r.device] = r.aoi_after;
      last_time[r.device] = r.time;
    };
    const auto res = sim::run(cfg);
    INFO(to_string(ps));
    CHECK(ok);
    CHECK(deliveries == static_cast<int>(res.counts.delivered));
    CHECK(res.counts.arrivals == 5000);
    std::int64_t busy = 0;
    for (auto o : owner) busy += o >= 0;
    CHECK(busy <= 10);
  }
}

TEST_CASE("policy-specific counters") {
  auto base = trajectory_figure_params();
  auto cfg = config_for({Policy::I, Scheme::WOP}, base, 50, 10);
  cfg.stop = sim::StopRule::arrivals(5000);
  auto r = sim::run(cfg);
  CHECK(r.counts.preempted == 0);
  CHECK(r.counts.discarded > 0);
  CHECK(r.counts.failed > 0);
  CHECK(r.counts.blocked > 0);

  cfg.ps = {Policy::W, Scheme::WP};
  r = sim::run(cfg);
  CHECK(r.counts.discarded == 0);
  CHECK(r.counts.preempted > 0);
  CHECK(r.counts.replaced > 0);
}

TEST_CASE("with p = 1 the three policies produce the same event sequence") {
  SystemParams s = trajectory_figure_params();
  s.p = 1.0;
  std::vector<std::vector<std::tuple<double, std::uint32_t, int>>> seqs;
  std::vector<double> means;
  for (auto policy : kPolicies) {
    auto cfg = config_for({policy, Scheme::WP}, s, 20, 4);
    cfg.stop = sim::StopRule::arrivals(3000);
    seqs.emplace_back();
    auto& seq = seqs.back();
    cfg.observer = [&](const sim::EventRecord& r) { seq.emplace_back(r.time, r.device, static_cast<int>(r.kind)); };
    means.push_back(sim::run(cfg).avg_aoi_mean);
  }
  CHECK(seqs[0] == seqs[1]);
  CHECK(seqs[0] == seqs[2]);
  CHECK(means[0] == means[1]);
  CHECK(means[0] == means[2]);
}

TEST_CASE("sampled trajectory") {
  auto cfg = config_for({Policy::W, Scheme::WP}, trajectory_figure_params(), 40, 8);
  cfg.stop = sim::StopRule::horizon(5.0);
  cfg.sample_dt = 0.5;
  const auto samples = sim::trajectory(cfg);
  REQUIRE(samples.size() == 11);
  CHECK(samples.front().t == 0.0);
  CHECK(samples.front().idle == 40);
  CHECK(samples.front().waiting == 0);
  CHECK(samples.front().service == 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(samples[i].t == doctest::Approx(0.5 * static_cast<double>(i)));
    CHECK(samples[i].idle + samples[i].waiting + samples[i].service == 40);
    CHECK(samples[i].service <= 8);
    const auto x = samples[i].fractions(40);
    for (int j = 0; j < 3; ++j) {
      const double scaled = x(j) * 40.0;
      CHECK(scaled == doctest::Approx(std::round(scaled)));
    }
  }
  CHECK(samples.back().fractions(40).sum() == doctest::Approx(1.0));
}

TEST_CASE("replications are reproducible and independent of parallelism") {
  auto cfg = config_for({Policy::S, Scheme::WOP}, trajectory_figure_params(), 30, 6);
  cfg.stop = sim::StopRule::arrivals(3000);
  cfg.seed = 42;
  const auto a = sim::replicate(cfg, 6, 1);
  const auto b = sim::replicate(cfg, 6, 3);
  const auto c = sim::replicate(cfg, 6, 1);
  REQUIRE(a.runs.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.runs[i].avg_aoi_per_device == b.runs[i].avg_aoi_per_device);
    CHECK(a.runs[i].avg_aoi_per_device == c.runs[i].avg_aoi_per_device);
  }
  CHECK(a.mean == b.mean);
  CHECK(a.half_width == b.half_width);
  CHECK(a.runs[0].avg_aoi_mean != a.runs[1].avg_aoi_mean);

  cfg.seed = 43;
  CHECK(sim::replicate(cfg, 1).mean != a.runs[0].avg_aoi_mean);
}

TEST_CASE("confidence half-width shrinks like one over root n") {
  auto cfg = config_for({Policy::W, Scheme::WP}, trajectory_figure_params(), 50, 10);
  cfg.stop = sim::StopRule::arrivals(5000);
  const auto small = sim::replicate(cfg, 25, 4);
  const auto large = sim::replicate(cfg, 100, 4);
  CHECK(small.half_width == doctest::Approx(1.96 * small.std_error));
  const double ratio = small.half_width / large.half_width;
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.6);
}

TEST_CASE("preemption lowers AoI in a dense system") {
  const auto s = trajectory_figure_params();
  for (auto policy : kPolicies) {
    auto wp = config_for({policy, Scheme::WP}, s, 1000, 200);
    wp.stop = sim::StopRule::arrivals(200000);
    auto wop = wp;
    wop.ps.scheme = Scheme::WOP;
    const auto a = sim::replicate(wp, 6, 4);
    const auto b = sim::replicate(wop, 6, 4);
    INFO(to_string(policy), " WP ", a.mean, " +- ", a.std_error, " WOP ", b.mean, " +- ", b.std_error);
    CHECK(b.mean - a.mean > 2.0 * std::hypot(a.std_error, b.std_error));
    // and agrees with the mean-field prediction
    CHECK(a.mean == doctest::Approx(meanfield::aoi_at_equilibrium(wp.ps, s)).epsilon(0.02));
    CHECK(b.mean == doctest::Approx(meanfield::aoi_at_equilibrium(wop.ps, s)).epsilon(0.02));
    CHECK(a.k_estimate == doctest::Approx(meanfield::equilibrium(policy, s).k_star).epsilon(0.02));
  }
}

TEST_CASE("ensemble mean follows the mean-field ODE at N = 1000") {
  const auto s = trajectory_figure_params();
  auto cfg = config_for({Policy::W, Scheme::WP}, s, 1000, 200);
  cfg.stop = sim::StopRule::horizon(10.0);
  cfg.sample_dt = 1.0;
  const auto rep = sim::replicate(cfg, 100, 4);
  const auto mean = sim::ensemble_mean(rep.runs, 1000);
  REQUIRE(mean.size() == 11);
  const auto ode = meanfield::integrate(Policy::W, s, StateFractions(1, 0, 0), 10.0, 0.01);
  for (const auto& [t, x] : mean) {
    const auto idx = static_cast<std::size_t>(std::lround(t / 0.01));
    INFO("t = ", t);
    CHECK((x - ode.points[idx]).cwiseAbs().maxCoeff() < 0.01);
  }
}

TEST_CASE("time-averaged occupancy matches the equilibrium") {
  const auto s = trajectory_figure_params();
  auto cfg = config_for({Policy::S, Scheme::WP}, s, 500, 100);
  cfg.stop = sim::StopRule::arrivals(100000);
  const auto r = sim::run(cfg);
  const auto eq = meanfield::equilibrium(Policy::S, s);
  CHECK((r.time_avg_fractions - eq.x_star).cwiseAbs().maxCoeff() < 0.01);
  CHECK(r.time_avg_fractions.sum() == doctest::Approx(1.0));
}

TEST_CASE("device and trajectory CSV layout") {
  std::ostringstream a;
  io::write_device_aoi(a, {1.5, 2.25});
  CHECK(a.str() == "device_id,avg_aoi\n0,1.5\n1,2.25\n");

  std::ostringstream b;
  io::write_sim_trajectory(b, {sim::TrajectorySample{0.0, 4, 0, 0}, sim::TrajectorySample{0.5, 2, 1, 1}}, 4);
  CHECK(b.str() == "t,x_I,x_W,x_S\n0,1,0,0\n0.5,0.5,0.25,0.25\n");

  std::ostringstream c;
  io::CsvWriter w(c, {"a", "b"});
  w.row({1.25, std::string("x")});
  CHECK(c.str() == "a,b\n1.25,x\n");
  CHECK_THROWS_AS(w.row({1.0}), Error);
}
