#include "cli.hpp"

#include "presets.hpp"

#include "aoi/closedform.hpp"
#include "aoi/io.hpp"
#include "aoi/meanfield.hpp"
#include "aoi/shs.hpp"
#include "aoi/sim.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

namespace aoi::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string policy = "all";
  std::string scheme = "all";
  double lambda = 0.8;
  double mu = 1.0;
  double w = 2.0;
  double k = 1.0;
  double gamma = 5.0;
  double p = 0.7;
  std::int64_t n = 0;
  std::int64_t m = 0;
  std::uint64_t seed = 1;
  std::uint64_t arrivals = 50000;
  double horizon = 0.0;
  double warmup = 0.1;
  int reps = 1;
  int threads = 1;
  std::vector<std::string> sweeps;
  std::string p_grid;
  std::string out;
  double sample_dt = 0.0;
  bool gnuplot = false;

  int count = 1000;
  double perturb = 0.0;

  bool trajectory = false;
  bool monotonicity = false;
  double t_end = 200.0;
  double dt = 0.01;
  int stride = 10;
  std::vector<double> x0{1.0, 0.0, 0.0};

  bool compare = false;

  std::string preset;
  bool list = false;
};

struct PlotHint {
  std::string x;
  std::vector<std::string> y;
};

// Destination for the CSV tables of one command: files in a directory, or
// the output stream with a blank line between tables.
class Sink {
 public:
  Sink(std::ostream& fallback, std::ostream& err, std::string dir, bool gnuplot)
      : fallback_(fallback), dir_(std::move(dir)), gnuplot_(gnuplot) {
    if (dir_.empty()) {
      if (gnuplot_) err << "note: --gnuplot-script needs --out; no script written\n";
      return;
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw Error(ErrorKind::InvalidConfig, fmt::format("cannot create output directory '{}'", dir_));
    }
  }

  void emit(const std::string& file, const std::function<void(std::ostream&)>& write, const PlotHint& hint = {}) {
    if (dir_.empty()) {
      if (tables_++ > 0) fallback_ << '\n';
      write(fallback_);
      return;
    }
    const fs::path path = fs::path(dir_) / file;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidConfig, fmt::format("cannot write '{}'", path.string()));
    write(f);
    if (gnuplot_ && !hint.x.empty()) write_script(path, hint);
  }

 private:
  static void write_script(const fs::path& csv, const PlotHint& hint) {
    fs::path gp = csv;
    gp.replace_extension(".gp");
    fs::path png = csv;
    png.replace_extension(".png");
    std::ofstream f(gp, std::ios::binary);
    f << "set datafile separator ','\n"
      << "set terminal pngcairo size 900,600\n"
      << "set output '" << png.filename().string() << "'\n"
      << "set xlabel '" << hint.x << "'\n"
      << "plot ";
    for (std::size_t i = 0; i < hint.y.size(); ++i) {
      f << (i ? ", \\\n     " : "") << "'" << csv.filename().string() << "' using '" << hint.x << "':'" << hint.y[i]
        << "' with linespoints title '" << hint.y[i] << "'";
    }
    f << '\n';
  }

  std::ostream& fallback_;
  std::string dir_;
  bool gnuplot_;
  int tables_ = 0;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<PolicyScheme> selected_combos(const Options& o) {
  const bool all_p = lower(o.policy) == "all";
  const bool all_s = lower(o.scheme) == "all";
  const auto policy = all_p ? Policy::I : parse_policy(o.policy);
  const auto scheme = all_s ? Scheme::WP : parse_scheme(o.scheme);
  std::vector<PolicyScheme> out;
  for (const auto& ps : kAllPolicySchemes) {
    if ((all_p || ps.policy == policy) && (all_s || ps.scheme == scheme)) out.push_back(ps);
  }
  return out;
}

std::vector<Policy> selected_policies(const Options& o) {
  if (lower(o.policy) == "all") return {std::begin(kPolicies), std::end(kPolicies)};
  return {parse_policy(o.policy)};
}

std::string combo_suffix(const std::vector<PolicyScheme>& combos, const PolicyScheme& ps) {
  return combos.size() == 1 ? "" : "_" + to_string(ps);
}

SystemParams system_params(const Options& o, const CLI::App& app) {
  SystemParams s;
  s.lambda = o.lambda;
  s.mu = o.mu;
  s.w = o.w;
  s.gamma = o.gamma;
  s.p = o.p;
  if (app.count("--n") > 0) s.n_devices = o.n;
  if (app.count("--m") > 0) s.n_channels = o.m;
  if (s.n_devices && s.n_channels && app.count("--gamma") == 0 && *s.n_channels > 0) {
    s.gamma = static_cast<double>(*s.n_devices) / static_cast<double>(*s.n_channels);
  }
  validate(s);
  return s;
}

std::vector<Axis> collect_axes(const Options& o) {
  std::vector<Axis> axes;
  for (const auto& s : o.sweeps) axes.push_back(parse_axis(s));
  if (!o.p_grid.empty()) axes.push_back(parse_axis(o.p_grid, "p"));
  return axes;
}

// ---------------------------------------------------------------- analytic

struct AnalyticPoint {
  double lambda, mu, k, p;
};

int analytic_table(const std::vector<PolicyScheme>& combos, const AnalyticPoint& base, const std::vector<Axis>& axes,
                   Sink& sink, const std::string& file) {
  std::vector<AnalyticPoint> points;
  if (axes.empty()) points.push_back(base);
  for (const auto& axis : axes) {
    for (double v : axis.grid()) {
      AnalyticPoint pt = base;
      if (axis.param == "lambda") pt.lambda = v;
      else if (axis.param == "mu") pt.mu = v;
      else if (axis.param == "k") pt.k = v;
      else if (axis.param == "p") pt.p = v;
      else throw Error(ErrorKind::InvalidParameter, fmt::format("analytic sweeps lambda, mu, k or p, not '{}'", axis.param));
      points.push_back(pt);
    }
  }
  for (const auto& pt : points) {
    for (const auto& [name, v] : {std::pair{"lambda", pt.lambda}, {"mu", pt.mu}, {"k", pt.k}}) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::InvalidParameter, fmt::format("{} must be positive and finite, got {}", name, v));
      }
    }
    if (!(pt.p >= 0.0 && pt.p <= 1.0)) {
      throw Error(ErrorKind::InvalidParameter, fmt::format("p must lie in [0, 1], got {}", pt.p));
    }
  }

  int status = kOk;
  const std::string x = axes.empty() ? "p" : axes.front().param;
  sink.emit(
      file,
      [&](std::ostream& os) {
        io::CsvWriter csv(os, {"policy", "scheme", "lambda", "mu", "k", "p", "aoi", "gap"});
        for (const auto& ps : combos) {
          const std::string pol(to_string(ps.policy));
          const std::string sch(to_string(ps.scheme));
          for (const auto& pt : points) {
            try {
              const double aoi = closedform::avg_aoi_total(ps, pt.lambda, pt.mu, pt.k, pt.p);
              const double gap = closedform::preemption_gap(ps.policy, pt.lambda, pt.mu, pt.k, pt.p);
              csv.row({pol, sch, pt.lambda, pt.mu, pt.k, pt.p, aoi, gap});
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::DivergentAoi) throw;
              const std::string tag(to_string(e.kind()));
              csv.row({pol, sch, pt.lambda, pt.mu, pt.k, pt.p, tag, tag});
              status = kNumerical;
            }
          }
        }
      },
      {x, {"aoi"}});
  return status;
}

int cmd_analytic(const Options& o, const CLI::App& app, Sink& sink) {
  if (app.count("--k") == 0) throw Error(ErrorKind::InvalidParameter, "analytic needs --k (effective waiting rate)");
  return analytic_table(selected_combos(o), {o.lambda, o.mu, o.k, o.p}, collect_axes(o), sink, "analytic.csv");
}

// ----------------------------------------------------------- crossvalidate

int cmd_crossvalidate(const Options& o, Sink& sink, std::ostream& err) {
  if (o.count < 1) throw Error(ErrorKind::InvalidParameter, "--count must be at least 1");
  constexpr double kThresholdValue = 1e-9;
  std::mt19937_64 gen(o.seed);
  auto uniform = [&gen](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
  };

  struct Worst {
    double dev = 0.0;
    double lambda = 0.0, mu = 0.0, k = 0.0, p = 0.0;
  };
  std::vector<Worst> worst(std::size(kAllPolicySchemes));
  for (int i = 0; i < o.count; ++i) {
    const double lambda = uniform(0.1, 5.0);
    const double mu = uniform(0.1, 5.0);
    const double k = uniform(0.1, 5.0);
    const double p = uniform(0.05, 1.0);
    for (std::size_t c = 0; c < worst.size(); ++c) {
      const auto& ps = kAllPolicySchemes[c];
      const double formula = closedform::avg_aoi_total(ps, lambda, mu, k, p) * (1.0 + o.perturb);
      const double solved = shs::average_aoi(ps, lambda, mu, p, k);
      const double dev = std::abs(formula - solved) / std::abs(solved);
      if (!(dev <= worst[c].dev)) worst[c] = {dev, lambda, mu, k, p};
    }
  }

  double overall = 0.0;
  for (const auto& w : worst) overall = std::max(overall, w.dev);
  sink.emit("crossvalidate.csv", [&](std::ostream& os) {
    io::CsvWriter csv(os, {"policy", "scheme", "tuples", "max_rel_dev", "lambda", "mu", "k", "p"});
    for (std::size_t c = 0; c < worst.size(); ++c) {
      const auto& ps = kAllPolicySchemes[c];
      const auto& w = worst[c];
      csv.row({std::string(to_string(ps.policy)), std::string(to_string(ps.scheme)), std::int64_t{o.count}, w.dev,
               w.lambda, w.mu, w.k, w.p});
    }
  });
  err << fmt::format("max relative deviation {:.3e} over {} tuples x 6 combinations (threshold {:.0e})\n", overall,
                     o.count, kThresholdValue);
  return overall < kThresholdValue ? kOk : kThreshold;
}

// --------------------------------------------------------------- meanfield

void sweep_table(const std::vector<PolicyScheme>& combos, const SystemParams& base, const Axis& axis,
                 std::ostream& os, io::CsvWriter* shared = nullptr) {
  const auto which = meanfield::parse_parameter(axis.param);
  std::optional<io::CsvWriter> own;
  if (!shared) {
    own.emplace(os, std::vector<std::string>{"param", "value", "policy", "scheme", "x_I", "x_W", "x_S", "k", "aoi"});
    shared = &*own;
  }
  for (double v : axis.grid()) {
    SystemParams s = base;
    meanfield::set(s, which, v);
    try {
      validate(s);
    } catch (const Error& e) {
      throw Error(ErrorKind::GridPointInvalid, fmt::format("{} = {}: {}", axis.param, v, e.what()));
    }
    for (const auto& ps : combos) {
      const auto eq = meanfield::equilibrium(ps.policy, s);
      const double aoi = meanfield::aoi_at_equilibrium(ps, s);
      shared->row({axis.param, v, std::string(to_string(ps.policy)), std::string(to_string(ps.scheme)),
                   eq.x_star(kIdle), eq.x_star(kWaiting), eq.x_star(kService), eq.k_star, aoi});
    }
  }
}

int cmd_sweep(const Options& o, const CLI::App& app, Sink& sink) {
  const auto axes = collect_axes(o);
  if (axes.empty()) throw Error(ErrorKind::InvalidParameter, "sweep needs at least one --sweep param=start:end:count");
  const auto params = system_params(o, app);
  const auto combos = selected_combos(o);
  sink.emit(
      "sweep.csv",
      [&](std::ostream& os) {
        io::CsvWriter csv(os, {"param", "value", "policy", "scheme", "x_I", "x_W", "x_S", "k", "aoi"});
        for (const auto& axis : axes) sweep_table(combos, params, axis, os, &csv);
      },
      {"value", {"aoi"}});
  return kOk;
}

meanfield::Trajectory thin(const meanfield::Trajectory& full, int stride) {
  meanfield::Trajectory out;
  out.max_correction = full.max_correction;
  const std::size_t step = static_cast<std::size_t>(std::max(1, stride));
  for (std::size_t i = 0; i < full.times.size(); i += step) {
    out.times.push_back(full.times[i]);
    out.points.push_back(full.points[i]);
  }
  if (!full.times.empty() && out.times.back() != full.times.back()) {
    out.times.push_back(full.times.back());
    out.points.push_back(full.points.back());
  }
  return out;
}

int cmd_meanfield(const Options& o, const CLI::App& app, Sink& sink) {
  const auto params = system_params(o, app);
  const auto policies = selected_policies(o);
  const auto axes = collect_axes(o);

  sink.emit("equilibrium.csv", [&](std::ostream& os) {
    io::CsvWriter csv(os, {"policy", "x_I", "x_W", "x_S", "k", "delta", "residual"});
    for (auto policy : policies) {
      const auto eq = meanfield::equilibrium(policy, params);
      csv.row({std::string(to_string(policy)), eq.x_star(kIdle), eq.x_star(kWaiting), eq.x_star(kService), eq.k_star,
               eq.stability_margin, eq.residual});
    }
  });

  if (o.trajectory) {
    if (o.x0.size() != 3) throw Error(ErrorKind::InvalidParameter, "--x0 takes three fractions");
    const StateFractions x0(o.x0[0], o.x0[1], o.x0[2]);
    for (auto policy : policies) {
      const auto traj = thin(meanfield::integrate(policy, params, x0, o.t_end, o.dt), o.stride);
      const std::string file =
          policies.size() == 1 ? "traj.csv" : fmt::format("traj_{}.csv", to_string(policy));
      sink.emit(file, [&](std::ostream& os) { io::write_trajectory(os, traj); }, {"t", {"x_I", "x_W", "x_S"}});
    }
  }

  const auto combos = selected_combos(o);
  if (!axes.empty()) {
    sink.emit(
        "sweep.csv",
        [&](std::ostream& os) {
          io::CsvWriter csv(os, {"param", "value", "policy", "scheme", "x_I", "x_W", "x_S", "k", "aoi"});
          for (const auto& axis : axes) sweep_table(combos, params, axis, os, &csv);
        },
        {"value", {"aoi"}});
  }

  if (o.monotonicity) {
    if (axes.empty()) throw Error(ErrorKind::InvalidParameter, "--monotonicity needs a --sweep axis");
    std::vector<meanfield::MonotonicityReport> reports;
    for (const auto& axis : axes) {
      const auto which = meanfield::parse_parameter(axis.param);
      for (const auto& ps : combos) reports.push_back(meanfield::monotonicity_report(ps, params, which, axis.grid()));
    }
    sink.emit("monotonicity.csv", [&](std::ostream& os) { io::write_monotonicity(os, reports); },
              {"value", {"dAoI"}});
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

sim::SimConfig sim_config(const Options& o, const CLI::App& app, const SystemParams& params) {
  sim::SimConfig cfg;
  cfg.params = params;
  cfg.seed = o.seed;
  cfg.stop = app.count("--horizon") > 0 ? sim::StopRule::horizon(o.horizon) : sim::StopRule::arrivals(o.arrivals);
  cfg.warmup_fraction = o.warmup;
  cfg.sample_dt = o.sample_dt;
  return cfg;
}

std::vector<double> per_device_mean(const sim::Replicated& rep) {
  std::vector<double> mean(rep.runs.front().avg_aoi_per_device.size(), 0.0);
  for (const auto& r : rep.runs) {
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += r.avg_aoi_per_device[d];
  }
  for (double& v : mean) v /= static_cast<double>(rep.runs.size());
  return mean;
}

int cmd_simulate(const Options& o, const CLI::App& app, Sink& sink, std::ostream& err) {
  if (app.count("--n") == 0 || app.count("--m") == 0) {
    throw Error(ErrorKind::InvalidConfig, "simulate needs both --n (devices) and --m (channels)");
  }
  const auto params = system_params(o, app);
  const auto combos = selected_combos(o);
  const auto base = sim_config(o, app, params);

  std::vector<sim::Replicated> results;
  for (const auto& ps : combos) {
    auto cfg = base;
    cfg.ps = ps;
    results.push_back(sim::replicate(cfg, o.reps, o.threads));
  }

  std::vector<double> mf(combos.size(), 0.0);
  if (o.compare) {
    for (std::size_t c = 0; c < combos.size(); ++c) mf[c] = meanfield::aoi_at_equilibrium(combos[c], params);
  }

  sink.emit("summary.csv", [&](std::ostream& os) {
    std::vector<std::string> header{"policy", "scheme",    "n",         "m",        "reps",     "mean",
                                    "stderr", "half_width", "arrivals", "delivered", "failed",   "preempted",
                                    "discarded", "replaced", "blocked", "events",    "k_estimate"};
    if (o.compare) {
      header.push_back("meanfield_aoi");
      header.push_back("rel_error");
    }
    io::CsvWriter csv(os, header);
    for (std::size_t c = 0; c < combos.size(); ++c) {
      const auto& rep = results[c];
      sim::Counts total;
      for (const auto& r : rep.runs) {
        total.arrivals += r.counts.arrivals;
        total.delivered += r.counts.delivered;
        total.failed += r.counts.failed;
        total.preempted += r.counts.preempted;
        total.discarded += r.counts.discarded;
        total.replaced += r.counts.replaced;
        total.blocked += r.counts.blocked;
        total.events += r.counts.events;
      }
      std::vector<io::CsvWriter::Cell> cells{std::string(to_string(combos[c].policy)),
                                             std::string(to_string(combos[c].scheme)),
                                             *params.n_devices,
                                             *params.n_channels,
                                             std::int64_t{o.reps},
                                             rep.mean,
                                             rep.std_error,
                                             rep.half_width,
                                             total.arrivals,
                                             total.delivered,
                                             total.failed,
                                             total.preempted,
                                             total.discarded,
                                             total.replaced,
                                             total.blocked,
                                             total.events,
                                             rep.k_estimate};
      if (o.compare) {
        cells.emplace_back(mf[c]);
        cells.emplace_back((rep.mean - mf[c]) / mf[c]);
      }
      csv.row(cells);
    }
  });

  for (std::size_t c = 0; c < combos.size(); ++c) {
    const auto suffix = combo_suffix(combos, combos[c]);
    const auto per_device = per_device_mean(results[c]);
    sink.emit("aoi" + suffix + ".csv", [&](std::ostream& os) { io::write_device_aoi(os, per_device); },
              {"device_id", {"avg_aoi"}});
    if (o.sample_dt > 0.0) {
      const auto& samples = results[c].runs.front().trajectory;
      sink.emit("traj" + suffix + ".csv",
                [&](std::ostream& os) { io::write_sim_trajectory(os, samples, *params.n_devices); },
                {"t", {"x_I", "x_W", "x_S"}});
    }
    if (o.compare) {
      err << fmt::format("{}: simulated {:.6g} +- {:.3g}, mean-field {:.6g}, relative error {:+.3f}%\n",
                         to_string(combos[c]), results[c].mean, results[c].half_width, mf[c],
                         100.0 * (results[c].mean - mf[c]) / mf[c]);
    }
  }
  return kOk;
}

// --------------------------------------------------------------- reproduce

int reproduce_accuracy(const Preset& preset, const Options& o, const CLI::App& app, Sink& sink) {
  const PolicyScheme ps = preset.combos.front();
  const double horizon = app.count("--horizon") > 0 ? o.horizon : 20.0;
  const double sample_dt = o.sample_dt > 0.0 ? o.sample_dt : 0.1;
  const int reps = app.count("--reps") > 0 ? o.reps : 100;
  constexpr double kOdeStep = 0.01;
  const auto ode = meanfield::integrate(ps.policy, preset.params, StateFractions(1.0, 0.0, 0.0), horizon, kOdeStep);

  for (const auto n : preset.populations) {
    SystemParams params = preset.params;
    params.n_devices = n;
    params.n_channels = static_cast<std::int64_t>(std::llround(static_cast<double>(n) / params.gamma));
    sim::SimConfig cfg;
    cfg.params = params;
    cfg.ps = ps;
    cfg.seed = o.seed;
    cfg.stop = sim::StopRule::horizon(horizon);
    cfg.warmup_fraction = 0.0;
    cfg.sample_dt = sample_dt;
    const auto rep = sim::replicate(cfg, reps, o.threads);
    const auto mean = sim::ensemble_mean(rep.runs, n);
    const auto& single = rep.runs.front().trajectory;

    sink.emit(
        fmt::format("accuracy_N{}.csv", n),
        [&](std::ostream& os) {
          io::CsvWriter csv(os, {"t", "x_I_single", "x_I_mean", "x_I_ode"});
          for (std::size_t i = 0; i < mean.size(); ++i) {
            const double t = mean[i].first;
            const auto idx = std::min(ode.points.size() - 1, static_cast<std::size_t>(std::llround(t / kOdeStep)));
            csv.row({t, single[i].fractions(n)(kIdle), mean[i].second(kIdle), ode.points[idx](kIdle)});
          }
        },
        {"t", {"x_I_single", "x_I_mean", "x_I_ode"}});
  }
  return kOk;
}

int reproduce_desk_check(const Preset& preset, const Options& o, const CLI::App& app, Sink& sink) {
  const PolicyScheme ps = preset.combos.front();
  sim::SimConfig cfg;
  cfg.params = preset.params;
  cfg.ps = ps;
  cfg.seed = o.seed;
  cfg.stop = sim::StopRule::arrivals(app.count("--arrivals") > 0 ? o.arrivals : 200000);
  cfg.warmup_fraction = o.warmup;
  const int reps = app.count("--reps") > 0 ? o.reps : 10;
  const auto rep = sim::replicate(cfg, reps, o.threads);
  const auto& s = preset.params;
  const double exact = closedform::avg_aoi_total(ps, s.lambda, s.mu, s.w, s.p);
  sink.emit("desk_check.csv", [&](std::ostream& os) {
    io::CsvWriter csv(os, {"policy", "scheme", "sim_aoi", "stderr", "analytic_aoi", "rel_error"});
    csv.row({std::string(to_string(ps.policy)), std::string(to_string(ps.scheme)), rep.mean, rep.std_error, exact,
             (rep.mean - exact) / exact});
  });
  return kOk;
}

int cmd_reproduce(const Options& o, const CLI::App& app, Sink& sink, std::ostream& out) {
  if (o.list || o.preset.empty()) {
    for (const auto& p : presets()) out << fmt::format("{:<14} {} ({})\n", p.name, p.summary, p.parameters);
    if (!o.list) throw Error(ErrorKind::InvalidParameter, "reproduce needs a preset name");
    return kOk;
  }
  const Preset& preset = find_preset(o.preset);
  const auto combos = preset.combos.empty()
                          ? std::vector<PolicyScheme>(std::begin(kAllPolicySchemes), std::end(kAllPolicySchemes))
                          : preset.combos;
  switch (preset.kind) {
    case PresetKind::Analytic: {
      const auto& s = preset.params;
      return analytic_table(combos, {s.lambda, s.mu, *preset.k, s.p}, preset.axes, sink, preset.name + ".csv");
    }
    case PresetKind::Sweep:
      for (const auto& axis : preset.axes) {
        const std::string file =
            preset.axes.size() == 1 ? preset.name + ".csv" : fmt::format("{}_{}.csv", preset.name, axis.param);
        sink.emit(file, [&](std::ostream& os) { sweep_table(combos, preset.params, axis, os); },
                  {"value", {"aoi"}});
      }
      return kOk;
    case PresetKind::Accuracy:
      return reproduce_accuracy(preset, o, app, sink);
    case PresetKind::DeskCheck:
      return reproduce_desk_check(preset, o, app, sink);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Average age of information in dense CSMA IoT networks: closed forms, SHS cross-checks, "
               "mean-field analysis and event-driven simulation.",
               "aoi-dense"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1, 1);

  app.add_option("--policy", o.policy, "I, W, S or all")
      ->check(CLI::IsMember({"I", "W", "S", "all"}, CLI::ignore_case));
  app.add_option("--scheme", o.scheme, "wp, wop or all")->check(CLI::IsMember({"wp", "wop", "all"}, CLI::ignore_case));
  app.add_option("--lambda", o.lambda, "packet arrival rate")->capture_default_str();
  app.add_option("--mu", o.mu, "service rate")->capture_default_str();
  app.add_option("--w", o.w, "backoff rate")->capture_default_str();
  app.add_option("--k", o.k, "effective waiting rate (analytic only)");
  app.add_option("--gamma", o.gamma, "devices per channel; defaults to n/m when both are given")
      ->capture_default_str();
  app.add_option("--p", o.p, "transmission success probability")->capture_default_str();
  app.add_option("--n", o.n, "number of devices");
  app.add_option("--m", o.m, "number of channels");
  app.add_option("--seed", o.seed, "random seed")->envname("AOI_DENSE_SEED")->capture_default_str();
  app.add_option("--arrivals", o.arrivals, "system-wide arrivals per replication")->capture_default_str();
  app.add_option("--horizon", o.horizon, "simulated time per replication (replaces --arrivals)");
  app.add_option("--warmup", o.warmup, "leading fraction excluded from statistics")->capture_default_str();
  app.add_option("--reps", o.reps, "independent replications")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--threads", o.threads, "worker threads for replications (0 = all cores)")->capture_default_str();
  app.add_option("--sweep", o.sweeps, "param=start:end:count, inclusive linear grid; repeatable");
  app.add_option("--p-grid", o.p_grid, "shorthand for --sweep p=start:end:count");
  app.add_option("--out", o.out, "directory for CSV files (default: standard output)");
  app.add_option("--sample-dt", o.sample_dt, "sampling interval of the empirical measure");
  app.add_flag("--gnuplot-script", o.gnuplot, "write a gnuplot script next to each CSV");

  auto* analytic = app.add_subcommand("analytic", "closed-form average AoI for given k");
  auto* cross = app.add_subcommand("crossvalidate", "closed forms against the SHS linear solve on a random grid");
  cross->alias("oracle");
  cross->add_option("--count", o.count, "number of random tuples")->capture_default_str();
  cross->add_option("--perturb", o.perturb, "relative perturbation of the closed forms (harness self-test)")
      ->group("");
  auto* mf = app.add_subcommand("meanfield", "mean-field equilibrium, trajectories and monotonicity report");
  mf->add_flag("--trajectory", o.trajectory, "integrate the ODE and write the trajectory");
  mf->add_flag("--monotonicity", o.monotonicity, "finite-difference signs along each --sweep axis");
  mf->add_option("--t-end", o.t_end, "integration horizon")->capture_default_str();
  mf->add_option("--dt", o.dt, "RK4 step")->capture_default_str();
  mf->add_option("--stride", o.stride, "write every stride-th step")->capture_default_str();
  mf->add_option("--x0", o.x0, "initial fractions x_I,x_W,x_S")->delimiter(',')->expected(3);
  auto* sweep = app.add_subcommand("sweep", "mean-field average AoI along parameter grids");
  auto* simulate = app.add_subcommand("simulate", "event-driven simulation of N devices on M channels");
  simulate->add_flag("--compare", o.compare, "compare against the mean-field average AoI");
  auto* reproduce = app.add_subcommand("reproduce", "regenerate a figure's data from a named preset");
  reproduce->add_option("preset", o.preset, "preset name");
  reproduce->add_flag("--list", o.list, "list presets");
  for (auto* sub : {analytic, cross, mf, sweep, simulate, reproduce}) sub->fallthrough();

  std::vector<std::string> argv_storage{"aoi-dense"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    Sink sink(out, err, o.out, o.gnuplot);
    if (analytic->parsed()) return cmd_analytic(o, app, sink);
    if (cross->parsed()) return cmd_crossvalidate(o, sink, err);
    if (mf->parsed()) return cmd_meanfield(o, app, sink);
    if (sweep->parsed()) return cmd_sweep(o, app, sink);
    if (simulate->parsed()) return cmd_simulate(o, app, sink, err);
    if (reproduce->parsed()) return cmd_reproduce(o, app, sink, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_usage_error(e.kind()) ? kUsage : kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace aoi::cli
