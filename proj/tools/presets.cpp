#include "presets.hpp"

#include <charconv>

#include <fmt/format.h>

namespace aoi::cli {

namespace {

SystemParams make_params(double lambda, double mu, double w, double gamma, double p) {
  SystemParams params;
  params.lambda = lambda;
  params.mu = mu;
  params.w = w;
  params.gamma = gamma;
  params.p = p;
  return params;
}

std::vector<Preset> build() {
  std::vector<Preset> out;

  Preset aoi_vs_p;
  aoi_vs_p.name = "aoi-vs-p";
  aoi_vs_p.kind = PresetKind::Analytic;
  aoi_vs_p.summary = "closed-form average AoI against the success probability, all six combinations";
  aoi_vs_p.parameters = "lambda=0.9, mu=1, k=2";
  aoi_vs_p.params = make_params(0.9, 1.0, 1.0, 1.0, 1.0);
  aoi_vs_p.k = 2.0;
  aoi_vs_p.axes = {{"p", 0.3, 1.0, 15}};
  out.push_back(aoi_vs_p);

  Preset accuracy;
  accuracy.name = "accuracy";
  accuracy.kind = PresetKind::Accuracy;
  accuracy.summary = "simulated idle fraction against the mean-field ODE for N = 10, 100, 1000";
  accuracy.parameters = "lambda=0.8, mu=1, w=2, gamma=5, p=0.7";
  accuracy.params = trajectory_figure_params();
  accuracy.populations = {10, 100, 1000};
  accuracy.combos = {{Policy::W, Scheme::WP}};
  out.push_back(accuracy);

  Preset aoi_vs_lambda;
  aoi_vs_lambda.name = "aoi-vs-lambda";
  aoi_vs_lambda.kind = PresetKind::Sweep;
  aoi_vs_lambda.summary = "mean-field average AoI against the arrival rate";
  aoi_vs_lambda.parameters = "mu=0.5, w=2, gamma=5, p=0.7";
  aoi_vs_lambda.params = make_params(1.0, 0.5, 2.0, 5.0, 0.7);
  aoi_vs_lambda.axes = {{"lambda", 0.1, 3.0, 30}};
  out.push_back(aoi_vs_lambda);

  Preset aoi_vs_params;
  aoi_vs_params.name = "aoi-vs-params";
  aoi_vs_params.kind = PresetKind::Sweep;
  aoi_vs_params.summary = "mean-field average AoI against mu, w, gamma and p, one CSV each";
  aoi_vs_params.parameters = "lambda=0.8, mu=1.5, w=2, gamma=5, p=0.7";
  aoi_vs_params.params = sweep_figure_params();
  aoi_vs_params.axes = {{"mu", 0.5, 3.0, 20}, {"w", 0.5, 5.0, 20}, {"gamma", 1.0, 10.0, 20}, {"p", 0.1, 1.0, 20}};
  out.push_back(aoi_vs_params);

  Preset desk;
  desk.name = "desk-check";
  desk.kind = PresetKind::DeskCheck;
  desk.summary = "single device on a single channel, simulation against the closed form with k = w";
  desk.parameters = "lambda=1, mu=1, w=1, gamma=1, p=1, N=1, M=1";
  desk.params = make_params(1.0, 1.0, 1.0, 1.0, 1.0);
  desk.params.n_devices = 1;
  desk.params.n_channels = 1;
  desk.populations = {1};
  desk.combos = {{Policy::I, Scheme::WP}};
  out.push_back(desk);

  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidParameter, fmt::format("{}: '{}' is not a number", what, text));
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build();
  return all;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string names;
  for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
  throw Error(ErrorKind::InvalidParameter, fmt::format("unknown preset '{}' (known: {})", name, names));
}

Axis parse_axis(const std::string& text, const std::string& default_param) {
  Axis axis;
  std::string range = text;
  if (const auto eq = text.find('='); eq != std::string::npos) {
    axis.param = text.substr(0, eq);
    range = text.substr(eq + 1);
  } else {
    axis.param = default_param;
  }
  if (axis.param.empty()) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("sweep '{}' needs the form param=start:end:count", text));
  }
  const auto c1 = range.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : range.find(':', c1 + 1);
  if (c2 == std::string::npos) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("grid '{}' needs the form start:end:count", range));
  }
  axis.start = parse_double(range.substr(0, c1), "grid start");
  axis.end = parse_double(range.substr(c1 + 1, c2 - c1 - 1), "grid end");
  const std::string count = range.substr(c2 + 1);
  const auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), axis.count);
  if (ec != std::errc() || ptr != count.data() + count.size() || axis.count < 1) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("grid count '{}' must be a positive integer", count));
  }
  if (axis.count > 1 && !(axis.start < axis.end)) {
    throw Error(ErrorKind::InvalidParameter, fmt::format("grid {} must be strictly increasing", range));
  }
  return axis;
}

}  // namespace aoi::cli
