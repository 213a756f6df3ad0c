#pragma once

#include "aoi/core.hpp"
#include "aoi/meanfield.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aoi::cli {

enum class PresetKind { Analytic, Accuracy, Sweep, DeskCheck };

struct Axis {
  std::string param;  // lambda, mu, w, gamma, p or k
  double start = 0.0;
  double end = 0.0;
  int count = 1;

  std::vector<double> grid() const { return linspace(start, end, count); }
};

/// A named, fixed experiment. `parameters` is a human-readable list of the
/// form "lambda=0.8, mu=1, ..." that must describe `params` exactly; the
/// preset tests parse it back and compare.
struct Preset {
  std::string name;
  PresetKind kind = PresetKind::Sweep;
  std::string summary;
  std::string parameters;
  SystemParams params;
  std::optional<double> k;                   // analytic presets take k directly
  std::vector<std::int64_t> populations;     // simulation presets
  std::vector<Axis> axes;
  std::vector<PolicyScheme> combos;          // empty means all six
};

const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

/// "param=start:end:count" or, with default_param set, just "start:end:count".
Axis parse_axis(const std::string& text, const std::string& default_param = "");

}  // namespace aoi::cli
