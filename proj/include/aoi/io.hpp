#pragma once

// CSV emission shared by the command-line tool and the tests. Floats are
// printed with 9 significant digits, rows end in a bare LF.

#include "aoi/meanfield.hpp"
#include "aoi/sim.hpp"

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace aoi::io {

std::string format_number(double value);

class CsvWriter {
 public:
  using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

  CsvWriter(std::ostream& out, std::vector<std::string> header);

  void row(const std::vector<Cell>& cells);
  std::size_t columns() const { return header_.size(); }

 private:
  std::ostream& out_;
  std::vector<std::string> header_;
};

void write_trajectory(std::ostream& out, const meanfield::Trajectory& traj);
void write_monotonicity(std::ostream& out, const std::vector<meanfield::MonotonicityReport>& reports);

void write_device_aoi(std::ostream& out, const std::vector<double>& per_device);
void write_sim_trajectory(std::ostream& out, const std::vector<sim::TrajectorySample>& samples, std::int64_t n);

}  // namespace aoi::io
