#include "aoi/io.hpp"

#include <fmt/format.h>

namespace aoi::io {

std::string format_number(double value) { return fmt::format("{:.9g}", value); }

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), header_(std::move(header)) {
  for (std::size_t i = 0; i < header_.size(); ++i) out_ << (i ? "," : "") << header_[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != header_.size()) {
    throw Error(ErrorKind::PreconditionViolation,
                fmt::format("row has {} cells, header has {}", cells.size(), header_.size()));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            out_ << format_number(v);
          } else {
            out_ << v;
          }
        },
        cells[i]);
  }
  out_ << '\n';
}

namespace {

std::string sign_label(double d) {
  if (d > 0.0) return "+";
  if (d < 0.0) return "-";
  return "0";
}

}  // namespace

void write_trajectory(std::ostream& out, const meanfield::Trajectory& traj) {
  CsvWriter csv(out, {"t", "x_I", "x_W", "x_S"});
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& x = traj.points[i];
    csv.row({traj.times[i], x(kIdle), x(kWaiting), x(kService)});
  }
}

void write_monotonicity(std::ostream& out, const std::vector<meanfield::MonotonicityReport>& reports) {
  CsvWriter csv(out, {"policy", "scheme", "param", "value", "aoi", "dAoI", "sign", "dx_I", "dx_W", "dx_S",
                      "claims_hold"});
  for (const auto& r : reports) {
    for (const auto& pt : r.points) {
      const bool holds = pt.aoi_holds && pt.x_holds[0] && pt.x_holds[1] && pt.x_holds[2];
      csv.row({std::string(to_string(r.ps.policy)), std::string(to_string(r.ps.scheme)),
               std::string(meanfield::to_string(r.which)), pt.value, pt.aoi, pt.daoi, sign_label(pt.daoi),
               pt.dx[0], pt.dx[1], pt.dx[2], std::string(holds ? "yes" : "no")});
    }
  }
}

void write_device_aoi(std::ostream& out, const std::vector<double>& per_device) {
  CsvWriter csv(out, {"device_id", "avg_aoi"});
  for (std::size_t d = 0; d < per_device.size(); ++d) csv.row({static_cast<std::uint64_t>(d), per_device[d]});
}

void write_sim_trajectory(std::ostream& out, const std::vector<sim::TrajectorySample>& samples, std::int64_t n) {
  CsvWriter csv(out, {"t", "x_I", "x_W", "x_S"});
  for (const auto& s : samples) {
    const auto x = s.fractions(n);
    csv.row({s.t, x(kIdle), x(kWaiting), x(kService)});
  }
}

}  // namespace aoi::io
