#include "lipbench/experiments/records.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace lipbench::experiments {

std::string fixed6(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records,
                       bool with_timing) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.n << ',' << r.seed << ',' << fixed6(r.clean_acc) << ','
        << fixed6(r.cra) << ',' << fixed6(r.train_acc) << ',' << fixed6(r.train_cra) << ','
        << fixed6(with_timing ? r.wall_seconds : 0.0) << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(header);
  for (const auto& row : rows) line(row);
}

}  // namespace lipbench::experiments
