#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lipbench::experiments {

/// One output row. Fractions are in [0, 1].
struct ExperimentRecord {
  std::string experiment;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double clean_acc = 0.0;
  double cra = 0.0;
  double train_acc = 0.0;
  double train_cra = 0.0;
  double wall_seconds = 0.0;
  bool diverged = false;  // not a CSV column; reported in the summary
};

inline constexpr std::string_view kRecordHeader =
    "experiment,n,seed,clean_acc,cra,train_acc,train_cra,wall_seconds";

/// Fixed-point with six decimals ("0.500000").
std::string fixed6(double value);

/// Header plus one line per record. wall_seconds is written as 0.000000
/// unless `with_timing` is set, so reruns compare byte for byte.
void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records,
                       bool with_timing);

/// Generic table writer for per-command detail files. Cells are written
/// verbatim; callers format numbers with fixed6.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace lipbench::experiments
