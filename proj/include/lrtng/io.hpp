#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lrtng/reachtube.hpp"

namespace lrtng {

/// A reachset slice as written to disk. The frame is the full n x n matrix
/// (zero row and column for the time variable).
struct OutputRecord {
  double t = 0.0;
  Vector center;
  double delta = 0.0;
  double delta_M0 = 0.0;
  double sigma = 0.0;
  double sigma_M0 = 0.0;
  Matrix A;
  Vector lo;
  Vector hi;
  double vol_ell = 0.0;
  double vol_ball = 0.0;
  double vol_box = 0.0;

  friend bool operator==(const OutputRecord& a, const OutputRecord& b);
};

OutputRecord to_record(const ReachsetStep& s, std::optional<std::size_t> time_index);

/// Header names: t, x1..xn, delta, delta_M0, sigma, sigma_M0, A11..Ann,
/// X1_lo, X1_hi, .., vol_ell, vol_ball, vol_box. Frame entries are A<r>_<c>
/// once n reaches 10.
std::vector<std::string> record_columns(std::size_t n);

/// Values in column order.
std::vector<double> flatten(const OutputRecord& r);
OutputRecord unflatten(const std::vector<double>& values, std::size_t n);

/// What a run adds after the records.
struct RunInfo {
  std::string model;
  int order = 1;
  double dt = 0.0;
  double horizon = 0.0;
  std::optional<std::size_t> time_index;
  double average_volume = 0.0;
  double average_reachset_volume = 0.0;
  std::size_t steps = 0;
  bool completed = false;
  std::optional<double> failure_time;
  std::string failure;
};

enum class TubeFormat { Csv, Json };

/// Streams records as they are produced so a failed run still leaves a
/// readable prefix. finish() must be called once, with or without a failure.
class TubeWriter {
 public:
  virtual ~TubeWriter() = default;
  virtual void write(const OutputRecord& r) = 0;
  virtual void finish(const RunInfo& info) = 0;
};

std::unique_ptr<TubeWriter> make_writer(std::ostream& out, TubeFormat format, std::size_t n);

struct Tube {
  std::size_t n = 0;
  std::vector<OutputRecord> records;
  /// Present for JSON files that were finished.
  std::optional<RunInfo> info;
};

/// Readers throw ParseError (line, column) on malformed input.
Tube read_csv(std::istream& in);
Tube read_json(std::istream& in);
/// Picks the reader from the extension (.json or anything else as CSV).
Tube read_tube(const std::filesystem::path& path);

}  // namespace lrtng
