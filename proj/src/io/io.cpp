#include "lrtng/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lrtng/errors.hpp"
#include "lrtng/format.hpp"

namespace lrtng {
namespace {

using ordered_json = nlohmann::ordered_json;

std::size_t column_count(std::size_t n) { return 8 + 3 * n + n * n; }

std::size_t dim_from_columns(std::size_t cols) {
  for (std::size_t n = 1; column_count(n) <= cols; ++n) {
    if (column_count(n) == cols) return n;
  }
  return 0;
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (!same(a[j], b[j])) return false;
  }
  return true;
}

class CsvWriter : public TubeWriter {
 public:
  CsvWriter(std::ostream& out, std::size_t n) : out_(out), n_(n) {
    const auto cols = record_columns(n);
    for (std::size_t k = 0; k < cols.size(); ++k) out_ << (k ? "," : "") << cols[k];
    out_ << '\n';
  }

  void write(const OutputRecord& r) override {
    const auto v = flatten(r);
    if (v.size() != column_count(n_)) throw UsageError("record dimension differs from the header");
    for (std::size_t k = 0; k < v.size(); ++k) out_ << (k ? "," : "") << format_double(v[k]);
    out_ << '\n';
    out_.flush();
  }

  void finish(const RunInfo&) override { out_.flush(); }

 private:
  std::ostream& out_;
  std::size_t n_;
};

ordered_json info_json(const RunInfo& info) {
  ordered_json s;
  s["model"] = info.model;
  s["order"] = info.order;
  s["dt"] = info.dt;
  s["horizon"] = info.horizon;
  s["time_var"] = info.time_index ? ordered_json(*info.time_index + 1) : ordered_json(nullptr);
  s["AV"] = info.average_volume;
  s["reachset_AV"] = info.average_reachset_volume;
  s["steps"] = info.steps;
  s["completed"] = info.completed;
  s["failure_time"] = info.failure_time ? ordered_json(*info.failure_time) : ordered_json(nullptr);
  s["failure"] = info.failure;
  return s;
}

class JsonWriter : public TubeWriter {
 public:
  JsonWriter(std::ostream& out, std::size_t n) : out_(out), n_(n), cols_(record_columns(n)) {
    out_ << "{\"columns\":" << ordered_json(cols_).dump() << ",\n\"records\":[";
  }

  void write(const OutputRecord& r) override {
    const auto v = flatten(r);
    if (v.size() != cols_.size()) throw UsageError("record dimension differs from the header");
    ordered_json obj = ordered_json::object();
    for (std::size_t k = 0; k < v.size(); ++k) obj[cols_[k]] = v[k];
    out_ << (first_ ? "\n" : ",\n") << obj.dump();
    first_ = false;
    out_.flush();
  }

  void finish(const RunInfo& info) override {
    out_ << "\n],\n\"summary\":" << info_json(info).dump() << "}\n";
    out_.flush();
  }

 private:
  std::ostream& out_;
  std::size_t n_;
  std::vector<std::string> cols_;
  bool first_ = true;
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

bool operator==(const OutputRecord& a, const OutputRecord& b) {
  if (a.A.rows() != b.A.rows() || a.A.cols() != b.A.cols()) return false;
  for (Eigen::Index k = 0; k < a.A.size(); ++k) {
    if (!same(a.A.data()[k], b.A.data()[k])) return false;
  }
  return same(a.t, b.t) && same(a.center, b.center) && same(a.delta, b.delta) && same(a.delta_M0, b.delta_M0) &&
         same(a.sigma, b.sigma) && same(a.sigma_M0, b.sigma_M0) && same(a.lo, b.lo) && same(a.hi, b.hi) &&
         same(a.vol_ell, b.vol_ell) && same(a.vol_ball, b.vol_ball) && same(a.vol_box, b.vol_box);
}

OutputRecord to_record(const ReachsetStep& s, std::optional<std::size_t> time_index) {
  const std::size_t n = static_cast<std::size_t>(s.center.size());
  OutputRecord r;
  r.t = s.t;
  r.center = s.center;
  r.delta = s.delta;
  r.delta_M0 = s.delta_M0;
  r.sigma = s.sigma;
  r.sigma_M0 = s.sigma_M0;
  r.A = embedded_frame(s, n, time_index);
  r.lo.resize(static_cast<Eigen::Index>(n));
  r.hi.resize(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    r.lo[static_cast<Eigen::Index>(j)] = s.enclosure[j].lo();
    r.hi[static_cast<Eigen::Index>(j)] = s.enclosure[j].hi();
  }
  r.vol_ell = s.vol_ellipsoid;
  r.vol_ball = s.vol_ball;
  r.vol_box = s.vol_box;
  return r;
}

std::vector<std::string> record_columns(std::size_t n) {
  std::vector<std::string> c{"t"};
  for (std::size_t j = 1; j <= n; ++j) c.push_back("x" + std::to_string(j));
  for (const char* k : {"delta", "delta_M0", "sigma", "sigma_M0"}) c.emplace_back(k);
  const char* sep = n >= 10 ? "_" : "";
  for (std::size_t r = 1; r <= n; ++r) {
    for (std::size_t k = 1; k <= n; ++k) c.push_back("A" + std::to_string(r) + sep + std::to_string(k));
  }
  for (std::size_t j = 1; j <= n; ++j) {
    c.push_back("X" + std::to_string(j) + "_lo");
    c.push_back("X" + std::to_string(j) + "_hi");
  }
  for (const char* k : {"vol_ell", "vol_ball", "vol_box"}) c.emplace_back(k);
  return c;
}

std::vector<double> flatten(const OutputRecord& r) {
  const Eigen::Index n = r.center.size();
  std::vector<double> v{r.t};
  v.reserve(column_count(static_cast<std::size_t>(n)));
  for (Eigen::Index j = 0; j < n; ++j) v.push_back(r.center[j]);
  v.insert(v.end(), {r.delta, r.delta_M0, r.sigma, r.sigma_M0});
  for (Eigen::Index i = 0; i < r.A.rows(); ++i) {
    for (Eigen::Index k = 0; k < r.A.cols(); ++k) v.push_back(r.A(i, k));
  }
  for (Eigen::Index j = 0; j < r.lo.size() && j < r.hi.size(); ++j) {
    v.push_back(r.lo[j]);
    v.push_back(r.hi[j]);
  }
  v.insert(v.end(), {r.vol_ell, r.vol_ball, r.vol_box});
  return v;
}

OutputRecord unflatten(const std::vector<double>& values, std::size_t n) {
  if (values.size() != column_count(n)) throw UsageError("wrong number of values for dimension " + std::to_string(n));
  const auto N = static_cast<Eigen::Index>(n);
  OutputRecord r;
  std::size_t k = 0;
  r.t = values[k++];
  r.center.resize(N);
  for (Eigen::Index j = 0; j < N; ++j) r.center[j] = values[k++];
  r.delta = values[k++];
  r.delta_M0 = values[k++];
  r.sigma = values[k++];
  r.sigma_M0 = values[k++];
  r.A.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index c = 0; c < N; ++c) r.A(i, c) = values[k++];
  }
  r.lo.resize(N);
  r.hi.resize(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    r.lo[j] = values[k++];
    r.hi[j] = values[k++];
  }
  r.vol_ell = values[k++];
  r.vol_ball = values[k++];
  r.vol_box = values[k++];
  return r;
}

std::unique_ptr<TubeWriter> make_writer(std::ostream& out, TubeFormat format, std::size_t n) {
  if (n == 0) throw UsageError("tube dimension must be positive");
  if (format == TubeFormat::Json) return std::make_unique<JsonWriter>(out, n);
  return std::make_unique<CsvWriter>(out, n);
}

Tube read_csv(std::istream& in) {
  Tube tube;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, 1, "empty tube file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  tube.n = dim_from_columns(header.size());
  if (tube.n == 0 || header != record_columns(tube.n)) throw ParseError(1, 1, "header does not match the tube schema");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError(line_no, 1, "expected " + std::to_string(header.size()) + " values, found " +
                                       std::to_string(cells.size()));
    }
    std::vector<double> v(cells.size());
    std::size_t col = 1;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto x = parse_double(cells[k]);
      if (!x) throw ParseError(line_no, col, "bad number '" + cells[k] + "' in column " + header[k]);
      v[k] = *x;
      col += cells[k].size() + 1;
    }
    tube.records.push_back(unflatten(v, tube.n));
  }
  return tube;
}

Tube read_json(std::istream& in) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, e.byte, e.what());
  }
  Tube tube;
  if (!doc.is_object() || !doc.contains("columns") || !doc.contains("records")) {
    throw ParseError(1, 1, "expected an object with columns and records");
  }
  const auto cols = doc["columns"].get<std::vector<std::string>>();
  tube.n = dim_from_columns(cols.size());
  if (tube.n == 0 || cols != record_columns(tube.n)) throw ParseError(1, 1, "columns do not match the tube schema");
  std::size_t index = 0;
  for (const auto& obj : doc["records"]) {
    ++index;
    std::vector<double> v;
    v.reserve(cols.size());
    for (const auto& c : cols) {
      if (!obj.contains(c) || !obj[c].is_number()) {
        throw ParseError(index, 1, "record " + std::to_string(index) + " lacks a number for " + c);
      }
      v.push_back(obj[c].get<double>());
    }
    tube.records.push_back(unflatten(v, tube.n));
  }
  if (doc.contains("summary")) {
    const auto& s = doc["summary"];
    RunInfo info;
    info.model = s.value("model", "");
    info.order = s.value("order", 1);
    info.dt = s.value("dt", 0.0);
    info.horizon = s.value("horizon", 0.0);
    if (s.contains("time_var") && s["time_var"].is_number()) info.time_index = s["time_var"].get<std::size_t>() - 1;
    info.average_volume = s.value("AV", 0.0);
    info.average_reachset_volume = s.value("reachset_AV", 0.0);
    info.steps = s.value("steps", std::size_t{0});
    info.completed = s.value("completed", false);
    if (s.contains("failure_time") && s["failure_time"].is_number()) info.failure_time = s["failure_time"].get<double>();
    info.failure = s.value("failure", "");
    tube.info = info;
  }
  return tube;
}

Tube read_tube(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  if (path.extension() == ".json") return read_json(in);
  return read_csv(in);
}

}  // namespace lrtng
