#include <doctest.h>

#include <cstring>
#include <limits>
#include <sstream>

#include "lrtng/benchmarks.hpp"
#include "lrtng/errors.hpp"
#include "lrtng/io.hpp"

using namespace lrtng;

namespace {

bool bitwise_equal(const OutputRecord& a, const OutputRecord& b) {
  const auto x = flatten(a), y = flatten(b);
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
}

std::vector<OutputRecord> vanderpol_records(std::size_t steps) {
  const Benchmark bm = *find_benchmark("V");
  RunConfig cfg;
  cfg.initial = bm.initial;
  cfg.dt = bm.defaults.dt;
  cfg.horizon = cfg.dt * static_cast<double>(steps);
  std::vector<OutputRecord> out;
  run(bm.system, cfg, [&](const ReachsetStep& s) { out.push_back(to_record(s, std::nullopt)); });
  return out;
}

OutputRecord awkward_record() {
  OutputRecord r;
  r.t = 0.1;
  r.center = Eigen::Vector2d(std::numeric_limits<double>::denorm_min(), -0.0);
  r.delta = 1.0 / 3.0;
  r.delta_M0 = std::numeric_limits<double>::max();
  r.sigma = 1e-300;
  r.sigma_M0 = std::nextafter(1.0, 2.0);
  r.A = Eigen::Matrix2d{{1e17, -2.5e-17}, {0.0, 123456789.123456789}};
  r.lo = Eigen::Vector2d(-1.0000000000000002, 5e-324);
  r.hi = Eigen::Vector2d(2.2250738585072014e-308, 9007199254740993.0);
  r.vol_ell = 3.141592653589793;
  r.vol_ball = 2.718281828459045;
  r.vol_box = 0.30000000000000004;
  return r;
}

}  // namespace

TEST_CASE("column layout") {
  for (std::size_t n = 1; n <= 17; ++n) CHECK(record_columns(n).size() == 2 + n + 3 + n * n + 2 * n + 3);
  const std::vector<std::string> two{"t",     "x1",    "x2",    "delta", "delta_M0", "sigma",   "sigma_M0",
                                     "A11",   "A12",   "A21",   "A22",   "X1_lo",    "X1_hi",   "X2_lo",
                                     "X2_hi", "vol_ell", "vol_ball", "vol_box"};
  CHECK(record_columns(2) == two);
  const auto big = record_columns(12);
  CHECK(big[13 + 4] == "A1_1");
  CHECK(big[13 + 4 + 12 * 12 - 1] == "A12_12");
}

TEST_CASE("records flatten and unflatten") {
  const OutputRecord r = awkward_record();
  const auto v = flatten(r);
  CHECK(v.size() == record_columns(2).size());
  CHECK(v[0] == 0.1);
  CHECK(v[7] == 1e17);
  CHECK(v[8] == -2.5e-17);
  CHECK(bitwise_equal(unflatten(v, 2), r));
  CHECK_THROWS_AS(unflatten(v, 3), UsageError);
}

TEST_CASE("time variable gets a zero row and column") {
  const Benchmark bm = *find_benchmark("dubins");
  RunConfig cfg;
  cfg.initial = bm.initial;
  cfg.dt = bm.defaults.dt;
  cfg.horizon = 0.01;
  const RunSummary s = run(bm.system, cfg);
  const OutputRecord r = to_record(s.steps.back(), s.time_index);
  REQUIRE(r.A.rows() == 4);
  CHECK(r.A.row(3).isZero(0));
  CHECK(r.A.col(3).isZero(0));
  CHECK(r.A.topLeftCorner(3, 3) == s.steps.back().frame.A);
  CHECK(r.lo[3] <= 0.01);
  CHECK(r.hi[3] >= 0.01);
}

TEST_CASE("csv round trip is bit exact") {
  auto records = vanderpol_records(300);
  std::vector<OutputRecord> odd{awkward_record()};
  for (const auto* set : {&records, &odd}) {
    std::stringstream ss;
    auto w = make_writer(ss, TubeFormat::Csv, 2);
    for (const auto& r : *set) w->write(r);
    w->finish(RunInfo{});
    const Tube t = read_csv(ss);
    CHECK(t.n == 2);
    REQUIRE(t.records.size() == set->size());
    for (std::size_t i = 0; i < set->size(); ++i) CHECK(bitwise_equal(t.records[i], (*set)[i]));
  }
}

TEST_CASE("json round trip is bit exact and mirrors csv") {
  const auto records = vanderpol_records(200);
  std::stringstream csv, json;
  auto a = make_writer(csv, TubeFormat::Csv, 2);
  auto b = make_writer(json, TubeFormat::Json, 2);
  RunInfo info;
  info.model = "vanderpol";
  info.order = 2;
  info.dt = 0.01;
  info.horizon = 2.0;
  info.average_volume = 1.0 / 3.0;
  info.steps = 200;
  info.completed = false;
  info.failure_time = 2.01;
  info.failure = "volume blow-up";
  for (const auto& r : records) {
    a->write(r);
    b->write(r);
  }
  b->write(awkward_record());
  a->finish(info);
  b->finish(info);
  const Tube from_csv = read_csv(csv);
  const Tube from_json = read_json(json);
  REQUIRE(from_json.records.size() == records.size() + 1);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(bitwise_equal(from_json.records[i], records[i]));
    CHECK(bitwise_equal(from_json.records[i], from_csv.records[i]));
  }
  CHECK(bitwise_equal(from_json.records.back(), awkward_record()));
  REQUIRE(from_json.info);
  CHECK(from_json.info->model == "vanderpol");
  CHECK(from_json.info->order == 2);
  CHECK(from_json.info->average_volume == 1.0 / 3.0);
  CHECK(from_json.info->steps == 200);
  CHECK_FALSE(from_json.info->completed);
  CHECK(from_json.info->failure_time == 2.01);
  CHECK(from_json.info->failure == "volume blow-up");
  CHECK_FALSE(from_json.info->time_index);
}

TEST_CASE("an unfinished csv stream is still readable") {
  const auto records = vanderpol_records(20);
  std::stringstream ss;
  auto w = make_writer(ss, TubeFormat::Csv, 2);
  for (const auto& r : records) w->write(r);
  const Tube t = read_csv(ss);
  CHECK(t.records.size() == records.size());
}

TEST_CASE("malformed tubes are rejected with a location") {
  const std::string header = [] {
    std::string h;
    for (const auto& c : record_columns(1)) h += (h.empty() ? "" : ",") + c;
    return h;
  }();
  {
    std::stringstream ss(header + "\n0,1,1,1,0,0,1,0.9,1.1,1,1,1\n0,1,1\n");
    try {
      read_csv(ss);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  {
    std::stringstream ss(header + "\n0,1,1,1,0,0,1,0.9,abc,1,1,1\n");
    try {
      read_csv(ss);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("X1_hi") != std::string::npos);
    }
  }
  std::stringstream bad_header("t,x1,y\n");
  CHECK_THROWS_AS(read_csv(bad_header), ParseError);
  std::stringstream empty;
  CHECK_THROWS_AS(read_csv(empty), ParseError);
  std::stringstream bad_json("{\"columns\": [\"t\"], \"records\": []}");
  CHECK_THROWS_AS(read_json(bad_json), ParseError);
  std::stringstream broken_json("{\"columns\": ");
  CHECK_THROWS_AS(read_json(broken_json), ParseError);
  CHECK_THROWS_AS(read_tube("/nonexistent/tube.csv"), UsageError);
}
