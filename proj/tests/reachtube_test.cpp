#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "lrtng/benchmarks.hpp"
#include "lrtng/errors.hpp"
#include "lrtng/reachtube.hpp"
#include "lrtng/sampling.hpp"
#include "oracle_models.hpp"

using namespace lrtng;

namespace {

Vector vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

Matrix diag(std::initializer_list<double> v) { return vec(v).asDiagonal(); }

RunConfig config(const Vector& c, const Vector& r, double dt, double horizon, int order = 1) {
  RunConfig cfg;
  cfg.initial = make_initial_set(c, r);
  cfg.dt = dt;
  cfg.horizon = horizon;
  cfg.order = order;
  return cfg;
}

// Distance in ulps between two doubles of the same sign.
std::int64_t ulps(double a, double b) {
  std::int64_t ia, ib;
  std::memcpy(&ia, &a, sizeof a);
  std::memcpy(&ib, &b, sizeof b);
  return ia > ib ? ia - ib : ib - ia;
}

Vector unit_direction(std::mt19937_64& gen, int n) {
  std::normal_distribution<double> nd;
  Vector u = Vector::NullaryExpr(n, [&] { return nd(gen); });
  return u / u.norm();
}

bool in_ellipsoid(const Matrix& A, const Vector& c, double delta, const Vector& y) {
  return (A * (y - c)).norm() <= delta;
}

}  // namespace

TEST_CASE("initial slice is the box of the radii") {
  const OdeSystem sys = parse_model("x1' = x2\nx2' = -x1");
  for (const Vector& r : {vec({0.01, 0.01}), vec({0.01, 0.02})}) {
    RunConfig cfg = config(vec({1, 2}), r, 0.01, 0.1);
    Reachtube tube(sys, cfg);
    const ReachsetStep& s = tube.current();
    CHECK(s.index == 0);
    CHECK(s.t == 0.0);
    CHECK(s.delta == 1.0);
    CHECK(s.sigma == 0.0);
    CHECK(s.enclosure == Box::around(vec({1, 2}), r));
    CHECK((s.frame.A - Matrix(r.cwiseInverse().asDiagonal())).norm() == 0.0);
    CHECK(s.vol_ellipsoid == doctest::Approx(M_PI * r[0] * r[1]));
  }
}

TEST_CASE("step count") {
  CHECK(step_count(0.01, 9.0) == 900);
  CHECK(step_count(0.01, 40.0) == 4000);
  CHECK(step_count(0.00125, 15.0) == 12000);
  CHECK(step_count(0.3, 1.0) == 4);
  CHECK(step_count(1.0, 0.5) == 1);
  CHECK_THROWS_AS(step_count(0.0, 1.0), UsageError);
  CHECK_THROWS_AS(step_count(0.1, -1.0), UsageError);
  CHECK_THROWS_AS(step_count(NAN, 1.0), UsageError);
}

TEST_CASE("partial last step lands on the horizon") {
  const OdeSystem sys = parse_model("x1' = -x1");
  const RunSummary s = run(sys, config(vec({1}), vec({0.1}), 0.3, 1.0));
  REQUIRE(s.completed);
  CHECK(s.computed_steps == 4);
  CHECK(s.steps.back().t == 1.0);
  CHECK(s.steps.back().enclosure[0].contains(std::exp(-1.0) * 1.1));
  CHECK(s.steps.back().enclosure[0].contains(std::exp(-1.0) * 0.9));
}

TEST_CASE("box hull of an ellipsoid") {
  const Vector c = vec({1, -2});
  const Box unit = box_hull_ellipsoid(CoordFrame::from(Matrix::Identity(2, 2)), c, 0.5);
  CHECK(unit[0].lo() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(unit[0].hi() == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(unit[1].lo() == doctest::Approx(-2.5).epsilon(1e-15));
  const Box squashed = box_hull_ellipsoid(CoordFrame::from(diag({2, 1})), c, 1.0);
  CHECK(squashed[0].lo() <= 0.5);
  CHECK(squashed[0].hi() >= 1.5);
  CHECK(squashed[0].rad() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(squashed[1].rad() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(box_hull_ellipsoid(CoordFrame::from(diag({2, 1})), c, -1.0), UsageError);
}

TEST_CASE("box hull contains sampled ellipsoid boundary points") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> nd;
  int sampled = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    const Matrix A = Matrix::NullaryExpr(n, n, [&] { return nd(gen); }) + 2.0 * Matrix::Identity(n, n);
    const CoordFrame frame = CoordFrame::from(A);
    const Vector c = Vector::NullaryExpr(n, [&] { return nd(gen); });
    const double delta = 0.1 + trial;
    const Box hull = box_hull_ellipsoid(frame, c, delta);
    const Matrix Ainv = A.inverse();
    for (int s = 0; s < 500; ++s, ++sampled) {
      const Vector y = c + Ainv * (delta * unit_direction(gen, n));
      CHECK(hull.contains(y));
    }
    // Tight: every face is touched to within rounding.
    for (int j = 0; j < n; ++j) {
      const double reach = delta * Ainv.row(j).norm();
      CHECK(hull[static_cast<std::size_t>(j)].rad() == doctest::Approx(reach).epsilon(1e-9));
    }
  }
  CHECK(sampled == 10000);
}

TEST_CASE("intersection hull is sound and no looser than the hull intersection") {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> nd;
  std::size_t inside = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    const Matrix A = Matrix::NullaryExpr(n, n, [&] { return nd(gen); }) + 1.5 * Matrix::Identity(n, n);
    const Matrix B = Matrix::NullaryExpr(n, n, [&] { return nd(gen); }) + 1.5 * Matrix::Identity(n, n);
    const CoordFrame a = CoordFrame::from(A), b = CoordFrame::from(B);
    const Vector c = Vector::NullaryExpr(n, [&] { return nd(gen); });
    const double da = 1.0, db = 0.5 + 0.1 * trial;
    const Box tight = box_hull_intersection(a, da, b, db, c);
    const auto loose = intersect(box_hull_ellipsoid(a, c, da), box_hull_ellipsoid(b, c, db));
    REQUIRE(loose);
    CHECK(tight.subset_of(*loose));
    const Matrix Ainv = A.inverse(), Binv = B.inverse();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 4000; ++s) {
      // Points of a that are in b, boundary and interior alike; likewise for b.
      const double scale = s % 2 == 0 ? 1.0 : std::cbrt(u(gen));
      const Vector ya = c + Ainv * (da * scale * unit_direction(gen, n));
      const Vector yb = c + Binv * (db * scale * unit_direction(gen, n));
      for (const Vector& y : {ya, yb}) {
        if (in_ellipsoid(A, c, da, y) && in_ellipsoid(B, c, db, y)) {
          ++inside;
          CHECK(tight.contains(y));
        }
      }
    }
  }
  CHECK(inside > 10000);
}

TEST_CASE("zero vector field stays put") {
  const OdeSystem sys = parse_model("x1' = 0\nx2' = 0");
  for (int order : {1, 4}) {
    RunConfig cfg = config(vec({0.3, -1.7}), vec({0.01, 0.02}), 0.01, 10.0, order);
    const Box x0 = Box::around(cfg.initial.center, cfg.initial.radii);
    std::size_t seen = 0;
    const RunSummary s = run(sys, cfg, [&](const ReachsetStep& st) {
      ++seen;
      CHECK(st.center == cfg.initial.center);
      CHECK(st.delta <= 1.0 + 1e-9);
      CHECK(st.delta >= 1.0);
      CHECK(st.sigma == 0.0);
      // No drift across steps: within one ulp per step of the initial box.
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(x0[j].subset_of(st.enclosure[j]));
        CHECK(ulps(st.enclosure[j].lo(), x0[j].lo()) <= static_cast<std::int64_t>(st.index));
        CHECK(ulps(st.enclosure[j].hi(), x0[j].hi()) <= static_cast<std::int64_t>(st.index));
      }
    });
    CHECK(seen == 1001);
    CHECK(s.completed);
    CHECK(s.computed_steps == 1000);
    CHECK(s.average_volume == doctest::Approx(x0.volume()).epsilon(1e-9));
  }
}

TEST_CASE("contracting linear system tracks the exact width") {
  const OdeSystem sys = parse_model("x1' = -x1\nx2' = -x2");
  for (int order : {1, 2, 4}) {
    const double r = 0.01;
    RunConfig cfg = config(vec({1, -1}), vec({r, r}), 0.01, 1.0, order);
    const RunSummary s = run(sys, cfg);
    REQUIRE(s.completed);
    REQUIRE(s.steps.size() == 101);
    for (const ReachsetStep& st : s.steps) {
      const double exact = 2 * r * std::exp(-st.t);
      for (std::size_t j = 0; j < 2; ++j) {
        const double w = st.enclosure[j].hi() - st.enclosure[j].lo();
        CHECK(w >= exact * (1 - 1e-12));
        CHECK(w <= 1.5 * exact);
      }
    }
  }
}

TEST_CASE("radius and error invariants") {
  for (const char* name : {"brusselator", "vanderpol"}) {
    const Benchmark bm = *find_benchmark(name);
    RunConfig cfg;
    cfg.initial = bm.initial;
    cfg.dt = bm.defaults.dt;
    cfg.horizon = 5.0;
    for (int order : {1, 4}) {
      cfg.order = order;
      const RunSummary s = run(bm.system, cfg, [&](const ReachsetStep& st) {
        CHECK(st.epsilon >= 0.0);
        CHECK(st.sigma >= st.epsilon);
        CHECK(st.sigma_M0 >= st.epsilon_M0);
        CHECK(st.delta >= st.sigma);
        CHECK(st.delta_M0 >= st.sigma_M0);
        CHECK(st.vol_box > 0.0);
        CHECK(st.enclosure.contains(st.center));
      });
      CHECK(s.completed);
    }
  }
}

TEST_CASE("reachtube contains sampled Brusselator trajectories") {
  const Benchmark bm = *find_benchmark("brusselator");
  RunConfig cfg;
  cfg.initial = bm.initial;
  cfg.dt = bm.defaults.dt;
  cfg.horizon = bm.defaults.horizon;
  std::vector<double> times;
  std::vector<Box> boxes;
  const RunSummary s = run(bm.system, cfg, [&](const ReachsetStep& st) {
    times.push_back(st.t);
    boxes.push_back(st.enclosure);
  });
  REQUIRE(s.completed);
  REQUIRE(times.size() == 901);
  const auto samples = sampling::sample_ellipsoid(bm.initial.center, bm.initial.radii, 1000, 99);
  const auto rep = sampling::containment_serial(oracle::Brusselator{}, samples, times, boxes, 100);
  CHECK(rep.samples == 1000);
  CHECK(rep.violations == 0);
  CHECK(rep.min_relative_margin >= 0.0);
}

TEST_CASE("center error stays within sigma") {
  const Benchmark bm = *find_benchmark("brusselator");
  RunConfig cfg;
  cfg.initial = bm.initial;
  cfg.dt = bm.defaults.dt;
  cfg.horizon = bm.defaults.horizon;
  for (int order : {1, 4}) {
    cfg.order = order;
    long double x[2] = {bm.initial.center[0], bm.initial.center[1]};
    double t = 0.0;
    std::size_t checked = 0;
    run(bm.system, cfg, [&](const ReachsetStep& st) {
      if (st.index == 0) return;
      oracle::rk4<long double>(oracle::Brusselator{}, x, 2, static_cast<long double>(st.t - t), 200);
      t = st.t;
      const Vector chi = vec({static_cast<double>(x[0]), static_cast<double>(x[1])});
      CHECK((st.frame.A * (chi - st.center)).norm() <= st.sigma * (1 + 1e-6));
      ++checked;
    });
    CHECK(checked == 900);
  }
}

TEST_CASE("intersection never loosens the enclosure") {
  const Benchmark bm = *find_benchmark("vanderpol");
  RunConfig on;
  on.initial = bm.initial;
  on.dt = bm.defaults.dt;
  on.horizon = 8.0;
  RunConfig off = on;
  off.intersect = false;
  const RunSummary a = run(bm.system, on);
  const RunSummary b = run(bm.system, off);
  REQUIRE(a.completed);
  REQUIRE(b.completed);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    // Same step, intersection on: inside its own plain ellipsoid hull.
    const ReachsetStep& s = a.steps[i];
    CHECK(s.enclosure.subset_of(box_hull_ellipsoid(s.frame, s.center, s.delta)));
    CHECK(s.vol_box <= b.steps[i].vol_box * (1 + 1e-9));
  }
  CHECK(a.average_volume <= b.average_volume);
}

TEST_CASE("runs are deterministic") {
  const Benchmark bm = *find_benchmark("vanderpol");
  RunConfig cfg;
  cfg.initial = bm.initial;
  cfg.dt = bm.defaults.dt;
  cfg.horizon = 3.0;
  cfg.order = 2;
  const RunSummary a = run(bm.system, cfg);
  const RunSummary b = run(bm.system, cfg);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].center == b.steps[i].center);
    CHECK(a.steps[i].enclosure == b.steps[i].enclosure);
    CHECK(a.steps[i].delta == b.steps[i].delta);
    CHECK(a.steps[i].frame.A == b.steps[i].frame.A);
  }
  CHECK(a.average_volume == b.average_volume);
}

TEST_CASE("output interval keeps the first and last slices") {
  const OdeSystem sys = parse_model("x1' = -x1");
  RunConfig cfg = config(vec({1}), vec({0.1}), 0.01, 1.0);
  cfg.output_every = 30;
  const RunSummary s = run(sys, cfg);
  REQUIRE(s.steps.size() == 5);
  CHECK(s.steps[0].index == 0);
  CHECK(s.steps[1].index == 30);
  CHECK(s.steps[3].index == 90);
  CHECK(s.steps[4].index == 100);
  cfg.output_every = 0;
  CHECK_THROWS_AS(run(sys, cfg), UsageError);
}

TEST_CASE("blow-up ends the run with a valid prefix") {
  const OdeSystem sys = parse_model("x1' = x1^2");
  RunConfig cfg = config(vec({1}), vec({0.01}), 0.01, 2.0);
  std::size_t seen = 0;
  const RunSummary s = run(sys, cfg, [&](const ReachsetStep&) { ++seen; });
  CHECK_FALSE(s.completed);
  REQUIRE(s.failure_time);
  CHECK(*s.failure_time < 1.0);
  CHECK(*s.failure_time > 0.5);
  CHECK_FALSE(s.failure.empty());
  CHECK(seen == s.computed_steps + 1);
  CHECK(s.steps.back().index == s.computed_steps);
  // Prefix is still sound: 1 / (1/x0 - t) stays inside.
  for (const ReachsetStep& st : s.steps) {
    CHECK(st.enclosure[0].contains(1.01 / (1 - 1.01 * st.t)));
    CHECK(st.enclosure[0].contains(0.99 / (1 - 0.99 * st.t)));
  }
}

TEST_CASE("explicit volume cap") {
  const OdeSystem sys = parse_model("x1' = x1\nx2' = x2");
  RunConfig cfg = config(vec({1, 1}), vec({0.1, 0.1}), 0.01, 3.0);
  cfg.blowup_threshold = 0.04 * std::exp(2.0);
  const RunSummary s = run(sys, cfg);
  CHECK_FALSE(s.completed);
  REQUIRE(s.failure_time);
  CHECK(*s.failure_time == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("time variable is carried outside the metric") {
  const OdeSystem sys = parse_model("x1' = cos(x2)\nx2' = 1\ntime x2");
  REQUIRE(sys.time_index() == 1);
  RunConfig cfg = config(vec({0, 0}), vec({0.01, 0}), 0.01, 2.0, 4);
  const RunSummary s = run(sys, cfg);
  REQUIRE(s.completed);
  REQUIRE(s.time_index == 1);
  for (const ReachsetStep& st : s.steps) {
    CHECK(st.frame.A.rows() == 1);
    CHECK(st.enclosure[1].contains(st.t));
    CHECK(st.enclosure[1].rad() <= 1e-8);
    const double x = std::sin(st.t);
    CHECK(st.enclosure[0].contains(x + 0.01));
    CHECK(st.enclosure[0].contains(x - 0.01));
    CHECK(st.enclosure[0].rad() <= 0.011);
    const Matrix E = embedded_frame(st, 2, s.time_index);
    CHECK(E(1, 1) == 0.0);
    CHECK(E(0, 1) == 0.0);
    CHECK(E(0, 0) == st.frame.A(0, 0));
    // Volumes skip the time variable.
    CHECK(st.vol_box == doctest::Approx(st.enclosure[0].hi() - st.enclosure[0].lo()));
  }
}

TEST_CASE("configuration errors") {
  const OdeSystem sys = parse_model("x1' = -x1\nx2' = x1");
  RunConfig cfg = config(vec({1}), vec({0.1}), 0.01, 1.0);
  CHECK_THROWS_AS(Reachtube(sys, cfg), UsageError);
  cfg = config(vec({1, 1}), vec({0.1, 0.1}), 0.01, 1.0, 3);
  CHECK_THROWS_AS(Reachtube(sys, cfg), UsageError);
  cfg = config(vec({1, 1}), vec({0.1, 0.1}), 0.0, 1.0);
  CHECK_THROWS_AS(Reachtube(sys, cfg), UsageError);
}

TEST_CASE("parallel containment matches the serial reference") {
  const Benchmark bm = *find_benchmark("vanderpol");
  RunConfig cfg;
  cfg.initial = bm.initial;
  cfg.dt = bm.defaults.dt;
  cfg.horizon = 2.0;
  std::vector<double> times;
  std::vector<Box> boxes;
  run(bm.system, cfg, [&](const ReachsetStep& st) {
    times.push_back(st.t);
    boxes.push_back(st.enclosure);
  });
  const auto samples = sampling::sample_ellipsoid(bm.initial.center, bm.initial.radii, 300, 5);
  const auto a = sampling::containment_serial(oracle::VanDerPol{}, samples, times, boxes, 20);
  const auto b = sampling::containment_parallel(oracle::VanDerPol{}, samples, times, boxes, 20);
  CHECK(a.violations == 0);
  CHECK(a.checks == b.checks);
  CHECK(a.violations == b.violations);
  CHECK(a.min_relative_margin == b.min_relative_margin);
}
