#include <doctest.h>

#include <cmath>
#include <random>

#include "lrtng/benchmarks.hpp"
#include "lrtng/errors.hpp"
#include "lrtng/model.hpp"

using namespace lrtng;

namespace {

Vector vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

template <class F>
void expect_parse_error(const char* text, std::size_t line, std::size_t col, F&& check_message) {
  try {
    parse_model(text);
    FAIL("expected a parse error for: ", text);
  } catch (const ParseError& e) {
    CHECK(e.line() == line);
    CHECK(e.column() == col);
    check_message(std::string(e.what()));
  }
}

Vector sample_in(const InitialSet& init, std::mt19937_64& gen, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector p = init.center;
  for (Eigen::Index j = 0; j < p.size(); ++j) p[j] += scale * std::max(init.radii[j], 1e-3) * u(gen);
  return p;
}

}  // namespace

TEST_CASE("parse the Brusselator") {
  const OdeSystem sys = parse_model("x1' = 1 + x1^2*x2 - 2.5*x1 ; x2' = 1.5*x1 - x1^2*x2");
  REQUIRE(sys.dim() == 2);
  CHECK(eval_real(sys.rhs()[0], vec({1, 1})) == -0.5);
  CHECK(eval_real(sys.rhs()[1], vec({1, 1})) == 0.5);
  CHECK(eval_real(sys.rhs()[0], vec({2, 3})) == 1 + 4 * 3 - 5.0);
  CHECK_FALSE(sys.time_index().has_value());
}

TEST_CASE("parse the constant system and comments") {
  const OdeSystem sys = parse_model("# nothing moves\nx1' = 0   # still\n");
  REQUIRE(sys.dim() == 1);
  CHECK(sys.rhs()[0].is_constant(0.0));
}

TEST_CASE("parse errors carry locations") {
  expect_parse_error("x1' = x2", 1, 7, [](const std::string& m) { CHECK(m.find("undeclared") != std::string::npos); });
  expect_parse_error("x1' = 1\nx1' = 2", 2, 1, [](const std::string& m) { CHECK(m.find("duplicate") != std::string::npos); });
  expect_parse_error("x1' = x1^2.5", 1, 10,
                     [](const std::string& m) { CHECK(m.find("non-integer") != std::string::npos); });
  expect_parse_error("x1' = 1 +", 1, 10, [](const std::string&) {});
  expect_parse_error("x1' = 1 $ 2", 1, 9, [](const std::string&) {});
  expect_parse_error("x1' = foo(x1)", 1, 7, [](const std::string& m) { CHECK(m.find("unknown") != std::string::npos); });
  expect_parse_error("x2' = 1", 1, 1, [](const std::string& m) { CHECK(m.find("contiguous") != std::string::npos); });
  expect_parse_error("x1' = 2\ntime x1", 2, 6, [](const std::string& m) { CHECK(m.find("time") != std::string::npos); });
  expect_parse_error("x1' = (x1", 1, 10, [](const std::string&) {});
}

TEST_CASE("operator precedence and unary minus") {
  const Vector p = vec({2.0, 3.0});
  auto value = [&](const char* rhs) { return eval_real(parse_model(std::string("x1' = ") + rhs + "\nx2' = 0").rhs()[0], p); };
  CHECK(value("1 + 2*3") == 7);
  CHECK(value("-x1^2") == -4);
  CHECK(value("(-x1)^2") == 4);
  CHECK(value("x1^-1") == 0.5);
  CHECK(value("2/x1/x2") == doctest::Approx(1.0 / 3.0));
  CHECK(value("x1 - x2 - 1") == -2);
  CHECK(value("2*-x2") == -6);
  CHECK(value("1e-1*x1") == doctest::Approx(0.2));
  CHECK(value("sqrt(x1*8) + ln(exp(x2)) + tanh(0) + cos(0) + sin(0) + tan(0)") == doctest::Approx(8.0));
}

TEST_CASE("pretty printing round-trips through the parser") {
  for (const auto& bm : builtin_benchmarks()) {
    const OdeSystem again = parse_model(bm.system.to_text(), bm.name);
    REQUIRE(again.dim() == bm.system.dim());
    for (std::size_t j = 0; j < again.dim(); ++j) CHECK(again.rhs()[j] == bm.system.rhs()[j]);
    CHECK(again.time_index() == bm.system.time_index());
  }
}

TEST_CASE("symbolic derivatives") {
  const OdeSystem sys = parse_model("x1' = 1 + x1^2*x2 - 2.5*x1\nx2' = sin(x1)");
  const auto& J = sys.jacobian();
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const Vector p = vec({u(gen), u(gen)});
    CHECK(eval_real(J[0][0], p) == doctest::Approx(2 * p[0] * p[1] - 2.5));
    CHECK(eval_real(J[1][0], p) == doctest::Approx(std::cos(p[0])));
    CHECK(eval_real(J[1][1], p) == 0.0);
  }
}

TEST_CASE("benchmark Jacobians agree with central differences") {
  std::mt19937_64 gen(2);
  for (const auto& bm : builtin_benchmarks()) {
    CAPTURE(bm.name);
    const auto& J = bm.system.jacobian();
    const std::size_t n = bm.system.dim();
    const bool robot = bm.name == "robotarm";
    for (int trial = 0; trial < 100; ++trial) {
      const Vector p = trial == 0 && robot ? vec({1.505, 1.505, 0.005, 0.005}) : sample_in(bm.initial, gen, 5.0);
      for (std::size_t k = 0; k < n; ++k) {
        const double h = 1e-6;
        Vector pp = p, pm = p;
        pp[static_cast<Eigen::Index>(k)] += h;
        pm[static_cast<Eigen::Index>(k)] -= h;
        const Vector fp = bm.system.rhs_tape().eval(pp);
        const Vector fm = bm.system.rhs_tape().eval(pm);
        for (std::size_t j = 0; j < n; ++j) {
          const double fd = (fp[static_cast<Eigen::Index>(j)] - fm[static_cast<Eigen::Index>(j)]) / (2 * h);
          const double sym = eval_real(J[j][k], p);
          CHECK(std::fabs(sym - fd) <= 1e-6 * (1 + std::fabs(sym)));
        }
      }
    }
  }
}

TEST_CASE("interval evaluation encloses sampled real evaluation") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& bm : builtin_benchmarks()) {
    CAPTURE(bm.name);
    const Box box = Box::around(bm.initial.center, bm.initial.radii);
    const Box img = bm.system.rhs_tape().eval(box);
    for (int s = 0; s < 100; ++s) {
      Vector p = bm.initial.center;
      for (Eigen::Index j = 0; j < p.size(); ++j) p[j] += bm.initial.radii[j] * u(gen);
      for (std::size_t j = 0; j < bm.system.dim(); ++j) {
        CHECK(img[j].contains(eval_real(bm.system.rhs()[j], p)));
        // Degenerate box contains the point value.
        CHECK(eval_interval(bm.system.rhs()[j], Box::point(p)).contains(eval_real(bm.system.rhs()[j], p)));
      }
    }
  }
}

TEST_CASE("interval domain errors name the subexpression") {
  const OdeSystem sys = parse_model("x1' = ln(x1 - 3)");
  try {
    eval_interval(sys.rhs()[0], Box{Interval(1, 2)});
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("ln") != std::string::npos);
  }
}

TEST_CASE("built-in benchmark library") {
  const auto all = builtin_benchmarks();
  REQUIRE(all.size() == 9);
  auto get = [&](const char* name) { return *find_benchmark(name); };

  const Benchmark v = get("V");
  CHECK(v.initial.center == vec({-1, -1}));
  CHECK(v.defaults.dt == 0.01);
  CHECK(v.defaults.horizon == 40);
  CHECK(v.initial.radii == vec({0.01, 0.01}));

  const Benchmark d = get("dubins");
  CHECK(d.system.dim() == 4);
  REQUIRE(d.system.time_index() == std::optional<std::size_t>(3));
  CHECK(d.system.rhs()[3].is_constant(1.0));
  CHECK(d.initial.center == vec({0, 0, 0.7854, 0}));
  CHECK(d.initial.floored == std::vector<std::size_t>{3});

  const Benchmark m = get("mitchell-schaeffer");
  CHECK(m.initial.center == vec({0.8, 0.5}));
  CHECK(m.initial.radii == vec({1e-4, 1e-4}));

  const Benchmark q = get("quadcopter");
  CHECK(q.system.dim() == 17);
  CHECK(q.initial.radii[6] == kRadiusFloor);
  CHECK(q.initial.center[9] == 1.0);
  CHECK(q.initial.floored.size() == 8);

  CHECK(get("B").system.dim() == 2);
  CHECK(get("R").system.dim() == 4);
  CHECK(get("C").system.dim() == 4);
  CHECK(get("C-N").system.dim() == 12);
  CHECK(get("C-L").system.dim() == 12);
  CHECK_FALSE(find_benchmark("nope").has_value());

  // The linear cartpole at its center: only gravity and control act on the pole.
  const Vector f = get("C").system.rhs_tape().eval(get("C").initial.center);
  CHECK(f[0] == 0.0);
  CHECK(f[2] == 0.0);
  CHECK(f[3] == doctest::Approx((-1.1 * 9.81 * 0.001 * std::cos(0.001) + 1.001 * 9.81 * std::sin(0.001)) /
                                (1 + 0.001 * std::sin(0.001) * std::sin(0.001))));
}

TEST_CASE("initial sets") {
  const InitialSet s = make_initial_set(vec({1, 2, 3}), vec({0.5}));
  CHECK(s.radii == vec({0.5, 0.5, 0.5}));
  const InitialSet z = make_initial_set(vec({1, 2}), vec({0.0, 0.1}));
  CHECK(z.radii[0] == kRadiusFloor);
  CHECK(z.floored == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(make_initial_set(vec({1, 2}), vec({-1.0, 0.1})), UsageError);
  CHECK_THROWS_AS(make_initial_set(vec({1, 2}), vec({1.0, 0.1, 3.0})), UsageError);
  CHECK_THROWS_AS(make_initial_set(vec({1, 2}), vec({NAN})), UsageError);
}

TEST_CASE("init files") {
  const InitSpec s = parse_init("# vdp\ncenter = -1, -1\nradius = 0.01\ndt = 0.01\nT = 40\norder = 4\n");
  CHECK(*s.center == vec({-1, -1}));
  CHECK(*s.radius == vec({0.01}));
  CHECK(*s.dt == 0.01);
  CHECK(*s.horizon == 40);
  CHECK(*s.order == 4);
  CHECK_THROWS_AS(parse_init("order = 3"), ParseError);
  CHECK_THROWS_AS(parse_init("center = 1, x"), ParseError);
  CHECK_THROWS_AS(parse_init("speed = 1"), ParseError);
  try {
    parse_init("center = 1\n\nradius 2\n");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("weights files") {
  const WeightSet w = parse_weights("# demo\nA 2 2\n1 2\n3 4\nb 1 1 -0.5\n");
  REQUIRE(w.size() == 2);
  CHECK(w.at("A")(1, 0) == 3.0);
  CHECK(w.at("b")(0, 0) == -0.5);
  CHECK_THROWS_AS(parse_weights("A 2 2\n1 2 3\n"), ParseError);
  CHECK_THROWS_AS(neural_ode_cartpole(w), UsageError);

  // Zero weights: force vanishes and the hidden units decay.
  WeightSet zero = placeholder_neural_ode_weights();
  for (auto& [name, mat] : zero) mat.setZero();
  const Benchmark bm = neural_ode_cartpole(zero);
  Vector x = Vector::Zero(12);
  x[4] = 0.25;
  const Vector f = bm.system.rhs_tape().eval(x);
  CHECK(f[4] == -0.25);
  CHECK(f[1] == 0.0);
}
