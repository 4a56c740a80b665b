#include <doctest.h>

#include <cmath>
#include <random>

#include "lrtng/benchmarks.hpp"
#include "lrtng/integrator.hpp"
#include "lrtng/sampling.hpp"
#include "oracle_models.hpp"

using namespace lrtng;

namespace {

Vector vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

double max_defect(const Matrix& Q) {
  return (Q.transpose() * Q - Matrix::Identity(Q.rows(), Q.cols())).cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

TEST_CASE("zero vector field is a fixed point") {
  const OdeSystem sys = parse_model("x1' = 0\nx2' = 0");
  const Box x{Interval(0.25, 0.5), Interval(-3, -2)};
  for (int order : {1, 2, 4}) {
    Integrator integ(sys, order);
    CHECK(integ.apriori_enclosure(x, 0.3) == x);
    const StepEnclosure s = integ.validated_step(x, 0.3);
    CHECK(s.y_next == x);
    CHECK(s.accepted_h == 0.3);
    const GradientEnclosure g = integ.step_gradient(x, GradientEnclosure::identity(2), 0.3);
    CHECK(g.one_step == IntervalMatrix::identity(2));
    CHECK(g.total.contains(Matrix::Identity(2, 2)));
    CHECK(g.total.max_width() == 0.0);
  }
}

TEST_CASE("a priori enclosure of a constant drift") {
  const OdeSystem sys = parse_model("x1' = 1");
  const Box y = apriori_enclosure(sys, Box{Interval(0.0)}, 0.1);
  CHECK(Interval(0.0, 0.1).subset_of(y[0]));
  const Box next = validated_step(sys, Box{Interval(0.0)}, 0.1, 1).y_next;
  CHECK(next[0].contains(0.1));
}

TEST_CASE("a priori enclosure contains Brusselator trajectories") {
  const Benchmark bm = *find_benchmark("B");
  const Box x0 = Box::around(bm.initial.center, bm.initial.radii);
  const Box Y = apriori_enclosure(bm.system, x0, 0.01);
  CHECK(x0.subset_of(Y));
  const auto samples = sampling::sample_ellipsoid(bm.initial.center, bm.initial.radii, 100, 42);
  std::vector<double> times;
  for (int k = 0; k <= 20; ++k) times.push_back(0.01 * k / 20.0);
  for (const auto& p : samples) {
    for (const auto& state : sampling::trajectory(oracle::Brusselator{}, p, times, 10)) CHECK(Y.contains(state));
  }
}

TEST_CASE("a priori failure names the component") {
  const OdeSystem sys = parse_model("x1' = 0\nx2' = x2^2");
  try {
    apriori_enclosure(sys, Box{Interval(0.0), Interval(10.0)}, 1.0);
    FAIL("expected a step-size error");
  } catch (const StepSizeError& e) {
    CHECK(std::string(e.what()).find("x2") != std::string::npos);
  }
}

TEST_CASE("exponential decay is enclosed at every order") {
  const OdeSystem sys = parse_model("x1' = -x1");
  for (int order : {1, 2, 4}) {
    const StepEnclosure s = validated_step(sys, Box{Interval(1.0)}, 0.01, order);
    CHECK(s.y_next[0].contains(std::exp(-0.01)));
    CHECK(s.y_next[0].subset_of(s.apriori[0]));
    if (order == 4) CHECK(s.y_next[0].width() < 1e-12);
  }
  // Many steps from a box.
  Integrator integ(sys, 4);
  Box x{Interval(0.9, 1.1)};
  for (int k = 1; k <= 100; ++k) {
    x = integ.validated_step(x, 0.01).y_next;
    CHECK(x[0].contains(0.9 * std::exp(-0.01 * k)));
    CHECK(x[0].contains(1.1 * std::exp(-0.01 * k)));
  }
}

TEST_CASE("orders are restricted") {
  const OdeSystem sys = parse_model("x1' = -x1");
  CHECK_THROWS_AS(Integrator(sys, 3), UsageError);
  CHECK_THROWS_AS(Integrator(sys, 5), UsageError);
}

TEST_CASE("RK maps match their classic formulas") {
  const OdeSystem sys = parse_model("x1' = x2\nx2' = (x1^2 - 1)*x2 - x1");
  const oracle::VanDerPol f;
  const Vector x = vec({-1.0, -1.0});
  const double h = 0.05;
  auto rhs = [&](const Vector& p) {
    Vector d(2);
    f(p.data(), d.data());
    return d;
  };
  const Vector k1 = rhs(x), k2 = rhs(x + h / 2 * k1), k3 = rhs(x + h / 2 * k2), k4 = rhs(x + h * k3);
  CHECK((Integrator(sys, 1).rk_step(x, h) - (x + h * k1)).norm() < 1e-15);
  CHECK((Integrator(sys, 2).rk_step(x, h) - (x + h * k2)).norm() < 1e-15);
  CHECK((Integrator(sys, 4).rk_step(x, h) - (x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))).norm() < 1e-15);
}

TEST_CASE("Van der Pol box propagation contains sampled trajectories") {
  const Benchmark bm = *find_benchmark("V");
  const auto samples = sampling::sample_ellipsoid(bm.initial.center, bm.initial.radii, 1000, 7);
  for (int order : {1, 4}) {
    Integrator integ(bm.system, order);
    std::vector<Box> boxes{Box::around(bm.initial.center, bm.initial.radii)};
    std::vector<double> times{0.0};
    for (int k = 1; k <= 100; ++k) {
      boxes.push_back(integ.validated_step(boxes.back(), 0.01).y_next);
      times.push_back(0.01 * k);
    }
    const auto rep = sampling::containment_serial(oracle::VanDerPol{}, samples, times, boxes, 1000);
    CHECK(rep.checks == 1000 * 101 * 2);
    CHECK(rep.violations == 0);
  }
}

TEST_CASE("diagonal linear gradient encloses the matrix exponential") {
  const OdeSystem sys = parse_model("x1' = -0.5*x1\nx2' = 0.3*x2\nx3' = 2*x3");
  const double a[3] = {-0.5, 0.3, 2.0};
  for (int order : {1, 2, 4}) {
    Integrator integ(sys, order);
    GradientEnclosure g = GradientEnclosure::identity(3);
    Box X{Interval(0.9, 1.1), Interval(-1, 1), Interval(0, 0.1)};
    const double h = 0.02;
    for (int k = 1; k <= 50; ++k) {
      g = integ.step_gradient(X, g, h);
      X = integ.validated_step(X, h).y_next;
      Matrix expected = Matrix::Zero(3, 3);
      for (int j = 0; j < 3; ++j) expected(j, j) = std::exp(a[j] * h * k);
      CHECK(g.total.contains(expected));
      CHECK(g.total.contains(g.mid_total));
    }
    if (order == 4) CHECK(g.total.max_width() < 1e-6);
  }
}

TEST_CASE("Brusselator gradient encloses finite-difference sensitivities") {
  const Benchmark bm = *find_benchmark("B");
  const double h = 0.01;
  const int steps = 50;
  const auto starts = sampling::sample_ellipsoid(bm.initial.center, bm.initial.radii, 20, 5);
  for (int order : {1, 4}) {
    Integrator integ(bm.system, order);
    GradientEnclosure g = GradientEnclosure::identity(2);
    Box X = Box::around(bm.initial.center, bm.initial.radii);
    std::vector<IntervalMatrix> totals;
    for (int k = 0; k < steps; ++k) {
      g = integ.step_gradient(X, g, h);
      X = integ.validated_step(X, h).y_next;
      totals.push_back(g.total);
      CHECK(max_defect(g.Q) <= 1e-12);
    }
    std::vector<double> times;
    for (int k = 0; k <= steps; ++k) times.push_back(h * k);
    const double eps = 1e-7;
    for (const auto& p : starts) {
      std::vector<std::vector<Vector>> plus(2), minus(2);
      for (int c = 0; c < 2; ++c) {
        Vector pp = p, pm = p;
        pp[c] += eps;
        pm[c] -= eps;
        plus[c] = sampling::trajectory(oracle::Brusselator{}, pp, times, 100);
        minus[c] = sampling::trajectory(oracle::Brusselator{}, pm, times, 100);
      }
      for (int k = 1; k <= steps; ++k) {
        Matrix fd(2, 2);
        for (int c = 0; c < 2; ++c) fd.col(c) = (plus[c][k] - minus[c][k]) / (2 * eps);
        // Central differences carry O(eps^2) truncation and O(1e-16/eps) rounding error.
        const IntervalMatrix slack = inflate(totals[static_cast<std::size_t>(k - 1)], 1e-7);
        CHECK(slack.contains(fd));
      }
    }
  }
}

TEST_CASE("QR form stays orthogonal and consistent with the naive product") {
  const Benchmark bm = *find_benchmark("V");
  Integrator integ(bm.system, 1);
  GradientEnclosure g = GradientEnclosure::identity(2);
  IntervalMatrix naive = IntervalMatrix::identity(2);
  Box X = Box::around(bm.initial.center, bm.initial.radii);
  for (int k = 0; k < 10; ++k) {
    g = integ.step_gradient(X, g, 0.01);
    naive = g.one_step * naive;
    X = integ.validated_step(X, 0.01).y_next;
    CHECK(max_defect(g.Q) <= 1e-12);
    REQUIRE(intersect(g.total, naive).has_value());
    CHECK(g.total.contains(g.mid_total));
  }
  // Point gradients along sampled trajectories lie in both enclosures.
  const auto starts = sampling::sample_ellipsoid(bm.initial.center, bm.initial.radii, 10, 3);
  const double eps = 1e-7;
  const std::vector<double> times{0.0, 0.1};
  for (const auto& p : starts) {
    Matrix fd(2, 2);
    for (int c = 0; c < 2; ++c) {
      Vector pp = p, pm = p;
      pp[c] += eps;
      pm[c] -= eps;
      fd.col(c) = (sampling::trajectory(oracle::VanDerPol{}, pp, times, 1000).back() -
                   sampling::trajectory(oracle::VanDerPol{}, pm, times, 1000).back()) /
                  (2 * eps);
    }
    CHECK(inflate(g.total, 1e-7).contains(fd));
    CHECK(inflate(naive, 1e-7).contains(fd));
  }
}

TEST_CASE("orthogonal inverse encloses the true inverse") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  const Matrix M = Matrix::NullaryExpr(5, 5, [&] { return nd(gen); });
  Eigen::HouseholderQR<Matrix> qr(M);
  const Matrix Q = qr.householderQ() * Matrix::Identity(5, 5);
  const IntervalMatrix inv = orthogonal_inverse(Q);
  CHECK(inv.contains(Q.inverse()));
  CHECK((IntervalMatrix::point(Q) * inv).contains(Matrix::Identity(5, 5)));
}

TEST_CASE("reference integration") {
  const OdeSystem zero = parse_model("x1' = 0\nx2' = 0");
  CHECK(reference_integrate(zero, vec({1, 2}), 3.0, 0.01) == vec({1, 2}));
  const OdeSystem decay = parse_model("x1' = -x1");
  CHECK(std::fabs(reference_integrate(decay, vec({1.0}), 1.0, 1e-3)[0] - std::exp(-1.0)) <= 1e-9);
  const OdeSystem blow = parse_model("x1' = x1^2");
  CHECK_THROWS(reference_integrate(blow, vec({1.0}), 2.0, 1e-2));
}
