#include "lrtng/benchmarks.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "lrtng/errors.hpp"
#include "lrtng/format.hpp"

namespace lrtng {
namespace {

const char* const kBrusselator =
    "# Brusselator\n"
    "x1' = 1 + x1^2*x2 - 2.5*x1\n"
    "x2' = 1.5*x1 - x1^2*x2\n";

const char* const kVanDerPol =
    "# Van der Pol oscillator\n"
    "x1' = x2\n"
    "x2' = (x1^2 - 1)*x2 - x1\n";

const char* const kRobotarm =
    "# Robotarm: angle, position, angular velocity, velocity\n"
    "x1' = x3\n"
    "x2' = x4\n"
    "x3' = (-2*x2*x3*x4 - 2*x1 - 2*x3)/(x2^2 + 1) + 4/(x2^2 + 1)\n"
    "x4' = x2*x3^2 - x2 - x4 + 1\n";

const char* const kDubins =
    "# Dubins car; x4 is time\n"
    "x1' = cos(x3)\n"
    "x2' = sin(x3)\n"
    "x3' = x1*sin(x4)\n"
    "x4' = 1\n"
    "time x4\n";

const char* const kMitchellSchaeffer =
    "# Mitchell-Schaeffer cardiac cell\n"
    "x1' = x2*x1^2*(1 - x1)/0.3 - x1/6\n"
    "x2' = 0.5*(1 + tanh(50*x1 - 5))*(-x2)/150 + (1 - 0.5*(1 + tanh(50*x1 - 5)))*(1 - x2)/20\n";

// x1 = cart position x, x2 = cart velocity w, x3 = pole angle theta, x4 = pole velocity sigma.
const char* const kCartpole =
    "# Cartpole with linear stabilizing controller, M=1 m=0.001 g=9.81 l=1\n"
    "x1' = x2\n"
    "x2' = ((-1.1*1*9.81*x3 - x4) + 0.001*sin(x3)*(-1*x4^2 + 9.81*cos(x3)))/(1 + 0.001*sin(x3)^2)\n"
    "x3' = x4\n"
    "x4' = ((-1.1*1*9.81*x3 - x4)*cos(x3) - 0.001*1*x4^2*cos(x3)*sin(x3) + (0.001 + 1)*9.81*sin(x3))"
    "/(1*(1 + 0.001*sin(x3)^2))\n";

// pn pe h u v w q0 q1 q2 q3 p q r pI qI rI hI
const char* const kQuadcopter =
    "# Quadcopter\n"
    "x1' = 2*x4*(x7^2 + x8^2 - 0.5) - 2*x5*(x7*x10 - x8*x9) + 2*x6*(x7*x9 + x8*x10)\n"
    "x2' = 2*x5*(x7^2 + x9^2 - 0.5) + 2*x4*(x7*x10 + x8*x9) - 2*x6*(x7*x8 - x9*x10)\n"
    "x3' = 2*x6*(x7^2 + x10^2 - 0.5) - 2*x4*(x7*x9 - x8*x10) + 2*x5*(x7*x8 + x9*x10)\n"
    "x4' = x13*x5 - x12*x6 - 11.62*(x7*x9 - x8*x10)\n"
    "x5' = x11*x6 - x13*x4 + 11.62*(x7*x8 + x9*x10)\n"
    "x6' = x12*x4 - x11*x5 + 11.62*(x7^2 + x10^2 - 0.5)\n"
    "x7' = -0.5*x8*x11 - 0.5*x9*x12 - 0.5*x10*x13\n"
    "x8' = 0.5*x7*x11 - 0.5*x10*x12 + 0.5*x9*x13\n"
    "x9' = 0.5*x10*x11 + 0.5*x7*x12 - 0.5*x8*x13\n"
    "x10' = 0.5*x8*x12 - 0.5*x9*x11 + 0.5*x7*x13\n"
    "x11' = (-40.0006326*x14 - 2.82839798295*x11) - 1.1334074237*x12*x13\n"
    "x12' = (-39.9998045*x15 - 2.82837525410*x12) + 1.1320781796*x11*x13\n"
    "x13' = (-39.9997891*x16 - 2.82841342233*x13) - 0.00469522*x11*x12\n"
    "x14' = x11\n"
    "x15' = x12\n"
    "x16' = x13\n"
    "x17' = x3\n";

std::string num(double v) {
  std::string s = format_double(v);
  return v < 0 ? "(" + s + ")" : s;
}

const Matrix& require(const WeightSet& w, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  auto it = w.find(name);
  if (it == w.end()) throw UsageError("weights file lacks matrix '" + name + "'");
  if (it->second.rows() != rows || it->second.cols() != cols) {
    throw UsageError("weight matrix '" + name + "' must be " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  return it->second;
}

// Gym cartpole plant, x1..x4 = (x, w, theta, sigma), driven by the force expression `force`.
std::string gym_cartpole(const std::string& force) {
  const std::string F = "(" + force + ")";
  const std::string g = "9.81", mc = "1", m = "0.1", l = "0.5";
  const std::string total = "(" + mc + " + " + m + ")";
  const std::string sigma_dot = "((" + g + "*sin(x3) + cos(x3)*((-" + F + " - " + m + "*" + l +
                                "*x4^2*sin(x3))/" + total + "))/(" + l + "*(4/3 - " + m + "*cos(x3)^2/" +
                                total + ")))";
  std::string out;
  out += "x1' = x2\n";
  out += "x2' = (" + F + " + " + m + "*" + l + "*(x4^2*sin(x3) - " + sigma_dot + "*cos(x3)))/" + total + "\n";
  out += "x3' = x4\n";
  out += "x4' = " + sigma_dot + "\n";
  return out;
}

// Deterministic values in [-scale, scale]; mt19937 output is fixed by the standard.
Matrix pseudo_random(Eigen::Index rows, Eigen::Index cols, double scale, std::uint32_t seed) {
  std::mt19937 gen(seed);
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = scale * (2.0 * (gen() / 4294967296.0) - 1.0);
  }
  return out;
}

InitialSet initial(std::initializer_list<double> center, std::initializer_list<double> radius) {
  return make_initial_set(Eigen::Map<const Vector>(center.begin(), static_cast<Eigen::Index>(center.size())),
                          Eigen::Map<const Vector>(radius.begin(), static_cast<Eigen::Index>(radius.size())));
}

Benchmark make(std::string name, std::string label, const char* text, InitialSet init, BenchmarkDefaults d,
               std::optional<double> av) {
  OdeSystem sys = parse_model(text, name);
  return Benchmark{std::move(name), std::move(label), std::move(sys), std::move(init), d, av, false};
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

WeightSet parse_weights(std::string_view text) {
  std::vector<std::pair<std::string, std::size_t>> tokens;  // (token, line)
  std::size_t line = 1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '#') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
    } else if (c == '\n') {
      ++line;
      ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++pos;
    } else {
      const std::size_t start = pos;
      while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != ',' &&
             text[pos] != '#') {
        ++pos;
      }
      tokens.emplace_back(std::string(text.substr(start, pos - start)), line);
    }
  }
  WeightSet out;
  std::size_t i = 0;
  auto count = [&](const char* what) {
    if (i >= tokens.size()) throw ParseError(line, 1, std::string("missing ") + what);
    const auto v = parse_double(tokens[i].first);
    if (!v || *v < 1 || *v != static_cast<double>(static_cast<Eigen::Index>(*v))) {
      throw ParseError(tokens[i].second, 1, std::string("bad ") + what + " '" + tokens[i].first + "'");
    }
    ++i;
    return static_cast<Eigen::Index>(*v);
  };
  while (i < tokens.size()) {
    const auto [name, name_line] = tokens[i++];
    if (parse_double(name)) throw ParseError(name_line, 1, "expected a matrix name, got '" + name + "'");
    if (out.count(name)) throw ParseError(name_line, 1, "duplicate matrix '" + name + "'");
    const Eigen::Index rows = count("row count");
    const Eigen::Index cols = count("column count");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (i >= tokens.size()) throw ParseError(line, 1, "matrix '" + name + "' is truncated");
        const auto v = parse_double(tokens[i].first);
        if (!v || !std::isfinite(*v)) {
          throw ParseError(tokens[i].second, 1, "malformed value '" + tokens[i].first + "' in '" + name + "'");
        }
        m(r, c) = *v;
        ++i;
      }
    }
    out.emplace(name, std::move(m));
  }
  return out;
}

WeightSet load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_weights(ss.str());
}

WeightSet placeholder_neural_ode_weights() {
  WeightSet w;
  w["W"] = pseudo_random(8, 4, 0.5, 11);
  w["V"] = pseudo_random(8, 8, 0.2, 12);
  w["b"] = pseudo_random(8, 1, 0.1, 13);
  w["U"] = pseudo_random(1, 8, 0.3, 14);
  w["c"] = pseudo_random(1, 1, 0.05, 15);
  return w;
}

WeightSet placeholder_ltc_weights() {
  WeightSet w;
  w["c"] = Matrix::Constant(8, 1, 1.0) + pseudo_random(8, 1, 0.2, 21).cwiseAbs();
  w["gleak"] = Matrix::Constant(8, 1, 0.5) + pseudo_random(8, 1, 0.2, 22).cwiseAbs();
  w["vleak"] = pseudo_random(8, 1, 0.5, 23);
  w["w"] = pseudo_random(8, 8, 0.3, 24).cwiseAbs();
  w["E"] = pseudo_random(8, 8, 1.0, 25);
  w["sigma"] = Matrix::Constant(8, 8, 3.0) + pseudo_random(8, 8, 1.0, 26);
  w["mu"] = pseudo_random(8, 8, 0.3, 27);
  w["a"] = pseudo_random(1, 8, 0.5, 28);
  w["b"] = pseudo_random(1, 1, 0.05, 29);
  return w;
}

Benchmark neural_ode_cartpole(const WeightSet& weights) {
  const Matrix& W = require(weights, "W", 8, 4);
  const Matrix& V = require(weights, "V", 8, 8);
  const Matrix& b = require(weights, "b", 8, 1);
  const Matrix& U = require(weights, "U", 1, 8);
  const Matrix& c = require(weights, "c", 1, 1);
  // State: x1..x4 plant (x, w, theta, sigma), x5..x12 hidden units h1..h8.
  std::string force = "10*tanh(" + num(c(0, 0));
  for (int j = 0; j < 8; ++j) force += " + " + num(U(0, j)) + "*x" + std::to_string(5 + j);
  force += ")";
  std::string text = "# Cartpole with a neural ODE controller\n" + gym_cartpole(force);
  for (int i = 0; i < 8; ++i) {
    std::string pre = num(b(i, 0));
    for (int k = 0; k < 4; ++k) pre += " + " + num(W(i, k)) + "*x" + std::to_string(1 + k);
    for (int j = 0; j < 8; ++j) pre += " + " + num(V(i, j)) + "*x" + std::to_string(5 + j);
    text += "x" + std::to_string(5 + i) + "' = -x" + std::to_string(5 + i) + " + tanh(" + pre + ")\n";
  }
  InitialSet init = initial({0, 0, 0.001, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {1e-4});
  Benchmark bm{"cartpole-neural-ode", "C-N", parse_model(text, "cartpole-neural-ode"), init, {1e-5, 1.0, 1},
               3.9e-27, true};
  return bm;
}

Benchmark ltc_cartpole(const WeightSet& weights) {
  const Matrix& c = require(weights, "c", 8, 1);
  const Matrix& gleak = require(weights, "gleak", 8, 1);
  const Matrix& vleak = require(weights, "vleak", 8, 1);
  const Matrix& w = require(weights, "w", 8, 8);
  const Matrix& E = require(weights, "E", 8, 8);
  const Matrix& sigma = require(weights, "sigma", 8, 8);
  const Matrix& mu = require(weights, "mu", 8, 8);
  const Matrix& a = require(weights, "a", 1, 8);
  const Matrix& b = require(weights, "b", 1, 1);
  for (int i = 0; i < 8; ++i) {
    if (c(i, 0) == 0.0) throw UsageError("LTC capacitance c must be non-zero");
  }
  // State: x1..x4 plant, x5..x12 neuron potentials v1..v8.
  std::string force = "10*tanh(" + num(b(0, 0));
  for (int j = 0; j < 8; ++j) force += " + " + num(a(0, j)) + "*x" + std::to_string(5 + j);
  force += ")";
  std::string text = "# Cartpole with an LTC controller\n" + gym_cartpole(force);
  for (int i = 0; i < 8; ++i) {
    const std::string vi = "x" + std::to_string(5 + i);
    std::string sum = num(gleak(i, 0)) + "*(" + num(vleak(i, 0)) + " - " + vi + ")";
    for (int j = 0; j < 8; ++j) {
      const std::string vj = "x" + std::to_string(5 + j);
      sum += " + " + num(w(i, j)) + "*(" + num(E(i, j)) + " - " + vi + ")/(1 + exp(" + num(-sigma(i, j)) + "*(" +
             vj + " + " + num(mu(i, j)) + ")))";
    }
    text += vi + "' = (" + sum + ")/" + num(c(i, 0)) + "\n";
  }
  InitialSet init = initial({0, 0, 0.001, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {1e-4});
  Benchmark bm{"cartpole-ltc", "C-L", parse_model(text, "cartpole-ltc"), init, {1e-6, 0.35, 1}, 4.49e-33, true};
  return bm;
}

std::string builtin_model_text(std::string_view name) {
  const std::string key = lower(name);
  if (key == "brusselator" || key == "b") return kBrusselator;
  if (key == "vanderpol" || key == "v") return kVanDerPol;
  if (key == "robotarm" || key == "r") return kRobotarm;
  if (key == "dubins" || key == "d") return kDubins;
  if (key == "mitchell-schaeffer" || key == "m") return kMitchellSchaeffer;
  if (key == "cartpole" || key == "c") return kCartpole;
  if (key == "quadcopter" || key == "q") return kQuadcopter;
  if (auto bm = find_benchmark(key)) return bm->system.to_text();
  throw UsageError("unknown built-in model '" + std::string(name) + "'");
}

std::vector<Benchmark> builtin_benchmarks() {
  std::vector<Benchmark> out;
  out.push_back(make("brusselator", "B", kBrusselator, initial({1, 1}, {0.01}), {0.01, 9, 1}, 1.5e-4));
  out.push_back(make("vanderpol", "V", kVanDerPol, initial({-1, -1}, {0.01}), {0.01, 40, 1}, 4.2e-4));
  out.push_back(make("robotarm", "R", kRobotarm, initial({1.505, 1.505, 0.005, 0.005}, {0.005}), {0.01, 40, 1},
                     8e-11));
  // The time coordinate starts as a point; its radius is floored.
  out.push_back(make("dubins", "D", kDubins, initial({0, 0, 0.7854, 0}, {0.01, 0.01, 0.01, 0}), {0.00125, 15, 1},
                     0.132));
  out.push_back(make("mitchell-schaeffer", "M", kMitchellSchaeffer, initial({0.8, 0.5}, {1e-4}), {0.01, 10, 1},
                     3.8e-9));
  out.push_back(make("cartpole", "C", kCartpole, initial({0, 0, 0.001, 0}, {1e-4}), {0.001, 10, 1}, 8.4e-17));
  const double q = 0.005;
  out.push_back(make("quadcopter", "Q", kQuadcopter,
                     initial({-0.995, -0.995, 9.005, -0.995, -0.995, -0.995, 0, 0, 0, 1, -0.995, -0.995, -0.995, 0, 0,
                              0, 0},
                             {q, q, q, q, q, q, 0, 0, 0, 0, q, q, q, 0, 0, 0, 0}),
                     {1e-4, 2, 1}, 3.21e-54));
  out.push_back(neural_ode_cartpole(placeholder_neural_ode_weights()));
  out.push_back(ltc_cartpole(placeholder_ltc_weights()));
  return out;
}

std::optional<Benchmark> find_benchmark(std::string_view key) {
  const std::string k = lower(key);
  for (auto& bm : builtin_benchmarks()) {
    if (lower(bm.name) == k || lower(bm.label) == k) return bm;
  }
  return std::nullopt;
}

}  // namespace lrtng
