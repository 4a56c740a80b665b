#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrtng/model.hpp"

namespace lrtng {

struct BenchmarkDefaults {
  double dt = 0.01;
  double horizon = 1.0;
  int order = 1;
};

struct Benchmark {
  std::string name;   // e.g. "vanderpol"
  std::string label;  // short table label, e.g. "V"
  OdeSystem system;
  InitialSet initial;
  BenchmarkDefaults defaults;
  /// Published order-1 average volume for comparison, if any.
  std::optional<double> reference_av;
  /// Controller weights are placeholders unless loaded from a file.
  bool neural = false;
};

/// Named real matrices as read from a weights file.
using WeightSet = std::map<std::string, Matrix, std::less<>>;

/// Weights file: blocks of a header line `<name> <rows> <cols>` followed by
/// rows*cols numbers in row-major order. `#` starts a comment.
WeightSet parse_weights(std::string_view text);
WeightSet load_weights(const std::filesystem::path& path);

/// Deterministic small weights with the shapes each controller expects.
WeightSet placeholder_neural_ode_weights();
WeightSet placeholder_ltc_weights();

Benchmark neural_ode_cartpole(const WeightSet& weights);
Benchmark ltc_cartpole(const WeightSet& weights);

/// All nine built-in systems, neural ones with placeholder weights.
std::vector<Benchmark> builtin_benchmarks();
/// Looks up by name or label (case-insensitive).
std::optional<Benchmark> find_benchmark(std::string_view key);

/// Model-file source of a built-in system (what `load_model` would accept).
std::string builtin_model_text(std::string_view name);

}  // namespace lrtng
