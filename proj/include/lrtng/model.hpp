#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrtng/expr.hpp"
#include "lrtng/interval_matrix.hpp"
#include "lrtng/tape.hpp"

namespace lrtng {

/// Autonomous ODE system dx/dt = f(x) with f given symbolically.
class OdeSystem {
 public:
  OdeSystem(std::string name, std::vector<Expr> rhs, std::optional<std::size_t> time_index = std::nullopt);

  const std::string& name() const { return name_; }
  std::size_t dim() const { return rhs_.size(); }
  const std::vector<Expr>& rhs() const { return rhs_; }
  std::optional<std::size_t> time_index() const { return time_index_; }

  /// jacobian()[j][k] = d rhs_j / d x_k, derived once on first use.
  const std::vector<std::vector<Expr>>& jacobian() const;
  /// Compiled rhs, n inputs and n outputs.
  const Tape& rhs_tape() const;

  /// Model-file rendering; parse_model(to_text()) rebuilds the same system.
  std::string to_text() const;

 private:
  struct Lazy;
  std::string name_;
  std::vector<Expr> rhs_;
  std::optional<std::size_t> time_index_;
  std::shared_ptr<Lazy> lazy_;
};

/// Ball/ellipsoid of initial states: center +- radii per dimension.
struct InitialSet {
  Vector center;
  Vector radii;
  /// Dimensions whose radius was raised to the floor.
  std::vector<std::size_t> floored;
};

inline constexpr double kRadiusFloor = 1e-9;

/// Validates radii (finite, non-negative) and widens zero radii to `floor`.
/// A single radius is replicated across all dimensions.
InitialSet make_initial_set(const Vector& center, const Vector& radii, double floor = kRadiusFloor);

/// Parses the infix model language. See README for the grammar.
OdeSystem parse_model(std::string_view text, std::string name = "model");
OdeSystem load_model(const std::filesystem::path& path);

/// Contents of an initial-set file; every field is optional.
struct InitSpec {
  std::optional<Vector> center;
  std::optional<Vector> radius;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<int> order;
};

InitSpec parse_init(std::string_view text);
InitSpec load_init(const std::filesystem::path& path);

double eval_real(const Expr& e, const Vector& x);
Interval eval_interval(const Expr& e, const Box& x);

}  // namespace lrtng
