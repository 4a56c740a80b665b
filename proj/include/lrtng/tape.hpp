#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lrtng/expr.hpp"
#include "lrtng/interval_matrix.hpp"

namespace lrtng {

/// Straight-line program evaluating several expressions at once. Shared
/// subexpressions are computed once.
class Tape {
 public:
  Tape() = default;
  explicit Tape(const std::vector<Expr>& outputs, std::size_t num_inputs = 0);

  std::size_t num_inputs() const { return num_inputs_; }
  std::size_t num_outputs() const { return outputs_.size(); }
  std::size_t size() const { return code_.size(); }

  /// out.size() == num_outputs(). Scratch is resized as needed.
  void eval(std::span<const double> in, std::span<double> out, std::vector<double>& scratch) const;
  /// Domain errors are rethrown with the offending subexpression attached.
  void eval(std::span<const Interval> in, std::span<Interval> out, std::vector<Interval>& scratch) const;

  std::vector<double> eval(std::span<const double> in) const;
  std::vector<Interval> eval(std::span<const Interval> in) const;
  Vector eval(const Vector& in) const;
  Box eval(const Box& in) const;

 private:
  enum class Op : std::uint8_t { Const, Var, Neg, Sin, Cos, Tan, Tanh, Exp, Ln, Sqrt, Add, Sub, Mul, Div, Pow };
  struct Instr {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    int exponent = 0;
    double value = 0.0;
  };

  template <class T>
  void run(std::span<const T> in, std::vector<T>& scratch) const;

  std::vector<Instr> code_;
  std::vector<std::uint32_t> outputs_;
  std::vector<Expr> sources_;
  std::size_t num_inputs_ = 0;
};

}  // namespace lrtng
