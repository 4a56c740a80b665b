#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lrtng/interval.hpp"

namespace lrtng {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Product of intervals, one per state dimension.
class Box {
 public:
  Box() = default;
  explicit Box(std::size_t n, Interval fill = Interval(0.0)) : v_(n, fill) {}
  Box(std::initializer_list<Interval> items) : v_(items) {}
  explicit Box(std::vector<Interval> items) : v_(std::move(items)) {}
  /// Degenerate box [p, p].
  static Box point(const Vector& p);
  /// p_j +- r_j, rounded outward.
  static Box around(const Vector& center, const Vector& radius);

  std::size_t size() const { return v_.size(); }
  Interval& operator[](std::size_t i) { return v_[i]; }
  const Interval& operator[](std::size_t i) const { return v_[i]; }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  Vector mid() const;
  Vector rad() const;
  /// Largest component width.
  double max_width() const;
  /// Product of component widths, optionally skipping one index.
  double volume(std::optional<std::size_t> skip = std::nullopt) const;
  bool contains(const Vector& p) const;
  bool subset_of(const Box& other) const;
  bool is_finite() const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<Interval> v_;
};

Box hull(const Box& a, const Box& b);
/// Componentwise intersection; std::nullopt if any component is empty.
std::optional<Box> intersect(const Box& a, const Box& b);
Box operator+(const Box& a, const Box& b);
Box operator-(const Box& a, const Box& b);
Box operator*(const Interval& s, const Box& b);

/// Dense rows x cols grid of intervals, row-major.
class IntervalMatrix {
 public:
  IntervalMatrix() = default;
  IntervalMatrix(std::size_t rows, std::size_t cols, Interval fill = Interval(0.0))
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
  /// Embeds a real matrix as a degenerate interval matrix.
  static IntervalMatrix point(const Matrix& m);
  static IntervalMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Interval& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  const Interval& operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  Matrix mid() const;
  Matrix rad() const;
  /// Entrywise max |x|.
  Matrix mag() const;
  IntervalMatrix transpose() const;
  bool contains(const Matrix& m) const;
  bool subset_of(const IntervalMatrix& other) const;
  bool is_finite() const;
  double max_width() const;

  /// Upper bound of the induced infinity norm (max row sum of magnitudes).
  double norm_inf_upper() const;

  friend bool operator==(const IntervalMatrix&, const IntervalMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Interval> a_;
};

IntervalMatrix operator*(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix operator*(const Matrix& a, const IntervalMatrix& b);
IntervalMatrix operator*(const IntervalMatrix& a, const Matrix& b);
IntervalMatrix operator+(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix operator-(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix operator*(const Interval& s, const IntervalMatrix& m);
Box operator*(const IntervalMatrix& m, const Box& v);
Box operator*(const Matrix& m, const Box& v);

/// Rigorous enclosure of the real product a*b.
IntervalMatrix product_enclosure(const Matrix& a, const Matrix& b);

IntervalMatrix hull(const IntervalMatrix& a, const IntervalMatrix& b);
std::optional<IntervalMatrix> intersect(const IntervalMatrix& a, const IntervalMatrix& b);

/// Every entry widened by +-amount.
IntervalMatrix inflate(const IntervalMatrix& m, double amount);

}  // namespace lrtng
