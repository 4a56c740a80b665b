#include "lrtng/interval_matrix.hpp"

#include <string>

namespace lrtng {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw UsageError(std::string("dimension mismatch in ") + what);
}

}  // namespace

Box Box::point(const Vector& p) {
  Box b(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) b[i] = Interval(p[i]);
  return b;
}

Box Box::around(const Vector& center, const Vector& radius) {
  require(center.size() == radius.size(), "Box::around");
  Box b(static_cast<std::size_t>(center.size()));
  for (Eigen::Index i = 0; i < center.size(); ++i) b[i] = ball(center[i], radius[i]);
  return b;
}

Vector Box::mid() const {
  Vector m(static_cast<Eigen::Index>(v_.size()));
  for (std::size_t i = 0; i < v_.size(); ++i) m[i] = v_[i].mid();
  return m;
}

Vector Box::rad() const {
  Vector r(static_cast<Eigen::Index>(v_.size()));
  for (std::size_t i = 0; i < v_.size(); ++i) r[i] = v_[i].rad();
  return r;
}

double Box::max_width() const {
  double w = 0.0;
  for (const auto& x : v_) w = std::max(w, x.width());
  return w;
}

double Box::volume(std::optional<std::size_t> skip) const {
  double v = 1.0;
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (skip && *skip == i) continue;
    v *= v_[i].hi() - v_[i].lo();
  }
  return v;
}

bool Box::contains(const Vector& p) const {
  if (static_cast<std::size_t>(p.size()) != v_.size()) return false;
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (!v_[i].contains(p[static_cast<Eigen::Index>(i)])) return false;
  }
  return true;
}

bool Box::subset_of(const Box& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (!v_[i].subset_of(other[i])) return false;
  }
  return true;
}

bool Box::is_finite() const {
  return std::all_of(v_.begin(), v_.end(), [](const Interval& x) { return x.is_finite(); });
}

Box hull(const Box& a, const Box& b) {
  require(a.size() == b.size(), "hull(Box)");
  Box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = hull(a[i], b[i]);
  return r;
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  require(a.size() == b.size(), "intersect(Box)");
  Box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto c = intersect(a[i], b[i]);
    if (!c) return std::nullopt;
    r[i] = *c;
  }
  return r;
}

Box operator+(const Box& a, const Box& b) {
  require(a.size() == b.size(), "Box + Box");
  Box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Box operator-(const Box& a, const Box& b) {
  require(a.size() == b.size(), "Box - Box");
  Box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Box operator*(const Interval& s, const Box& b) {
  Box r(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) r[i] = s * b[i];
  return r;
}

IntervalMatrix IntervalMatrix::point(const Matrix& m) {
  IntervalMatrix r(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = Interval(m(i, j));
  }
  return r;
}

IntervalMatrix IntervalMatrix::identity(std::size_t n) {
  IntervalMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) r(i, i) = Interval(1.0);
  return r;
}

Matrix IntervalMatrix::mid() const {
  Matrix m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).mid();
  }
  return m;
}

Matrix IntervalMatrix::rad() const {
  Matrix m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).rad();
  }
  return m;
}

Matrix IntervalMatrix::mag() const {
  Matrix m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).mag();
  }
  return m;
}

IntervalMatrix IntervalMatrix::transpose() const {
  IntervalMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

bool IntervalMatrix::contains(const Matrix& m) const {
  if (static_cast<std::size_t>(m.rows()) != rows_ || static_cast<std::size_t>(m.cols()) != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      if (!(*this)(i, j).contains(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))) return false;
    }
  }
  return true;
}

bool IntervalMatrix::subset_of(const IntervalMatrix& other) const {
  if (other.rows_ != rows_ || other.cols_ != cols_) return false;
  for (std::size_t k = 0; k < a_.size(); ++k) {
    if (!a_[k].subset_of(other.a_[k])) return false;
  }
  return true;
}

bool IntervalMatrix::is_finite() const {
  return std::all_of(a_.begin(), a_.end(), [](const Interval& x) { return x.is_finite(); });
}

double IntervalMatrix::max_width() const {
  double w = 0.0;
  for (const auto& x : a_) w = std::max(w, x.width());
  return w;
}

double IntervalMatrix::norm_inf_upper() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) row = rounding::add_up(row, (*this)(i, j).mag());
    best = std::max(best, row);
  }
  return best;
}

IntervalMatrix operator*(const IntervalMatrix& a, const IntervalMatrix& b) {
  require(a.cols() == b.rows(), "IntervalMatrix * IntervalMatrix");
  IntervalMatrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Interval acc(0.0);
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      r(i, j) = acc;
    }
  }
  return r;
}

IntervalMatrix operator*(const Matrix& a, const IntervalMatrix& b) {
  require(static_cast<std::size_t>(a.cols()) == b.rows(), "Matrix * IntervalMatrix");
  IntervalMatrix r(static_cast<std::size_t>(a.rows()), b.cols());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Interval acc(0.0);
      for (std::size_t k = 0; k < b.rows(); ++k) {
        const double s = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (s != 0.0) acc += Interval(s) * b(k, j);
      }
      r(i, j) = acc;
    }
  }
  return r;
}

IntervalMatrix operator*(const IntervalMatrix& a, const Matrix& b) {
  require(a.cols() == static_cast<std::size_t>(b.rows()), "IntervalMatrix * Matrix");
  IntervalMatrix r(a.rows(), static_cast<std::size_t>(b.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < r.cols(); ++j) {
      Interval acc(0.0);
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const double s = b(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
        if (s != 0.0) acc += a(i, k) * Interval(s);
      }
      r(i, j) = acc;
    }
  }
  return r;
}

IntervalMatrix operator+(const IntervalMatrix& a, const IntervalMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "IntervalMatrix + IntervalMatrix");
  IntervalMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
  }
  return r;
}

IntervalMatrix operator-(const IntervalMatrix& a, const IntervalMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "IntervalMatrix - IntervalMatrix");
  IntervalMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) - b(i, j);
  }
  return r;
}

IntervalMatrix operator*(const Interval& s, const IntervalMatrix& m) {
  IntervalMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = s * m(i, j);
  }
  return r;
}

Box operator*(const IntervalMatrix& m, const Box& v) {
  require(m.cols() == v.size(), "IntervalMatrix * Box");
  Box r(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Interval acc(0.0);
    for (std::size_t k = 0; k < m.cols(); ++k) acc += m(i, k) * v[k];
    r[i] = acc;
  }
  return r;
}

Box operator*(const Matrix& m, const Box& v) {
  require(static_cast<std::size_t>(m.cols()) == v.size(), "Matrix * Box");
  Box r(static_cast<std::size_t>(m.rows()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    Interval acc(0.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double s = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (s != 0.0) acc += Interval(s) * v[k];
    }
    r[i] = acc;
  }
  return r;
}

IntervalMatrix product_enclosure(const Matrix& a, const Matrix& b) {
  return a * IntervalMatrix::point(b);
}

IntervalMatrix hull(const IntervalMatrix& a, const IntervalMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "hull(IntervalMatrix)");
  IntervalMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = hull(a(i, j), b(i, j));
  }
  return r;
}

std::optional<IntervalMatrix> intersect(const IntervalMatrix& a, const IntervalMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "intersect(IntervalMatrix)");
  IntervalMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      auto c = intersect(a(i, j), b(i, j));
      if (!c) return std::nullopt;
      r(i, j) = *c;
    }
  }
  return r;
}

IntervalMatrix inflate(const IntervalMatrix& m, double amount) {
  IntervalMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = inflate(m(i, j), amount);
  }
  return r;
}

}  // namespace lrtng
