#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "margsub/errors.hpp"

namespace margsub {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

inline void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim)
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(dim) +
                         ", got " + std::to_string(v.size()));
}

/// Extended real number. Support functions return +inf for unbounded sets and
/// -inf for the empty set; both are kept as explicit statuses.
class Extended {
public:
  enum class Kind { finite, plus_infinity, minus_infinity };

  constexpr Extended() = default;
  static Extended finite(double v) { return Extended(Kind::finite, v); }
  static Extended plus_infinity() { return Extended(Kind::plus_infinity, 0.0); }
  static Extended minus_infinity() { return Extended(Kind::minus_infinity, 0.0); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::finite; }
  bool is_plus_infinity() const { return kind_ == Kind::plus_infinity; }
  bool is_minus_infinity() const { return kind_ == Kind::minus_infinity; }

  /// Finite value; throws if not finite.
  double value() const {
    if (kind_ != Kind::finite) throw NumericalError("Extended::value on an infinite quantity");
    return value_;
  }

  double as_double() const {
    switch (kind_) {
    case Kind::plus_infinity: return std::numeric_limits<double>::infinity();
    case Kind::minus_infinity: return -std::numeric_limits<double>::infinity();
    default: return value_;
    }
  }

  static Extended from_double(double v) {
    if (std::isinf(v)) return v > 0 ? plus_infinity() : minus_infinity();
    return finite(v);
  }

  friend bool operator==(const Extended& a, const Extended& b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::finite || a.value_ == b.value_);
  }

private:
  constexpr Extended(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_ = Kind::finite;
  double value_ = 0.0;
};

inline Extended max(const Extended& a, const Extended& b) {
  return a.as_double() >= b.as_double() ? a : b;
}

inline std::string to_string(const Extended& e) {
  switch (e.kind()) {
  case Extended::Kind::plus_infinity: return "+inf";
  case Extended::Kind::minus_infinity: return "-inf";
  default: return std::to_string(e.value());
  }
}

/// Orthonormal basis (columns) of the null space of `rows`, which has `dim` columns.
inline Matrix null_space(const Matrix& rows, Eigen::Index dim, double tol = 1e-10) {
  if (rows.rows() == 0) return Matrix::Identity(dim, dim);
  Eigen::JacobiSVD<Matrix> svd(rows, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * scale) ++rank;
  return svd.matrixV().rightCols(dim - rank);
}

inline Eigen::Index matrix_rank(const Matrix& m, double tol = 1e-10) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, s(0));
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * scale) ++rank;
  return rank;
}

} // namespace margsub
