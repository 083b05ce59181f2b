#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

namespace evosemi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A real number or one of the two infinities. Limits such as ℓ = lim μ(s)
/// and ω(s) = lim φ_t(s) are reported through this type.
class ExtendedReal {
 public:
  static ExtendedReal finite(double v) { return ExtendedReal(v); }
  static ExtendedReal plus_infinity() { return ExtendedReal(kInf); }
  static ExtendedReal minus_infinity() { return ExtendedReal(-kInf); }

  bool is_finite() const { return std::isfinite(value_); }
  bool is_plus_infinity() const { return value_ == kInf; }
  bool is_minus_infinity() const { return value_ == -kInf; }
  double value() const { return value_; }

  std::string str() const {
    if (is_plus_infinity()) return "+inf";
    if (is_minus_infinity()) return "-inf";
    return std::to_string(value_);
  }

 private:
  explicit ExtendedReal(double v) : value_(v) {}
  double value_;
};

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

/// Spectral norm (largest singular value).
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace evosemi
