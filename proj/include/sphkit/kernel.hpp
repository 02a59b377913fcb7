#pragma once

#include <cmath>
#include <numbers>

#include "sphkit/core.hpp"

namespace sphkit {

/// Quintic spline kernel with compact support 3h:
///
///   W(q) = sigma / h^dim * [ (3-q)^5 - 6(2-q)^5 + 15(1-q)^5 ]   0 <= q < 1
///                          [ (3-q)^5 - 6(2-q)^5 ]               1 <= q < 2
///                          [ (3-q)^5 ]                          2 <= q < 3
///
/// with q = r/h, sigma = 7/(478 pi) in 2D and 1/(120 pi) in 3D.
template <int Dim>
class QuinticKernel {
 public:
  explicit QuinticKernel(double h) : h_(h) {
    if (!(h > 0.0)) throw ConfigError("kernel smoothing length must be positive");
    const double sigma =
        Dim == 2 ? 7.0 / (478.0 * std::numbers::pi) : 1.0 / (120.0 * std::numbers::pi);
    norm_ = sigma / std::pow(h, Dim);
    inv_h_ = 1.0 / h;
  }

  double h() const { return h_; }
  double support() const { return 3.0 * h_; }
  double normalization() const { return norm_; }

  double value(double r) const {
    if (r < 0.0) throw ContractError("kernel evaluated at negative distance");
    return unchecked_value(r);
  }

  double unchecked_value(double r) const {
    const double q = r * inv_h_;
    if (q >= 3.0) return 0.0;
    const double q3 = 3.0 - q;
    const double q2 = 2.0 - q;
    const double q1 = 1.0 - q;
    double w = pow5(q3);
    if (q < 2.0) w -= 6.0 * pow5(q2);
    if (q < 1.0) w += 15.0 * pow5(q1);
    return norm_ * w;
  }

  /// dW/dr.
  double derivative(double r) const {
    const double q = r * inv_h_;
    if (q >= 3.0) return 0.0;
    const double q3 = 3.0 - q;
    const double q2 = 2.0 - q;
    const double q1 = 1.0 - q;
    double dw = -5.0 * pow4(q3);
    if (q < 2.0) dw += 30.0 * pow4(q2);
    if (q < 1.0) dw -= 75.0 * pow4(q1);
    return norm_ * inv_h_ * dw;
  }

  /// Gradient with respect to the first point of the pair, evaluated at the
  /// displacement d = x_i - x_j.
  Vec<Dim> gradient(const Vec<Dim>& d) const {
    const double r = norm(d);
    if (r == 0.0 || r >= support()) return Vec<Dim>{};
    return d * (derivative(r) / r);
  }

 private:
  static double pow4(double x) {
    const double x2 = x * x;
    return x2 * x2;
  }
  static double pow5(double x) { return pow4(x) * x; }

  double h_;
  double inv_h_;
  double norm_;
};

template <int Dim>
double kernel_value(double r, const QuinticKernel<Dim>& kernel) {
  return kernel.value(r);
}

template <int Dim>
Vec<Dim> kernel_gradient(const Vec<Dim>& displacement, const QuinticKernel<Dim>& kernel) {
  return kernel.gradient(displacement);
}

}  // namespace sphkit
