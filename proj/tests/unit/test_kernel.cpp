#include <gtest/gtest.h>

#include <numbers>

#include "sphkit/kernel.hpp"

using namespace sphkit;

// Midpoint quadrature of W over its support: radial integral 2 pi r W (2D) or
// 4 pi r^2 W (3D).
template <int Dim>
double integrate(const QuinticKernel<Dim>& k) {
  const int n = 200000;
  const double R = k.support();
  const double dr = R / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * dr;
    s += (Dim == 2 ? 2.0 * std::numbers::pi * r : 4.0 * std::numbers::pi * r * r) * k.value(r) * dr;
  }
  return s;
}

TEST(QuinticKernel, NormalisedIn2DAnd3D) {
  EXPECT_NEAR(integrate(QuinticKernel<2>(0.02)), 1.0, 1e-8);
  EXPECT_NEAR(integrate(QuinticKernel<3>(0.3)), 1.0, 1e-8);
}

TEST(QuinticKernel, CentralValue) {
  // W(0) = sigma / h^dim * (3^5 - 6 * 2^5 + 15) = 66 sigma / h^dim.
  const double h = 0.5;
  EXPECT_NEAR(QuinticKernel<2>(h).value(0.0), 66.0 * 7.0 / (478.0 * std::numbers::pi) / (h * h), 1e-12);
  EXPECT_NEAR(QuinticKernel<3>(h).value(0.0), 66.0 / (120.0 * std::numbers::pi) / (h * h * h), 1e-12);
}

TEST(QuinticKernel, CompactSupportAndSmoothness) {
  const QuinticKernel<2> k(1.0);
  EXPECT_EQ(k.value(3.0), 0.0);
  EXPECT_EQ(k.value(4.0), 0.0);
  EXPECT_GT(k.value(2.999), 0.0);
  // Continuity across the piece boundaries q = 1 and q = 2.
  for (double q : {1.0, 2.0}) {
    EXPECT_NEAR(k.value(q - 1e-9), k.value(q + 1e-9), 1e-8);
    EXPECT_NEAR(k.derivative(q - 1e-9), k.derivative(q + 1e-9), 1e-7);
  }
  EXPECT_THROW(k.value(-0.1), ContractError);
  EXPECT_THROW(QuinticKernel<2>(0.0), ConfigError);
}

TEST(QuinticKernel, GradientMatchesFiniteDifference) {
  const QuinticKernel<3> k(0.7);
  const Vec<3> d{0.3, -0.5, 0.8};
  const Vec<3> g = k.gradient(d);
  const double e = 1e-6;
  for (int a = 0; a < 3; ++a) {
    Vec<3> p = d, m = d;
    p[a] += e;
    m[a] -= e;
    const double fd = (k.value(norm(p)) - k.value(norm(m))) / (2 * e);
    EXPECT_NEAR(g[a], fd, 1e-6);
  }
  EXPECT_EQ(norm(k.gradient(Vec<3>{})), 0.0);
  // Antisymmetric in the displacement.
  EXPECT_NEAR(norm(k.gradient(d) + k.gradient(-d)), 0.0, 1e-15);
}
