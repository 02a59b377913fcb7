#include <gtest/gtest.h>

#include <random>

#include "sphkit/core.hpp"

using namespace sphkit;

namespace {

// Shortest image found by trying every shift in {-2L,...,2L} per periodic axis.
template <int Dim>
Vec<Dim> brute_force_image(const Domain<Dim>& d, const Vec<Dim>& a, const Vec<Dim>& b) {
  Vec<Dim> best = a - b;
  double best2 = norm2(best);
  std::array<int, Dim> s{};
  for (auto& x : s) x = -8;
  while (true) {
    Vec<Dim> c = a - b;
    bool valid = true;
    for (int k = 0; k < Dim; ++k) {
      if (!d.is_periodic(k) && s[k] != 0) valid = false;
      c[k] += s[k] * d.extent(k);
    }
    if (valid && norm2(c) < best2) {
      best2 = norm2(c);
      best = c;
    }
    int k = 0;
    while (k < Dim && ++s[k] > 8) s[k++] = -8;
    if (k == Dim) break;
  }
  return best;
}

}  // namespace

TEST(Domain, DisplacementMatchesBruteForceImages) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 2.5);
  const Domain<3> d(Vec<3>{1.0, 2.0, 0.5}, {true, false, true});
  for (int t = 0; t < 2000; ++t) {
    const Vec<3> a{u(rng), u(rng), u(rng)};
    const Vec<3> b{u(rng), u(rng), u(rng)};
    const Vec<3> got = d.displacement(a, b);
    const Vec<3> want = brute_force_image(d, a, b);
    EXPECT_NEAR(norm2(got), norm2(want), 1e-12);
    EXPECT_DOUBLE_EQ(got[1], a[1] - b[1]);  // non-periodic axis untouched
  }
}

TEST(Domain, WrapAcrossBoundary) {
  const Domain<2> d(Vec<2>{1.0, 1.0}, {true, true});
  const Vec<2> a{0.95, 0.5};
  const Vec<2> b{0.05, 0.5};
  EXPECT_NEAR(d.displacement(a, b)[0], -0.1, 1e-12);
  const Vec<2> s = d.shift(a, Vec<2>{0.1, 0.0});
  EXPECT_NEAR(s[0], 0.05, 1e-12);
  EXPECT_GE(d.wrap(Vec<2>{-1e-18, 0.0})[0], 0.0);
  EXPECT_LT(d.wrap(Vec<2>{-1e-18, 0.0})[0], 1.0);
}

TEST(Domain, NonPeriodicShiftDoesNotWrap) {
  const Domain<2> d(Vec<2>{1.0, 1.0}, {false, false});
  const Vec<2> s = d.shift(Vec<2>{0.95, 0.5}, Vec<2>{0.1, 0.0});
  EXPECT_NEAR(s[0], 1.05, 1e-12);
}

TEST(Domain, RuntimeDimensionDisplacement) {
  const Domain<2> d(Vec<2>{1.0, 1.0}, {true, true});
  const std::vector<double> a{0.9, 0.1}, b{0.1, 0.9};
  const auto r = periodic_displacement(d, std::span<const double>(a), std::span<const double>(b));
  EXPECT_NEAR(r[0], -0.2, 1e-12);
  EXPECT_NEAR(r[1], 0.2, 1e-12);
  const std::vector<double> bad{0.1};
  EXPECT_THROW(periodic_displacement(d, std::span<const double>(bad), std::span<const double>(a)), ContractError);
}

TEST(ParticleState, ValidateCatchesMismatchedArrays) {
  ParticleState<2> s;
  s.push_back(Vec<2>{0.1, 0.1}, Vec<2>{}, 1.0, 1.0, ParticleType::fluid);
  EXPECT_NO_THROW(s.validate());
  s.masses.push_back(1.0);
  EXPECT_THROW(s.validate(), Error);
}

TEST(Trajectory, SliceAndValidate) {
  Trajectory t(2, 4, 3, 0.5);
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t i = 0; i < 3; ++i) t.at(f, i, 0) = static_cast<float>(10 * f + i);
  const Trajectory s = t.slice(1, 3);
  EXPECT_EQ(s.frames, 2u);
  EXPECT_EQ(s.at(0, 2, 0), 12.0f);
  EXPECT_EQ(s.frame_dt, 0.5);
  EXPECT_THROW(t.slice(3, 5), ContractError);
  Trajectory bad = t;
  bad.types.pop_back();
  EXPECT_THROW(bad.validate(), ShapeError);
}

TEST(Errors, IoErrorsAreDistinct) {
  EXPECT_THROW(throw MissingKeyError("k"), IoError);
  EXPECT_THROW(throw ShapeError("s"), IoError);
  bool distinct = false;
  try {
    throw MalformedFileError("m");
  } catch (const ShapeError&) {
  } catch (const MalformedFileError&) {
    distinct = true;
  }
  EXPECT_TRUE(distinct);
  InstabilityError e(17, "boom");
  EXPECT_EQ(e.step(), 17u);
}
