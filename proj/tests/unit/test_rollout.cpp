#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "sphkit/exchange.hpp"
#include "sphkit/rollout.hpp"

using namespace sphkit;
namespace fs = std::filesystem;

namespace {

// Moving particles in a periodic unit box, one wall particle at index 0.
Trajectory drifting(std::size_t frames, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Trajectory t(2, frames, n, 0.1);
  std::vector<Vec<2>> x(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = Vec<2>{u(rng), u(rng)};
    v[i] = Vec<2>{0.07 * (u(rng) - 0.5), 0.07 * (u(rng) - 0.5)};
  }
  const Domain<2> d(Vec<2>{1.0, 1.0}, {true, true});
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t i = 0; i < n; ++i) {
      const double s = static_cast<double>(f);
      const Vec<2> p = i == 0 ? x[i] : d.wrap(x[i] + v[i] * s + Vec<2>{0.002 * s * s, 0.0});
      t.at(f, i, 0) = static_cast<float>(p[0]);
      t.at(f, i, 1) = static_cast<float>(p[1]);
    }
  t.types[0] = 1;
  return t;
}

FeatureContext<2> periodic_ctx() {
  return FeatureContext<2>{Domain<2>(Vec<2>{1.0, 1.0}, {true, true}), 0.05, 0.075, {}, false};
}

// Feeds the finite-difference acceleration of the reference.
class FdAcceleration : public Predictor<2> {
 public:
  FdAcceleration(Trajectory ref, Domain<2> d) : ref_(std::move(ref)), d_(d) {}
  PredictionMode mode() const override { return PredictionMode::acceleration; }
  std::string name() const override { return "fd"; }
  std::vector<Vec<2>> predict(const FeatureFrame<2>& f) override {
    std::vector<Vec<2>> a(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) a[i] = finite_difference_acceleration(ref_, d_, f.frame, i);
    return a;
  }

 private:
  Trajectory ref_;
  Domain<2> d_;
};

class Exploding : public Predictor<2> {
 public:
  PredictionMode mode() const override { return PredictionMode::velocity; }
  std::string name() const override { return "exploding"; }
  std::vector<Vec<2>> predict(const FeatureFrame<2>& f) override {
    return std::vector<Vec<2>>(f.size(), Vec<2>{NAN, 0.0});
  }
};

}  // namespace

TEST(Window, VelocitiesAreMinimumImageDifferences) {
  Trajectory t(2, 4, 1, 0.1);
  const float xs[] = {0.9f, 0.98f, 0.06f, 0.14f};
  for (int f = 0; f < 4; ++f) t.at(f, 0, 0) = xs[f];
  const Domain<2> d(Vec<2>{1.0, 1.0}, {true, true});
  const auto w = HistoryWindow<2>::from_trajectory(t, 3, 3);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(w.velocity(d, k, 0)[0], 0.08, 1e-6);
  EXPECT_THROW(HistoryWindow<2>::from_trajectory(t, 2, 3), ContractError);
}

TEST(Features, ShapesForcesAndBoundary) {
  const CaseSpec& dam = case_spec("dam2d");
  const auto ctx = feature_context<2>(dam);
  EXPECT_NEAR(ctx.radius, 0.03, 1e-15);
  EXPECT_TRUE(ctx.boundary);
  ASSERT_TRUE(static_cast<bool>(ctx.force));
  HistoryWindow<2> w;
  for (int k = 0; k < 3; ++k)
    w.frames.push_back({Vec<2>{0.01 + 0.001 * k, 1.0}, Vec<2>{2.0, 2.11}, Vec<2>{2.02, 2.11}});
  const auto f = extract_features(w, ctx, {0, 0, 1}, 7);
  EXPECT_EQ(f.frame, 7u);
  EXPECT_EQ(f.history, 2u);
  EXPECT_EQ(f.velocities.size(), 6u);
  EXPECT_NEAR(f.last_velocity(0)[0], 0.001, 1e-12);
  EXPECT_EQ(f.force[0][1], -1.0);
  ASSERT_EQ(f.boundary_width, 4u);
  EXPECT_NEAR(f.boundary[0], 0.012 / 0.03, 1e-12);  // x distance to lower wall
  EXPECT_EQ(f.boundary[1], 1.0);                     // far from the upper x wall, clipped
  EXPECT_NEAR(f.boundary[4 + 3], 0.01 / 0.03, 1e-9);
  EXPECT_EQ(f.edges.size(), 2u);  // particles 1 and 2 are 0.02 apart

  const auto tgv = feature_context<2>(case_spec("tgv2d"));
  EXPECT_FALSE(tgv.force);
  EXPECT_FALSE(tgv.boundary);
  const auto ldc = feature_context<2>(case_spec("ldc2d"));
  EXPECT_FALSE(ldc.force);
  EXPECT_TRUE(feature_context<2>(case_spec("rpf2d")).force);
}

TEST(Integrate, ModesAgreeOnTheSameNextFrame) {
  const Domain<2> d(Vec<2>{1.0, 1.0}, {true, true});
  HistoryWindow<2> w;
  w.frames = {{Vec<2>{0.90, 0.5}}, {Vec<2>{0.95, 0.5}}};
  const auto a = integrate_prediction(w, {Vec<2>{0.01, 0.0}}, PredictionMode::acceleration, d);
  const auto v = integrate_prediction(w, {Vec<2>{0.06, 0.0}}, PredictionMode::velocity, d);
  const auto p = integrate_prediction(w, {Vec<2>{1.01, 0.5}}, PredictionMode::position, d);
  EXPECT_NEAR(a[0][0], 0.01, 1e-12);
  EXPECT_NEAR(v[0][0], 0.01, 1e-12);
  EXPECT_NEAR(p[0][0], 0.01, 1e-12);
  EXPECT_THROW(integrate_prediction(w, {}, PredictionMode::velocity, d), ShapeError);
  EXPECT_EQ(parse_prediction_mode("velocity"), PredictionMode::velocity);
  EXPECT_EQ(to_string(PredictionMode::acceleration), "acceleration");
  EXPECT_THROW(parse_prediction_mode("jerk"), ConfigError);
  EXPECT_NEAR(to_physical_velocity(Vec<2>{0.01, 0.0}, 0.04)[0], 0.25, 1e-15);
  EXPECT_NEAR(to_physical_acceleration(Vec<2>{0.0016, 0.0}, 0.04)[0], 1.0, 1e-12);
}

TEST(Rollout, GroundTruthPlaybackIsExact) {
  const Trajectory ref = drifting(30, 40, 1);
  GroundTruthPredictor<2> gt(ref);
  RolloutOptions opt;
  opt.steps = 20;
  const auto r = rollout(gt, ref, periodic_ctx(), 0.01, opt);
  EXPECT_EQ(r.report.mse_n.at(5), 0.0);
  EXPECT_EQ(r.report.mse_n.at(20), 0.0);
  EXPECT_EQ(r.report.mse_e_kin, 0.0);
  EXPECT_LE(std::abs(r.report.sinkhorn_mean()), 1e-9);
  EXPECT_EQ(r.predicted.positions, ref.slice(0, 26).positions);
}

TEST(Rollout, FiniteDifferenceAccelerationRoundTrip) {
  const Trajectory ref = drifting(20, 30, 2);
  const auto ctx = periodic_ctx();
  FdAcceleration fd(ref, ctx.domain);
  RolloutOptions opt;
  opt.history = 3;
  opt.steps = 12;
  opt.metrics.sinkhorn_every = 0;
  const auto r = rollout(fd, ref, ctx, 0.01, opt);
  for (std::size_t t = 0; t < r.predicted.frames; ++t)
    for (std::size_t i = 0; i < ref.particles; ++i)
      EXPECT_LT(norm(ctx.domain.displacement(r.predicted.position<2>(t, i), ref.position<2>(t, i))), 1e-6);
}

TEST(Rollout, ZeroAccelerationDriftsAndWallsFollowReference) {
  const Trajectory ref = drifting(20, 30, 3);
  ZeroAccelerationPredictor<2> z;
  RolloutOptions opt;
  opt.steps = 10;
  const auto r = rollout(z, ref, periodic_ctx(), 0.01, opt);
  EXPECT_GT(r.report.mse_n.at(10), 0.0);
  EXPECT_TRUE(r.report.all_finite_nonnegative());
  for (std::size_t t = 0; t < r.predicted.frames; ++t) EXPECT_EQ(r.predicted.at(t, 0, 0), ref.at(t, 0, 0));
}

TEST(Rollout, EdgeCases) {
  const Trajectory ref = drifting(10, 5, 4);
  ZeroAccelerationPredictor<2> z;
  RolloutOptions opt;
  opt.steps = 0;
  const auto r = rollout(z, ref, periodic_ctx(), 0.01, opt);
  EXPECT_EQ(r.report.steps, 0u);
  EXPECT_EQ(r.predicted.frames, 6u);
  opt.steps = 5;
  EXPECT_THROW(rollout(z, ref, periodic_ctx(), 0.01, opt), ContractError);
  opt.steps = 2;
  opt.start = 3;
  EXPECT_THROW(rollout(z, ref, periodic_ctx(), 0.01, opt), ContractError);
  Exploding bad;
  opt.start = 0;
  try {
    rollout(bad, ref, periodic_ctx(), 0.01, opt);
    FAIL() << "expected InstabilityError";
  } catch (const InstabilityError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(Rollout, SphPredictorReproducesGeneratedTrajectory) {
  GenerateOptions g;
  g.init.relax_steps = 20;
  const CaseSpec& spec = case_spec("tgv2d");
  const Trajectory ref = generate_trajectory<2>(spec, 9, 8, g);
  SphPredictor<2> sph(spec, 9, g);
  RolloutOptions opt;
  opt.history = 2;
  opt.steps = 4;
  opt.metrics.sinkhorn.max_points = 128;
  const auto r = rollout(sph, ref, feature_context<2>(spec), case_particle_mass(spec), opt);
  EXPECT_EQ(r.report.mse_n.at(1), 0.0);
  EXPECT_EQ(r.predicted.positions, ref.slice(0, 7).positions);
}

TEST(Augmentation, RandomWalkFinalStd) {
  const Domain<2> d(Vec<2>{100.0, 100.0}, {false, false});
  const std::size_t H = 5;
  const double sigma = 3e-4;
  std::mt19937_64 rng(11);
  HistoryWindow<2> base;
  for (std::size_t k = 0; k <= H; ++k) base.frames.push_back({Vec<2>{50.0, 50.0}, Vec<2>{1.0, 1.0}});
  const std::vector<std::int32_t> types{0, 1};
  double s2 = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const auto w = add_random_walk_noise(base, sigma, rng, d, types);
    const double e = w.current()[0][0] - 50.0;
    s2 += e * e;
    ASSERT_EQ(w.frames[0][0], base.frames[0][0]);  // oldest frame fixed
    ASSERT_EQ(w.current()[1], base.current()[1]);  // walls untouched
  }
  EXPECT_NEAR(std::sqrt(s2 / n), sigma, 0.02 * sigma);
  EXPECT_NEAR(random_walk_step_std(sigma, 1), sigma, 1e-18);
}

TEST(Augmentation, PushforwardFrequencies) {
  AugmentationConfig cfg;
  std::mt19937_64 rng(12);
  std::array<double, 5> count{};
  const int n = 1000000;
  for (int k = 0; k < n; ++k) ++count[sample_pushforward_steps(cfg, rng)];
  EXPECT_NEAR(count[1] / n, 0.80, 0.01);
  EXPECT_NEAR(count[2] / n, 0.10, 0.01);
  EXPECT_NEAR(count[3] / n, 0.05, 0.01);
  EXPECT_NEAR(count[4] / n, 0.05, 0.01);
  cfg.pushforward_probs = {0.5, 0.5, 0.5, 0.5};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Augmentation, PushforwardWindowAdvances) {
  const Trajectory ref = drifting(12, 10, 5);
  const auto ctx = periodic_ctx();
  GroundTruthPredictor<2> gt(ref);
  const auto w = HistoryWindow<2>::from_trajectory(ref, 5, 5);
  const auto out = pushforward_window<2>(gt, w, ctx, ref.types, 5, 3);
  for (std::size_t i = 1; i < ref.particles; ++i) EXPECT_EQ(out.current()[i], ref.position<2>(8, i));
}

TEST(External, FileProtocolMatchesInProcessPredictor) {
  if (std::system("python3 -c 'import h5py, numpy' >/dev/null 2>&1") != 0) GTEST_SKIP() << "h5py unavailable";
  const fs::path dir = fs::temp_directory_path() / "sphkit_external";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path script = dir / "zero.py";
  std::ofstream(script) << "import sys, h5py, numpy as np\n"
                           "with h5py.File(sys.argv[1], 'r') as f:\n"
                           "    x = f['positions'][...]\n"
                           "    assert f['velocities'].ndim == 3\n"
                           "    assert f['senders'].dtype == np.int64\n"
                           "with h5py.File(sys.argv[2], 'w') as g:\n"
                           "    g['prediction'] = np.zeros_like(x, dtype=np.float32)\n";
  const Trajectory ref = drifting(12, 20, 6);
  RolloutOptions opt;
  opt.history = 3;
  opt.steps = 3;
  ExternalPredictor<2> ext("python3 '" + script.string() + "'", PredictionMode::acceleration, dir / "work");
  ZeroAccelerationPredictor<2> z;
  const auto a = rollout(ext, ref, periodic_ctx(), 0.01, opt);
  const auto b = rollout(z, ref, periodic_ctx(), 0.01, opt);
  EXPECT_EQ(a.predicted.positions, b.predicted.positions);

  ExternalPredictor<2> failing("false", PredictionMode::acceleration, dir / "work2");
  EXPECT_THROW(rollout(failing, ref, periodic_ctx(), 0.01, opt), Error);
}
