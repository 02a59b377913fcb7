#include <gtest/gtest.h>

#include "sphkit/cases.hpp"

using namespace sphkit;

namespace {

struct Row {
  const char* id;
  std::size_t particles;
  std::size_t length;  // 0: stationary
  std::size_t train, valid, test;
  double frame_dt;
  double dx;
  std::vector<double> box;
  double reynolds;
  double c0, p_bg, nu, force;
};

const std::vector<Row>& table() {
  const double tp = 2.0 * std::numbers::pi;
  static const std::vector<Row> rows = {
      {"tgv2d", 2500, 126, 100, 50, 50, 0.04, 0.02, {1.0, 1.0}, 100, 10, 0, 0.01, 0},
      {"rpf2d", 3200, 0, 20000, 10000, 10000, 0.04, 0.025, {1.0, 2.0}, 10, 10, 5, 0.1, 1},
      {"ldc2d", 2708, 0, 10000, 5000, 5000, 0.04, 0.02, {1.12, 1.12}, 100, 10, 1, 0.01, 0},
      {"dam2d", 5740, 401, 50, 25, 25, 0.03, 0.02, {5.486, 2.12}, 40000, 14.14, 0, 5e-5, 1},
      {"tgv3d", 8000, 61, 200, 100, 100, 0.5, 0.31416, {tp, tp, tp}, 50, 10, 0, 0.02, 0},
      {"rpf3d", 8000, 0, 10000, 5000, 5000, 0.1, 0.05, {1.0, 2.0, 0.5}, 10, 10, 2, 0.1, 1},
      {"ldc3d", 8160, 0, 10000, 5000, 5000, 0.09, 0.041667, {1.25, 1.25, 0.5}, 100, 10, 1, 0.01, 0},
  };
  return rows;
}

template <int Dim>
std::size_t kept_count(const CaseSpec& spec) {
  InitOptions opt;
  opt.lattice = true;
  return kept_particles(init_case<Dim>(spec, 1, opt).state).size();
}

}  // namespace

TEST(Catalog, ParametersMatchTable) {
  ASSERT_EQ(case_catalog().size(), table().size());
  for (const auto& r : table()) {
    SCOPED_TRACE(r.id);
    const CaseSpec& c = case_spec(r.id);
    EXPECT_EQ(c.expected_particles, r.particles);
    EXPECT_EQ(c.stationary, r.length == 0);
    EXPECT_EQ(c.trajectory_length, r.length);
    EXPECT_EQ(c.splits.train, r.train);
    EXPECT_EQ(c.splits.valid, r.valid);
    EXPECT_EQ(c.splits.test, r.test);
    EXPECT_NEAR(c.frame_dt(), r.frame_dt, 1e-12);
    EXPECT_EQ(c.frames_between_samples, 100u);
    EXPECT_NEAR(c.dx, r.dx, 5e-6);
    ASSERT_EQ(c.extents.size(), r.box.size());
    for (std::size_t a = 0; a < r.box.size(); ++a) EXPECT_NEAR(c.extents[a], r.box[a], 1e-12);
    EXPECT_EQ(c.reynolds, r.reynolds);
    EXPECT_EQ(c.c0, r.c0);
    EXPECT_EQ(c.rho0, 1.0);
    EXPECT_EQ(c.p_bg, r.p_bg);
    EXPECT_EQ(c.viscosity, r.nu);
    EXPECT_EQ(c.force_magnitude, r.force);
    EXPECT_NO_THROW(c.validate());
  }
}

TEST(Catalog, UnknownIdIsConfigError) {
  EXPECT_THROW(case_spec("tgv4d"), ConfigError);
  EXPECT_THROW(init_case<3>("tgv2d", 1), ContractError);
}

TEST(Catalog, JsonExport) {
  const auto j = catalog_json();
  ASSERT_EQ(j.size(), 7u);
  EXPECT_EQ(j[3]["id"], "dam2d");
  EXPECT_EQ(j[3]["density_mode"], "evolution");
  EXPECT_EQ(j[1]["splits"][0], 20000);
}

TEST(Init, ParticleCountsMatchTable) {
  for (const auto& r : table()) {
    SCOPED_TRACE(r.id);
    const CaseSpec& c = case_spec(r.id);
    const std::size_t n = c.dim == 2 ? kept_count<2>(c) : kept_count<3>(c);
    EXPECT_EQ(n, r.particles);
  }
}

TEST(Init, RandomStartKeepsCountAndStaysInBox) {
  InitOptions opt;
  opt.relax_steps = 20;
  const auto cs = init_case<2>("tgv2d", 3, opt);
  EXPECT_EQ(cs.state.size(), 2500u);
  for (const auto& x : cs.state.positions)
    for (int a = 0; a < 2; ++a) {
      EXPECT_GE(x[a], 0.0);
      EXPECT_LT(x[a], 1.0);
    }
  const auto d = init_case<2>("dam2d", 3, opt);
  EXPECT_EQ(kept_particles(d.state).size(), 5740u);
}

TEST(Init, TgvLatticeKineticEnergy) {
  // Mean of u^2 + v^2 over the unit square is 1/2, so E = 0.5 * M * 0.5.
  InitOptions opt;
  opt.lattice = true;
  const auto cs = init_case<2>("tgv2d", 1, opt);
  EXPECT_NEAR(kinetic_energy_of(cs.state), 0.25, 1e-10);
  // 3D: mean |v|^2 = 1/4, total mass (2 pi)^3.
  const auto c3 = init_case<3>("tgv3d", 1, opt);
  EXPECT_NEAR(kinetic_energy_of(c3.state), 0.5 * std::pow(2.0 * std::numbers::pi, 3) * 0.25, 1e-8);
}

TEST(Init, CavityWallsAndLid) {
  const auto cs = init_case<2>("ldc2d", 1);
  EXPECT_EQ(cs.state.count(ParticleType::fluid), 2500u);
  for (std::size_t i = 0; i < cs.state.size(); ++i) {
    if (cs.state.types[i] == ParticleType::moving_wall) {
      EXPECT_GT(cs.state.positions[i][1], 1.06);
      EXPECT_EQ(cs.state.velocities[i][0], 1.0);
    }
  }
  const auto stripped = strip_wall_layers(cs.state);
  EXPECT_EQ(stripped.size(), 2708u);
}

TEST(Forcing, RpfAndDam) {
  const CaseSpec& rpf = case_spec("rpf2d");
  EXPECT_EQ(external_force<2>(rpf, Vec<2>{0.3, 0.4})[0], 1.0);
  EXPECT_EQ(external_force<2>(rpf, Vec<2>{0.3, 1.4})[0], -1.0);
  const CaseSpec& dam = case_spec("dam2d");
  EXPECT_EQ(external_force<2>(dam, Vec<2>{1.0, 1.0})[1], -1.0);
  EXPECT_FALSE(force_field<2>(case_spec("tgv2d")));
  const auto p = solver_params<2>(rpf);
  EXPECT_TRUE(p.transport_velocity);
  EXPECT_FALSE(solver_params<2>(case_spec("tgv2d")).transport_velocity);
  EXPECT_EQ(*p.fixed_dt, rpf.dt_solver);
}

TEST(Generate, DeterministicAndShaped) {
  InitOptions init;
  init.relax_steps = 20;
  GenerateOptions opt;
  opt.init = init;
  const auto a = generate_trajectory<2>("tgv2d", 9, 3, opt);
  const auto b = generate_trajectory<2>("tgv2d", 9, 3, opt);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(a.frames, 3u);
  EXPECT_EQ(a.particles, 2500u);
  EXPECT_DOUBLE_EQ(a.frame_dt, 0.04);
  const auto c = generate_trajectory<2>("tgv2d", 10, 2, opt);
  EXPECT_NE(a.frame(0)[0], c.frame(0)[0]);
}

TEST(Generate, StationaryWarmupRecorded) {
  GenerateOptions opt;
  opt.warmup_window = 2;
  opt.warmup_max_frames = 4;
  GenerationInfo info;
  const auto t = generate_trajectory<2>("ldc2d", 1, 2, opt, &info);
  EXPECT_EQ(t.particles, 2708u);
  EXPECT_GE(info.warmup_frames, 2u);
  EXPECT_LE(info.warmup_frames, 4u);
  EXPECT_EQ(info.solver_steps, (info.warmup_frames + 1) * 100);
}
