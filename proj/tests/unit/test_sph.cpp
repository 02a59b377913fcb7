#include <gtest/gtest.h>

#include "sphkit/validation.hpp"

using namespace sphkit;

TEST(Eos, LinearAndInvertible) {
  SolverParams<2> p;
  p.c0 = 10.0;
  p.rho0 = 1.0;
  p.p_bg = 5.0;
  p.h = 0.1;
  EXPECT_DOUBLE_EQ(eos_pressure(1.0, p), 5.0);
  EXPECT_NEAR(eos_pressure(1.01, p), 6.0, 1e-12);
  EXPECT_NEAR(eos_density(eos_pressure(0.97, p), p), 0.97, 1e-14);
}

TEST(Params, ValidationRejectsBadValues) {
  SolverParams<2> p;
  p.h = 0.1;
  EXPECT_NO_THROW(p.validate());
  p.cfl = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p.cfl = 0.25;
  p.artificial_alpha = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.artificial_alpha = 0.0;
  p.h = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Density, SummationOnLatticeIsNearRho0) {
  const auto r = run_conservation(1);
  EXPECT_LT(r.lattice_density_error, 0.02);
}

TEST(Density, EvolutionRateVanishesForUniformMotion) {
  Solver<2> s = conservation_solver<2>(1, 20, Vec<2>{}, 0.0);
  ParticleState<2> st = s.state();
  for (auto& v : st.velocities) v = Vec<2>{0.3, -0.1};
  auto edges = detail::binned_pairs<2>(st.positions, s.domain(), s.kernel().support());
  const auto nbh = make_neighborhood(std::move(edges), st.size());
  for (double r : density_rate(st, nbh, s.kernel(), s.params())) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(Solver, ConservesMomentumAndIsGalileanInvariant) {
  const auto r = run_conservation(100, 7);
  EXPECT_LT(r.momentum_drift, 1e-10);
  EXPECT_LT(r.galilean_error, 1e-12);
  EXPECT_EQ(r.steps, 100u);
}

TEST(Solver, ThreeDimensionalMomentum) {
  Solver<3> s = conservation_solver<3>(3, 10);
  const Vec<3> p0 = total_momentum_of(s.state());
  double scale = 0.0;
  for (std::size_t i = 0; i < s.state().size(); ++i) scale += s.state().masses[i] * norm(s.state().velocities[i]);
  s.advance(20);
  EXPECT_LT(norm(total_momentum_of(s.state()) - p0) / scale, 1e-10);
}

TEST(Solver, StepRespectsCflAndAdvancesTime) {
  Solver<2> s = conservation_solver<2>(2, 20);
  const double dt = s.stable_dt();
  const auto b = cfl_bounds<2>(s.state(), s.accelerations(), s.params());
  EXPECT_DOUBLE_EQ(dt, b.dt());
  EXPECT_DOUBLE_EQ(b.viscous, 0.5 * 0.25 * 0.05 * 0.05 / 0.01);
  EXPECT_DOUBLE_EQ(s.step(), dt);
  EXPECT_DOUBLE_EQ(s.time(), dt);
  EXPECT_EQ(s.steps(), 1u);
  EXPECT_EQ(s.step(0.0), 0.0);
  EXPECT_EQ(s.steps(), 1u);
  EXPECT_THROW(s.step(-1.0), InstabilityError);
}

TEST(Solver, WallsStayFixed) {
  const CaseSpec& spec = case_spec("ldc2d");
  CaseState<2> cs = init_case<2>(spec, 1);
  Solver<2> s(cs.state, cs.domain, solver_params<2>(spec), force_field<2>(spec));
  s.advance(50);
  for (std::size_t i = 0; i < cs.state.size(); ++i)
    if (cs.state.types[i] != ParticleType::fluid) {
      EXPECT_EQ(s.state().positions[i], cs.state.positions[i]);
    }
  // The lid drags fluid along +x.
  double px = 0.0;
  for (std::size_t i = 0; i < cs.state.size(); ++i)
    if (cs.state.types[i] == ParticleType::fluid) px += s.state().velocities[i][0];
  EXPECT_GT(px, 0.0);
}

TEST(Solver, BlowUpRaisesInstability) {
  Solver<2> s = conservation_solver<2>(4, 20);
  EXPECT_THROW(s.advance(50, 0.5), InstabilityError);
}

TEST(Relax, ReducesDensityScatter) {
  const CaseSpec& spec = case_spec("tgv2d");
  const Domain<2> d = spec.domain<2>();
  std::mt19937_64 rng(5);
  auto s = detail::random_fluid<2>(2500, Vec<2>{}, d.extents(), spec.dx * spec.dx, 1.0, rng);
  const auto params = solver_params<2>(spec);
  auto scatter = [&](const ParticleState<2>& st) {
    auto e = detail::binned_pairs<2>(st.positions, d, 3 * spec.dx);
    const auto nbh = make_neighborhood(std::move(e), st.size());
    const auto rho = density_summation(st, nbh, QuinticKernel<2>(spec.dx));
    double m = 0.0;
    for (double r : rho) m = std::max(m, std::abs(r - 1.0));
    return m;
  };
  const double before = scatter(s);
  RelaxOptions ro;
  ro.steps = 300;
  const auto relaxed = relax(s, d, params, ro);
  EXPECT_LT(scatter(relaxed), 0.25 * before);
  for (const auto& v : relaxed.velocities) EXPECT_EQ(norm(v), 0.0);
}

TEST(Poiseuille, SeriesSolutionLimits) {
  // t = 0: fluid at rest; t -> infinity: parabola with peak F L^2 / (8 nu).
  for (double y : {0.1, 0.5, 0.9}) EXPECT_NEAR(poiseuille_series(y, 0.0, 2000, 100, 1.0, 2000), 0.0, 1e-3);
  EXPECT_NEAR(poiseuille_series(0.5, 1.0, 2000, 100, 1.0), 2.5, 1e-12);
  EXPECT_NEAR(poiseuille_series(0.0, 1e-3, 2000, 100, 1.0), 0.0, 1e-12);
}
