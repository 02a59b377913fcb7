#pragma once

// The seven benchmark cases: catalog constants, initial particle layouts,
// external forcing and trajectory generation.
//
// Geometry conventions. Every box has its origin at the corner and particles
// sit at cell centres (i + 1/2) dx. Wall cases carry three dummy layers during
// simulation; only the innermost one is kept in recorded trajectories.
//   ldc   fluid cavity of side 1 surrounded by three layers; the lid occupies
//         the three rows above the cavity across the full box width.
//   dam   tank with three-layer walls on all four sides; the water column
//         (width 2, height 1) rests in the lower-left corner.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sphkit/core.hpp"
#include "sphkit/sph.hpp"

namespace sphkit {

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace detail {

inline CaseSpec make_case(std::string id, std::string family, int dim, std::vector<double> extents,
                          std::vector<bool> periodic, double dx, double frame_dt) {
  CaseSpec c;
  c.id = std::move(id);
  c.family = std::move(family);
  c.dim = dim;
  c.extents = std::move(extents);
  c.periodic = std::move(periodic);
  c.dx = dx;
  c.frames_between_samples = 100;
  c.dt_solver = frame_dt / 100.0;
  return c;
}

inline std::vector<CaseSpec> build_catalog() {
  std::vector<CaseSpec> cat;
  const double two_pi = 2.0 * std::numbers::pi;

  CaseSpec tgv2 = make_case("tgv2d", "tgv", 2, {1.0, 1.0}, {true, true}, 0.02, 0.04);
  tgv2.viscosity = 0.01;
  tgv2.reynolds = 100;
  tgv2.trajectory_length = 126;
  tgv2.splits = {100, 50, 50};
  tgv2.expected_particles = 2500;
  cat.push_back(tgv2);

  CaseSpec rpf2 = make_case("rpf2d", "rpf", 2, {1.0, 2.0}, {true, true}, 0.025, 0.04);
  rpf2.p_bg = 5.0;
  rpf2.viscosity = 0.1;
  rpf2.force_magnitude = 1.0;
  rpf2.reynolds = 10;
  rpf2.stationary = true;
  rpf2.splits = {20000, 10000, 10000};
  rpf2.expected_particles = 3200;
  cat.push_back(rpf2);

  CaseSpec ldc2 = make_case("ldc2d", "ldc", 2, {1.12, 1.12}, {false, false}, 0.02, 0.04);
  ldc2.p_bg = 1.0;
  ldc2.viscosity = 0.01;
  ldc2.lid_velocity = 1.0;
  ldc2.wall_layers = 3;
  ldc2.reynolds = 100;
  ldc2.stationary = true;
  ldc2.splits = {10000, 5000, 5000};
  ldc2.expected_particles = 2708;
  cat.push_back(ldc2);

  CaseSpec dam2 = make_case("dam2d", "dam", 2, {5.486, 2.12}, {false, false}, 0.02, 0.03);
  dam2.c0 = 14.14;
  dam2.viscosity = 5e-5;
  dam2.force_magnitude = 1.0;
  dam2.gravity = 1.0;
  dam2.artificial_alpha = 0.1;
  dam2.density_mode = DensityMode::evolution;
  dam2.wall_layers = 3;
  dam2.reynolds = 40000;
  dam2.trajectory_length = 401;
  dam2.splits = {50, 25, 25};
  dam2.expected_particles = 5740;
  cat.push_back(dam2);

  CaseSpec tgv3 = make_case("tgv3d", "tgv", 3, {two_pi, two_pi, two_pi}, {true, true, true},
                            two_pi / 20.0, 0.5);
  tgv3.viscosity = 0.02;
  tgv3.reynolds = 50;
  tgv3.trajectory_length = 61;
  tgv3.splits = {200, 100, 100};
  tgv3.expected_particles = 8000;
  cat.push_back(tgv3);

  CaseSpec rpf3 = make_case("rpf3d", "rpf", 3, {1.0, 2.0, 0.5}, {true, true, true}, 0.05, 0.1);
  rpf3.p_bg = 2.0;
  rpf3.viscosity = 0.1;
  rpf3.force_magnitude = 1.0;
  rpf3.reynolds = 10;
  rpf3.stationary = true;
  rpf3.splits = {10000, 5000, 5000};
  rpf3.expected_particles = 8000;
  cat.push_back(rpf3);

  CaseSpec ldc3 = make_case("ldc3d", "ldc", 3, {1.25, 1.25, 0.5}, {false, false, true}, 1.0 / 24.0, 0.09);
  ldc3.p_bg = 1.0;
  ldc3.viscosity = 0.01;
  ldc3.lid_velocity = 1.0;
  ldc3.wall_layers = 3;
  ldc3.reynolds = 100;
  ldc3.stationary = true;
  ldc3.splits = {10000, 5000, 5000};
  ldc3.expected_particles = 8160;
  cat.push_back(ldc3);

  for (std::size_t i = 0; i < cat.size(); ++i) cat[i].seed = 1000 * (i + 1);
  return cat;
}

}  // namespace detail

inline const std::vector<CaseSpec>& case_catalog() {
  static const std::vector<CaseSpec> catalog = detail::build_catalog();
  return catalog;
}

inline const CaseSpec& case_spec(std::string_view id) {
  for (const auto& c : case_catalog())
    if (c.id == id) return c;
  throw ConfigError("unknown case id '" + std::string(id) + "'");
}

inline nlohmann::json case_to_json(const CaseSpec& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["family"] = c.family;
  j["dim"] = c.dim;
  j["box"] = c.extents;
  j["periodic"] = c.periodic;
  j["dx"] = c.dx;
  j["dt_solver"] = c.dt_solver;
  j["frames_between_samples"] = c.frames_between_samples;
  j["frame_dt"] = c.frame_dt();
  j["c0"] = c.c0;
  j["rho0"] = c.rho0;
  j["p_bg"] = c.p_bg;
  j["viscosity"] = c.viscosity;
  j["force_magnitude"] = c.force_magnitude;
  j["artificial_alpha"] = c.artificial_alpha;
  j["density_mode"] = c.density_mode == DensityMode::summation ? "summation" : "evolution";
  j["lid_velocity"] = c.lid_velocity;
  j["gravity"] = c.gravity;
  j["wall_layers"] = c.wall_layers;
  j["reynolds"] = c.reynolds;
  j["stationary"] = c.stationary;
  j["trajectory_length"] = c.trajectory_length;
  j["splits"] = {c.splits.train, c.splits.valid, c.splits.test};
  j["particles"] = c.expected_particles;
  j["seed"] = c.seed;
  return j;
}

/// All catalog constants as a JSON array, one object per case.
inline nlohmann::json catalog_json() {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : case_catalog()) arr.push_back(case_to_json(c));
  return arr;
}

// ---------------------------------------------------------------------------
// Solver setup and forcing
// ---------------------------------------------------------------------------

template <int Dim>
SolverParams<Dim> solver_params(const CaseSpec& spec) {
  if (spec.dim != Dim) throw ContractError(spec.id + ": solver dimension mismatch");
  SolverParams<Dim> p;
  p.c0 = spec.c0;
  p.rho0 = spec.rho0;
  p.p_bg = spec.p_bg;
  p.viscosity = spec.viscosity;
  p.artificial_alpha = spec.artificial_alpha;
  p.h = spec.dx;
  p.density_mode = spec.density_mode;
  p.transport_velocity = spec.p_bg > 0.0;
  p.fixed_dt = spec.dt_solver;
  p.lid_velocity[0] = spec.lid_velocity;
  if (spec.gravity > 0.0) {
    p.gravity[1] = -spec.gravity;
    p.hydrostatic_wall_correction = true;
  }
  return p;
}

/// Volumetric force at a point: RPF drives +x in the lower half and -x in the
/// upper half (along y); DAM is gravity along -y.
template <int Dim>
Vec<Dim> external_force(const CaseSpec& spec, const Vec<Dim>& x, double /*t*/ = 0.0) {
  Vec<Dim> f{};
  if (spec.family == "rpf") {
    f[0] = x[1] < 0.5 * spec.extents[1] ? spec.force_magnitude : -spec.force_magnitude;
  } else if (spec.family == "dam") {
    f[1] = -spec.force_magnitude;
  }
  return f;
}

template <int Dim>
typename Solver<Dim>::ForceField force_field(const CaseSpec& spec) {
  if (spec.force_magnitude == 0.0) return {};
  return [spec](const Vec<Dim>& x, double t) { return external_force<Dim>(spec, x, t); };
}

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------

struct InitOptions {
  // TGV and DAM start from relaxed random positions; `lattice` forces a
  // Cartesian lattice instead.
  bool lattice = false;
  std::size_t relax_steps = 1000;
};

template <int Dim>
struct CaseState {
  CaseSpec spec;
  Domain<Dim> domain;
  ParticleState<Dim> state;
};

/// Taylor-Green initial velocity: 2D u = -cos kx sin ky, v = sin kx cos ky
/// (k = 2 pi); 3D u = sin kx cos ky cos kz, v = -cos kx sin ky cos kz, w = 0
/// (k = 1).
template <int Dim>
Vec<Dim> tgv_velocity(const Vec<Dim>& x) {
  Vec<Dim> v{};
  if constexpr (Dim == 2) {
    const double k = 2.0 * std::numbers::pi;
    v[0] = -std::cos(k * x[0]) * std::sin(k * x[1]);
    v[1] = std::sin(k * x[0]) * std::cos(k * x[1]);
  } else {
    v[0] = std::sin(x[0]) * std::cos(x[1]) * std::cos(x[2]);
    v[1] = -std::cos(x[0]) * std::sin(x[1]) * std::cos(x[2]);
  }
  return v;
}

namespace detail {

template <int Dim>
std::array<long, Dim> lattice_counts(const CaseSpec& spec) {
  std::array<long, Dim> n{};
  for (int a = 0; a < Dim; ++a) n[a] = std::lround(spec.extents[a] / spec.dx);
  return n;
}

template <int Dim, class F>
void for_each_index(const std::array<long, Dim>& lo, const std::array<long, Dim>& hi, F&& f) {
  std::array<long, Dim> idx = lo;
  for (int a = 0; a < Dim; ++a)
    if (lo[a] >= hi[a]) return;
  while (true) {
    f(idx);
    int a = 0;
    while (a < Dim) {
      if (++idx[a] < hi[a]) break;
      idx[a] = lo[a];
      ++a;
    }
    if (a == Dim) return;
  }
}

template <int Dim>
Vec<Dim> cell_center(const std::array<long, Dim>& idx, double dx) {
  Vec<Dim> x;
  for (int a = 0; a < Dim; ++a) x[a] = (static_cast<double>(idx[a]) + 0.5) * dx;
  return x;
}

template <int Dim>
double particle_mass(const CaseSpec& spec) {
  return spec.rho0 * std::pow(spec.dx, Dim);
}

template <int Dim>
ParticleState<Dim> random_fluid(std::size_t n, const Vec<Dim>& lo, const Vec<Dim>& hi, double mass,
                                double rho0, std::mt19937_64& rng) {
  ParticleState<Dim> s;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    Vec<Dim> x;
    for (int a = 0; a < Dim; ++a) x[a] = lo[a] + (hi[a] - lo[a]) * u(rng);
    s.push_back(x, Vec<Dim>{}, rho0, mass, ParticleType::fluid);
  }
  return s;
}

template <int Dim>
CaseState<Dim> init_periodic_box(const CaseSpec& spec, std::uint64_t seed, const InitOptions& opt) {
  const Domain<Dim> domain = spec.domain<Dim>();
  const auto n = lattice_counts<Dim>(spec);
  const double m = particle_mass<Dim>(spec);
  ParticleState<Dim> s;
  const bool random = spec.family == "tgv" && !opt.lattice;
  if (random) {
    std::size_t count = 1;
    for (int a = 0; a < Dim; ++a) count *= static_cast<std::size_t>(n[a]);
    std::mt19937_64 rng(seed);
    s = random_fluid<Dim>(count, Vec<Dim>{}, domain.extents(), m, spec.rho0, rng);
    for (auto& x : s.positions) x = domain.wrap(x);
    RelaxOptions ro;
    ro.steps = opt.relax_steps;
    s = relax(std::move(s), domain, solver_params<Dim>(spec), ro);
  } else {
    for_each_index<Dim>(std::array<long, Dim>{}, n, [&](const std::array<long, Dim>& idx) {
      s.push_back(cell_center<Dim>(idx, spec.dx), Vec<Dim>{}, spec.rho0, m, ParticleType::fluid);
    });
  }
  if (spec.family == "tgv")
    for (std::size_t i = 0; i < s.size(); ++i) s.velocities[i] = tgv_velocity<Dim>(s.positions[i]);
  return {spec, domain, std::move(s)};
}

// Cavity: fluid occupies lattice indices [L, L + nf) on the two in-plane axes;
// the lid fills rows above it across the full width.
template <int Dim>
CaseState<Dim> init_cavity(const CaseSpec& spec) {
  const Domain<Dim> domain = spec.domain<Dim>();
  const auto n = lattice_counts<Dim>(spec);
  const long L = spec.wall_layers;
  const long nf = n[0] - 2 * L;
  const double m = particle_mass<Dim>(spec);
  ParticleState<Dim> s;
  for_each_index<Dim>(std::array<long, Dim>{}, n, [&](const std::array<long, Dim>& idx) {
    const long i = idx[0] - L;
    const long j = idx[1] - L;
    const Vec<Dim> x = cell_center<Dim>(idx, spec.dx);
    if (i >= 0 && i < nf && j >= 0 && j < nf) {
      s.push_back(x, Vec<Dim>{}, spec.rho0, m, ParticleType::fluid);
    } else if (j >= nf) {
      Vec<Dim> v{};
      v[0] = spec.lid_velocity;
      s.push_back(x, v, spec.rho0, m, ParticleType::moving_wall, static_cast<std::int32_t>(j - nf + 1));
    } else {
      const long di = i < 0 ? -i : (i >= nf ? i - nf + 1 : 0);
      const long dj = j < 0 ? -j : 0;
      s.push_back(x, Vec<Dim>{}, spec.rho0, m, ParticleType::wall,
                  static_cast<std::int32_t>(std::max(di, dj)));
    }
  });
  return {spec, domain, std::move(s)};
}

// Wall ring of `layers` lattice layers around the index block [lo, hi).
inline void add_wall_ring(ParticleState<2>& s, std::array<long, 2> lo, std::array<long, 2> hi,
                          long layers, double dx, double mass, double rho0) {
  for (long j = lo[1] - layers; j < hi[1] + layers; ++j)
    for (long i = lo[0] - layers; i < hi[0] + layers; ++i) {
      const long di = i < lo[0] ? lo[0] - i : (i >= hi[0] ? i - hi[0] + 1 : 0);
      const long dj = j < lo[1] ? lo[1] - j : (j >= hi[1] ? j - hi[1] + 1 : 0);
      const long layer = std::max(di, dj);
      if (layer == 0) continue;
      s.push_back(cell_center<2>({i, j}, dx), Vec<2>{}, rho0, mass, ParticleType::wall,
                  static_cast<std::int32_t>(layer));
    }
}

// Dam break: tank interior spans lattice indices [L, nx - L) x [L, ny - L);
// the column covers `column_cells` cells from the lower-left interior corner.
inline CaseState<2> init_dam(const CaseSpec& spec, std::uint64_t seed, const InitOptions& opt) {
  const double dx = spec.dx;
  const long L = spec.wall_layers;
  const double m = particle_mass<2>(spec);
  const std::array<long, 2> tank_cells = {
      static_cast<long>(std::floor(spec.extents[0] / dx)) - 2 * L,
      static_cast<long>(std::floor(spec.extents[1] / dx)) - 2 * L};
  const std::array<long, 2> column_cells = {std::lround(2.0 / dx), std::lround(1.0 / dx)};
  const std::size_t n_fluid = static_cast<std::size_t>(column_cells[0] * column_cells[1]);
  const double gravity = spec.gravity;
  const double height = static_cast<double>(column_cells[1]) * dx;

  ParticleState<2> fluid;
  if (opt.lattice) {
    for (long j = 0; j < column_cells[1]; ++j)
      for (long i = 0; i < column_cells[0]; ++i)
        fluid.push_back(cell_center<2>({i + L, j + L}, dx), Vec<2>{}, spec.rho0, m, ParticleType::fluid);
  } else {
    // Relax the column inside temporary walls that enclose it tightly.
    std::mt19937_64 rng(seed);
    const Vec<2> lo{{L * dx, L * dx}};
    const Vec<2> hi{{(L + column_cells[0]) * dx, (L + column_cells[1]) * dx}};
    ParticleState<2> box = random_fluid<2>(n_fluid, lo, hi, m, spec.rho0, rng);
    add_wall_ring(box, {L, L}, {L + column_cells[0], L + column_cells[1]}, L, dx, m, spec.rho0);
    const Domain<2> open({{spec.extents[0], spec.extents[1]}}, {false, false});
    RelaxOptions ro;
    ro.steps = opt.relax_steps;
    box = relax(std::move(box), open, solver_params<2>(spec), ro);
    for (std::size_t i = 0; i < box.size(); ++i)
      if (box.types[i] == ParticleType::fluid)
        fluid.push_back(box.positions[i], Vec<2>{}, spec.rho0, m, ParticleType::fluid);
  }

  ParticleState<2> s = fluid;
  add_wall_ring(s, {L, L}, {L + tank_cells[0], L + tank_cells[1]}, L, dx, m, spec.rho0);

  // Hydrostatic initial pressure, p = rho0 g (H - depth coordinate).
  const SolverParams<2> params = solver_params<2>(spec);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.types[i] != ParticleType::fluid) continue;
    const double depth = std::max(0.0, height - (s.positions[i][1] - L * dx));
    const double p = spec.rho0 * gravity * depth + params.p_bg;
    s.densities[i] = eos_density(p, params);
    s.pressures[i] = p;
  }
  return {spec, spec.domain<2>(), std::move(s)};
}

}  // namespace detail

/// Builds the initial particle state of a case with all wall layers present.
template <int Dim>
CaseState<Dim> init_case(const CaseSpec& spec, std::uint64_t seed, const InitOptions& opt = {}) {
  spec.validate();
  if (spec.dim != Dim) throw ContractError(spec.id + ": requested dimension does not match case");
  if (spec.family == "tgv" || spec.family == "rpf") return detail::init_periodic_box<Dim>(spec, seed, opt);
  if (spec.family == "ldc") return detail::init_cavity<Dim>(spec);
  if (spec.family == "dam") {
    if constexpr (Dim == 2) return detail::init_dam(spec, seed, opt);
    throw ConfigError(spec.id + ": dam break is two-dimensional only");
  }
  throw ConfigError("unknown case family '" + spec.family + "'");
}

template <int Dim>
CaseState<Dim> init_case(std::string_view id, std::uint64_t seed, const InitOptions& opt = {}) {
  return init_case<Dim>(case_spec(id), seed, opt);
}

/// Keeps fluid and the innermost wall layer; order and types are preserved.
template <int Dim>
ParticleState<Dim> strip_wall_layers(const ParticleState<Dim>& state) {
  ParticleState<Dim> out;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.types[i] != ParticleType::fluid && state.wall_layers[i] > 1) continue;
    out.positions.push_back(state.positions[i]);
    out.velocities.push_back(state.velocities[i]);
    out.densities.push_back(state.densities[i]);
    out.pressures.push_back(state.pressures[i]);
    out.masses.push_back(state.masses[i]);
    out.types.push_back(state.types[i]);
    out.wall_layers.push_back(state.wall_layers[i]);
  }
  return out;
}

/// Indices of the particles strip_wall_layers keeps.
template <int Dim>
std::vector<std::size_t> kept_particles(const ParticleState<Dim>& state) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state.types[i] == ParticleType::fluid || state.wall_layers[i] <= 1) idx.push_back(i);
  return idx;
}

// ---------------------------------------------------------------------------
// Trajectory generation
// ---------------------------------------------------------------------------

struct GenerateOptions {
  InitOptions init;
  // Stationary cases: warm up until the kinetic energy changes by less than
  // `warmup_tolerance` over `warmup_window` frames, for at most
  // `warmup_max_frames` frames. Zero disables the warm-up.
  std::size_t warmup_window = 100;
  double warmup_tolerance = 0.01;
  std::size_t warmup_max_frames = 2000;
  std::ostream* diagnostics = nullptr;
};

struct GenerationInfo {
  std::size_t warmup_frames = 0;
  bool warmup_converged = true;
  std::size_t solver_steps = 0;
};

template <int Dim>
void record_frame(Trajectory& traj, std::size_t t, const ParticleState<Dim>& state,
                  const std::vector<std::size_t>& kept) {
  for (std::size_t k = 0; k < kept.size(); ++k)
    for (int a = 0; a < Dim; ++a) traj.at(t, k, a) = static_cast<float>(state.positions[kept[k]][a]);
}

/// A case solver positioned at recorded frame 0: initialised, warmed up for
/// stationary cases, and advanced one frame (`frames_between_samples` solver
/// steps) at a time. Generation and the SPH-wrapped predictor share it, so
/// both follow the same deterministic path.
template <int Dim>
class CaseRunner {
 public:
  CaseRunner(const CaseSpec& spec, std::uint64_t seed, const GenerateOptions& opt = {})
      : spec_(spec), solver_(make_solver(spec, seed, opt, kept_)) {
    if (opt.diagnostics) solver_.set_diagnostics(opt.diagnostics);
    if (spec.stationary && opt.warmup_max_frames > 0) warm_up(opt);
    frame_ = 0;
  }

  const CaseSpec& spec() const { return spec_; }
  const Solver<Dim>& solver() const { return solver_; }
  const std::vector<std::size_t>& kept() const { return kept_; }
  const GenerationInfo& info() const { return info_; }
  /// Recorded frames advanced since the warm-up.
  std::size_t frame() const { return frame_; }

  void advance_frame() {
    try {
      solver_.advance(spec_.frames_between_samples);
    } catch (const InstabilityError& e) {
      throw InstabilityError(e.step(), std::string(e.what()) + " (frame " + std::to_string(frame_ + 1) + ")");
    }
    ++frame_;
    info_.solver_steps = solver_.steps();
  }

  std::vector<std::int32_t> kept_types() const {
    std::vector<std::int32_t> t(kept_.size());
    for (std::size_t k = 0; k < kept_.size(); ++k)
      t[k] = static_cast<std::int32_t>(solver_.state().types[kept_[k]]);
    return t;
  }

  std::vector<Vec<Dim>> kept_positions() const {
    std::vector<Vec<Dim>> x(kept_.size());
    for (std::size_t k = 0; k < kept_.size(); ++k) x[k] = solver_.state().positions[kept_[k]];
    return x;
  }

 private:
  static Solver<Dim> make_solver(const CaseSpec& spec, std::uint64_t seed, const GenerateOptions& opt,
                                 std::vector<std::size_t>& kept) {
    CaseState<Dim> cs = init_case<Dim>(spec, seed, opt.init);
    kept = kept_particles(cs.state);
    return Solver<Dim>(std::move(cs.state), cs.domain, solver_params<Dim>(spec), force_field<Dim>(spec));
  }

  void warm_up(const GenerateOptions& opt) {
    info_.warmup_converged = false;
    double e_prev = kinetic_energy_of(solver_.state());
    while (info_.warmup_frames < opt.warmup_max_frames) {
      const std::size_t window = std::min(opt.warmup_window, opt.warmup_max_frames - info_.warmup_frames);
      for (std::size_t k = 0; k < window; ++k) advance_frame();
      info_.warmup_frames += window;
      const double e = kinetic_energy_of(solver_.state());
      if (window == opt.warmup_window && e > 0.0 && std::abs(e - e_prev) < opt.warmup_tolerance * e) {
        info_.warmup_converged = true;
        break;
      }
      e_prev = e;
    }
  }

  CaseSpec spec_;
  std::vector<std::size_t> kept_;
  Solver<Dim> solver_;
  GenerationInfo info_;
  std::size_t frame_ = 0;
};

/// Runs the case solver from its initial state and records `frames` frames
/// (the initial one included), each `frames_between_samples` solver steps
/// apart. Stationary cases are warmed up first.
template <int Dim>
Trajectory generate_trajectory(const CaseSpec& spec, std::uint64_t seed, std::size_t frames,
                               const GenerateOptions& opt = {}, GenerationInfo* info = nullptr) {
  if (frames < 1) throw ContractError("generate_trajectory needs at least one frame");
  CaseRunner<Dim> runner(spec, seed, opt);
  const auto& kept = runner.kept();
  Trajectory traj(Dim, frames, kept.size(), spec.frame_dt());
  traj.types = runner.kept_types();
  record_frame(traj, 0, runner.solver().state(), kept);
  for (std::size_t t = 1; t < frames; ++t) {
    runner.advance_frame();
    record_frame(traj, t, runner.solver().state(), kept);
  }
  if (info) *info = runner.info();
  return traj;
}

template <int Dim>
Trajectory generate_trajectory(std::string_view id, std::uint64_t seed, std::size_t frames,
                               const GenerateOptions& opt = {}, GenerationInfo* info = nullptr) {
  return generate_trajectory<Dim>(case_spec(id), seed, frames, opt, info);
}

/// Fluid mass per particle of a case (all particles share it).
inline double case_particle_mass(const CaseSpec& spec) {
  return spec.rho0 * std::pow(spec.dx, spec.dim);
}

}  // namespace sphkit
