#pragma once

// Weakly-compressible SPH with generalized wall boundary conditions.
//
// Discretization (pairwise form, x_ij = x_i - x_j, V = m / rho):
//   pressure   a_i -= 1/m_i sum_j (V_i^2 + V_j^2) p~_ij dW/dr x_ij/r
//              p~_ij = (rho_j p_i + rho_i p_j) / (rho_i + rho_j)
//   viscosity  a_i += 1/m_i sum_j (V_i^2 + V_j^2) eta~_ij dW/dr v_ij / r
//              eta~_ij = 2 eta_i eta_j / (eta_i + eta_j), eta = rho nu
//   artificial a_i -= sum_j m_j Pi_ij grad W_ij  for approaching pairs
//   body force a_i += F_i / rho_i
// With the transport-velocity option the background pressure is moved from
// the momentum equation into the advection velocity and the extra stress
// A = rho v (x) (v~ - v) is added.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sphkit/core.hpp"
#include "sphkit/kernel.hpp"
#include "sphkit/neighbors.hpp"

namespace sphkit {

template <int Dim>
struct SolverParams {
  double c0 = 10.0;
  double rho0 = 1.0;
  double p_bg = 0.0;
  double viscosity = 0.0;
  double artificial_alpha = 0.0;
  double cfl = 0.25;
  double h = 0.0;  // smoothing length; support is 3h
  DensityMode density_mode = DensityMode::summation;
  bool transport_velocity = false;
  std::optional<double> fixed_dt;
  Vec<Dim> lid_velocity{};
  // Body acceleration used for the hydrostatic wall-pressure extrapolation.
  Vec<Dim> gravity{};
  bool hydrostatic_wall_correction = false;
  double skin = 0.0;  // Verlet skin; 0 selects 0.5 h
  double max_speed_factor = 10.0;

  void validate() const {
    if (!(cfl > 0.0 && cfl < 1.0)) throw ConfigError("cfl number must lie in (0, 1)");
    if (artificial_alpha < 0.0) throw ConfigError("artificial viscosity alpha must be >= 0");
    if (viscosity < 0.0) throw ConfigError("viscosity must be >= 0");
    if (!(c0 > 0.0) || !(rho0 > 0.0)) throw ConfigError("c0 and rho0 must be positive");
    if (!(h > 0.0)) throw ConfigError("smoothing length must be positive");
    if (fixed_dt && !(*fixed_dt >= 0.0)) throw ConfigError("fixed dt must be non-negative");
  }

  Vec<Dim> prescribed_wall_velocity(ParticleType t) const {
    return t == ParticleType::moving_wall ? lid_velocity : Vec<Dim>{};
  }
  // Pressure offset that the momentum equation does not see.
  double momentum_pressure_offset() const { return transport_velocity ? p_bg : 0.0; }
};

template <int Dim>
double eos_pressure(double rho, const SolverParams<Dim>& params) {
  return params.c0 * params.c0 * (rho - params.rho0) + params.p_bg;
}

template <int Dim>
double eos_density(double p, const SolverParams<Dim>& params) {
  return (p - params.p_bg) / (params.c0 * params.c0) + params.rho0;
}

/// Canonical edge set plus CSR row pointers.
template <int Dim>
struct Neighborhood {
  EdgeSet<Dim> edges;
  std::vector<std::size_t> offsets;

  std::size_t begin(std::size_t i) const { return offsets[i]; }
  std::size_t end(std::size_t i) const { return offsets[i + 1]; }
  std::size_t num_particles() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

template <int Dim>
Neighborhood<Dim> make_neighborhood(EdgeSet<Dim> edges, std::size_t num_particles) {
  Neighborhood<Dim> n;
  n.offsets = row_offsets(edges, num_particles);
  n.edges = std::move(edges);
  return n;
}

namespace detail {
inline void check_sizes(std::size_t state_n, std::size_t nbh_n) {
  if (state_n != nbh_n) throw ContractError("neighborhood does not match particle count");
}
}  // namespace detail

/// rho_i = sum_j m_j W(|x_ij|), self term included.
template <int Dim>
std::vector<double> density_summation(const ParticleState<Dim>& state, const Neighborhood<Dim>& nbh,
                                      const QuinticKernel<Dim>& kernel) {
  detail::check_sizes(state.size(), nbh.num_particles());
  const double w0 = kernel.unchecked_value(0.0);
  std::vector<double> rho(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    double s = state.masses[i] * w0;
    for (std::size_t e = nbh.begin(i); e < nbh.end(i); ++e)
      s += state.masses[nbh.edges.receivers[e]] * kernel.unchecked_value(nbh.edges.distances[e]);
    rho[i] = s;
  }
  return rho;
}

/// d rho_i / dt = rho_i sum_j (m_j / rho_j) (v_i - v_j) . grad W_ij for fluid
/// particles; walls enter with their prescribed velocity and have zero rate.
template <int Dim>
std::vector<double> density_rate(const ParticleState<Dim>& state, const Neighborhood<Dim>& nbh,
                                 const QuinticKernel<Dim>& kernel, const SolverParams<Dim>& params) {
  detail::check_sizes(state.size(), nbh.num_particles());
  std::vector<double> rate(state.size(), 0.0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.types[i] != ParticleType::fluid) continue;
    double s = 0.0;
    for (std::size_t e = nbh.begin(i); e < nbh.end(i); ++e) {
      const double r = nbh.edges.distances[e];
      if (r == 0.0 || r >= kernel.support()) continue;
      const Index j = nbh.edges.receivers[e];
      const Vec<Dim> vj = state.types[j] == ParticleType::fluid
                              ? state.velocities[j]
                              : params.prescribed_wall_velocity(state.types[j]);
      const Vec<Dim> grad = nbh.edges.displacements[e] * (kernel.derivative(r) / r);
      s += state.masses[j] / state.densities[j] * dot(state.velocities[i] - vj, grad);
    }
    rate[i] = state.densities[i] * s;
  }
  return rate;
}

template <int Dim>
std::vector<double> density_evolution_step(const ParticleState<Dim>& state,
                                           const Neighborhood<Dim>& nbh,
                                           const QuinticKernel<Dim>& kernel,
                                           const SolverParams<Dim>& params, double dt) {
  std::vector<double> rho = state.densities;
  if (dt == 0.0) return rho;
  const std::vector<double> rate = density_rate(state, nbh, kernel, params);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    rho[i] += dt * rate[i];
    if (state.types[i] == ParticleType::fluid && !(rho[i] > 0.0))
      throw InstabilityError(0, "non-positive density at particle " + std::to_string(i));
  }
  return rho;
}

/// Sets BC velocity, pressure and density of every wall particle from the
/// kernel-weighted fluid neighborhood. Positions are untouched.
template <int Dim>
void apply_wall_bc(ParticleState<Dim>& state, const Neighborhood<Dim>& nbh,
                   const QuinticKernel<Dim>& kernel, const SolverParams<Dim>& params) {
  detail::check_sizes(state.size(), nbh.num_particles());
  for (std::size_t w = 0; w < state.size(); ++w) {
    if (state.types[w] == ParticleType::fluid) continue;
    double sum_w = 0.0;
    double sum_p = 0.0;
    Vec<Dim> sum_v{};
    Vec<Dim> sum_rho_r{};
    for (std::size_t e = nbh.begin(w); e < nbh.end(w); ++e) {
      const Index f = nbh.edges.receivers[e];
      if (state.types[f] != ParticleType::fluid) continue;
      const double wk = kernel.unchecked_value(nbh.edges.distances[e]);
      if (wk == 0.0) continue;
      sum_w += wk;
      sum_p += state.pressures[f] * wk;
      sum_v += state.velocities[f] * wk;
      sum_rho_r += nbh.edges.displacements[e] * (state.densities[f] * wk);
    }
    const Vec<Dim> prescribed = params.prescribed_wall_velocity(state.types[w]);
    if (sum_w == 0.0) {
      state.velocities[w] = prescribed;
      state.pressures[w] = params.p_bg;
      state.densities[w] = params.rho0;
      continue;
    }
    state.velocities[w] = prescribed * 2.0 - sum_v * (1.0 / sum_w);
    double p = sum_p;
    if (params.hydrostatic_wall_correction) p += dot(params.gravity, sum_rho_r);
    p /= sum_w;
    state.pressures[w] = p;
    state.densities[w] = eos_density(p, params);
  }
}

template <int Dim>
ParticleState<Dim> enforce_wall_bc(ParticleState<Dim> state, const Neighborhood<Dim>& nbh,
                                   const QuinticKernel<Dim>& kernel,
                                   const SolverParams<Dim>& params) {
  apply_wall_bc(state, nbh, kernel, params);
  return state;
}

template <int Dim>
struct MomentumRhs {
  std::vector<Vec<Dim>> accelerations;
  // -p_bg / m_i sum_j (V_i^2 + V_j^2) grad W_ij; only with transport velocity.
  std::vector<Vec<Dim>> transport;
};

/// Accelerations of fluid particles; walls get zero. `forces` holds the
/// volumetric force per particle (may be empty). `transport_offsets` holds
/// v~ - v per particle (may be empty).
template <int Dim>
MomentumRhs<Dim> momentum_rhs(const ParticleState<Dim>& state, const Neighborhood<Dim>& nbh,
                              const QuinticKernel<Dim>& kernel, const SolverParams<Dim>& params,
                              std::span<const Vec<Dim>> forces = {},
                              std::span<const Vec<Dim>> transport_offsets = {}) {
  const std::size_t n = state.size();
  detail::check_sizes(n, nbh.num_particles());
  if (!forces.empty() && forces.size() != n) throw ContractError("force field size mismatch");
  const bool use_tv = params.transport_velocity;
  const bool use_stress = use_tv && transport_offsets.size() == n;
  const double p_off = params.momentum_pressure_offset();
  const double h = kernel.h();
  const double support = kernel.support();

  MomentumRhs<Dim> out;
  out.accelerations.assign(n, Vec<Dim>{});
  out.transport.assign(n, Vec<Dim>{});

  // A_i . g for the extra stress term, A = rho v (x) dv.
  auto stress_dot = [&](std::size_t i, const Vec<Dim>& g) {
    const double rv = state.densities[i] * dot(transport_offsets[i], g);
    return state.velocities[i] * rv;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (state.types[i] != ParticleType::fluid) continue;
    const double mi = state.masses[i];
    const double rhoi = state.densities[i];
    const double vi = mi / rhoi;
    const double vi2 = vi * vi;
    const double pi = state.pressures[i] - p_off;
    const double etai = rhoi * params.viscosity;
    Vec<Dim> acc{};
    Vec<Dim> tv{};
    for (std::size_t e = nbh.begin(i); e < nbh.end(i); ++e) {
      const double r = nbh.edges.distances[e];
      if (r == 0.0 || r >= support) continue;
      const Index j = nbh.edges.receivers[e];
      const Vec<Dim>& xij = nbh.edges.displacements[e];
      const double rhoj = state.densities[j];
      const double vj = state.masses[j] / rhoj;
      const double vol2 = vi2 + vj * vj;
      const double dw_r = kernel.derivative(r) / r;
      const double pj = state.pressures[j] - p_off;
      const double p_tilde = (rhoj * pi + rhoi * pj) / (rhoi + rhoj);

      // Pressure.
      acc -= xij * (vol2 * p_tilde * dw_r);

      const Vec<Dim> vij = state.velocities[i] - state.velocities[j];

      // Viscosity.
      if (params.viscosity > 0.0) {
        const double etaj = rhoj * params.viscosity;
        const double eta_tilde = 2.0 * etai * etaj / (etai + etaj);
        acc += vij * (vol2 * eta_tilde * dw_r);
      }

      // Artificial viscosity, approaching pairs only.
      if (params.artificial_alpha > 0.0) {
        const double vr = dot(vij, xij);
        if (vr < 0.0) {
          const double mu = h * vr / (r * r + 0.01 * h * h);
          const double rho_bar = 0.5 * (rhoi + rhoj);
          const double pi_ij = -params.artificial_alpha * params.c0 * mu / rho_bar;
          acc -= xij * (mi * state.masses[j] * pi_ij * dw_r);
        }
      }

      if (use_tv) {
        tv -= xij * (vol2 * params.p_bg * dw_r);
        if (use_stress) {
          const Vec<Dim> g = xij * dw_r;
          Vec<Dim> a_sum = stress_dot(i, g);
          if (state.types[j] == ParticleType::fluid) a_sum += stress_dot(j, g);
          acc += a_sum * (0.5 * vol2);
        }
      }
    }
    acc *= 1.0 / mi;
    tv *= 1.0 / mi;
    if (!forces.empty()) acc += forces[i] * (1.0 / rhoi);
    if (!is_finite(acc) || !is_finite(tv))
      throw InstabilityError(0, "non-finite acceleration at particle " + std::to_string(i));
    out.accelerations[i] = acc;
    out.transport[i] = tv;
  }
  return out;
}

struct CflBounds {
  double acoustic = INFINITY;
  double viscous = INFINITY;
  double body_force = INFINITY;
  double dt() const { return std::min({acoustic, viscous, body_force}); }
};

/// Time-step bounds over fluid particles:
///   cfl * h / (c0 + |v|max),  (cfl / 2) * h^2 / nu,  cfl * sqrt(h / |a|max)
template <int Dim>
CflBounds cfl_bounds(const ParticleState<Dim>& state, std::span<const Vec<Dim>> accelerations,
                     const SolverParams<Dim>& params) {
  double vmax = 0.0;
  double amax = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.types[i] != ParticleType::fluid) continue;
    vmax = std::max(vmax, norm(state.velocities[i]));
    if (!accelerations.empty()) amax = std::max(amax, norm(accelerations[i]));
  }
  CflBounds b;
  b.acoustic = params.cfl * params.h / (params.c0 + vmax);
  if (params.viscosity > 0.0) b.viscous = 0.5 * params.cfl * params.h * params.h / params.viscosity;
  if (amax > 0.0) b.body_force = params.cfl * std::sqrt(params.h / amax);
  return b;
}

template <int Dim>
double cfl_dt(const ParticleState<Dim>& state, std::span<const Vec<Dim>> accelerations,
              const SolverParams<Dim>& params) {
  const double dt = params.fixed_dt ? *params.fixed_dt : cfl_bounds(state, accelerations, params).dt();
  if (!(dt > 0.0)) throw InstabilityError(0, "non-positive time step");
  return dt;
}

template <int Dim>
double kinetic_energy_of(const ParticleState<Dim>& state) {
  double e = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state.types[i] == ParticleType::fluid) e += 0.5 * state.masses[i] * norm2(state.velocities[i]);
  return e;
}

template <int Dim>
Vec<Dim> total_momentum_of(const ParticleState<Dim>& state) {
  Vec<Dim> p{};
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state.types[i] == ParticleType::fluid) p += state.velocities[i] * state.masses[i];
  return p;
}

/// Kick-drift-kick integrator owning one particle system.
template <int Dim>
class Solver {
 public:
  using ForceField = std::function<Vec<Dim>(const Vec<Dim>&, double)>;

  Solver(ParticleState<Dim> state, Domain<Dim> domain, SolverParams<Dim> params,
         ForceField force = {})
      : state_(std::move(state)),
        domain_(std::move(domain)),
        params_(std::move(params)),
        kernel_(params_.h),
        force_(std::move(force)) {
    params_.validate();
    state_.validate();
    skin_ = params_.skin > 0.0 ? params_.skin : 0.5 * params_.h;
    rebuild_neighbors();
    refresh_fields(/*update_density=*/params_.density_mode == DensityMode::summation);
    compute_rhs();
  }

  const ParticleState<Dim>& state() const { return state_; }
  const Domain<Dim>& domain() const { return domain_; }
  const SolverParams<Dim>& params() const { return params_; }
  const QuinticKernel<Dim>& kernel() const { return kernel_; }
  const Neighborhood<Dim>& neighborhood() const { return nbh_; }
  const std::vector<Vec<Dim>>& accelerations() const { return acc_; }
  double time() const { return time_; }
  std::size_t steps() const { return step_; }
  std::size_t neighbor_rebuilds() const { return rebuilds_; }

  void set_diagnostics(std::ostream* csv) {
    diag_ = csv;
    if (diag_) *diag_ << "step,t,dt,e_kin,max_v,min_rho,max_rho\n";
  }

  double stable_dt() const {
    try {
      return cfl_dt<Dim>(state_, acc_, params_);
    } catch (const InstabilityError& e) {
      throw InstabilityError(step_, e.what());
    }
  }

  /// One kick-drift-kick step; returns the step size used.
  double step(std::optional<double> dt_override = std::nullopt) {
    const double dt = dt_override ? *dt_override : stable_dt();
    if (dt == 0.0) return 0.0;
    if (!(dt > 0.0)) throw InstabilityError(step_, "non-positive time step");
    try {
      const double half = 0.5 * dt;
      const std::size_t n = state_.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (state_.types[i] != ParticleType::fluid) continue;
        state_.velocities[i] += acc_[i] * half;
      }
      const bool tv = params_.transport_velocity;
      if (tv) tv_offset_.assign(n, Vec<Dim>{});
      for (std::size_t i = 0; i < n; ++i) {
        if (state_.types[i] != ParticleType::fluid) continue;
        Vec<Dim> adv = state_.velocities[i];
        if (tv) {
          tv_offset_[i] = tv_acc_[i] * half;
          adv += tv_offset_[i];
        }
        state_.positions[i] = domain_.shift(state_.positions[i], adv * dt);
      }
      time_ += dt;
      ++step_;
      update_neighbors();
      if (params_.density_mode == DensityMode::evolution) {
        const auto rho = density_evolution_step(state_, nbh_, kernel_, params_, dt);
        for (std::size_t i = 0; i < n; ++i)
          if (state_.types[i] == ParticleType::fluid) state_.densities[i] = rho[i];
      }
      refresh_fields(params_.density_mode == DensityMode::summation);
      compute_rhs();
      for (std::size_t i = 0; i < n; ++i) {
        if (state_.types[i] != ParticleType::fluid) continue;
        state_.velocities[i] += acc_[i] * half;
      }
      check_stability();
    } catch (const InstabilityError& e) {
      if (e.step() == step_) throw;
      throw InstabilityError(step_, e.what());
    }
    if (diag_) write_diagnostics(dt);
    return dt;
  }

  void advance(std::size_t n, std::optional<double> dt = std::nullopt) {
    for (std::size_t k = 0; k < n; ++k) step(dt);
  }

  /// Overwrites fluid velocities (e.g. to damp during relaxation).
  void set_fluid_velocities(const Vec<Dim>& v) {
    for (std::size_t i = 0; i < state_.size(); ++i)
      if (state_.types[i] == ParticleType::fluid) state_.velocities[i] = v;
  }

  ParticleState<Dim> release() && { return std::move(state_); }

 private:
  void rebuild_neighbors() {
    auto edges = detail::binned_pairs<Dim>(state_.positions, domain_, kernel_.support() + skin_,
                                           nbh_.edges.size() + nbh_.edges.size() / 8);
    nbh_ = make_neighborhood(std::move(edges), state_.size());
    reference_ = state_.positions;
    ++rebuilds_;
  }

  void update_neighbors() {
    double max_d2 = 0.0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      if (state_.types[i] != ParticleType::fluid) continue;
      max_d2 = std::max(max_d2, norm2(domain_.displacement(state_.positions[i], reference_[i])));
    }
    if (4.0 * max_d2 > skin_ * skin_) {
      rebuild_neighbors();
    } else {
      refresh_geometry(nbh_.edges, std::span<const Vec<Dim>>(state_.positions), domain_);
    }
  }

  void refresh_fields(bool summation) {
    if (summation) {
      const auto rho = density_summation(state_, nbh_, kernel_);
      for (std::size_t i = 0; i < state_.size(); ++i)
        if (state_.types[i] == ParticleType::fluid) state_.densities[i] = rho[i];
    }
    for (std::size_t i = 0; i < state_.size(); ++i)
      if (state_.types[i] == ParticleType::fluid)
        state_.pressures[i] = eos_pressure(state_.densities[i], params_);
    apply_wall_bc(state_, nbh_, kernel_, params_);
  }

  void compute_rhs() {
    const std::size_t n = state_.size();
    forces_.assign(n, Vec<Dim>{});
    if (force_)
      for (std::size_t i = 0; i < n; ++i)
        if (state_.types[i] == ParticleType::fluid) forces_[i] = force_(state_.positions[i], time_);
    auto rhs = momentum_rhs<Dim>(state_, nbh_, kernel_, params_, forces_,
                                 params_.transport_velocity ? std::span<const Vec<Dim>>(tv_offset_)
                                                            : std::span<const Vec<Dim>>{});
    acc_ = std::move(rhs.accelerations);
    tv_acc_ = std::move(rhs.transport);
  }

  void check_stability() const {
    const double vlim = params_.max_speed_factor * params_.c0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      if (state_.types[i] != ParticleType::fluid) continue;
      if (!is_finite(state_.positions[i]) || !is_finite(state_.velocities[i]))
        throw InstabilityError(step_, "non-finite state at particle " + std::to_string(i));
      if (!(state_.densities[i] > 0.0))
        throw InstabilityError(step_, "non-positive density at particle " + std::to_string(i));
      if (norm(state_.velocities[i]) > vlim)
        throw InstabilityError(step_, "velocity exceeds 10 c0 at particle " + std::to_string(i));
    }
  }

  void write_diagnostics(double dt) const {
    double vmax = 0.0, rmin = INFINITY, rmax = 0.0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      if (state_.types[i] != ParticleType::fluid) continue;
      vmax = std::max(vmax, norm(state_.velocities[i]));
      rmin = std::min(rmin, state_.densities[i]);
      rmax = std::max(rmax, state_.densities[i]);
    }
    *diag_ << step_ << ',' << time_ << ',' << dt << ',' << kinetic_energy_of(state_) << ',' << vmax
           << ',' << rmin << ',' << rmax << '\n';
  }

  ParticleState<Dim> state_;
  Domain<Dim> domain_;
  SolverParams<Dim> params_;
  QuinticKernel<Dim> kernel_;
  ForceField force_;
  Neighborhood<Dim> nbh_;
  std::vector<Vec<Dim>> reference_;
  std::vector<Vec<Dim>> acc_;
  std::vector<Vec<Dim>> tv_acc_;
  std::vector<Vec<Dim>> tv_offset_;
  std::vector<Vec<Dim>> forces_;
  double skin_ = 0.0;
  double time_ = 0.0;
  std::size_t step_ = 0;
  std::size_t rebuilds_ = 0;
  std::ostream* diag_ = nullptr;
};

struct RelaxOptions {
  std::size_t steps = 1000;
  // Shift per step is -strength * h^2 * grad(sum_j V_j W_ij), capped at
  // max_shift * h.
  double strength = 0.5;
  double max_shift = 0.2;
};

/// Drives fluid positions toward a uniform distribution. Each step moves
/// particles down the gradient of the kernel sum, which is the shift a
/// transport-velocity step produces under background pressure alone. Walls
/// take part as neighbours but stay fixed; fluid velocities are zeroed.
template <int Dim>
ParticleState<Dim> relax(ParticleState<Dim> state, const Domain<Dim>& domain,
                         const SolverParams<Dim>& params, const RelaxOptions& options = {}) {
  params.validate();
  state.validate();
  const QuinticKernel<Dim> kernel(params.h);
  const double cap = options.max_shift * params.h;
  const double coeff = options.strength * params.h * params.h;
  const std::size_t n = state.size();
  std::vector<double> volume(n);
  for (std::size_t i = 0; i < n; ++i) volume[i] = state.masses[i] / params.rho0;

  std::vector<Vec<Dim>> shift(n);
  for (std::size_t k = 0; k < options.steps; ++k) {
    auto edges = detail::binned_pairs<Dim>(state.positions, domain, kernel.support());
    const auto nbh = make_neighborhood(std::move(edges), n);
    for (std::size_t i = 0; i < n; ++i) {
      shift[i] = Vec<Dim>{};
      if (state.types[i] != ParticleType::fluid) continue;
      Vec<Dim> g{};
      for (std::size_t e = nbh.begin(i); e < nbh.end(i); ++e)
        g += kernel.gradient(nbh.edges.displacements[e]) * volume[nbh.edges.receivers[e]];
      Vec<Dim> d = g * (-coeff);
      const double len = norm(d);
      if (!std::isfinite(len)) throw InstabilityError(k, "non-finite relaxation shift");
      if (len > cap) d *= cap / len;
      shift[i] = d;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (state.types[i] == ParticleType::fluid)
        state.positions[i] = domain.shift(state.positions[i], shift[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (state.types[i] == ParticleType::fluid) state.velocities[i] = Vec<Dim>{};
  return state;
}

}  // namespace sphkit
