#pragma once

// Evaluation measures over predicted and reference trajectories. All metrics
// skip wall particles (any type other than fluid); their positions are
// prescribed and carry no information about the predictor.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sphkit/core.hpp"

namespace sphkit {

namespace detail {

inline void check_same_shape(const Trajectory& a, const Trajectory& b) {
  if (a.dim != b.dim || a.frames != b.frames || a.particles != b.particles)
    throw ShapeError("trajectory shapes differ: [" + std::to_string(a.frames) + "," +
                     std::to_string(a.particles) + "," + std::to_string(a.dim) + "] vs [" +
                     std::to_string(b.frames) + "," + std::to_string(b.particles) + "," +
                     std::to_string(b.dim) + "]");
  if (a.types != b.types) throw ShapeError("particle types differ between trajectories");
}

inline std::vector<std::size_t> fluid_indices(const std::vector<std::int32_t>& types) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < types.size(); ++i)
    if (types[i] == static_cast<std::int32_t>(ParticleType::fluid)) out.push_back(i);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Position error
// ---------------------------------------------------------------------------

/// Squared minimum-image position error of frame `t`, averaged over fluid
/// particles and coordinates.
template <int Dim>
double frame_mse(const Trajectory& pred, const Trajectory& ref, const Domain<Dim>& domain, std::size_t t) {
  detail::check_same_shape(pred, ref);
  if (pred.dim != Dim) throw ShapeError("trajectory dimension does not match domain");
  if (t >= pred.frames) throw ContractError("frame index out of range");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.particles; ++i) {
    if (pred.types[i] != 0) continue;
    sum += norm2(domain.displacement(pred.position<Dim>(t, i), ref.position<Dim>(t, i)));
    ++n;
  }
  return n == 0 ? 0.0 : sum / (static_cast<double>(n) * Dim);
}

/// Per-frame MSE for frames [first, first + count).
template <int Dim>
std::vector<double> mse_per_step(const Trajectory& pred, const Trajectory& ref, const Domain<Dim>& domain,
                                 std::size_t first, std::size_t count) {
  if (first + count > pred.frames) throw ContractError("mse range exceeds trajectory length");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = frame_mse(pred, ref, domain, first + k);
  return out;
}

/// Mean of the first n entries of a per-step error series.
inline double mse_n(std::span<const double> per_step, std::size_t n) {
  if (n == 0 || n > per_step.size())
    throw ContractError("mse_n: n = " + std::to_string(n) + " but " + std::to_string(per_step.size()) +
                        " steps available");
  return std::accumulate(per_step.begin(), per_step.begin() + static_cast<std::ptrdiff_t>(n), 0.0) /
         static_cast<double>(n);
}

/// MSE over steps 1..n, where frame k of `pred`/`ref` holds step k + 1.
template <int Dim>
double mse_n(const Trajectory& pred, const Trajectory& ref, const Domain<Dim>& domain, std::size_t n) {
  detail::check_same_shape(pred, ref);
  if (n == 0 || n > pred.frames) throw ContractError("mse_n: n exceeds available steps");
  const auto s = mse_per_step(pred, ref, domain, 0, n);
  return mse_n(std::span<const double>(s), n);
}

// ---------------------------------------------------------------------------
// Kinetic energy
// ---------------------------------------------------------------------------

template <int Dim>
double kinetic_energy(std::span<const Vec<Dim>> velocities, std::span<const double> masses) {
  if (velocities.size() != masses.size()) throw ShapeError("velocity and mass counts differ");
  double e = 0.0;
  for (std::size_t i = 0; i < velocities.size(); ++i) e += masses[i] * norm2(velocities[i]);
  return 0.5 * e;
}

/// E_kin of fluid particles at frames 1..T-1, with velocities taken as
/// minimum-image backward differences divided by `frame_dt`. Entry k belongs
/// to frame k + 1.
template <int Dim>
std::vector<double> kinetic_energy_series(const Trajectory& traj, const Domain<Dim>& domain, double mass,
                                          double frame_dt) {
  if (traj.dim != Dim) throw ShapeError("trajectory dimension does not match domain");
  if (!(frame_dt > 0.0)) throw ContractError("frame_dt must be positive");
  std::vector<double> out;
  if (traj.frames < 2) return out;
  out.reserve(traj.frames - 1);
  const double inv = 1.0 / frame_dt;
  for (std::size_t t = 1; t < traj.frames; ++t) {
    double e = 0.0;
    for (std::size_t i = 0; i < traj.particles; ++i) {
      if (traj.types[i] != 0) continue;
      e += norm2(domain.displacement(traj.position<Dim>(t, i), traj.position<Dim>(t - 1, i)) * inv);
    }
    out.push_back(0.5 * mass * e);
  }
  return out;
}

inline double mse_e_kin(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size())
    throw ShapeError("kinetic energy series lengths differ: " + std::to_string(pred.size()) + " vs " +
                     std::to_string(ref.size()));
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - ref[k];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Sinkhorn
// ---------------------------------------------------------------------------

struct SinkhornOptions {
  // Entropic regularisation; <= 0 selects 1e-3 times the squared domain
  // diagonal.
  double epsilon = 0.0;
  std::size_t max_iters = 500;
  double tol = 1e-6;  // L1 violation of the source marginal
  bool debiased = true;
  bool periodic_cost = true;  // minimum-image cost on periodic axes
  // Epsilon annealing: start at the largest cost, multiply by `scaling` per
  // stage, `stage_iters` iterations per stage, then iterate at the target.
  double scaling = 0.5;
  std::size_t stage_iters = 3;
  // Clouds larger than this are reduced to a fixed random subset of particle
  // indices (the same indices in both clouds). 0 keeps every particle.
  std::size_t max_points = 0;
  std::uint64_t subset_seed = 0;

  double resolved_epsilon(double diagonal_squared) const {
    return epsilon > 0.0 ? epsilon : 1e-3 * diagonal_squared;
  }
};

struct SinkhornResult {
  double value = 0.0;  // debiased divergence when requested, else raw
  double raw = 0.0;    // entropic OT cost OT_eps(P, Q)
  double epsilon = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

// Terms this far below the row maximum vanish against it in double precision.
inline constexpr double kLseCut = -37.0;

struct EntropicOt {
  double cost;
  double residual;
  std::size_t iterations;
  bool converged;
};

// Log-domain Sinkhorn between uniform measures on two point sets. Returns the
// dual value sum_i a_i f_i + sum_j b_j g_j, which equals <pi, C> + eps KL(pi | a x b)
// at the fixed point.
template <int Dim>
EntropicOt entropic_ot(std::span<const Vec<Dim>> P, std::span<const Vec<Dim>> Q, const Domain<Dim>& domain,
                       bool periodic, double eps, const SinkhornOptions& opt) {
  const std::size_t n = P.size(), m = Q.size();
  // Row-major cost and its transpose, so both half-steps stream memory.
  std::vector<double> C(n * m), CT(n * m);
  double cmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const Vec<Dim> d = periodic ? domain.displacement(P[i], Q[j]) : P[i] - Q[j];
      C[i * m + j] = CT[j * n + i] = norm2(d);
      cmax = std::max(cmax, C[i * m + j]);
    }
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  std::vector<double> f(n, 0.0), g(m, 0.0), tmp(std::max(n, m));

  // f_i = -e * LSE_j(log b + (g_j - C_ij)/e); g analogous. The f update also
  // yields the source marginal of the previous plan: row_i = a_i exp((f_old - f_new)/e).
  auto update_f = [&](double e) {
    const double inv = 1.0 / e;
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* c = C.data() + i * m;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        tmp[j] = (g[j] - c[j]) * inv;
        mx = std::max(mx, tmp[j]);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        if (tmp[j] - mx > kLseCut) s += std::exp(tmp[j] - mx);
      const double fi = -e * (log_b + mx + std::log(s));
      res += std::abs(std::expm1((f[i] - fi) / e));
      f[i] = fi;
    }
    return res / static_cast<double>(n);
  };
  auto update_g = [&](double e) {
    const double inv = 1.0 / e;
    for (std::size_t j = 0; j < m; ++j) {
      const double* c = CT.data() + j * n;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        tmp[i] = (f[i] - c[i]) * inv;
        mx = std::max(mx, tmp[i]);
      }
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (tmp[i] - mx > kLseCut) s += std::exp(tmp[i] - mx);
      g[j] = -e * (log_a + mx + std::log(s));
    }
  };

  std::size_t iters = 0;
  for (double e = std::max(cmax, eps); e > eps; e *= opt.scaling) {
    for (std::size_t k = 0; k < opt.stage_iters; ++k) {
      update_f(e);
      update_g(e);
      ++iters;
    }
  }
  double res = std::numeric_limits<double>::infinity();
  bool converged = false;
  update_f(eps);
  update_g(eps);
  ++iters;
  for (std::size_t k = 1; k < opt.max_iters; ++k) {
    // Residual of the plan from the previous (f, g) pair.
    res = update_f(eps);
    if (res < opt.tol) {
      converged = true;
      break;
    }
    update_g(eps);
    ++iters;
  }
  const double cost = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(n) +
                      std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(m);
  return {cost, res, iters, converged};
}

}  // namespace detail

template <int Dim>
SinkhornResult sinkhorn(std::span<const Vec<Dim>> P, std::span<const Vec<Dim>> Q, const Domain<Dim>& domain,
                        const SinkhornOptions& opt = {}) {
  if (P.empty() || Q.empty()) throw ContractError("sinkhorn needs non-empty point clouds");
  if (!(opt.scaling > 0.0 && opt.scaling < 1.0)) throw ConfigError("sinkhorn scaling must lie in (0, 1)");
  const double eps = opt.resolved_epsilon(domain.diagonal_squared());
  SinkhornResult r;
  r.epsilon = eps;
  const auto pq = detail::entropic_ot(P, Q, domain, opt.periodic_cost, eps, opt);
  r.raw = pq.cost;
  r.value = pq.cost;
  r.residual = pq.residual;
  r.iterations = pq.iterations;
  r.converged = pq.converged;
  if (opt.debiased) {
    const auto pp = detail::entropic_ot(P, P, domain, opt.periodic_cost, eps, opt);
    const auto qq = detail::entropic_ot(Q, Q, domain, opt.periodic_cost, eps, opt);
    r.value = pq.cost - 0.5 * (pp.cost + qq.cost);
    r.residual = std::max({pq.residual, pp.residual, qq.residual});
    r.iterations = pq.iterations + pp.iterations + qq.iterations;
    r.converged = pq.converged && pp.converged && qq.converged;
  }
  return r;
}

template <int Dim>
double sinkhorn_distance(std::span<const Vec<Dim>> P, std::span<const Vec<Dim>> Q, const Domain<Dim>& domain,
                         const SinkhornOptions& opt = {}) {
  return sinkhorn(P, Q, domain, opt).value;
}

/// Sinkhorn between the fluid particles of frame `t` of two trajectories.
template <int Dim>
SinkhornResult frame_sinkhorn(const Trajectory& pred, const Trajectory& ref, const Domain<Dim>& domain,
                              std::size_t t, const SinkhornOptions& opt = {}) {
  detail::check_same_shape(pred, ref);
  std::vector<std::size_t> idx = detail::fluid_indices(pred.types);
  if (opt.max_points > 0 && idx.size() > opt.max_points) {
    std::mt19937_64 rng(opt.subset_seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(opt.max_points);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<Vec<Dim>> P, Q;
  P.reserve(idx.size());
  Q.reserve(idx.size());
  for (std::size_t i : idx) {
    P.push_back(pred.position<Dim>(t, i));
    Q.push_back(ref.position<Dim>(t, i));
  }
  return sinkhorn(std::span<const Vec<Dim>>(P), std::span<const Vec<Dim>>(Q), domain, opt);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct MetricsOptions {
  std::vector<std::size_t> mse_steps = {1, 5, 10, 20};
  SinkhornOptions sinkhorn;
  // Sinkhorn is evaluated on every k-th rollout step (and always on the
  // last); 0 disables it.
  std::size_t sinkhorn_every = 1;
};

struct RolloutReport {
  std::size_t steps = 0;
  std::vector<double> mse_per_step;
  std::map<std::size_t, double> mse_n;
  std::vector<std::size_t> sinkhorn_steps;  // 1-based rollout steps
  std::vector<double> sinkhorn_per_step;
  std::vector<double> sinkhorn_residual;
  bool sinkhorn_converged = true;
  double sinkhorn_epsilon = 0.0;
  std::vector<double> e_kin_pred;
  std::vector<double> e_kin_ref;
  double mse_e_kin = 0.0;

  double sinkhorn_mean() const {
    if (sinkhorn_per_step.empty()) return 0.0;
    return std::accumulate(sinkhorn_per_step.begin(), sinkhorn_per_step.end(), 0.0) /
           static_cast<double>(sinkhorn_per_step.size());
  }

  bool all_finite_nonnegative() const {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    auto all = [&](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), ok); };
    // Debiased Sinkhorn may dip below zero by solver tolerance.
    auto sk_ok = [](double v) { return std::isfinite(v) && v >= -1e-9; };
    return all(mse_per_step) && all(e_kin_pred) && all(e_kin_ref) && ok(mse_e_kin) &&
           std::all_of(sinkhorn_per_step.begin(), sinkhorn_per_step.end(), sk_ok) &&
           std::all_of(mse_n.begin(), mse_n.end(), [&](const auto& kv) { return ok(kv.second); });
  }
};

/// Metrics for frames [first, first + steps) of two full trajectories (history
/// frames included, so `first` >= 1 and E_kin of step 1 uses frame first - 1).
template <int Dim>
RolloutReport evaluate_rollout(const Trajectory& pred, const Trajectory& ref, const Domain<Dim>& domain,
                               std::size_t first, std::size_t steps, double mass, double frame_dt,
                               const MetricsOptions& opt = {}) {
  detail::check_same_shape(pred, ref);
  if (first < 1) throw ContractError("rollout metrics need one frame of history");
  if (first + steps > pred.frames) throw ContractError("rollout metrics range exceeds trajectory");
  RolloutReport r;
  r.steps = steps;
  if (steps == 0) return r;
  r.mse_per_step = mse_per_step(pred, ref, domain, first, steps);
  for (std::size_t n : opt.mse_steps)
    if (n >= 1 && n <= steps) r.mse_n[n] = mse_n(std::span<const double>(r.mse_per_step), n);

  const Trajectory pw = pred.slice(first - 1, first + steps);
  const Trajectory rw = ref.slice(first - 1, first + steps);
  r.e_kin_pred = kinetic_energy_series(pw, domain, mass, frame_dt);
  r.e_kin_ref = kinetic_energy_series(rw, domain, mass, frame_dt);
  r.mse_e_kin = mse_e_kin(r.e_kin_pred, r.e_kin_ref);

  r.sinkhorn_epsilon = opt.sinkhorn.resolved_epsilon(domain.diagonal_squared());
  if (opt.sinkhorn_every > 0) {
    for (std::size_t k = 1; k <= steps; ++k) {
      if (k % opt.sinkhorn_every != 0 && k != steps) continue;
      const SinkhornResult s = frame_sinkhorn(pred, ref, domain, first + k - 1, opt.sinkhorn);
      r.sinkhorn_steps.push_back(k);
      r.sinkhorn_per_step.push_back(s.value);
      r.sinkhorn_residual.push_back(s.residual);
      r.sinkhorn_converged = r.sinkhorn_converged && s.converged;
    }
  }
  return r;
}

inline nlohmann::json to_json(const RolloutReport& r) {
  nlohmann::json j;
  j["steps"] = r.steps;
  j["mse_per_step"] = r.mse_per_step;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [n, v] : r.mse_n) m["mse_" + std::to_string(n)] = v;
  j["mse_n"] = m;
  j["sinkhorn_steps"] = r.sinkhorn_steps;
  j["sinkhorn_per_step"] = r.sinkhorn_per_step;
  j["sinkhorn_residual"] = r.sinkhorn_residual;
  j["sinkhorn_converged"] = r.sinkhorn_converged;
  j["sinkhorn_epsilon"] = r.sinkhorn_epsilon;
  j["sinkhorn_mean"] = r.sinkhorn_mean();
  j["e_kin_pred"] = r.e_kin_pred;
  j["e_kin_ref"] = r.e_kin_ref;
  j["mse_e_kin"] = r.mse_e_kin;
  return j;
}

/// One row per rollout step; Sinkhorn cells are empty on skipped steps.
inline std::string to_csv(const RolloutReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "step,mse,sinkhorn,e_kin_pred,e_kin_ref\n";
  std::size_t s = 0;
  for (std::size_t k = 1; k <= r.steps; ++k) {
    os << k << ',' << r.mse_per_step[k - 1] << ',';
    if (s < r.sinkhorn_steps.size() && r.sinkhorn_steps[s] == k) os << r.sinkhorn_per_step[s++];
    os << ',' << r.e_kin_pred[k - 1] << ',' << r.e_kin_ref[k - 1] << '\n';
  }
  return os.str();
}

}  // namespace sphkit
