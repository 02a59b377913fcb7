#pragma once

// Autoregressive evaluation. Velocities and accelerations are in frame units:
// a velocity is the minimum-image difference of consecutive frames and an
// acceleration the difference of consecutive velocities, so frame_dt never
// enters the update. Divide by frame_dt (frame_dt^2) for physical units.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sphkit/cases.hpp"
#include "sphkit/core.hpp"
#include "sphkit/metrics.hpp"
#include "sphkit/neighbors.hpp"

namespace sphkit {

// ---------------------------------------------------------------------------
// History window
// ---------------------------------------------------------------------------

/// The H + 1 most recent frames, oldest first.
template <int Dim>
struct HistoryWindow {
  std::vector<std::vector<Vec<Dim>>> frames;

  std::size_t history() const { return frames.empty() ? 0 : frames.size() - 1; }
  std::size_t particles() const { return frames.empty() ? 0 : frames.front().size(); }
  const std::vector<Vec<Dim>>& current() const { return frames.back(); }

  /// Frames [last - H, last] of a trajectory.
  static HistoryWindow from_trajectory(const Trajectory& traj, std::size_t last, std::size_t H) {
    if (traj.dim != Dim) throw ShapeError("trajectory dimension does not match window");
    if (last >= traj.frames) throw ContractError("window end beyond trajectory");
    if (last < H)
      throw ContractError("insufficient history: window of " + std::to_string(H + 1) + " frames ends at frame " +
                          std::to_string(last));
    HistoryWindow w;
    for (std::size_t t = last - H; t <= last; ++t) {
      std::vector<Vec<Dim>> x(traj.particles);
      for (std::size_t i = 0; i < traj.particles; ++i) x[i] = traj.position<Dim>(t, i);
      w.frames.push_back(std::move(x));
    }
    return w;
  }

  /// Velocity k (0 oldest) of particle i: frames[k+1] - frames[k].
  Vec<Dim> velocity(const Domain<Dim>& domain, std::size_t k, std::size_t i) const {
    return domain.displacement(frames[k + 1][i], frames[k][i]);
  }

  /// H velocity sequences, [H][N].
  std::vector<std::vector<Vec<Dim>>> velocities(const Domain<Dim>& domain) const {
    std::vector<std::vector<Vec<Dim>>> v(history(), std::vector<Vec<Dim>>(particles()));
    for (std::size_t k = 0; k < history(); ++k)
      for (std::size_t i = 0; i < particles(); ++i) v[k][i] = velocity(domain, k, i);
    return v;
  }

  /// Appends a frame and drops the oldest.
  void push(std::vector<Vec<Dim>> next) {
    if (next.size() != particles()) throw ShapeError("pushed frame has the wrong particle count");
    frames.erase(frames.begin());
    frames.push_back(std::move(next));
  }
};

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// What a case offers as input features, and at which radius edges are built.
template <int Dim>
struct FeatureContext {
  Domain<Dim> domain;
  double dx = 0.0;
  double radius = 0.0;  // interaction radius r_c
  std::function<Vec<Dim>(const Vec<Dim>&)> force;  // empty: no force feature
  bool boundary = false;                            // any non-periodic axis
};

template <int Dim>
FeatureContext<Dim> feature_context(const CaseSpec& spec, double radius_factor = kConnectivityFactor) {
  FeatureContext<Dim> c{spec.domain<Dim>(), spec.dx, radius_factor * spec.dx, {}, false};
  // External forces drive the Poiseuille and dam-break cases only.
  if (spec.family == "rpf" || spec.family == "dam")
    c.force = [spec](const Vec<Dim>& x) { return external_force<Dim>(spec, x); };
  for (int a = 0; a < Dim; ++a) c.boundary = c.boundary || !spec.periodic[a];
  return c;
}

template <int Dim>
struct FeatureFrame {
  std::size_t frame = 0;  // index of the current (last) window frame
  std::vector<Vec<Dim>> positions;
  // velocities[i * H + k], k = 0 oldest.
  std::size_t history = 0;
  std::vector<Vec<Dim>> velocities;
  std::vector<Vec<Dim>> force;  // empty when unavailable
  // Per particle, for each non-periodic axis in order: distance to the lower
  // and to the upper wall, clipped at r_c and divided by r_c. Empty when
  // every axis is periodic.
  std::size_t boundary_width = 0;
  std::vector<double> boundary;
  EdgeSet<Dim> edges;  // sender/receiver pairs within r_c, d = x_s - x_r
  double radius = 0.0;
  std::vector<std::int32_t> types;

  std::size_t size() const { return positions.size(); }
  const Vec<Dim>& velocity(std::size_t i, std::size_t k) const { return velocities[i * history + k]; }
  const Vec<Dim>& last_velocity(std::size_t i) const { return velocity(i, history - 1); }
};

template <int Dim>
FeatureFrame<Dim> extract_features(const HistoryWindow<Dim>& window, const FeatureContext<Dim>& ctx,
                                   const std::vector<std::int32_t>& types, std::size_t frame = 0,
                                   bool with_edges = true) {
  if (window.history() < 1) throw ContractError("insufficient history: need at least two frames");
  if (types.size() != window.particles()) throw ShapeError("types do not match window particle count");
  FeatureFrame<Dim> f;
  const std::size_t N = window.particles();
  const std::size_t H = window.history();
  f.frame = frame;
  f.positions = window.current();
  f.history = H;
  f.velocities.resize(N * H);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < H; ++k) f.velocities[i * H + k] = window.velocity(ctx.domain, k, i);
  if (ctx.force) {
    f.force.resize(N);
    for (std::size_t i = 0; i < N; ++i) f.force[i] = ctx.force(f.positions[i]);
  }
  if (ctx.boundary) {
    std::vector<int> axes;
    for (int a = 0; a < Dim; ++a)
      if (!ctx.domain.is_periodic(a)) axes.push_back(a);
    f.boundary_width = 2 * axes.size();
    f.boundary.resize(N * f.boundary_width);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < axes.size(); ++k) {
        const int a = axes[k];
        const double lo = f.positions[i][a];
        const double hi = ctx.domain.extent(a) - f.positions[i][a];
        f.boundary[i * f.boundary_width + 2 * k] = std::clamp(lo, 0.0, ctx.radius) / ctx.radius;
        f.boundary[i * f.boundary_width + 2 * k + 1] = std::clamp(hi, 0.0, ctx.radius) / ctx.radius;
      }
  }
  f.radius = ctx.radius;
  if (with_edges)
    f.edges = detail::binned_pairs<Dim>(std::span<const Vec<Dim>>(f.positions), ctx.domain, ctx.radius);
  f.types = types;
  return f;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

enum class PredictionMode { acceleration, velocity, position };

inline std::string to_string(PredictionMode m) {
  switch (m) {
    case PredictionMode::acceleration:
      return "acceleration";
    case PredictionMode::velocity:
      return "velocity";
    case PredictionMode::position:
      return "position";
  }
  return "?";
}

inline PredictionMode parse_prediction_mode(const std::string& s) {
  if (s == "acceleration") return PredictionMode::acceleration;
  if (s == "velocity") return PredictionMode::velocity;
  if (s == "position") return PredictionMode::position;
  throw ConfigError("unknown prediction mode '" + s + "'");
}

/// Next positions from a per-particle prediction. Acceleration: semi-implicit
/// Euler, v' = v + a, p' = p + v'. Velocity: forward Euler, p' = p + v.
/// Position: p' = prediction. Results are wrapped into the domain.
template <int Dim>
std::vector<Vec<Dim>> integrate_prediction(const HistoryWindow<Dim>& window, const std::vector<Vec<Dim>>& pred,
                                           PredictionMode mode, const Domain<Dim>& domain) {
  const std::size_t N = window.particles();
  if (pred.size() != N)
    throw ShapeError("prediction has " + std::to_string(pred.size()) + " rows, expected " + std::to_string(N));
  if (mode == PredictionMode::acceleration && window.history() < 1)
    throw ContractError("acceleration mode needs one velocity of history");
  std::vector<Vec<Dim>> next(N);
  const auto& p = window.current();
  for (std::size_t i = 0; i < N; ++i) {
    switch (mode) {
      case PredictionMode::acceleration: {
        const Vec<Dim> v = window.velocity(domain, window.history() - 1, i) + pred[i];
        next[i] = domain.wrap(p[i] + v);
        break;
      }
      case PredictionMode::velocity:
        next[i] = domain.wrap(p[i] + pred[i]);
        break;
      case PredictionMode::position:
        next[i] = domain.wrap(pred[i]);
        break;
    }
  }
  return next;
}

/// Frame-unit acceleration p[t+1] - 2 p[t] + p[t-1] (minimum image).
template <int Dim>
Vec<Dim> finite_difference_acceleration(const Trajectory& traj, const Domain<Dim>& domain, std::size_t t,
                                        std::size_t i) {
  const Vec<Dim> v1 = domain.displacement(traj.position<Dim>(t + 1, i), traj.position<Dim>(t, i));
  const Vec<Dim> v0 = domain.displacement(traj.position<Dim>(t, i), traj.position<Dim>(t - 1, i));
  return v1 - v0;
}

template <int Dim>
Vec<Dim> to_physical_velocity(const Vec<Dim>& v, double frame_dt) {
  return v * (1.0 / frame_dt);
}
template <int Dim>
Vec<Dim> to_physical_acceleration(const Vec<Dim>& a, double frame_dt) {
  return a * (1.0 / (frame_dt * frame_dt));
}

// ---------------------------------------------------------------------------
// Predictors
// ---------------------------------------------------------------------------

/// Maps a feature frame to one prediction per particle. The harness owns all
/// rollout state; rows of wall particles are ignored.
template <int Dim>
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictionMode mode() const = 0;
  virtual std::string name() const = 0;
  virtual bool needs_edges() const { return true; }
  virtual std::vector<Vec<Dim>> predict(const FeatureFrame<Dim>& features) = 0;
};

/// Replays the reference: predicts the positions of the next frame.
template <int Dim>
class GroundTruthPredictor : public Predictor<Dim> {
 public:
  explicit GroundTruthPredictor(Trajectory reference) : ref_(std::move(reference)) {}
  PredictionMode mode() const override { return PredictionMode::position; }
  std::string name() const override { return "ground_truth"; }
  bool needs_edges() const override { return false; }
  std::vector<Vec<Dim>> predict(const FeatureFrame<Dim>& f) override {
    if (f.frame + 1 >= ref_.frames) throw ContractError("ground truth exhausted at frame " + std::to_string(f.frame));
    std::vector<Vec<Dim>> out(ref_.particles);
    for (std::size_t i = 0; i < ref_.particles; ++i) out[i] = ref_.position<Dim>(f.frame + 1, i);
    return out;
  }

 private:
  Trajectory ref_;
};

/// Constant-velocity extrapolation.
template <int Dim>
class ZeroAccelerationPredictor : public Predictor<Dim> {
 public:
  PredictionMode mode() const override { return PredictionMode::acceleration; }
  std::string name() const override { return "zero_acceleration"; }
  bool needs_edges() const override { return false; }
  std::vector<Vec<Dim>> predict(const FeatureFrame<Dim>& f) override {
    return std::vector<Vec<Dim>>(f.size());
  }
};

/// The case solver itself, one recorded frame (frames_between_samples solver
/// steps) per call. It keeps its own full state (velocities, densities,
/// dummy wall layers) and ignores the features apart from the frame index,
/// so a rollout from frame t of a trajectory generated with the same seed
/// and options reproduces that trajectory.
template <int Dim>
class SphPredictor : public Predictor<Dim> {
 public:
  // `frame_offset`: recorded frame of the runner that frame 0 of the rollout
  // reference corresponds to.
  SphPredictor(const CaseSpec& spec, std::uint64_t seed, const GenerateOptions& opt = {},
               std::size_t frame_offset = 0)
      : runner_(spec, seed, opt), offset_(frame_offset) {}
  PredictionMode mode() const override { return PredictionMode::position; }
  std::string name() const override { return "sph"; }
  bool needs_edges() const override { return false; }
  std::vector<Vec<Dim>> predict(const FeatureFrame<Dim>& f) override {
    const std::size_t target = f.frame + offset_ + 1;
    if (target <= runner_.frame())
      throw ContractError("sph predictor cannot step back to frame " + std::to_string(f.frame));
    while (runner_.frame() < target) runner_.advance_frame();
    auto x = runner_.kept_positions();
    if (x.size() != f.size()) throw ShapeError("sph predictor particle count differs from the rollout");
    // The recorded trajectory holds single precision positions.
    for (auto& p : x)
      for (int a = 0; a < Dim; ++a) p[a] = static_cast<float>(p[a]);
    return x;
  }

 private:
  CaseRunner<Dim> runner_;
  std::size_t offset_;
};

// ---------------------------------------------------------------------------
// Rollout
// ---------------------------------------------------------------------------

struct RolloutOptions {
  std::size_t history = 5;  // H, number of velocities in the window
  std::size_t start = 0;    // last window frame; 0 selects H
  std::size_t steps = 20;
  MetricsOptions metrics;
};

struct RolloutResult {
  // Reference frames [0, start] followed by `steps` predicted frames.
  Trajectory predicted;
  RolloutReport report;
};

/// Closed-loop rollout from frames [start - H, start] of `reference`. Wall
/// particles are copied from the reference at every step.
template <int Dim>
RolloutResult rollout(Predictor<Dim>& predictor, const Trajectory& reference, const FeatureContext<Dim>& ctx,
                      double mass, const RolloutOptions& opt) {
  reference.validate();
  const std::size_t H = opt.history;
  const std::size_t start = opt.start == 0 ? H : opt.start;
  if (start < H) throw ContractError("rollout start must leave room for the history window");
  if (start + opt.steps >= reference.frames)
    throw ContractError("reference has " + std::to_string(reference.frames) + " frames; rollout needs " +
                        std::to_string(start + opt.steps + 1));

  RolloutResult out;
  out.predicted = reference.slice(0, start + opt.steps + 1);
  if (opt.steps == 0) return out;

  HistoryWindow<Dim> window = HistoryWindow<Dim>::from_trajectory(reference, start, H);
  std::vector<bool> wall(reference.particles);
  for (std::size_t i = 0; i < reference.particles; ++i) wall[i] = reference.types[i] != 0;

  for (std::size_t k = 0; k < opt.steps; ++k) {
    const std::size_t t = start + k;
    const FeatureFrame<Dim> f = extract_features(window, ctx, reference.types, t, predictor.needs_edges());
    std::vector<Vec<Dim>> pred;
    try {
      pred = predictor.predict(f);
    } catch (const InstabilityError& e) {
      throw InstabilityError(k + 1, "predictor '" + predictor.name() + "' failed at step " + std::to_string(k + 1) +
                                        " (frame " + std::to_string(t) + "): " + e.what());
    } catch (const Error& e) {
      throw Error("predictor '" + predictor.name() + "' failed at step " + std::to_string(k + 1) + " (frame " +
                  std::to_string(t) + "): " + e.what());
    }
    if (pred.size() != f.size())
      throw ShapeError("predictor '" + predictor.name() + "' returned " + std::to_string(pred.size()) +
                       " rows at step " + std::to_string(k + 1) + ", expected " + std::to_string(f.size()));
    std::vector<Vec<Dim>> next = integrate_prediction(window, pred, predictor.mode(), ctx.domain);
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (wall[i]) {
        next[i] = reference.position<Dim>(t + 1, i);
      } else if (!is_finite(next[i])) {
        throw InstabilityError(k + 1, "predictor '" + predictor.name() + "' produced a non-finite position at step " +
                                          std::to_string(k + 1));
      }
      for (int a = 0; a < Dim; ++a) out.predicted.at(t + 1, i, a) = static_cast<float>(next[i][a]);
    }
    // Feed back what was recorded so the loop sees the stored precision.
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = out.predicted.position<Dim>(t + 1, i);
    window.push(std::move(next));
  }
  const Trajectory ref = reference.slice(0, start + opt.steps + 1);
  out.report = evaluate_rollout(out.predicted, ref, ctx.domain, start + 1, opt.steps, mass, reference.frame_dt,
                                opt.metrics);
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

struct AugmentationConfig {
  double noise_std = 3e-4;
  std::vector<std::size_t> pushforward_steps = {1, 2, 3, 4};
  std::vector<double> pushforward_probs = {0.8, 0.1, 0.05, 0.05};

  void validate() const {
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
    if (pushforward_steps.empty() || pushforward_steps.size() != pushforward_probs.size())
      throw ConfigError("push-forward steps and probabilities must have equal, non-zero length");
    double sum = 0.0;
    for (double p : pushforward_probs) {
      if (!(p >= 0.0)) throw ConfigError("push-forward probabilities must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("push-forward probabilities must sum to 1");
    for (std::size_t k : pushforward_steps)
      if (k < 1) throw ConfigError("push-forward step counts must be >= 1");
  }
};

/// Standard deviation of each velocity increment such that the summed
/// position perturbation after H velocities has standard deviation
/// `noise_std`: the last position collects increment l with weight
/// H - l + 1, so its variance is s^2 * H(H+1)(2H+1)/6.
inline double random_walk_step_std(double noise_std, std::size_t H) {
  const double h = static_cast<double>(H);
  return noise_std / std::sqrt(h * (h + 1.0) * (2.0 * h + 1.0) / 6.0);
}

/// Perturbs the velocity sequence of every fluid particle by a Gaussian random
/// walk and rebuilds positions from it; the oldest frame stays fixed, so
/// velocities remain exact differences of the perturbed positions.
template <int Dim, class Rng>
HistoryWindow<Dim> add_random_walk_noise(HistoryWindow<Dim> window, double noise_std, Rng& rng,
                                         const Domain<Dim>& domain, const std::vector<std::int32_t>& types) {
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (noise_std == 0.0) return window;
  const std::size_t H = window.history();
  if (H < 1) throw ContractError("random-walk noise needs at least one velocity");
  if (types.size() != window.particles()) throw ShapeError("types do not match window");
  std::normal_distribution<double> gauss(0.0, random_walk_step_std(noise_std, H));
  for (std::size_t i = 0; i < window.particles(); ++i) {
    if (types[i] != 0) continue;
    Vec<Dim> dv{}, dp{};
    for (std::size_t k = 1; k <= H; ++k) {
      for (int a = 0; a < Dim; ++a) dv[a] += gauss(rng);
      dp += dv;
      window.frames[k][i] = domain.wrap(window.frames[k][i] + dp);
    }
  }
  return window;
}

/// Unroll length k: the model runs k - 1 extra steps without gradients before
/// the supervised one.
template <class Rng>
std::size_t sample_pushforward_steps(const AugmentationConfig& cfg, Rng& rng) {
  cfg.validate();
  std::discrete_distribution<std::size_t> pick(cfg.pushforward_probs.begin(), cfg.pushforward_probs.end());
  return cfg.pushforward_steps[pick(rng)];
}

/// Push-forward input transform: rolls `predictor` for `extra` steps from the
/// window and returns the resulting window; the supervised target is then the
/// reference frame `extra` steps further on.
template <int Dim>
HistoryWindow<Dim> pushforward_window(Predictor<Dim>& predictor, HistoryWindow<Dim> window,
                                      const FeatureContext<Dim>& ctx, const std::vector<std::int32_t>& types,
                                      std::size_t frame, std::size_t extra) {
  for (std::size_t k = 0; k < extra; ++k) {
    const auto f = extract_features(window, ctx, types, frame + k, predictor.needs_edges());
    auto next = integrate_prediction(window, predictor.predict(f), predictor.mode(), ctx.domain);
    for (std::size_t i = 0; i < next.size(); ++i)
      if (types[i] != 0) next[i] = window.current()[i];
    window.push(std::move(next));
  }
  return window;
}

}  // namespace sphkit
