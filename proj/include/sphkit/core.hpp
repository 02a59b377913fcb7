#pragma once

// Domain geometry, particle containers and the error hierarchy shared by all
// sphkit modules.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphkit {

using Index = std::uint32_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Parameters that cannot describe a valid setup (e.g. cutoff too large).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A fixed-capacity cell list overflowed; the result is invalid and the
/// structure must be rebuilt with a larger capacity.
class NeighborOverflowError : public Error {
 public:
  using Error::Error;
};

/// More particles or edges than a padded buffer can hold.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public Error {
 public:
  InstabilityError(std::size_t step, const std::string& what)
      : Error("solver instability at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// I/O errors. Each failure class of dataset reading maps to its own type.
class IoError : public Error {
 public:
  using Error::Error;
};
class MissingInputError : public IoError {
 public:
  using IoError::IoError;
};
class MalformedFileError : public IoError {
 public:
  using IoError::IoError;
};
class MissingKeyError : public IoError {
 public:
  using IoError::IoError;
};
class ShapeError : public IoError {
 public:
  using IoError::IoError;
};

// ---------------------------------------------------------------------------
// Small fixed-size vector
// ---------------------------------------------------------------------------

template <int Dim>
struct Vec {
  static_assert(Dim == 2 || Dim == 3, "sphkit supports 2D and 3D only");
  std::array<double, Dim> c{};

  constexpr double& operator[](int a) { return c[a]; }
  constexpr double operator[](int a) const { return c[a]; }

  constexpr Vec& operator+=(const Vec& o) {
    for (int a = 0; a < Dim; ++a) c[a] += o.c[a];
    return *this;
  }
  constexpr Vec& operator-=(const Vec& o) {
    for (int a = 0; a < Dim; ++a) c[a] -= o.c[a];
    return *this;
  }
  constexpr Vec& operator*=(double s) {
    for (int a = 0; a < Dim; ++a) c[a] *= s;
    return *this;
  }
  friend constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend constexpr Vec operator*(Vec a, double s) { return a *= s; }
  friend constexpr Vec operator*(double s, Vec a) { return a *= s; }
  friend constexpr Vec operator-(Vec a) {
    for (int d = 0; d < Dim; ++d) a.c[d] = -a.c[d];
    return a;
  }
  friend constexpr bool operator==(const Vec&, const Vec&) = default;
};

template <int Dim>
constexpr double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (int d = 0; d < Dim; ++d) s += a[d] * b[d];
  return s;
}

template <int Dim>
constexpr double norm2(const Vec<Dim>& a) {
  return dot(a, a);
}

template <int Dim>
inline double norm(const Vec<Dim>& a) {
  return std::sqrt(dot(a, a));
}

template <int Dim>
inline bool is_finite(const Vec<Dim>& a) {
  for (int d = 0; d < Dim; ++d)
    if (!std::isfinite(a[d])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

/// Axis-aligned box with its origin at the corner. Periodic axes hold
/// coordinates in [0, extent); non-periodic axes are unconstrained here.
template <int Dim>
class Domain {
 public:
  Domain(const Vec<Dim>& extents, const std::array<bool, Dim>& periodic)
      : extents_(extents), periodic_(periodic) {
    for (int a = 0; a < Dim; ++a)
      if (!(extents_[a] > 0.0) || !std::isfinite(extents_[a]))
        throw ConfigError("domain extent must be positive on every axis");
  }

  static constexpr int dim() { return Dim; }
  const Vec<Dim>& extents() const { return extents_; }
  double extent(int a) const { return extents_[a]; }
  const std::array<bool, Dim>& periodic() const { return periodic_; }
  bool is_periodic(int a) const { return periodic_[a]; }
  bool fully_periodic() const {
    return std::all_of(periodic_.begin(), periodic_.end(), [](bool p) { return p; });
  }
  double min_periodic_extent() const {
    double m = INFINITY;
    for (int a = 0; a < Dim; ++a)
      if (periodic_[a]) m = std::min(m, extents_[a]);
    return m;
  }
  double diagonal_squared() const { return norm2(extents_); }

  /// Minimum-image vector from b to a.
  Vec<Dim> displacement(const Vec<Dim>& a, const Vec<Dim>& b) const {
    Vec<Dim> d = a - b;
    for (int k = 0; k < Dim; ++k) {
      if (!periodic_[k]) continue;
      const double L = extents_[k];
      const double half = 0.5 * L;
      // Wrapped coordinates differ by less than L; one correction suffices.
      if (d[k] >= half) {
        d[k] -= L;
      } else if (d[k] < -half) {
        d[k] += L;
      }
      if (d[k] >= half || d[k] < -half) {
        d[k] -= L * std::floor(d[k] / L + 0.5);
        if (d[k] >= half) d[k] -= L;
        if (d[k] < -half) d[k] += L;
      }
    }
    return d;
  }

  /// p + dp, wrapped into [0, extent) on periodic axes.
  Vec<Dim> shift(const Vec<Dim>& p, const Vec<Dim>& dp) const { return wrap(p + dp); }

  Vec<Dim> wrap(Vec<Dim> x) const {
    for (int k = 0; k < Dim; ++k) {
      if (!periodic_[k]) continue;
      const double L = extents_[k];
      x[k] -= L * std::floor(x[k] / L);
      if (x[k] >= L || x[k] < 0.0) x[k] = 0.0;  // roundoff at the seam
    }
    return x;
  }

 private:
  Vec<Dim> extents_;
  std::array<bool, Dim> periodic_;
};

template <int Dim>
Vec<Dim> periodic_displacement(const Domain<Dim>& domain, const Vec<Dim>& a, const Vec<Dim>& b) {
  return domain.displacement(a, b);
}

template <int Dim>
Vec<Dim> shift_position(const Domain<Dim>& domain, const Vec<Dim>& p, const Vec<Dim>& dp) {
  return domain.shift(p, dp);
}

/// Runtime-dimension variant for callers holding flat coordinate buffers.
template <int Dim>
std::vector<double> periodic_displacement(const Domain<Dim>& domain, std::span<const double> a,
                                          std::span<const double> b) {
  if (a.size() != static_cast<std::size_t>(Dim) || b.size() != static_cast<std::size_t>(Dim))
    throw ContractError("periodic_displacement: point dimension does not match domain");
  Vec<Dim> va, vb;
  for (int k = 0; k < Dim; ++k) {
    va[k] = a[k];
    vb[k] = b[k];
  }
  const Vec<Dim> d = domain.displacement(va, vb);
  return {d.c.begin(), d.c.end()};
}

// ---------------------------------------------------------------------------
// Particles
// ---------------------------------------------------------------------------

enum class ParticleType : std::int32_t { fluid = 0, wall = 1, moving_wall = 2 };

inline bool is_wall(ParticleType t) { return t != ParticleType::fluid; }

template <int Dim>
struct ParticleState {
  std::vector<Vec<Dim>> positions;
  std::vector<Vec<Dim>> velocities;
  std::vector<double> densities;
  std::vector<double> pressures;
  std::vector<double> masses;
  std::vector<ParticleType> types;
  // 0 for fluid; 1 for the wall layer touching the fluid, 2 and 3 further out.
  std::vector<std::int32_t> wall_layers;

  std::size_t size() const { return positions.size(); }

  void resize(std::size_t n) {
    positions.resize(n);
    velocities.resize(n);
    densities.resize(n, 1.0);
    pressures.resize(n, 0.0);
    masses.resize(n, 0.0);
    types.resize(n, ParticleType::fluid);
    wall_layers.resize(n, 0);
  }

  void push_back(const Vec<Dim>& x, const Vec<Dim>& v, double rho, double mass, ParticleType type,
                 std::int32_t layer = 0) {
    positions.push_back(x);
    velocities.push_back(v);
    densities.push_back(rho);
    pressures.push_back(0.0);
    masses.push_back(mass);
    types.push_back(type);
    wall_layers.push_back(layer);
  }

  std::size_t count(ParticleType t) const {
    return static_cast<std::size_t>(std::count(types.begin(), types.end(), t));
  }

  void validate() const {
    const std::size_t n = positions.size();
    if (velocities.size() != n || densities.size() != n || pressures.size() != n ||
        masses.size() != n || types.size() != n || wall_layers.size() != n)
      throw ContractError("ParticleState arrays differ in length");
    for (std::size_t i = 0; i < n; ++i)
      if (types[i] == ParticleType::fluid && !(densities[i] > 0.0))
        throw ContractError("fluid particle " + std::to_string(i) + " has non-positive density");
  }
};

// ---------------------------------------------------------------------------
// Case parameters
// ---------------------------------------------------------------------------

enum class DensityMode { summation, evolution };

/// Interaction radius of learned models in units of dx.
inline constexpr double kConnectivityFactor = 1.5;

struct SplitPlan {
  // Episodic cases: trajectory counts. Stationary cases: frame counts.
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + valid + test; }
};

/// Physical and numerical parameters of one benchmark case.
struct CaseSpec {
  std::string id;
  std::string family;  // tgv, rpf, ldc or dam
  int dim = 2;
  std::vector<double> extents;
  std::vector<bool> periodic;
  double dx = 0.0;
  double dt_solver = 0.0;
  std::size_t frames_between_samples = 100;
  double c0 = 10.0;
  double rho0 = 1.0;
  double p_bg = 0.0;
  double viscosity = 0.0;
  double force_magnitude = 0.0;
  double artificial_alpha = 0.0;
  DensityMode density_mode = DensityMode::summation;
  double lid_velocity = 0.0;
  double gravity = 0.0;  // magnitude, acting along -y
  int wall_layers = 0;   // dummy layers used during simulation
  double reynolds = 0.0;
  // Frames per trajectory for episodic cases; 0 for stationary ones.
  std::size_t trajectory_length = 0;
  bool stationary = false;
  SplitPlan splits;
  std::size_t expected_particles = 0;
  std::uint64_t seed = 0;

  double frame_dt() const { return dt_solver * static_cast<double>(frames_between_samples); }

  void validate() const {
    if (dim != 2 && dim != 3) throw ConfigError(id + ": dim must be 2 or 3");
    if (extents.size() != static_cast<std::size_t>(dim) || periodic.size() != extents.size())
      throw ConfigError(id + ": extents/periodic do not match dim");
    for (double e : extents)
      if (!(e > 0.0)) throw ConfigError(id + ": extents must be positive");
    if (!(dx > 0.0)) throw ConfigError(id + ": dx must be positive");
    if (!(dt_solver > 0.0)) throw ConfigError(id + ": dt_solver must be positive");
    if (!(c0 > 0.0)) throw ConfigError(id + ": c0 must be positive");
    if (!(rho0 > 0.0)) throw ConfigError(id + ": rho0 must be positive");
    if (viscosity < 0.0) throw ConfigError(id + ": viscosity must be non-negative");
    if (frames_between_samples < 1) throw ConfigError(id + ": frames_between_samples must be >= 1");
  }

  template <int Dim>
  Domain<Dim> domain() const {
    if (dim != Dim) throw ContractError(id + ": requested domain of wrong dimension");
    Vec<Dim> e;
    std::array<bool, Dim> p{};
    for (int a = 0; a < Dim; ++a) {
      e[a] = extents[a];
      p[a] = periodic[a];
    }
    return Domain<Dim>(e, p);
  }
};

// ---------------------------------------------------------------------------
// Recorded trajectories
// ---------------------------------------------------------------------------

/// Positions sampled at frame_dt intervals, stored row-major [T][N][dim] in
/// single precision.
struct Trajectory {
  int dim = 2;
  std::size_t frames = 0;
  std::size_t particles = 0;
  std::vector<float> positions;
  std::vector<std::int32_t> types;
  double frame_dt = 0.0;

  Trajectory() = default;
  Trajectory(int dim_, std::size_t frames_, std::size_t particles_, double frame_dt_ = 0.0)
      : dim(dim_),
        frames(frames_),
        particles(particles_),
        positions(frames_ * particles_ * static_cast<std::size_t>(dim_), 0.0f),
        types(particles_, 0),
        frame_dt(frame_dt_) {}

  std::size_t offset(std::size_t t, std::size_t i) const {
    return (t * particles + i) * static_cast<std::size_t>(dim);
  }
  float& at(std::size_t t, std::size_t i, int a) { return positions[offset(t, i) + a]; }
  float at(std::size_t t, std::size_t i, int a) const { return positions[offset(t, i) + a]; }
  std::span<const float> frame(std::size_t t) const {
    return {positions.data() + offset(t, 0), particles * static_cast<std::size_t>(dim)};
  }

  template <int Dim>
  Vec<Dim> position(std::size_t t, std::size_t i) const {
    Vec<Dim> x;
    for (int a = 0; a < Dim; ++a) x[a] = at(t, i, a);
    return x;
  }

  /// Frames [first, last) as a new trajectory.
  Trajectory slice(std::size_t first, std::size_t last) const {
    if (first > last || last > frames) throw ContractError("trajectory slice out of range");
    Trajectory out(dim, last - first, particles, frame_dt);
    std::copy(positions.begin() + static_cast<std::ptrdiff_t>(offset(first, 0)),
              positions.begin() + static_cast<std::ptrdiff_t>(offset(last, 0)), out.positions.begin());
    out.types = types;
    return out;
  }

  void validate() const {
    if (dim != 2 && dim != 3) throw ShapeError("trajectory dimension must be 2 or 3");
    if (frames < 1) throw ShapeError("trajectory must hold at least one frame");
    if (positions.size() != frames * particles * static_cast<std::size_t>(dim))
      throw ShapeError("trajectory position buffer does not match [T, N, dim]");
    if (types.size() != particles) throw ShapeError("particle_type length does not match N");
  }
};

}  // namespace sphkit
