#pragma once

// Dataset files. Each split is one HDF5 file whose root holds one group per
// trajectory, named by its zero-padded index ("00000", "00001", ...). A group
// contains
//   position       float32 [T, N, dim]
//   particle_type  int32   [N]        0 fluid, 1 static wall, 2 moving wall
// A dataset directory holds train.h5, valid.h5, test.h5 and metadata.json.

#include <hdf5.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sphkit/core.hpp"

namespace sphkit {

namespace h5 {

/// Owning hid_t with a matching close function.
class Handle {
 public:
  using Closer = herr_t (*)(hid_t);
  Handle() = default;
  Handle(hid_t id, Closer close) : id_(id), close_(close) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : id_(std::exchange(o.id_, H5I_INVALID_HID)), close_(o.close_) {}
  Handle& operator=(Handle&& o) noexcept {
    if (this != &o) {
      reset();
      id_ = std::exchange(o.id_, H5I_INVALID_HID);
      close_ = o.close_;
    }
    return *this;
  }
  ~Handle() { reset(); }

  hid_t get() const { return id_; }
  bool valid() const { return id_ >= 0; }
  void reset() {
    if (id_ >= 0 && close_) close_(id_);
    id_ = H5I_INVALID_HID;
  }

 private:
  hid_t id_ = H5I_INVALID_HID;
  Closer close_ = nullptr;
};

// The library prints an error stack on every failed call; failures are
// reported through exceptions instead.
inline void silence_errors() {
  static const bool done = [] {
    H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
    return true;
  }();
  (void)done;
}

inline Handle file_create(const std::string& path) {
  silence_errors();
  hid_t id = H5Fcreate(path.c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT);
  if (id < 0) throw IoError("cannot create HDF5 file " + path);
  return {id, H5Fclose};
}

inline Handle file_open(const std::string& path) {
  silence_errors();
  if (!std::filesystem::exists(path)) throw MissingInputError("missing input file " + path);
  if (H5Fis_hdf5(path.c_str()) <= 0) throw MalformedFileError("not an HDF5 file: " + path);
  hid_t id = H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT);
  if (id < 0) throw MalformedFileError("cannot open HDF5 file " + path);
  return {id, H5Fclose};
}

inline void write_dataset(hid_t parent, const char* name, hid_t mem_type, hid_t file_type,
                          const std::vector<hsize_t>& dims, const void* data) {
  Handle space(H5Screate_simple(static_cast<int>(dims.size()), dims.data(), nullptr), H5Sclose);
  Handle ds(H5Dcreate2(parent, name, file_type, space.get(), H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT),
            H5Dclose);
  if (!ds.valid()) throw IoError(std::string("cannot create dataset ") + name);
  if (H5Dwrite(ds.get(), mem_type, H5S_ALL, H5S_ALL, H5P_DEFAULT, data) < 0)
    throw IoError(std::string("cannot write dataset ") + name);
}

inline std::vector<hsize_t> dataset_dims(hid_t ds) {
  Handle space(H5Dget_space(ds), H5Sclose);
  const int rank = H5Sget_simple_extent_ndims(space.get());
  if (rank < 0) throw MalformedFileError("cannot read dataset shape");
  std::vector<hsize_t> dims(static_cast<std::size_t>(rank));
  H5Sget_simple_extent_dims(space.get(), dims.data(), nullptr);
  return dims;
}

inline std::vector<std::string> group_names(hid_t file) {
  std::vector<std::string> names;
  H5G_info_t info;
  if (H5Gget_info(file, &info) < 0) throw MalformedFileError("cannot list HDF5 root group");
  for (hsize_t k = 0; k < info.nlinks; ++k) {
    const ssize_t len =
        H5Lget_name_by_idx(file, ".", H5_INDEX_NAME, H5_ITER_INC, k, nullptr, 0, H5P_DEFAULT);
    if (len < 0) throw MalformedFileError("cannot read HDF5 link name");
    std::string name(static_cast<std::size_t>(len), '\0');
    H5Lget_name_by_idx(file, ".", H5_INDEX_NAME, H5_ITER_INC, k, name.data(),
                       static_cast<std::size_t>(len) + 1, H5P_DEFAULT);
    names.push_back(std::move(name));
  }
  return names;
}

}  // namespace h5

/// Group key of trajectory `index`: five digits, zero padded.
inline std::string trajectory_key(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", index);
  return buf;
}

inline void write_split(const std::string& path, const std::vector<Trajectory>& trajectories) {
  h5::Handle file = h5::file_create(path);
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const Trajectory& t = trajectories[k];
    t.validate();
    const std::string key = trajectory_key(k);
    h5::Handle group(H5Gcreate2(file.get(), key.c_str(), H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT),
                     H5Gclose);
    if (!group.valid()) throw IoError("cannot create group " + key + " in " + path);
    h5::write_dataset(group.get(), "position", H5T_NATIVE_FLOAT, H5T_IEEE_F32LE,
                      {t.frames, t.particles, static_cast<hsize_t>(t.dim)}, t.positions.data());
    h5::write_dataset(group.get(), "particle_type", H5T_NATIVE_INT32, H5T_STD_I32LE,
                      {t.particles}, t.types.data());
  }
}

/// Reads every trajectory group in key order. `frame_dt` is not stored in the
/// split files; pass it from the metadata.
inline std::vector<Trajectory> read_split(const std::string& path, double frame_dt = 0.0) {
  h5::Handle file = h5::file_open(path);
  const auto names = h5::group_names(file.get());
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] != trajectory_key(k))
      throw MissingKeyError(path + ": expected group " + trajectory_key(k) + ", found " + names[k]);
    h5::Handle group(H5Gopen2(file.get(), names[k].c_str(), H5P_DEFAULT), H5Gclose);
    if (!group.valid()) throw MalformedFileError(path + ": " + names[k] + " is not a group");
    for (const char* key : {"position", "particle_type"})
      if (H5Lexists(group.get(), key, H5P_DEFAULT) <= 0)
        throw MissingKeyError(path + ": group " + names[k] + " lacks '" + key + "'");

    h5::Handle pos(H5Dopen2(group.get(), "position", H5P_DEFAULT), H5Dclose);
    h5::Handle typ(H5Dopen2(group.get(), "particle_type", H5P_DEFAULT), H5Dclose);
    if (!pos.valid() || !typ.valid()) throw MalformedFileError(path + ": unreadable dataset in " + names[k]);
    const auto pdims = h5::dataset_dims(pos.get());
    const auto tdims = h5::dataset_dims(typ.get());
    if (pdims.size() != 3)
      throw ShapeError(path + ": " + names[k] + "/position has rank " + std::to_string(pdims.size()) +
                       ", expected 3");
    if (pdims[2] != 2 && pdims[2] != 3)
      throw ShapeError(path + ": " + names[k] + "/position last axis must be 2 or 3");
    if (tdims.size() != 1 || tdims[0] != pdims[1])
      throw ShapeError(path + ": " + names[k] + "/particle_type does not match particle count");
    if (pdims[0] < 1) throw ShapeError(path + ": " + names[k] + "/position holds no frames");

    Trajectory t(static_cast<int>(pdims[2]), pdims[0], pdims[1], frame_dt);
    if (H5Dread(pos.get(), H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, t.positions.data()) < 0 ||
        H5Dread(typ.get(), H5T_NATIVE_INT32, H5S_ALL, H5S_ALL, H5P_DEFAULT, t.types.data()) < 0)
      throw MalformedFileError(path + ": cannot read " + names[k]);
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits and subsampling
// ---------------------------------------------------------------------------

struct SplitSet {
  std::vector<Trajectory> train;
  std::vector<Trajectory> valid;
  std::vector<Trajectory> test;
};

struct SplitSizes {
  std::size_t train, valid, test;
};

/// Halves, then quarters: n/2, n/4 and the remainder.
inline SplitSizes split_sizes(std::size_t n) {
  if (n < 4) throw ContractError("need at least 4 items to split 2/1/1, got " + std::to_string(n));
  const std::size_t train = n / 2;
  const std::size_t valid = n / 4;
  return {train, valid, n - train - valid};
}

/// Episodic cases: whole trajectories by index order.
inline SplitSet make_splits(std::vector<Trajectory> trajectories) {
  const SplitSizes s = split_sizes(trajectories.size());
  SplitSet out;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    auto& dst = k < s.train ? out.train : (k < s.train + s.valid ? out.valid : out.test);
    dst.push_back(std::move(trajectories[k]));
  }
  return out;
}

/// Stationary cases: one long trajectory cut into frame ranges.
inline SplitSet make_splits(const Trajectory& trajectory) {
  const SplitSizes s = split_sizes(trajectory.frames);
  SplitSet out;
  out.train.push_back(trajectory.slice(0, s.train));
  out.valid.push_back(trajectory.slice(s.train, s.train + s.valid));
  out.test.push_back(trajectory.slice(s.train + s.valid, trajectory.frames));
  return out;
}

/// Keeps frames 0, every, 2 every, ...
inline Trajectory subsample(const Trajectory& raw, std::size_t every) {
  if (every < 1) throw ContractError("subsample stride must be >= 1");
  const std::size_t frames = (raw.frames + every - 1) / every;
  Trajectory out(raw.dim, frames, raw.particles, raw.frame_dt * static_cast<double>(every));
  out.types = raw.types;
  const std::size_t stride = raw.particles * static_cast<std::size_t>(raw.dim);
  for (std::size_t t = 0; t < frames; ++t)
    std::copy_n(raw.positions.begin() + static_cast<std::ptrdiff_t>(raw.offset(t * every, 0)), stride,
                out.positions.begin() + static_cast<std::ptrdiff_t>(out.offset(t, 0)));
  return out;
}

// ---------------------------------------------------------------------------
// Metadata
// ---------------------------------------------------------------------------

struct Provenance {
  std::string kernel = "quintic_spline";
  double h_over_dx = 1.0;
  double support_over_h = 3.0;
  std::string density_mode = "summation";
  double artificial_alpha = 0.0;
  bool transport_velocity = false;
  bool density_diffusion = false;
  bool hydrostatic_wall_correction = false;
  std::string integrator = "kick_drift_kick";
  std::uint64_t seed = 0;
  bool lattice_init = false;
  std::size_t relax_steps = 0;
  std::size_t warmup_frames = 0;
  std::string sinkhorn_cost = "minimum_image";
  std::string boundary_feature = "clipped_at_connectivity_radius_normalized";
};

struct DatasetMetadata {
  std::string case_id;
  int dim = 2;
  double dx = 0.0;
  double dt_solver = 0.0;
  std::size_t write_every = 100;
  double frame_dt = 0.0;
  std::vector<std::array<double, 2>> bounds;
  std::vector<bool> periodic;
  double default_connectivity_radius = 0.0;
  std::size_t num_particles_max = 0;
  std::size_t sequence_length_train = 0;
  std::size_t sequence_length_valid = 0;
  std::size_t sequence_length_test = 0;
  std::size_t num_trajs_train = 0;
  std::size_t num_trajs_valid = 0;
  std::size_t num_trajs_test = 0;
  std::string split_mode = "episodic";  // or "stationary"
  double viscosity = 0.0;
  double c0 = 0.0;
  double rho0 = 1.0;
  double p_bg = 0.0;
  double force_magnitude = 0.0;
  double lid_velocity = 0.0;
  double gravity = 0.0;
  double reynolds = 0.0;
  // Frame-unit velocity and acceleration statistics of fluid particles in the
  // training split.
  std::vector<double> vel_mean, vel_std, acc_mean, acc_std;
  Provenance provenance;
};

inline nlohmann::json to_json(const DatasetMetadata& m) {
  nlohmann::json j;
  j["case"] = m.case_id;
  j["dim"] = m.dim;
  j["dx"] = m.dx;
  j["dt"] = m.dt_solver;
  j["write_every"] = m.write_every;
  j["frame_dt"] = m.frame_dt;
  j["bounds"] = m.bounds;
  j["periodic_boundary_conditions"] = m.periodic;
  j["default_connectivity_radius"] = m.default_connectivity_radius;
  j["num_particles_max"] = m.num_particles_max;
  j["sequence_length_train"] = m.sequence_length_train;
  j["sequence_length_valid"] = m.sequence_length_valid;
  j["sequence_length_test"] = m.sequence_length_test;
  j["num_trajs_train"] = m.num_trajs_train;
  j["num_trajs_valid"] = m.num_trajs_valid;
  j["num_trajs_test"] = m.num_trajs_test;
  j["split_mode"] = m.split_mode;
  j["viscosity"] = m.viscosity;
  j["c0"] = m.c0;
  j["rho0"] = m.rho0;
  j["p_bg"] = m.p_bg;
  j["force_magnitude"] = m.force_magnitude;
  j["lid_velocity"] = m.lid_velocity;
  j["gravity"] = m.gravity;
  j["reynolds"] = m.reynolds;
  j["vel_mean"] = m.vel_mean;
  j["vel_std"] = m.vel_std;
  j["acc_mean"] = m.acc_mean;
  j["acc_std"] = m.acc_std;
  j["particle_type_codes"] = {{"fluid", 0}, {"wall", 1}, {"moving_wall", 2}};
  const Provenance& p = m.provenance;
  j["sphkit"] = {{"kernel", p.kernel},
                 {"h_over_dx", p.h_over_dx},
                 {"support_over_h", p.support_over_h},
                 {"density_mode", p.density_mode},
                 {"artificial_alpha", p.artificial_alpha},
                 {"transport_velocity", p.transport_velocity},
                 {"density_diffusion", p.density_diffusion},
                 {"hydrostatic_wall_correction", p.hydrostatic_wall_correction},
                 {"integrator", p.integrator},
                 {"seed", p.seed},
                 {"lattice_init", p.lattice_init},
                 {"relax_steps", p.relax_steps},
                 {"warmup_frames", p.warmup_frames},
                 {"sinkhorn_cost", p.sinkhorn_cost},
                 {"boundary_feature", p.boundary_feature}};
  return j;
}

inline DatasetMetadata metadata_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw MissingKeyError(std::string("metadata lacks '") + key + "'");
    return j.at(key);
  };
  DatasetMetadata m;
  try {
    m.case_id = need("case").get<std::string>();
    m.dim = need("dim").get<int>();
    m.dx = need("dx").get<double>();
    m.dt_solver = need("dt").get<double>();
    m.write_every = need("write_every").get<std::size_t>();
    m.frame_dt = j.value("frame_dt", m.dt_solver * static_cast<double>(m.write_every));
    m.bounds = need("bounds").get<std::vector<std::array<double, 2>>>();
    m.periodic = need("periodic_boundary_conditions").get<std::vector<bool>>();
    m.default_connectivity_radius = need("default_connectivity_radius").get<double>();
    m.num_particles_max = j.value("num_particles_max", std::size_t{0});
    m.sequence_length_train = need("sequence_length_train").get<std::size_t>();
    m.sequence_length_valid = j.value("sequence_length_valid", std::size_t{0});
    m.sequence_length_test = need("sequence_length_test").get<std::size_t>();
    m.num_trajs_train = j.value("num_trajs_train", std::size_t{0});
    m.num_trajs_valid = j.value("num_trajs_valid", std::size_t{0});
    m.num_trajs_test = j.value("num_trajs_test", std::size_t{0});
    m.split_mode = j.value("split_mode", std::string("episodic"));
    m.viscosity = j.value("viscosity", 0.0);
    m.c0 = j.value("c0", 0.0);
    m.rho0 = j.value("rho0", 1.0);
    m.p_bg = j.value("p_bg", 0.0);
    m.force_magnitude = j.value("force_magnitude", 0.0);
    m.lid_velocity = j.value("lid_velocity", 0.0);
    m.gravity = j.value("gravity", 0.0);
    m.reynolds = j.value("reynolds", 0.0);
    m.vel_mean = j.value("vel_mean", std::vector<double>{});
    m.vel_std = j.value("vel_std", std::vector<double>{});
    m.acc_mean = j.value("acc_mean", std::vector<double>{});
    m.acc_std = j.value("acc_std", std::vector<double>{});
    if (j.contains("sphkit")) {
      const auto& p = j.at("sphkit");
      Provenance& q = m.provenance;
      q.kernel = p.value("kernel", q.kernel);
      q.h_over_dx = p.value("h_over_dx", q.h_over_dx);
      q.support_over_h = p.value("support_over_h", q.support_over_h);
      q.density_mode = p.value("density_mode", q.density_mode);
      q.artificial_alpha = p.value("artificial_alpha", q.artificial_alpha);
      q.transport_velocity = p.value("transport_velocity", q.transport_velocity);
      q.density_diffusion = p.value("density_diffusion", q.density_diffusion);
      q.hydrostatic_wall_correction = p.value("hydrostatic_wall_correction", q.hydrostatic_wall_correction);
      q.integrator = p.value("integrator", q.integrator);
      q.seed = p.value("seed", q.seed);
      q.lattice_init = p.value("lattice_init", q.lattice_init);
      q.relax_steps = p.value("relax_steps", q.relax_steps);
      q.warmup_frames = p.value("warmup_frames", q.warmup_frames);
      q.sinkhorn_cost = p.value("sinkhorn_cost", q.sinkhorn_cost);
      q.boundary_feature = p.value("boundary_feature", q.boundary_feature);
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(std::string("metadata field has the wrong type: ") + e.what());
  }
  if (m.dim != 2 && m.dim != 3) throw MalformedFileError("metadata dim must be 2 or 3");
  if (m.bounds.size() != static_cast<std::size_t>(m.dim) || m.periodic.size() != m.bounds.size())
    throw ShapeError("metadata bounds/periodic do not match dim");
  return m;
}

inline void write_metadata(const std::string& path, const DatasetMetadata& m) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << to_json(m).dump(2) << '\n';
}

inline DatasetMetadata read_metadata(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingInputError("missing metadata file " + path);
  std::ifstream f(path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(path + ": " + e.what());
  }
  return metadata_from_json(j);
}

/// Domain described by metadata bounds (lower bounds are taken as zero).
template <int Dim>
Domain<Dim> metadata_domain(const DatasetMetadata& m) {
  if (m.dim != Dim) throw ContractError("metadata dimension mismatch");
  Vec<Dim> e;
  std::array<bool, Dim> p{};
  for (int a = 0; a < Dim; ++a) {
    e[a] = m.bounds[a][1] - m.bounds[a][0];
    p[a] = m.periodic[a];
  }
  return Domain<Dim>(e, p);
}

/// Fills vel/acc mean and std from finite differences of fluid positions.
template <int Dim>
void compute_statistics(DatasetMetadata& m, const std::vector<Trajectory>& trajectories) {
  const Domain<Dim> domain = metadata_domain<Dim>(m);
  std::array<double, Dim> vs{}, vs2{}, as{}, as2{};
  double nv = 0.0, na = 0.0;
  for (const auto& t : trajectories) {
    for (std::size_t f = 1; f < t.frames; ++f) {
      for (std::size_t i = 0; i < t.particles; ++i) {
        if (t.types[i] != 0) continue;
        const Vec<Dim> v1 = domain.displacement(t.position<Dim>(f, i), t.position<Dim>(f - 1, i));
        for (int a = 0; a < Dim; ++a) {
          vs[a] += v1[a];
          vs2[a] += v1[a] * v1[a];
        }
        nv += 1.0;
        if (f >= 2) {
          const Vec<Dim> v0 = domain.displacement(t.position<Dim>(f - 1, i), t.position<Dim>(f - 2, i));
          const Vec<Dim> acc = v1 - v0;
          for (int a = 0; a < Dim; ++a) {
            as[a] += acc[a];
            as2[a] += acc[a] * acc[a];
          }
          na += 1.0;
        }
      }
    }
  }
  auto finish = [](const std::array<double, Dim>& s, const std::array<double, Dim>& s2, double n,
                   std::vector<double>& mean, std::vector<double>& sd) {
    mean.assign(Dim, 0.0);
    sd.assign(Dim, 0.0);
    if (n == 0.0) return;
    for (int a = 0; a < Dim; ++a) {
      mean[a] = s[a] / n;
      sd[a] = std::sqrt(std::max(0.0, s2[a] / n - mean[a] * mean[a]));
    }
  };
  finish(vs, vs2, nv, m.vel_mean, m.vel_std);
  finish(as, as2, na, m.acc_mean, m.acc_std);
}

// ---------------------------------------------------------------------------
// Dataset directories
// ---------------------------------------------------------------------------

inline const std::array<const char*, 3>& split_names() {
  static const std::array<const char*, 3> names = {"train", "valid", "test"};
  return names;
}

inline void write_dataset(const std::filesystem::path& dir, const SplitSet& splits,
                          const DatasetMetadata& meta) {
  std::filesystem::create_directories(dir);
  write_split((dir / "train.h5").string(), splits.train);
  write_split((dir / "valid.h5").string(), splits.valid);
  write_split((dir / "test.h5").string(), splits.test);
  write_metadata((dir / "metadata.json").string(), meta);
}

struct Dataset {
  DatasetMetadata meta;
  SplitSet splits;
};

inline Dataset read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw MissingInputError("missing dataset directory " + dir.string());
  Dataset d;
  d.meta = read_metadata((dir / "metadata.json").string());
  d.splits.train = read_split((dir / "train.h5").string(), d.meta.frame_dt);
  d.splits.valid = read_split((dir / "valid.h5").string(), d.meta.frame_dt);
  d.splits.test = read_split((dir / "test.h5").string(), d.meta.frame_dt);
  return d;
}

}  // namespace sphkit
