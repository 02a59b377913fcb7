#pragma once

// Case -> dataset directory.

#include <cmath>
#include <functional>
#include <string>

#include "sphkit/cases.hpp"
#include "sphkit/dataio.hpp"

namespace sphkit {

struct DatasetOptions {
  std::uint64_t seed = 0;        // 0: the catalog seed; trajectory k uses seed + k
  std::size_t trajectories = 0;  // episodic cases; 0: the catalog total
  // Frames per trajectory (episodic) or of the single long run (stationary);
  // 0: the catalog value.
  std::size_t frames = 0;
  GenerateOptions generate;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

inline DatasetMetadata make_metadata(const CaseSpec& spec, std::uint64_t seed) {
  DatasetMetadata m;
  m.case_id = spec.id;
  m.dim = spec.dim;
  m.dx = spec.dx;
  m.dt_solver = spec.dt_solver;
  m.write_every = spec.frames_between_samples;
  m.frame_dt = spec.frame_dt();
  for (int a = 0; a < spec.dim; ++a) {
    m.bounds.push_back({0.0, spec.extents[a]});
    m.periodic.push_back(spec.periodic[a]);
  }
  m.default_connectivity_radius = kConnectivityFactor * spec.dx;
  m.split_mode = spec.stationary ? "stationary" : "episodic";
  m.viscosity = spec.viscosity;
  m.c0 = spec.c0;
  m.rho0 = spec.rho0;
  m.p_bg = spec.p_bg;
  m.force_magnitude = spec.force_magnitude;
  m.lid_velocity = spec.lid_velocity;
  m.gravity = spec.gravity;
  m.reynolds = spec.reynolds;
  Provenance& p = m.provenance;
  p.density_mode = spec.density_mode == DensityMode::summation ? "summation" : "evolution";
  p.artificial_alpha = spec.artificial_alpha;
  p.transport_velocity = spec.p_bg > 0.0;
  p.hydrostatic_wall_correction = spec.gravity > 0.0;
  p.seed = seed;
  return m;
}

/// Runs the case and returns split trajectories plus metadata.
inline Dataset generate_dataset(const CaseSpec& spec, const DatasetOptions& opt = {}) {
  spec.validate();
  const std::uint64_t seed = opt.seed == 0 ? spec.seed : opt.seed;
  Dataset d;
  d.meta = make_metadata(spec, seed);
  d.meta.provenance.lattice_init = opt.generate.init.lattice;
  d.meta.provenance.relax_steps = opt.generate.init.relax_steps;
  auto run = [&](std::uint64_t s, std::size_t frames, GenerationInfo* info) {
    return spec.dim == 2 ? generate_trajectory<2>(spec, s, frames, opt.generate, info)
                         : generate_trajectory<3>(spec, s, frames, opt.generate, info);
  };

  if (spec.stationary) {
    const std::size_t frames = opt.frames ? opt.frames : spec.splits.total();
    split_sizes(frames);  // reject too-short runs before simulating
    GenerationInfo info;
    Trajectory t = run(seed, frames, &info);
    if (opt.progress) opt.progress(1, 1);
    d.meta.provenance.warmup_frames = info.warmup_frames;
    d.splits = make_splits(t);
  } else {
    const std::size_t n = opt.trajectories ? opt.trajectories : spec.splits.total();
    const std::size_t frames = opt.frames ? opt.frames : spec.trajectory_length;
    split_sizes(n);
    std::vector<Trajectory> trajs;
    for (std::size_t k = 0; k < n; ++k) {
      trajs.push_back(run(seed + k, frames, nullptr));
      if (opt.progress) opt.progress(k + 1, n);
    }
    d.splits = make_splits(std::move(trajs));
  }

  d.meta.num_particles_max = d.splits.train.front().particles;
  d.meta.num_trajs_train = d.splits.train.size();
  d.meta.num_trajs_valid = d.splits.valid.size();
  d.meta.num_trajs_test = d.splits.test.size();
  d.meta.sequence_length_train = d.splits.train.front().frames;
  d.meta.sequence_length_valid = d.splits.valid.front().frames;
  d.meta.sequence_length_test = d.splits.test.front().frames;
  if (spec.dim == 2)
    compute_statistics<2>(d.meta, d.splits.train);
  else
    compute_statistics<3>(d.meta, d.splits.train);
  return d;
}

/// Seed of test trajectory `j` of an episodic dataset.
inline std::uint64_t test_trajectory_seed(const DatasetMetadata& meta, std::size_t j) {
  return meta.provenance.seed + meta.num_trajs_train + meta.num_trajs_valid + j;
}

/// Generation options that replay the run recorded in `meta`: same initial
/// state and exactly the recorded number of warm-up frames.
inline GenerateOptions replay_options(const DatasetMetadata& meta) {
  GenerateOptions g;
  g.init.lattice = meta.provenance.lattice_init;
  g.init.relax_steps = meta.provenance.relax_steps;
  g.warmup_window = std::max<std::size_t>(meta.provenance.warmup_frames, 1);
  g.warmup_max_frames = meta.provenance.warmup_frames;
  g.warmup_tolerance = 0.0;
  return g;
}

/// First frame of the test split within the recorded run (stationary cases
/// cut one run into consecutive splits).
inline std::size_t test_frame_offset(const DatasetMetadata& meta) {
  return meta.split_mode == "stationary" ? meta.sequence_length_train + meta.sequence_length_valid : 0;
}

/// Catalog entry for dataset metadata, with the stored physical constants.
inline CaseSpec case_from_metadata(const DatasetMetadata& m) {
  CaseSpec s = case_spec(m.case_id);
  s.dx = m.dx;
  s.dt_solver = m.dt_solver;
  s.frames_between_samples = m.write_every;
  s.viscosity = m.viscosity;
  s.c0 = m.c0;
  s.rho0 = m.rho0;
  s.p_bg = m.p_bg;
  s.force_magnitude = m.force_magnitude;
  s.lid_velocity = m.lid_velocity;
  s.gravity = m.gravity;
  return s;
}

}  // namespace sphkit
