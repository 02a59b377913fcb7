#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>
#include <fstream>
#include <random>

#include "sphkit/dataio.hpp"

using namespace sphkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sphkit_dataio_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Trajectory random_trajectory(int dim, std::size_t frames, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Trajectory t(dim, frames, n, 0.04);
  for (auto& x : t.positions) x = u(rng);
  for (std::size_t i = 0; i < n; ++i) t.types[i] = i % 5 == 0 ? 1 : 0;
  return t;
}

void write_raw(const std::string& path, const std::string& key, std::vector<hsize_t> dims) {
  h5::Handle f = h5::file_create(path);
  h5::Handle g(H5Gcreate2(f.get(), key.c_str(), H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT), H5Gclose);
  std::size_t count = 1;
  for (auto d : dims) count *= d;
  std::vector<float> data(count, 0.5f);
  h5::write_dataset(g.get(), "position", H5T_NATIVE_FLOAT, H5T_IEEE_F32LE, dims, data.data());
  std::vector<std::int32_t> types(dims.size() > 1 ? dims[1] : dims[0], 0);
  h5::write_dataset(g.get(), "particle_type", H5T_NATIVE_INT32, H5T_STD_I32LE, {types.size()}, types.data());
}

}  // namespace

TEST(Keys, FiveDigitZeroPadded) {
  EXPECT_EQ(trajectory_key(0), "00000");
  EXPECT_EQ(trajectory_key(7), "00007");
  EXPECT_EQ(trajectory_key(12345), "12345");
}

TEST(Split, RoundTripIsBitExact) {
  const fs::path dir = scratch("roundtrip");
  std::vector<Trajectory> ts{random_trajectory(2, 5, 17, 1), random_trajectory(2, 5, 17, 2),
                             random_trajectory(2, 5, 17, 3)};
  const std::string path = (dir / "train.h5").string();
  write_split(path, ts);
  const auto back = read_split(path, 0.04);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(std::memcmp(back[k].positions.data(), ts[k].positions.data(), ts[k].positions.size() * 4), 0);
    EXPECT_EQ(back[k].types, ts[k].types);
    EXPECT_EQ(back[k].frame_dt, 0.04);
  }
  h5::Handle f = h5::file_open(path);
  EXPECT_EQ(h5::group_names(f.get()), (std::vector<std::string>{"00000", "00001", "00002"}));
}

TEST(Split, ThreeDimensional) {
  const fs::path dir = scratch("three");
  std::vector<Trajectory> ts{random_trajectory(3, 2, 9, 4)};
  write_split((dir / "a.h5").string(), ts);
  const auto back = read_split((dir / "a.h5").string());
  EXPECT_EQ(back[0].dim, 3);
  EXPECT_EQ(back[0].positions, ts[0].positions);
}

TEST(Split, ErrorsAreTyped) {
  const fs::path dir = scratch("errors");
  EXPECT_THROW(read_split((dir / "nope.h5").string()), MissingInputError);
  {
    std::ofstream((dir / "text.h5").string()) << "not hdf5";
  }
  EXPECT_THROW(read_split((dir / "text.h5").string()), MalformedFileError);

  write_raw((dir / "rank2.h5").string(), "00000", {4, 6});
  try {
    read_split((dir / "rank2.h5").string());
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("00000/position"), std::string::npos);
  }
  write_raw((dir / "dim4.h5").string(), "00000", {2, 3, 4});
  EXPECT_THROW(read_split((dir / "dim4.h5").string()), ShapeError);
  write_raw((dir / "badkey.h5").string(), "00001", {2, 3, 2});
  EXPECT_THROW(read_split((dir / "badkey.h5").string()), MissingKeyError);

  {
    h5::Handle f = h5::file_create((dir / "nopos.h5").string());
    h5::Handle g(H5Gcreate2(f.get(), "00000", H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT), H5Gclose);
  }
  EXPECT_THROW(read_split((dir / "nopos.h5").string()), MissingKeyError);
}

TEST(Splits, SizesHalfQuarterRest) {
  const auto a = split_sizes(20000);
  EXPECT_EQ(a.train, 10000u);
  EXPECT_EQ(a.valid, 5000u);
  EXPECT_EQ(a.test, 5000u);
  const auto b = split_sizes(200);
  EXPECT_EQ(b.train, 100u);
  EXPECT_EQ(b.valid, 50u);
  EXPECT_EQ(b.test, 50u);
  const auto c = split_sizes(4);
  EXPECT_EQ(c.train, 2u);
  EXPECT_EQ(c.valid, 1u);
  EXPECT_EQ(c.test, 1u);
  EXPECT_THROW(split_sizes(3), ContractError);
}

TEST(Splits, StationaryCutsConsecutiveFrames) {
  Trajectory t = random_trajectory(2, 8, 3, 5);
  const SplitSet s = make_splits(t);
  EXPECT_EQ(s.train[0].frames, 4u);
  EXPECT_EQ(s.valid[0].frames, 2u);
  EXPECT_EQ(s.test[0].frames, 2u);
  EXPECT_EQ(s.test[0].at(0, 1, 1), t.at(6, 1, 1));
  std::vector<Trajectory> many(10, t);
  const SplitSet e = make_splits(many);
  EXPECT_EQ(e.train.size(), 5u);
  EXPECT_EQ(e.valid.size(), 2u);
  EXPECT_EQ(e.test.size(), 3u);
}

TEST(Subsample, EveryHundredthStep) {
  // 126 frames at 0.04 come from 12501 solver steps at 4e-4.
  Trajectory raw(2, 12501, 1, 4e-4);
  for (std::size_t f = 0; f < raw.frames; ++f) raw.at(f, 0, 0) = static_cast<float>(f);
  const Trajectory s = subsample(raw, 100);
  EXPECT_EQ(s.frames, 126u);
  EXPECT_NEAR(s.frame_dt, 0.04, 1e-15);
  EXPECT_EQ(s.at(125, 0, 0), 12500.0f);
  EXPECT_EQ(subsample(Trajectory(2, 12601, 1, 4e-4), 100).frames, 127u);
  EXPECT_THROW(subsample(raw, 0), ContractError);
}

TEST(Metadata, RoundTrip) {
  const fs::path dir = scratch("meta");
  DatasetMetadata m;
  m.case_id = "rpf2d";
  m.dim = 2;
  m.dx = 0.025;
  m.dt_solver = 4e-4;
  m.frame_dt = 0.04;
  m.bounds = {{0.0, 1.0}, {0.0, 2.0}};
  m.periodic = {true, true};
  m.default_connectivity_radius = 0.0375;
  m.num_particles_max = 3200;
  m.sequence_length_train = 10;
  m.num_trajs_train = 1;
  m.split_mode = "stationary";
  m.p_bg = 5.0;
  m.vel_mean = {0.1, 1e-17};
  m.vel_std = {0.3, 0.2};
  m.acc_mean = {0.0, 0.0};
  m.acc_std = {1e-5, 2e-5};
  m.provenance.seed = 1234;
  m.provenance.warmup_frames = 17;
  const std::string path = (dir / "metadata.json").string();
  write_metadata(path, m);
  const DatasetMetadata b = read_metadata(path);
  EXPECT_EQ(to_json(b), to_json(m));
  EXPECT_EQ(b.vel_mean[1], 1e-17);
  EXPECT_EQ(b.provenance.warmup_frames, 17u);

  auto j = to_json(m);
  j.erase("dt");
  EXPECT_THROW(metadata_from_json(j), MissingKeyError);
  j = to_json(m);
  j["bounds"] = {{0.0, 1.0}};
  EXPECT_THROW(metadata_from_json(j), ShapeError);
  EXPECT_THROW(read_metadata((dir / "missing.json").string()), MissingInputError);
  std::ofstream((dir / "bad.json").string()) << "{ not json";
  EXPECT_THROW(read_metadata((dir / "bad.json").string()), MalformedFileError);
}

TEST(Statistics, FrameUnitVelocity) {
  DatasetMetadata m;
  m.dim = 2;
  m.bounds = {{0.0, 1.0}, {0.0, 1.0}};
  m.periodic = {true, true};
  Trajectory t(2, 3, 1, 0.1);
  // x moves 0.95 -> 0.05 -> 0.15: velocity 0.1 per frame across the seam.
  t.at(0, 0, 0) = 0.95f;
  t.at(1, 0, 0) = 0.05f;
  t.at(2, 0, 0) = 0.15f;
  compute_statistics<2>(m, {t});
  EXPECT_NEAR(m.vel_mean[0], 0.1, 1e-6);
  EXPECT_NEAR(m.vel_std[0], 0.0, 1e-6);
  EXPECT_NEAR(m.acc_mean[0], 0.0, 1e-6);
}

TEST(Dataset, DirectoryRoundTrip) {
  const fs::path dir = scratch("dataset");
  SplitSet s;
  s.train = {random_trajectory(2, 4, 6, 1), random_trajectory(2, 4, 6, 2)};
  s.valid = {random_trajectory(2, 4, 6, 3)};
  s.test = {random_trajectory(2, 4, 6, 4)};
  DatasetMetadata m;
  m.case_id = "tgv2d";
  m.dim = 2;
  m.frame_dt = 0.04;
  m.bounds = {{0.0, 1.0}, {0.0, 1.0}};
  m.periodic = {true, true};
  write_dataset(dir, s, m);
  const Dataset d = read_dataset(dir);
  EXPECT_EQ(d.splits.train.size(), 2u);
  EXPECT_EQ(d.splits.test[0].positions, s.test[0].positions);
  EXPECT_EQ(d.splits.train[0].frame_dt, 0.04);
  EXPECT_THROW(read_dataset(dir / "absent"), MissingInputError);
  fs::remove(dir / "valid.h5");
  EXPECT_THROW(read_dataset(dir), MissingInputError);
}
