#pragma once

// File protocol for predictors that live outside this process. For every
// rollout step the harness writes a request file, runs
//
//   <command> <request.h5> <response.h5>
//
// and reads the response. Request datasets (float64 unless noted):
//   positions      [N, dim]
//   velocities     [N, H, dim]   frame units, oldest first
//   particle_type  int32 [N]
//   force          [N, dim]      only when the case has an external force
//   boundary       [N, W]        only when some axis is non-periodic
//   senders, receivers  int64 [E];  displacements [E, dim];  distances [E]
//   frame, radius  scalars
// The response holds one dataset "prediction" [N, dim] (float32 or float64);
// its meaning (acceleration, velocity or position) is fixed when the
// predictor is configured.

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "sphkit/dataio.hpp"
#include "sphkit/rollout.hpp"

namespace sphkit {

namespace h5 {

inline void write_f64(hid_t parent, const char* name, const std::vector<hsize_t>& dims, const double* data) {
  write_dataset(parent, name, H5T_NATIVE_DOUBLE, H5T_IEEE_F64LE, dims, data);
}

inline std::vector<double> read_f64(hid_t parent, const std::string& name, std::vector<hsize_t>& dims) {
  if (H5Lexists(parent, name.c_str(), H5P_DEFAULT) <= 0) throw MissingKeyError("missing dataset '" + name + "'");
  Handle ds(H5Dopen2(parent, name.c_str(), H5P_DEFAULT), H5Dclose);
  if (!ds.valid()) throw MalformedFileError("cannot open dataset '" + name + "'");
  dims = dataset_dims(ds.get());
  std::size_t n = 1;
  for (hsize_t d : dims) n *= static_cast<std::size_t>(d);
  std::vector<double> out(n);
  if (n > 0 && H5Dread(ds.get(), H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT, out.data()) < 0)
    throw MalformedFileError("cannot read dataset '" + name + "'");
  return out;
}

}  // namespace h5

template <int Dim>
void write_feature_request(const std::string& path, const FeatureFrame<Dim>& f) {
  h5::Handle file = h5::file_create(path);
  const hid_t root = file.get();
  const hsize_t N = f.size(), H = f.history, D = Dim;
  auto flat = [](const std::vector<Vec<Dim>>& v) {
    std::vector<double> out;
    out.reserve(v.size() * Dim);
    for (const auto& x : v) out.insert(out.end(), x.c.begin(), x.c.end());
    return out;
  };
  h5::write_f64(root, "positions", {N, D}, flat(f.positions).data());
  h5::write_f64(root, "velocities", {N, H, D}, flat(f.velocities).data());
  h5::write_dataset(root, "particle_type", H5T_NATIVE_INT32, H5T_STD_I32LE, {N}, f.types.data());
  if (!f.force.empty()) h5::write_f64(root, "force", {N, D}, flat(f.force).data());
  if (f.boundary_width > 0) h5::write_f64(root, "boundary", {N, f.boundary_width}, f.boundary.data());
  const hsize_t E = f.edges.size();
  std::vector<std::int64_t> s(f.edges.senders.begin(), f.edges.senders.end());
  std::vector<std::int64_t> r(f.edges.receivers.begin(), f.edges.receivers.end());
  h5::write_dataset(root, "senders", H5T_NATIVE_INT64, H5T_STD_I64LE, {E}, s.data());
  h5::write_dataset(root, "receivers", H5T_NATIVE_INT64, H5T_STD_I64LE, {E}, r.data());
  h5::write_f64(root, "displacements", {E, D}, flat(f.edges.displacements).data());
  h5::write_f64(root, "distances", {E}, f.edges.distances.data());
  const double frame = static_cast<double>(f.frame);
  h5::write_f64(root, "frame", {1}, &frame);
  h5::write_f64(root, "radius", {1}, &f.radius);
}

template <int Dim>
std::vector<Vec<Dim>> read_prediction_response(const std::string& path, std::size_t particles) {
  h5::Handle file = h5::file_open(path);
  std::vector<hsize_t> dims;
  const std::vector<double> raw = h5::read_f64(file.get(), "prediction", dims);
  if (dims.size() != 2 || dims[0] != particles || dims[1] != static_cast<hsize_t>(Dim))
    throw ShapeError(path + ": 'prediction' must have shape [" + std::to_string(particles) + ", " +
                     std::to_string(Dim) + "]");
  std::vector<Vec<Dim>> out(particles);
  for (std::size_t i = 0; i < particles; ++i)
    for (int a = 0; a < Dim; ++a) out[i][a] = raw[i * Dim + a];
  return out;
}

/// Runs an external command per step through request/response files in
/// `work_dir`.
template <int Dim>
class ExternalPredictor : public Predictor<Dim> {
 public:
  ExternalPredictor(std::string command, PredictionMode mode, std::filesystem::path work_dir)
      : command_(std::move(command)), mode_(mode), dir_(std::move(work_dir)) {
    if (command_.empty()) throw ConfigError("external predictor needs a command");
    std::filesystem::create_directories(dir_);
  }
  PredictionMode mode() const override { return mode_; }
  std::string name() const override { return "external"; }
  std::vector<Vec<Dim>> predict(const FeatureFrame<Dim>& f) override {
    const std::string req = (dir_ / "request.h5").string();
    const std::string resp = (dir_ / "response.h5").string();
    std::filesystem::remove(resp);
    write_feature_request(req, f);
    const std::string cmd = command_ + " '" + req + "' '" + resp + "'";
    const int rc = std::system(cmd.c_str());
    if (rc != 0)
      throw Error("external predictor exited with status " + std::to_string(rc) + " at frame " +
                  std::to_string(f.frame));
    try {
      return read_prediction_response<Dim>(resp, f.size());
    } catch (const IoError& e) {
      throw Error(std::string("external predictor response at frame ") + std::to_string(f.frame) + ": " + e.what());
    }
  }

 private:
  std::string command_;
  PredictionMode mode_;
  std::filesystem::path dir_;
};

}  // namespace sphkit
