#pragma once

// Command implementations behind tools/sphkit. Configuration is a YAML
// document with one section per command; any key can be overridden from the
// command line as a dotted path (`evaluate.steps=10`). The effective
// configuration is written next to every output as config.yaml.

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sphkit/cases.hpp"
#include "sphkit/dataio.hpp"
#include "sphkit/exchange.hpp"
#include "sphkit/metrics.hpp"
#include "sphkit/pipeline.hpp"
#include "sphkit/rollout.hpp"
#include "sphkit/validation.hpp"

namespace sphkit::cli {

enum ExitCode : int { kOk = 0, kValidationFailed = 1, kBadInput = 2, kInstability = 3 };

inline constexpr const char* kOutputRootEnv = "SPHKIT_OUTPUT_ROOT";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct GenerateConfig {
  std::string case_id = "tgv2d";
  std::size_t trajectories = 0;  // 0: catalog
  std::size_t frames = 0;        // 0: catalog
  bool lattice = false;
  std::size_t relax_steps = 1000;
  std::size_t warmup_window = 100;
  double warmup_tolerance = 0.01;
  std::size_t warmup_max_frames = 2000;
};

struct ValidateConfig {
  std::string suite = "all";  // poiseuille, tgv2d, conservation, all
  std::size_t tgv_frames = 0;
  double tgv_p_bg = -1.0;  // < 0: catalog value
  std::size_t poiseuille_particles = 60;
};

struct EvaluateConfig {
  std::string dataset;
  std::string predictor = "zero_acceleration";  // ground_truth, zero_acceleration, sph, external
  std::string command;                          // external predictor
  std::string mode = "acceleration";            // external predictor output
  std::size_t steps = 20;
  std::size_t history = 5;
  std::vector<std::size_t> n = {1, 5, 10, 20};
  std::size_t rollouts = 0;  // 0: one per episodic trajectory, every segment of stationary ones
  std::size_t sinkhorn_every = 5;
  std::size_t sinkhorn_max_points = 512;
  double sinkhorn_epsilon = 0.0;
  std::size_t sinkhorn_iters = 500;
  double sinkhorn_tol = 1e-6;
  bool sinkhorn_periodic = true;
  bool save_rollouts = false;
};

struct InspectConfig {
  std::string dataset;
  bool strict = false;  // catalog mismatches fail the command
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::string output;
  GenerateConfig generate;
  ValidateConfig validate;
  EvaluateConfig evaluate;
  InspectConfig inspect;
};

namespace detail {

/// Sets node[a][b]... = value for a dotted path; the value is parsed as YAML
/// so lists and numbers keep their type.
inline void set_path(YAML::Node root, const std::string& dotted, const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(dotted);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("malformed override key '" + dotted + "'");
    parts.push_back(p);
  }
  if (parts.empty()) throw ConfigError("empty override key");
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse override value for '" + dotted + "': " + e.what());
  }
  std::vector<YAML::Node> chain{root};
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
    YAML::Node next = chain.back()[parts[k]];
    if (next.IsDefined() && !next.IsMap() && !next.IsNull())
      throw ConfigError("override '" + dotted + "' descends into a scalar");
    chain.push_back(next);
  }
  chain.back()[parts.back()] = parsed;
}

template <class T>
void read(const YAML::Node& sec, const char* key, T& out, const std::string& where) {
  const YAML::Node n = sec[key];
  if (!n.IsDefined() || n.IsNull()) return;
  try {
    out = n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

inline void check_keys(const YAML::Node& sec, const std::vector<std::string>& allowed, const std::string& where) {
  if (!sec.IsDefined() || sec.IsNull()) return;
  if (!sec.IsMap()) throw ConfigError("config section '" + where + "' must be a mapping");
  for (const auto& kv : sec) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

}  // namespace detail

inline YAML::Node load_config_node(const std::string& path) {
  if (path.empty()) return YAML::Node(YAML::NodeType::Map);
  if (!std::filesystem::exists(path)) throw MissingInputError("missing config file " + path);
  try {
    YAML::Node n = YAML::LoadFile(path);
    if (n.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!n.IsMap()) throw ConfigError("config file must hold a mapping");
    return n;
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse config file " + path + ": " + e.what());
  }
}

/// Applies `key=value` overrides in order.
inline void apply_overrides(YAML::Node root, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    detail::set_path(root, o.substr(0, eq), o.substr(eq + 1));
  }
}

inline RunConfig parse_config(const YAML::Node& root) {
  using detail::check_keys;
  using detail::read;
  check_keys(root, {"command", "seed", "output", "generate", "validate", "evaluate", "inspect"}, "");
  RunConfig c;
  read(root, "command", c.command, "");
  read(root, "seed", c.seed, "");
  read(root, "output", c.output, "");

  const YAML::Node g = root["generate"];
  check_keys(g, {"case", "trajectories", "frames", "lattice", "relax_steps", "warmup_window", "warmup_tolerance",
                 "warmup_max_frames"},
             "generate");
  if (g.IsDefined()) {
    read(g, "case", c.generate.case_id, "generate");
    read(g, "trajectories", c.generate.trajectories, "generate");
    read(g, "frames", c.generate.frames, "generate");
    read(g, "lattice", c.generate.lattice, "generate");
    read(g, "relax_steps", c.generate.relax_steps, "generate");
    read(g, "warmup_window", c.generate.warmup_window, "generate");
    read(g, "warmup_tolerance", c.generate.warmup_tolerance, "generate");
    read(g, "warmup_max_frames", c.generate.warmup_max_frames, "generate");
  }
  const YAML::Node v = root["validate"];
  check_keys(v, {"suite", "tgv_frames", "tgv_p_bg", "poiseuille_particles"}, "validate");
  if (v.IsDefined()) {
    read(v, "suite", c.validate.suite, "validate");
    read(v, "tgv_frames", c.validate.tgv_frames, "validate");
    read(v, "tgv_p_bg", c.validate.tgv_p_bg, "validate");
    read(v, "poiseuille_particles", c.validate.poiseuille_particles, "validate");
  }
  const YAML::Node e = root["evaluate"];
  check_keys(e, {"dataset", "predictor", "command", "mode", "steps", "history", "n", "rollouts", "sinkhorn_every",
                 "sinkhorn_max_points", "sinkhorn_epsilon", "sinkhorn_iters", "sinkhorn_tol", "sinkhorn_periodic",
                 "save_rollouts"},
             "evaluate");
  if (e.IsDefined()) {
    auto& ev = c.evaluate;
    read(e, "dataset", ev.dataset, "evaluate");
    read(e, "predictor", ev.predictor, "evaluate");
    read(e, "command", ev.command, "evaluate");
    read(e, "mode", ev.mode, "evaluate");
    read(e, "steps", ev.steps, "evaluate");
    read(e, "history", ev.history, "evaluate");
    read(e, "n", ev.n, "evaluate");
    read(e, "rollouts", ev.rollouts, "evaluate");
    read(e, "sinkhorn_every", ev.sinkhorn_every, "evaluate");
    read(e, "sinkhorn_max_points", ev.sinkhorn_max_points, "evaluate");
    read(e, "sinkhorn_epsilon", ev.sinkhorn_epsilon, "evaluate");
    read(e, "sinkhorn_iters", ev.sinkhorn_iters, "evaluate");
    read(e, "sinkhorn_tol", ev.sinkhorn_tol, "evaluate");
    read(e, "sinkhorn_periodic", ev.sinkhorn_periodic, "evaluate");
    read(e, "save_rollouts", ev.save_rollouts, "evaluate");
  }
  const YAML::Node i = root["inspect"];
  check_keys(i, {"dataset", "strict"}, "inspect");
  if (i.IsDefined()) {
    read(i, "dataset", c.inspect.dataset, "inspect");
    read(i, "strict", c.inspect.strict, "inspect");
  }
  return c;
}

inline YAML::Node to_yaml(const RunConfig& c) {
  YAML::Node n;
  n["command"] = c.command;
  n["seed"] = c.seed;
  n["output"] = c.output;
  const auto& g = c.generate;
  n["generate"]["case"] = g.case_id;
  n["generate"]["trajectories"] = g.trajectories;
  n["generate"]["frames"] = g.frames;
  n["generate"]["lattice"] = g.lattice;
  n["generate"]["relax_steps"] = g.relax_steps;
  n["generate"]["warmup_window"] = g.warmup_window;
  n["generate"]["warmup_tolerance"] = g.warmup_tolerance;
  n["generate"]["warmup_max_frames"] = g.warmup_max_frames;
  const auto& v = c.validate;
  n["validate"]["suite"] = v.suite;
  n["validate"]["tgv_frames"] = v.tgv_frames;
  n["validate"]["tgv_p_bg"] = v.tgv_p_bg;
  n["validate"]["poiseuille_particles"] = v.poiseuille_particles;
  const auto& e = c.evaluate;
  n["evaluate"]["dataset"] = e.dataset;
  n["evaluate"]["predictor"] = e.predictor;
  n["evaluate"]["command"] = e.command;
  n["evaluate"]["mode"] = e.mode;
  n["evaluate"]["steps"] = e.steps;
  n["evaluate"]["history"] = e.history;
  n["evaluate"]["n"] = e.n;
  n["evaluate"]["rollouts"] = e.rollouts;
  n["evaluate"]["sinkhorn_every"] = e.sinkhorn_every;
  n["evaluate"]["sinkhorn_max_points"] = e.sinkhorn_max_points;
  n["evaluate"]["sinkhorn_epsilon"] = e.sinkhorn_epsilon;
  n["evaluate"]["sinkhorn_iters"] = e.sinkhorn_iters;
  n["evaluate"]["sinkhorn_tol"] = e.sinkhorn_tol;
  n["evaluate"]["sinkhorn_periodic"] = e.sinkhorn_periodic;
  n["evaluate"]["save_rollouts"] = e.save_rollouts;
  n["inspect"]["dataset"] = c.inspect.dataset;
  n["inspect"]["strict"] = c.inspect.strict;
  return n;
}

inline void save_config(const RunConfig& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "config.yaml");
  if (!f) throw IoError("cannot write " + (dir / "config.yaml").string());
  YAML::Emitter out;
  out << to_yaml(c);
  f << out.c_str() << '\n';
}

/// Output directory: the configured one, else <root>/<name> where root is
/// $SPHKIT_OUTPUT_ROOT or ./sphkit_runs.
inline std::filesystem::path output_dir(const RunConfig& c, const std::string& name) {
  if (!c.output.empty()) return c.output;
  const char* root = std::getenv(kOutputRootEnv);
  return std::filesystem::path(root && *root ? root : "sphkit_runs") / name;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_generate(const RunConfig& c, std::ostream& log) {
  const CaseSpec& spec = case_spec(c.generate.case_id);
  DatasetOptions opt;
  opt.seed = c.seed;
  opt.trajectories = c.generate.trajectories;
  opt.frames = c.generate.frames;
  opt.generate.init.lattice = c.generate.lattice;
  opt.generate.init.relax_steps = c.generate.relax_steps;
  opt.generate.warmup_window = c.generate.warmup_window;
  opt.generate.warmup_tolerance = c.generate.warmup_tolerance;
  opt.generate.warmup_max_frames = c.generate.warmup_max_frames;
  opt.progress = [&](std::size_t done, std::size_t total) {
    log << "  trajectory " << done << "/" << total << '\n';
  };
  const auto dir = output_dir(c, spec.id);
  log << "generating " << spec.id << " into " << dir.string() << '\n';
  const Dataset d = generate_dataset(spec, opt);
  write_dataset(dir, d.splits, d.meta);
  save_config(c, dir);
  log << "wrote " << d.meta.num_trajs_train << "/" << d.meta.num_trajs_valid << "/" << d.meta.num_trajs_test
      << " trajectories, " << d.meta.num_particles_max << " particles\n";
  return kOk;
}

inline int cmd_validate(const RunConfig& c, std::ostream& log) {
  const auto& v = c.validate;
  const bool all = v.suite == "all";
  if (!all && v.suite != "poiseuille" && v.suite != "tgv2d" && v.suite != "conservation")
    throw ConfigError("unknown validation suite '" + v.suite + "'");
  const auto dir = output_dir(c, "validate");
  std::filesystem::create_directories(dir);
  nlohmann::json summary;
  bool ok = true;
  if (all || v.suite == "poiseuille") {
    PoiseuilleConfig pc;
    pc.particles_across = v.poiseuille_particles;
    const PoiseuilleResult r = run_poiseuille(pc);
    write_text(dir / "poiseuille.csv", r.csv());
    nlohmann::json j;
    for (const auto& p : r.profiles) j["centerline_error"][std::to_string(p.t)] = p.centerline_error;
    j["steady_error"] = r.steady_error;
    j["tolerance"] = pc.tolerance;
    j["passed"] = r.passed;
    summary["poiseuille"] = j;
    ok = ok && r.passed;
    log << "poiseuille: steady centerline error " << r.steady_error << (r.passed ? " PASS" : " FAIL") << '\n';
  }
  if (all || v.suite == "tgv2d") {
    TgvConfig tc;
    tc.frames = v.tgv_frames;
    tc.seed = c.seed;
    if (v.tgv_p_bg >= 0.0) tc.p_bg = v.tgv_p_bg;
    const TgvResult r = run_tgv_decay(tc);
    write_text(dir / "tgv2d.csv", r.csv());
    summary["tgv2d"] = {{"rate_analytic", r.rate_analytic},     {"rate_fitted", r.rate_fitted},
                        {"rate_error", r.rate_error},           {"rate_tolerance", tc.rate_tolerance},
                        {"max_pointwise_error", r.max_pointwise_error},
                        {"pointwise_tolerance", tc.pointwise_tolerance},
                        {"passed", r.passed}};
    ok = ok && r.passed;
    log << "tgv2d: fitted rate " << r.rate_fitted << " vs " << r.rate_analytic << ", max pointwise error "
        << r.max_pointwise_error << (r.passed ? " PASS" : " FAIL") << '\n';
  }
  if (all || v.suite == "conservation") {
    const ConservationResult r = run_conservation();
    const bool pass = r.momentum_drift <= 1e-10 && r.galilean_error <= 1e-12 && r.lattice_density_error <= 0.02;
    summary["conservation"] = {{"momentum_drift", r.momentum_drift},
                               {"galilean_error", r.galilean_error},
                               {"lattice_density_error", r.lattice_density_error},
                               {"passed", pass}};
    ok = ok && pass;
    log << "conservation: momentum " << r.momentum_drift << ", galilean " << r.galilean_error << ", lattice density "
        << r.lattice_density_error << (pass ? " PASS" : " FAIL") << '\n';
  }
  summary["passed"] = ok;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  save_config(c, dir);
  return ok ? kOk : kValidationFailed;
}

namespace detail {

template <int Dim>
std::unique_ptr<Predictor<Dim>> make_predictor(const EvaluateConfig& e, const DatasetMetadata& meta,
                                               const Trajectory& reference, std::size_t test_index,
                                               std::size_t segment_start, const std::filesystem::path& work) {
  if (e.predictor == "ground_truth") return std::make_unique<GroundTruthPredictor<Dim>>(reference);
  if (e.predictor == "zero_acceleration") return std::make_unique<ZeroAccelerationPredictor<Dim>>();
  if (e.predictor == "sph") {
    const CaseSpec spec = case_from_metadata(meta);
    const std::uint64_t seed =
        meta.split_mode == "stationary" ? meta.provenance.seed : test_trajectory_seed(meta, test_index);
    return std::make_unique<SphPredictor<Dim>>(spec, seed, replay_options(meta),
                                               test_frame_offset(meta) + segment_start);
  }
  if (e.predictor == "external")
    return std::make_unique<ExternalPredictor<Dim>>(e.command, parse_prediction_mode(e.mode), work);
  throw ConfigError("unknown predictor '" + e.predictor + "'");
}

template <int Dim>
nlohmann::json evaluate_dataset(const RunConfig& c, const Dataset& d, const std::filesystem::path& dir,
                                std::ostream& log) {
  const auto& e = c.evaluate;
  const DatasetMetadata& meta = d.meta;
  const Domain<Dim> domain = metadata_domain<Dim>(meta);
  CaseSpec spec;
  try {
    spec = case_from_metadata(meta);
  } catch (const ConfigError&) {
    // Unknown case: features without force, boundaries from the metadata.
    spec.id = meta.case_id;
    spec.dim = meta.dim;
    spec.dx = meta.dx;
    for (int a = 0; a < Dim; ++a) {
      spec.extents.push_back(meta.bounds[a][1] - meta.bounds[a][0]);
      spec.periodic.push_back(meta.periodic[a]);
    }
  }
  const FeatureContext<Dim> ctx = feature_context<Dim>(spec);
  const double mass = meta.rho0 * std::pow(meta.dx, Dim);

  RolloutOptions ro;
  ro.history = e.history;
  ro.steps = e.steps;
  ro.metrics.mse_steps = e.n;
  ro.metrics.sinkhorn_every = e.sinkhorn_every;
  ro.metrics.sinkhorn.max_points = e.sinkhorn_max_points;
  ro.metrics.sinkhorn.epsilon = e.sinkhorn_epsilon;
  ro.metrics.sinkhorn.max_iters = e.sinkhorn_iters;
  ro.metrics.sinkhorn.tol = e.sinkhorn_tol;
  ro.metrics.sinkhorn.periodic_cost = e.sinkhorn_periodic;

  const std::size_t window = e.history + 1 + e.steps;
  const bool stationary = meta.split_mode == "stationary";
  std::vector<RolloutReport> reports;
  std::vector<Trajectory> rollouts;
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t j = 0; j < d.splits.test.size(); ++j) {
    const Trajectory& traj = d.splits.test[j];
    if (traj.frames < window)
      throw ContractError("test trajectory " + trajectory_key(j) + " has " + std::to_string(traj.frames) +
                          " frames; a rollout needs " + std::to_string(window));
    const std::size_t segments = stationary ? traj.frames / window : 1;
    for (std::size_t s = 0; s < segments; ++s) {
      if (e.rollouts > 0 && reports.size() >= e.rollouts) break;
      const Trajectory ref = traj.slice(s * window, (s + 1) * window);
      auto predictor = make_predictor<Dim>(e, meta, ref, j, s * window, dir / "exchange");
      RolloutResult r = rollout(*predictor, ref, ctx, mass, ro);
      const std::string tag = trajectory_key(j) + (stationary ? "_" + std::to_string(s) : "");
      write_text(dir / ("rollout_" + tag + ".json"), to_json(r.report).dump(2) + "\n");
      write_text(dir / ("rollout_" + tag + ".csv"), to_csv(r.report));
      nlohmann::json pj = {{"trajectory", trajectory_key(j)}, {"start_frame", s * window + e.history}};
      for (const auto& [n, v] : r.report.mse_n) pj["mse_" + std::to_string(n)] = v;
      pj["sinkhorn"] = r.report.sinkhorn_mean();
      pj["mse_e_kin"] = r.report.mse_e_kin;
      per.push_back(pj);
      log << "  rollout " << tag << ": mse_" << e.steps << " = "
          << (r.report.mse_n.count(e.steps) ? r.report.mse_n.at(e.steps) : r.report.mse_per_step.back()) << '\n';
      reports.push_back(std::move(r.report));
      if (e.save_rollouts) rollouts.push_back(std::move(r.predicted));
    }
  }
  if (reports.empty()) throw ContractError("no rollouts evaluated");

  // Aggregate: means over rollouts.
  nlohmann::json agg;
  std::ostringstream csv;
  csv.precision(10);
  csv << "dataset,predictor,rollouts";
  for (std::size_t n : e.n)
    if (n <= e.steps) csv << ",MSE_" << n;
  csv << ",Sinkhorn,MSE_Ekin\n";
  csv << meta.case_id << ',' << e.predictor << ',' << reports.size();
  for (std::size_t n : e.n) {
    if (n > e.steps) continue;
    double m = 0.0;
    for (const auto& r : reports) m += r.mse_n.at(n);
    m /= static_cast<double>(reports.size());
    agg["mse_" + std::to_string(n)] = m;
    csv << ',' << m;
  }
  double sk = 0.0, ek = 0.0;
  bool converged = true;
  for (const auto& r : reports) {
    sk += r.sinkhorn_mean();
    ek += r.mse_e_kin;
    converged = converged && r.sinkhorn_converged;
  }
  sk /= static_cast<double>(reports.size());
  ek /= static_cast<double>(reports.size());
  agg["sinkhorn"] = sk;
  agg["sinkhorn_converged"] = converged;
  agg["mse_e_kin"] = ek;
  csv << ',' << sk << ',' << ek << '\n';

  nlohmann::json out = {{"dataset", meta.case_id},
                        {"predictor", e.predictor},
                        {"rollouts", reports.size()},
                        {"steps", e.steps},
                        {"history", e.history},
                        {"aggregate", agg},
                        {"per_rollout", per},
                        {"sinkhorn",
                         {{"epsilon", ro.metrics.sinkhorn.resolved_epsilon(domain.diagonal_squared())},
                          {"max_iters", e.sinkhorn_iters},
                          {"tol", e.sinkhorn_tol},
                          {"every", e.sinkhorn_every},
                          {"max_points", e.sinkhorn_max_points},
                          {"periodic_cost", e.sinkhorn_periodic},
                          {"debiased", true}}}};
  write_text(dir / "summary.json", out.dump(2) + "\n");
  write_text(dir / "summary.csv", csv.str());
  if (e.save_rollouts) write_split((dir / "rollouts.h5").string(), rollouts);
  return out;
}

}  // namespace detail

inline int cmd_evaluate(const RunConfig& c, std::ostream& log) {
  if (c.evaluate.dataset.empty()) throw ConfigError("evaluate needs a dataset directory");
  const Dataset d = read_dataset(c.evaluate.dataset);
  const auto dir = output_dir(c, "evaluate-" + d.meta.case_id + "-" + c.evaluate.predictor);
  std::filesystem::create_directories(dir);
  log << "evaluating " << c.evaluate.predictor << " on " << c.evaluate.dataset << '\n';
  const auto out = d.meta.dim == 2 ? detail::evaluate_dataset<2>(c, d, dir, log)
                                   : detail::evaluate_dataset<3>(c, d, dir, log);
  save_config(c, dir);
  log << out["aggregate"].dump() << '\n';
  return kOk;
}

/// Summary of a dataset directory; every split file is checked separately.
inline nlohmann::json inspect_dataset(const std::filesystem::path& dir, std::vector<std::string>& problems,
                                      std::vector<std::string>& mismatches) {
  if (!std::filesystem::is_directory(dir)) throw MissingInputError("missing dataset directory " + dir.string());
  const DatasetMetadata meta = read_metadata((dir / "metadata.json").string());
  nlohmann::json j;
  j["case"] = meta.case_id;
  j["dim"] = meta.dim;
  j["dx"] = meta.dx;
  j["frame_dt"] = meta.frame_dt;
  j["bounds"] = meta.bounds;
  j["periodic"] = meta.periodic;
  j["split_mode"] = meta.split_mode;
  std::size_t particles = 0;
  std::array<std::size_t, 3> split_frames{};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string name = split_names()[k];
    const std::string path = (dir / (name + ".h5")).string();
    try {
      const auto trajs = read_split(path, meta.frame_dt);
      nlohmann::json s;
      s["trajectories"] = trajs.size();
      std::size_t frames = 0;
      for (const auto& t : trajs) {
        frames += t.frames;
        particles = std::max(particles, t.particles);
      }
      s["frames"] = frames;
      s["frames_per_trajectory"] = trajs.empty() ? 0 : trajs.front().frames;
      split_frames[k] = meta.split_mode == "stationary" ? frames : trajs.size();
      s["fluid_particles"] =
          trajs.empty() ? 0 : std::count(trajs.front().types.begin(), trajs.front().types.end(), 0);
      j["splits"][name] = s;
    } catch (const IoError& e) {
      problems.push_back(name + ".h5: " + e.what());
      j["splits"][name] = {{"error", e.what()}};
    }
  }
  j["particles"] = particles;
  j["split_sizes"] = split_frames;
  try {
    const CaseSpec& spec = case_spec(meta.case_id);
    nlohmann::json cat;
    auto check = [&](const std::string& what, bool ok, const std::string& detail) {
      cat[what] = ok;
      if (!ok) mismatches.push_back(what + ": " + detail);
    };
    check("particles", particles == spec.expected_particles,
          std::to_string(particles) + " vs catalog " + std::to_string(spec.expected_particles));
    check("frame_dt", std::abs(meta.frame_dt - spec.frame_dt()) <= 1e-12 * spec.frame_dt(),
          std::to_string(meta.frame_dt) + " vs catalog " + std::to_string(spec.frame_dt()));
    bool box = meta.bounds.size() == spec.extents.size();
    for (std::size_t a = 0; box && a < spec.extents.size(); ++a)
      box = std::abs(meta.bounds[a][1] - meta.bounds[a][0] - spec.extents[a]) <= 1e-9;
    check("box", box, "bounds differ from catalog extents");
    const bool splits = split_frames[0] == spec.splits.train && split_frames[1] == spec.splits.valid &&
                        split_frames[2] == spec.splits.test;
    check("splits", splits,
          std::to_string(split_frames[0]) + "/" + std::to_string(split_frames[1]) + "/" +
              std::to_string(split_frames[2]) + " vs catalog " + std::to_string(spec.splits.train) + "/" +
              std::to_string(spec.splits.valid) + "/" + std::to_string(spec.splits.test));
    if (!spec.stationary)
      check("trajectory_length", meta.sequence_length_test == spec.trajectory_length,
            std::to_string(meta.sequence_length_test) + " vs catalog " + std::to_string(spec.trajectory_length));
    j["catalog_match"] = cat;
  } catch (const ConfigError&) {
    j["catalog_match"] = nullptr;
  }
  j["problems"] = problems;
  j["catalog_mismatches"] = mismatches;
  return j;
}

inline int cmd_inspect(const RunConfig& c, std::ostream& out) {
  if (c.inspect.dataset.empty()) throw ConfigError("inspect needs a dataset directory");
  std::vector<std::string> problems, mismatches;
  const nlohmann::json j = inspect_dataset(c.inspect.dataset, problems, mismatches);
  out << j.dump(2) << '\n';
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "error: " << p << '\n';
    return kBadInput;
  }
  if (c.inspect.strict && !mismatches.empty()) return kValidationFailed;
  return kOk;
}

/// Runs a command and maps failures to exit codes.
inline int run(const RunConfig& c, std::ostream& log = std::cout) {
  try {
    if (c.command == "generate") return cmd_generate(c, log);
    if (c.command == "validate") return cmd_validate(c, log);
    if (c.command == "evaluate") return cmd_evaluate(c, log);
    if (c.command == "inspect") return cmd_inspect(c, log);
    throw ConfigError("unknown command '" + c.command + "'");
  } catch (const InstabilityError& e) {
    std::cerr << "error: solver instability: " << e.what() << '\n';
    return kInstability;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
}

}  // namespace sphkit::cli
