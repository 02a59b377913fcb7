// sphkit: dataset generation, solver validation, rollout evaluation and
// dataset inspection.
//
//   sphkit generate --case tgv2d --trajectories 4 --frames 10 --out data/tgv
//   sphkit validate --suite poiseuille
//   sphkit evaluate --dataset data/tgv --predictor zero_acceleration
//   sphkit inspect data/tgv
//
// Every command accepts --config file.yaml and repeated --set key=value
// overrides (dotted keys, e.g. --set evaluate.steps=10).

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sphkit/cli.hpp"

namespace {

template <class T>
void add_override(std::vector<std::string>& out, const std::string& key, const std::optional<T>& v) {
  if (!v) return;
  std::ostringstream os;
  if constexpr (std::is_same_v<T, bool>)
    os << (*v ? "true" : "false");
  else
    os << *v;
  out.push_back(key + "=" + os.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPH benchmark datasets: generate, validate, evaluate, inspect"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML configuration file");
    sub->add_option("--set", sets, "override a config key, key=value (repeatable)");
    sub->add_option("--seed", seed, "base random seed (0: catalog seed)");
    sub->add_option("--out", out, "output directory (default: $SPHKIT_OUTPUT_ROOT/<name>)");
  };

  std::optional<std::string> gen_case;
  std::optional<std::size_t> gen_trajs, gen_frames;
  std::optional<bool> gen_lattice;
  auto* gen = app.add_subcommand("generate", "run a catalog case and write a dataset directory");
  common(gen);
  gen->add_option("--case", gen_case, "case id (tgv2d, rpf2d, ldc2d, dam2d, tgv3d, rpf3d, ldc3d)");
  gen->add_option("--trajectories", gen_trajs, "number of trajectories for episodic cases");
  gen->add_option("--frames", gen_frames, "frames per trajectory (episodic) or of the run (stationary)");
  gen->add_flag("--lattice", gen_lattice, "start from a lattice instead of relaxed random positions");

  std::optional<std::string> val_suite;
  auto* val = app.add_subcommand("validate", "compare the solver with analytical solutions");
  common(val);
  val->add_option("--suite", val_suite, "poiseuille, tgv2d, conservation or all");

  std::optional<std::string> ev_dataset, ev_predictor, ev_command, ev_mode;
  std::optional<std::size_t> ev_steps, ev_rollouts;
  std::vector<std::size_t> ev_n;
  auto* ev = app.add_subcommand("evaluate", "roll out a predictor on the test split and score it");
  common(ev);
  ev->add_option("--dataset", ev_dataset, "dataset directory");
  ev->add_option("--predictor", ev_predictor, "ground_truth, zero_acceleration, sph or external");
  ev->add_option("--command", ev_command, "external predictor command");
  ev->add_option("--mode", ev_mode, "external prediction mode: acceleration, velocity or position");
  ev->add_option("--steps", ev_steps, "rollout steps");
  ev->add_option("--rollouts", ev_rollouts, "maximum number of rollouts (0: all)");
  ev->add_option("--n", ev_n, "MSE horizons to report");

  std::optional<std::string> in_dataset;
  std::optional<bool> in_strict;
  auto* in = app.add_subcommand("inspect", "summarise and check a dataset directory");
  common(in);
  in->add_option("dataset", in_dataset, "dataset directory");
  in->add_flag("--strict", in_strict, "fail when the dataset deviates from the catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sphkit::cli::kBadInput;
  }

  try {
    YAML::Node root = sphkit::cli::load_config_node(config_path);
    std::vector<std::string> ov;
    ov.push_back("command=" + app.get_subcommands().front()->get_name());
    add_override(ov, "seed", seed);
    add_override(ov, "output", out);
    add_override(ov, "generate.case", gen_case);
    add_override(ov, "generate.trajectories", gen_trajs);
    add_override(ov, "generate.frames", gen_frames);
    add_override(ov, "generate.lattice", gen_lattice);
    add_override(ov, "validate.suite", val_suite);
    add_override(ov, "evaluate.dataset", ev_dataset);
    add_override(ov, "evaluate.predictor", ev_predictor);
    add_override(ov, "evaluate.command", ev_command);
    add_override(ov, "evaluate.mode", ev_mode);
    add_override(ov, "evaluate.steps", ev_steps);
    add_override(ov, "evaluate.rollouts", ev_rollouts);
    if (!ev_n.empty()) {
      std::string list = "[";
      for (std::size_t k = 0; k < ev_n.size(); ++k) list += (k ? "," : "") + std::to_string(ev_n[k]);
      ov.push_back("evaluate.n=" + list + "]");
    }
    add_override(ov, "inspect.dataset", in_dataset);
    add_override(ov, "inspect.strict", in_strict);
    ov.insert(ov.end(), sets.begin(), sets.end());
    sphkit::cli::apply_overrides(root, ov);
    const sphkit::cli::RunConfig cfg = sphkit::cli::parse_config(root);
    return sphkit::cli::run(cfg);
  } catch (const sphkit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sphkit::cli::kBadInput;
  }
}
