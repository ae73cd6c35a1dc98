#include "drsc/common/error.hpp"
#include "drsc/experiment/config.hpp"
#include "drsc/experiment/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

using namespace drsc;
using namespace drsc::experiment;

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Fast-charging controller pipeline: plant data, state reduction, surrogates, ambiguity offset, closed loop"};
  app.require_subcommand(1);
  std::string config_path = "config/experiment_default.json";
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  app.add_option("--config", config_path, "Experiment config (JSON)")->capture_default_str();
  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--out", out, "Run directory; all artifacts are written beneath it")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate-data", "Simulate random-current episodes on the plant");
  auto* fit = app.add_subcommand("fit-pca", "Fit the state reduction basis");
  auto* train = app.add_subcommand("train", "Build windowed samples and train the cost and constraint surrogates");
  auto* dro = app.add_subcommand("compute-dro", "Build the ambiguity certificate from test residuals");
  auto* control = app.add_subcommand("run-control", "Run one closed-loop charging experiment");
  std::string variant = "robust";
  control->add_option("--variant", variant, "robust | nonrobust | cccv")
      ->check(CLI::IsMember({"robust", "nonrobust", "cccv"}))
      ->capture_default_str();
  auto* scaling = app.add_subcommand("scaling", "Rerun the pipeline with a finer radial grid and compare step times");
  auto* report = app.add_subcommand("report", "Aggregate metrics into report/ (JSON and CSV)");
  auto* all = app.add_subcommand("run-all", "Every stage in order");
  bool skip_scaling = false;
  all->add_flag("--no-scaling", skip_scaling, "Skip the radial-refinement rerun");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  auto config = load_config(config_path);
  if (seed) config.seed = *seed;
  const std::filesystem::path run_dir(out);
  std::filesystem::create_directories(run_dir);

  if (simulate->parsed()) stage_simulate_data(config, run_dir);
  if (fit->parsed()) stage_fit_pca(config, run_dir);
  if (train->parsed()) stage_train(config, run_dir);
  if (dro->parsed()) stage_compute_dro(config, run_dir);
  if (control->parsed()) {
    const auto r = stage_run_control(config, run_dir, variant_from_string(variant));
    std::printf("%s: %s, %zu steps, %d violations, max violation %.4g V\n", r.variant.c_str(), r.termination.c_str(),
                r.steps.size(), r.violations, r.max_violation);
  }
  if (scaling->parsed()) stage_scaling(config, run_dir);
  if (report->parsed()) stage_report(config, run_dir);
  if (all->parsed()) run_all(config, run_dir, !skip_scaling);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionMismatch& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
