#include "drsc/experiment/config.hpp"
#include "drsc/experiment/manifest.hpp"
#include "drsc/experiment/pipeline.hpp"

#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

using namespace drsc;
using namespace drsc::experiment;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  auto c = load_config(test::config_dir() / "experiment_default.json");
  c.episodes = 12;
  c.epochs = 40;
  c.batch_size = 64;
  c.learning_rate = 5e-3;
  c.population = 32;
  c.iterations = 4;
  c.comparison_states = 3;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DRSC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("default experiment config carries the case-study hyperparameters") {
  const auto c = load_config(test::config_dir() / "experiment_default.json");
  CHECK(c.dt == 15.0);
  CHECK(c.horizon == 4);
  CHECK(c.soc_initial == 0.0286);
  CHECK(c.soc_target == 0.7);
  CHECK(c.ambient == 281.0);
  CHECK(c.episode_length == 3300.0);
  CHECK(c.max_current == 2.5);
  CHECK(c.beta == 0.9);
  CHECK(c.eta == 0.1);
  CHECK(c.population == 512);
  CHECK(c.iterations == 12);
  CHECK(c.plant().radial_nodes == 50);
}

TEST_CASE("config round-trips through JSON unchanged") {
  auto c = load_config(test::config_dir() / "experiment_default.json");
  c.fixed_q = 7;
  c.seed = 123456789012345ULL;
  const Json j = to_json(c);
  const auto back = config_from_json(j, c.base_dir);
  CHECK(to_json(back) == j);
  CHECK(back.fixed_q == 7);

  const auto dir = test::scratch_dir("config");
  save_config(dir / "c.json", c);
  CHECK(to_json(load_config(dir / "c.json")) == j);
}

TEST_CASE("config errors name the offending key") {
  const auto base = to_json(load_config(test::config_dir() / "experiment_default.json"));
  const auto rejects = [&](const Json& j, const std::string& needle) {
    try {
      config_from_json(j, test::config_dir());
    } catch (const ConfigError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  Json j = base;
  j["table"]["horizon_steps"] = 3;
  CHECK(rejects(j, "table.horizon_steps"));
  j = base;
  j["control"]["population"] = "many";
  CHECK(rejects(j, "control.population"));
  j = base;
  j["table"]["eta"] = 1.5;
  CHECK(rejects(j, "eta"));
  j = base;
  j["extra"] = 1;
  CHECK(rejects(j, "extra"));
  j = base;
  j["dro"]["radius"] = "guess";
  CHECK(rejects(j, "guess"));
  CHECK_THROWS_AS(load_config(test::config_dir() / "absent.json"), MissingArtifact);
}

TEST_CASE("section hashes track only their own section") {
  auto a = load_config(test::config_dir() / "experiment_default.json");
  auto b = a;
  b.population = 1024;
  CHECK(section_hash(a, "control") != section_hash(b, "control"));
  CHECK(section_hash(a, "table") == section_hash(b, "table"));
  b.seed = 1;
  CHECK(section_hash(a, "seed") != section_hash(b, "seed"));
}

TEST_CASE("pipeline stages are reproducible and guard their inputs") {
  const auto cfg = tiny_config();
  const auto a = test::scratch_dir("pipeline_a");
  const auto b = test::scratch_dir("pipeline_b");
  run_all(cfg, a, false);
  run_all(cfg, b, false);

  const auto manifest = RunManifest::load(a);
  for (const char* stage : {"simulate-data", "fit-pca", "train", "compute-dro", "run-control/cccv",
                            "run-control/nonrobust", "run-control/robust", "report"})
    CHECK(manifest.has(stage));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(fs::exists(a / "timings.json"));

  std::ifstream report(a / "report/report.csv");
  std::string line;
  std::getline(report, line);
  CHECK(line == "variant,charge_time_min,violations,max_violation_V,mean_step_s");
  std::vector<std::string> variants;
  while (std::getline(report, line)) variants.push_back(line.substr(0, line.find(',')));
  CHECK(variants == std::vector<std::string>{"cccv", "nonrobust", "robust"});

  // Rerunning a stage with unchanged inputs rewrites identical bytes.
  const auto basis = slurp(a / kBasisPayload);
  stage_fit_pca(cfg, a);
  CHECK(slurp(a / kBasisPayload) == basis);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  // A different seed changes the data and everything downstream.
  auto other = cfg;
  other.seed = 99;
  const auto c = test::scratch_dir("pipeline_c");
  stage_simulate_data(other, c);
  CHECK(RunManifest::load(c).stage("simulate-data").outputs != manifest.stage("simulate-data").outputs);

  {
    std::ofstream(b / kBasisPayload, std::ios::app) << "0\n";
  }
  CHECK_THROWS_AS(stage_train(cfg, b), StaleArtifact);
  fs::remove(a / kBasisHeader);
  CHECK_THROWS_AS(stage_train(cfg, a), MissingArtifact);
  CHECK_THROWS_AS(stage_compute_dro(cfg, c), MissingArtifact);
  CHECK_THROWS_AS(stage_report(cfg, c), MissingArtifact);
}

TEST_CASE("robust offset is the pessimistic certificate vertex") {
  const auto cfg = tiny_config();
  const auto dir = test::scratch_dir("pipeline_offset");
  stage_simulate_data(cfg, dir);
  stage_fit_pca(cfg, dir);
  stage_train(cfg, dir);
  stage_compute_dro(cfg, dir);
  const auto art = load_controller_artifacts(cfg, dir, true);
  const auto cert = dro::load_certificate(dir / kCertificate);
  CHECK(art.offset == cert.vertices.maxCoeff());
  CHECK(art.offset > cert.mean(0));
  CHECK(art.bundle.q == art.reducer.q());

  const auto r = run_variant(cfg, art, Variant::Robust, 5);
  const auto s = run_variant(cfg, art, Variant::Robust, 5);
  REQUIRE(r.steps.size() == s.steps.size());
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    CHECK(r.steps[i].current == s.steps[i].current);
    CHECK(r.steps[i].feasible == (r.steps[i].predicted_eta_s - art.offset >= 0.0));
  }
}

TEST_CASE("CLI exit codes") {
  const auto dir = test::scratch_dir("cli");
  const std::string cfg = "--config " + (test::config_dir() / "experiment_default.json").string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli(cfg + " --out " + dir.string() + " bogus-verb") == 2);
  CHECK(run_cli("--config " + (dir / "absent.json").string() + " --out " + dir.string() + " fit-pca") == 3);
  {
    std::ofstream(dir / "bad.json") << R"({"table": {"eta": 2.0}})";
  }
  CHECK(run_cli("--config " + (dir / "bad.json").string() + " --out " + dir.string() + " simulate-data") == 2);
  CHECK(run_cli(cfg + " --out " + dir.string() + " train") == 3);
  CHECK(run_cli(cfg + " --out " + dir.string() + " run-control --variant sideways") == 2);
  CHECK(run_cli(cfg + " --out " + (dir / "cccv").string() + " run-control --variant cccv") == 0);
  CHECK(fs::exists(dir / "cccv/control/cccv/steps.csv"));
}

TEST_CASE("temperature surrogate is trained and stacked only when enabled") {
  auto cfg = tiny_config();
  cfg.temperature_net = true;
  cfg.max_temperature = 300.0;
  const auto dir = test::scratch_dir("pipeline_temperature");
  stage_simulate_data(cfg, dir);
  stage_fit_pca(cfg, dir);
  stage_train(cfg, dir);
  stage_compute_dro(cfg, dir);
  CHECK(fs::exists(dir / kTemperatureNet));
  const auto art = load_controller_artifacts(cfg, dir, true);
  REQUIRE(art.bundle.temperature.has_value());
  CHECK(art.bundle.constraint_rows() == 2 * art.bundle.window());
  const auto r = run_variant(cfg, art, Variant::Robust, 1);
  CHECK(!r.steps.empty());
  for (const auto& s : r.steps)
    if (s.feasible) CHECK(s.predicted_eta_s - art.offset >= 0.0);

  cfg.temperature_net = false;
  const auto off = test::scratch_dir("pipeline_temperature_off");
  stage_simulate_data(cfg, off);
  stage_fit_pca(cfg, off);
  stage_train(cfg, off);
  CHECK(!fs::exists(off / kTemperatureNet));
}
