#include "drsc/experiment/pipeline.hpp"

#include "drsc/common/csv.hpp"
#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "drsc/common/json_io.hpp"
#include "drsc/datagen/episodes.hpp"
#include "drsc/datagen/samples.hpp"
#include "drsc/dro/certificate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace drsc::experiment {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  StageTimer(fs::path run_dir, std::string stage) : run_dir_(std::move(run_dir)), stage_(std::move(stage)) {}
  void finish() const {
    record_wall_time(run_dir_, stage_, std::chrono::duration<double>(Clock::now() - start_).count());
  }

 private:
  fs::path run_dir_;
  std::string stage_;
  Clock::time_point start_ = Clock::now();
};

std::map<std::string, std::string> config_hashes(const ExperimentConfig& c, std::initializer_list<const char*> sections) {
  std::map<std::string, std::string> out;
  for (const char* s : sections) out[s] = section_hash(c, s);
  return out;
}

std::string ocp_fingerprint(const plant::PlantParams& p) {
  std::ostringstream os;
  for (const auto* table : {&p.negative.ocp, &p.positive.ocp}) {
    for (const double x : table->stoichiometry()) os << csv::format_double(x) << ',';
    os << ';';
    for (const double v : table->volts()) os << csv::format_double(v) << ',';
    os << '|';
  }
  return sha256_hex(os.str());
}

void commit(const fs::path& run_dir, const std::string& stage, StageRecord record,
            const std::vector<std::string>& outputs) {
  for (const auto& rel : outputs) record.outputs[rel] = hash_output(run_dir, rel);
  auto manifest = RunManifest::load(run_dir);
  manifest.set(stage, std::move(record));
  manifest.save(run_dir);
}

std::string relative_to(const fs::path& run_dir, const fs::path& p) {
  return fs::relative(p, run_dir).generic_string();
}

csv::Table matrix_table(const Eigen::MatrixXd& m, const std::string& prefix) {
  csv::Table t;
  for (Eigen::Index c = 0; c < m.cols(); ++c) t.columns.push_back(prefix + std::to_string(c));
  t.values = m;
  return t;
}

Json train_report_json(const surrogate::TrainReport<double>& r, const surrogate::Net& net, Eigen::Index train_rows,
                       Eigen::Index test_rows) {
  Json j;
  j["train_rows"] = train_rows;
  j["test_rows"] = test_rows;
  j["parameters"] = net.parameter_count();
  j["train_mse"] = r.train_mse;
  j["validation_mse"] = r.validation_mse;
  j["test_mse"] = r.test_mse;
  j["best_epoch"] = r.best_epoch;
  j["seed"] = r.seed;
  j["epoch_train_loss"] = r.epoch_train_loss;
  j["epoch_validation_loss"] = r.epoch_validation_loss;
  return j;
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Json residual_statistics(const Eigen::MatrixXd& residuals, double offset) {
  std::vector<double> v(residuals.data(), residuals.data() + residuals.size());
  const double n = static_cast<double>(v.size());
  const double mean = residuals.mean();
  const double var = (residuals.array() - mean).square().sum() / n;
  const auto above = std::count_if(v.begin(), v.end(), [&](double x) { return x > offset; });
  return {{"count", v.size()},
          {"mean", mean},
          {"std", std::sqrt(var)},
          {"min", residuals.minCoeff()},
          {"max", residuals.maxCoeff()},
          {"q05", quantile(v, 0.05)},
          {"q50", quantile(v, 0.5)},
          {"q95", quantile(v, 0.95)},
          {"fraction_above_offset", static_cast<double>(above) / n}};
}

Json charge_time_json(double seconds) {
  return std::isfinite(seconds) ? Json(seconds / 60.0) : Json(nullptr);
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Robust: return "robust";
    case Variant::NonRobust: return "nonrobust";
    case Variant::Cccv: return "cccv";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  if (s == "robust") return Variant::Robust;
  if (s == "nonrobust") return Variant::NonRobust;
  if (s == "cccv") return Variant::Cccv;
  throw ConfigError("unknown variant '" + s + "' (expected robust, nonrobust or cccv)");
}

std::string control_dir(Variant v) { return "control/" + to_string(v); }

void stage_simulate_data(const ExperimentConfig& config, const fs::path& run_dir) {
  StageTimer timer(run_dir, "simulate-data");
  const auto params = config.plant();
  const auto episodes = datagen::run_random_episodes(config.episode_seed(), config.episodes, params,
                                                     config.episode_config(), config.datagen_threads);
  const auto dir = run_dir / kEpisodesDir;
  fs::remove_all(dir);
  StageRecord rec;
  rec.config = config_hashes(config, {"plant", "table", "datagen", "seed"});
  std::string combined;
  for (const auto& [k, v] : rec.config) combined += v;
  datagen::save_episodes(dir, episodes, config.episode_seed(), sha256_hex(combined));

  rec.inputs["plant:" + config.plant_path().filename().string()] = sha256_file(config.plant_path());
  rec.inputs["plant:ocp"] = ocp_fingerprint(params);
  std::vector<std::string> outputs;
  for (const auto& entry : fs::directory_iterator(dir)) outputs.push_back(relative_to(run_dir, entry.path()));
  std::sort(outputs.begin(), outputs.end());
  commit(run_dir, "simulate-data", std::move(rec), outputs);
  timer.finish();
}

void stage_fit_pca(const ExperimentConfig& config, const fs::path& run_dir) {
  StageTimer timer(run_dir, "fit-pca");
  const auto manifest = RunManifest::load(run_dir);
  StageRecord rec;
  rec.config = config_hashes(config, {"pca"});
  rec.inputs = manifest.require_all(run_dir, "simulate-data");

  const auto episodes = datagen::load_episodes(run_dir / kEpisodesDir);
  const Eigen::MatrixXd states = datagen::stack_states(episodes);
  const int radial = static_cast<int>((states.cols() - 1) / 2);
  const auto reducer = reduction::fit_reducer(states, config.reducer_options(radial));
  const auto payload = reduction::save_reducer(run_dir / kBasisHeader, reducer);
  if (relative_to(run_dir, payload) != kBasisPayload) throw ConfigError("unexpected basis payload path " + payload.string());

  const auto& ratio = reducer.basis.explained_variance_ratio;
  csv::Table t;
  t.columns = {"component", "explained_variance_ratio", "cumulative", "singular_value", "retained"};
  t.values.resize(ratio.size(), 5);
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < ratio.size(); ++i) {
    cumulative += ratio(i);
    t.values.row(i) << static_cast<double>(i + 1), ratio(i), cumulative, reducer.basis.singular_values(i),
        i < reducer.q() ? 1.0 : 0.0;
  }
  csv::write(run_dir / kExplainedVariance, t);
  commit(run_dir, "fit-pca", std::move(rec), {kBasisHeader, kBasisPayload, kExplainedVariance});
  timer.finish();
}

void stage_train(const ExperimentConfig& config, const fs::path& run_dir) {
  StageTimer timer(run_dir, "train");
  const auto manifest = RunManifest::load(run_dir);
  StageRecord rec;
  rec.config = config_hashes(config, {"samples", "surrogate", "table", "seed"});
  rec.inputs = manifest.require_all(run_dir, "simulate-data");
  rec.inputs[kBasisHeader] = manifest.require(run_dir, "fit-pca", kBasisHeader);
  rec.inputs[kBasisPayload] = manifest.require(run_dir, "fit-pca", kBasisPayload);

  const auto episodes = datagen::load_episodes(run_dir / kEpisodesDir);
  const auto reducer = reduction::load_reducer(run_dir / kBasisHeader);
  const auto samples = datagen::build_samples(episodes, reducer, config.window_config());
  const auto [train, test] = datagen::split(samples, config.train_fraction, config.split_seed());
  datagen::save_samples(run_dir / kTrainSamples, train);
  datagen::save_samples(run_dir / kTestSamples, test);

  const auto cost = surrogate::train<double>(train.inputs, train.labels_j, test.inputs, test.labels_j,
                                             config.train_config(config.training_seed(0)));
  const auto constraint = surrogate::train<double>(train.inputs, train.labels_g, test.inputs, test.labels_g,
                                                   config.train_config(config.training_seed(1)));
  surrogate::save_net(run_dir / kCostNet, cost.net);
  surrogate::save_net(run_dir / kConstraintNet, constraint.net);
  std::vector<std::string> outputs{kTrainSamples, std::string(kTrainSamples) + ".json", kTestSamples,
                                   std::string(kTestSamples) + ".json", kCostNet, kConstraintNet, kTrainReport,
                                   kResidualsTest, kResidualsTrain};
  Json temperature_report;
  if (config.temperature_net) {
    const auto temperature = surrogate::train<double>(train.inputs, train.labels_t, test.inputs, test.labels_t,
                                                      config.train_config(config.training_seed(2)));
    surrogate::save_net(run_dir / kTemperatureNet, temperature.net);
    temperature_report = train_report_json(temperature.report, temperature.net, train.rows(), test.rows());
    outputs.emplace_back(kTemperatureNet);
  }

  const Eigen::MatrixXd train_residuals =
      surrogate::forward_batch(constraint.net, train.inputs.transpose()).transpose() - train.labels_g;
  csv::write(run_dir / kResidualsTest, matrix_table(constraint.report.residuals, "eta_s_"));
  csv::write(run_dir / kResidualsTrain, matrix_table(train_residuals, "eta_s_"));

  Json report;
  report["format"] = "drsc-train-report";
  report["version"] = 1;
  report["q"] = samples.q;
  report["horizon"] = samples.horizon;
  report["samples"] = samples.rows();
  report["cost"] = train_report_json(cost.report, cost.net, train.rows(), test.rows());
  report["constraint"] = train_report_json(constraint.report, constraint.net, train.rows(), test.rows());
  if (config.temperature_net) report["temperature"] = std::move(temperature_report);
  report["config_sha256"] = rec.config;
  write_json(run_dir / kTrainReport, report);

  commit(run_dir, "train", std::move(rec), outputs);
  timer.finish();
}

void stage_compute_dro(const ExperimentConfig& config, const fs::path& run_dir) {
  StageTimer timer(run_dir, "compute-dro");
  const auto manifest = RunManifest::load(run_dir);
  StageRecord rec;
  rec.config = config_hashes(config, {"dro", "table"});
  const auto sha = manifest.require(run_dir, "train", kResidualsTest);
  rec.inputs[kResidualsTest] = sha;

  const auto table = csv::read(run_dir / kResidualsTest);
  const Eigen::VectorXd pooled = Eigen::Map<const Eigen::VectorXd>(table.values.data(), table.values.size());
  const auto cert = dro::build_certificate(pooled, config.dro_config(), sha);
  dro::save_certificate(run_dir / kCertificate, cert);
  commit(run_dir, "compute-dro", std::move(rec), {kCertificate});
  timer.finish();
}

ControllerArtifacts load_controller_artifacts(const ExperimentConfig& config, const fs::path& run_dir,
                                              bool with_certificate) {
  const auto manifest = RunManifest::load(run_dir);
  ControllerArtifacts a;
  a.params = config.plant();
  for (const char* rel : {kBasisHeader, kBasisPayload}) a.inputs[rel] = manifest.require(run_dir, "fit-pca", rel);
  for (const char* rel : {kCostNet, kConstraintNet}) a.inputs[rel] = manifest.require(run_dir, "train", rel);
  a.reducer = reduction::load_reducer(run_dir / kBasisHeader);
  if (a.reducer.dimension() != a.params.state_dimension())
    throw DimensionMismatch("PCA basis dimension differs from the plant state dimension");
  a.bundle.cost = surrogate::load_net(run_dir / kCostNet);
  a.bundle.constraint = surrogate::load_net(run_dir / kConstraintNet);
  a.bundle.q = a.reducer.q();
  a.bundle.horizon = config.horizon;
  if (config.temperature_net) {
    a.inputs[kTemperatureNet] = manifest.require(run_dir, "train", kTemperatureNet);
    a.bundle.temperature = surrogate::load_net(run_dir / kTemperatureNet);
    a.bundle.temperature_limit = config.max_temperature;
  }
  a.bundle.validate();
  if (with_certificate) {
    a.inputs[kCertificate] = manifest.require(run_dir, "compute-dro", kCertificate);
    a.offset = dro::load_certificate(run_dir / kCertificate).offset()(0);
  }
  return a;
}

control::ClosedLoopResult run_variant(const ExperimentConfig& config, const ControllerArtifacts& artifacts,
                                      Variant variant, std::uint64_t es_seed) {
  const auto loop = config.closed_loop_config();
  if (variant == Variant::Cccv)
    return control::run_closed_loop(artifacts.params, loop,
                                     control::make_cccv_policy(artifacts.params, config.max_current, config.v_cutoff),
                                     to_string(variant));
  const double offset = variant == Variant::Robust ? artifacts.offset : 0.0;
  const auto policy = control::make_rhc_policy(artifacts.bundle, artifacts.reducer, config.rhc_config(offset, es_seed));
  return control::run_closed_loop(artifacts.params, loop, policy, to_string(variant));
}

control::ClosedLoopResult stage_run_control(const ExperimentConfig& config, const fs::path& run_dir, Variant variant) {
  const std::string stage = "run-control/" + to_string(variant);
  StageTimer timer(run_dir, stage);
  StageRecord rec;
  rec.config = config_hashes(config, {"control", "table", "plant", "seed"});
  ControllerArtifacts artifacts;
  if (variant == Variant::Cccv) {
    artifacts.params = config.plant();
  } else {
    artifacts = load_controller_artifacts(config, run_dir, variant == Variant::Robust);
    rec.inputs = artifacts.inputs;
  }
  rec.inputs["plant:" + config.plant_path().filename().string()] = sha256_file(config.plant_path());

  auto result = run_variant(config, artifacts, variant, config.control_seed());
  const auto dir = control_dir(variant);
  control::save_closed_loop(run_dir / dir, result);
  rec.volatile_outputs = {dir + "/timing.json"};
  commit(run_dir, stage, std::move(rec), {dir + "/steps.csv", dir + "/summary.json"});
  timer.finish();
  return result;
}

void stage_scaling(const ExperimentConfig& config, const fs::path& run_dir) {
  StageTimer timer(run_dir, "scaling");
  const auto manifest = RunManifest::load(run_dir);
  StageRecord rec;
  rec.config = config_hashes(config, {"scaling"});
  const std::string base_dir = control_dir(Variant::Robust);
  rec.inputs[base_dir + "/summary.json"] = manifest.require(run_dir, "run-control/robust", base_dir + "/summary.json");
  const auto base_timing = read_json(run_dir / base_dir / "timing.json");

  const auto base_params = config.plant();
  ExperimentConfig scaled = config;
  scaled.radial_nodes = base_params.radial_nodes * config.scaling_factor;
  const auto sub = run_dir / kScalingDir;
  fs::remove_all(sub);
  stage_simulate_data(scaled, sub);
  stage_fit_pca(scaled, sub);
  stage_train(scaled, sub);
  stage_compute_dro(scaled, sub);
  const auto result = stage_run_control(scaled, sub, Variant::Robust);

  const auto base_reducer = reduction::load_reducer(run_dir / kBasisHeader);
  const auto scaled_reducer = reduction::load_reducer(sub / kBasisHeader);
  const double base_step = required<double>(base_timing, "mean_step_s");
  Json s;
  s["format"] = "drsc-scaling";
  s["version"] = 1;
  s["base_radial_nodes"] = base_params.radial_nodes;
  s["scaled_radial_nodes"] = scaled.radial_nodes;
  s["base_state_dimension"] = base_params.state_dimension();
  s["scaled_state_dimension"] = 2 * scaled.radial_nodes + 1;
  s["base_q"] = base_reducer.q();
  s["scaled_q"] = scaled_reducer.q();
  s["base_mean_step_s"] = base_step;
  s["scaled_mean_step_s"] = result.mean_step_seconds;
  s["ratio"] = result.mean_step_seconds / base_step;
  s["change_percent"] = 100.0 * (result.mean_step_seconds / base_step - 1.0);
  write_json(sub / "scaling.json", s);

  rec.volatile_outputs = {std::string(kScalingDir) + "/scaling.json"};
  commit(run_dir, "scaling", std::move(rec), {std::string(kScalingDir) + "/manifest.json"});
  timer.finish();
}

void stage_report(const ExperimentConfig& config, const fs::path& run_dir) {
  StageTimer timer(run_dir, "report");
  const auto manifest = RunManifest::load(run_dir);
  StageRecord rec;
  rec.config = config_hashes(config, {"report", "control"});

  const auto residual_sha = manifest.require(run_dir, "train", kResidualsTest);
  rec.inputs[kResidualsTest] = residual_sha;
  rec.inputs[kTrainReport] = manifest.require(run_dir, "train", kTrainReport);
  rec.inputs[kExplainedVariance] = manifest.require(run_dir, "fit-pca", kExplainedVariance);
  rec.inputs[kCertificate] = manifest.require(run_dir, "compute-dro", kCertificate);

  csv::Table table;
  table.columns = {"variant", "charge_time_min", "violations", "max_violation_V", "mean_step_s"};
  std::ostringstream rows;
  rows << "variant,charge_time_min,violations,max_violation_V,mean_step_s\n";
  Json variants = Json::array();
  Json timing;
  for (const Variant v : {Variant::Cccv, Variant::NonRobust, Variant::Robust}) {
    const auto dir = control_dir(v);
    rec.inputs[dir + "/summary.json"] = manifest.require(run_dir, "run-control/" + to_string(v), dir + "/summary.json");
    rec.inputs[dir + "/steps.csv"] = manifest.require(run_dir, "run-control/" + to_string(v), dir + "/steps.csv");
    const auto r = control::load_closed_loop_summary(run_dir / dir);
    const Json summary = read_json(run_dir / dir / "summary.json");
    const auto steps = required<std::size_t>(summary, "steps");
    variants.push_back({{"variant", r.variant},
                        {"termination", r.termination},
                        {"charge_time_min", charge_time_json(r.charge_time_s)},
                        {"steps", steps},
                        {"violations", r.violations},
                        {"violation_fraction", steps ? static_cast<double>(r.violations) / steps : 0.0},
                        {"max_violation_V", r.max_violation}});
    timing[r.variant] = r.mean_step_seconds;
    rows << r.variant << ','
         << (std::isfinite(r.charge_time_s) ? csv::format_double(r.charge_time_s / 60.0) : std::string("nan")) << ','
         << r.violations << ',' << csv::format_double(r.max_violation) << ','
         << csv::format_double(r.mean_step_seconds) << '\n';
  }

  const auto cert = dro::load_certificate(run_dir / kCertificate);
  const auto residuals = csv::read(run_dir / kResidualsTest).values;
  const auto train_report = read_json(run_dir / kTrainReport);
  const auto explained = csv::read(run_dir / kExplainedVariance);
  const auto reducer = reduction::load_reducer(run_dir / kBasisHeader);
  const double offset = cert.offset()(0);

  Json report;
  report["format"] = "drsc-report";
  report["version"] = 1;
  report["variants"] = std::move(variants);
  report["certificate"] = {{"radius_method", dro::to_string(cert.method)},
                           {"fell_back_to_diameter", cert.fell_back_to_diameter},
                           {"radius_constant", cert.radius_constant},
                           {"epsilon", cert.epsilon},
                           {"beta", cert.beta},
                           {"eta", cert.eta},
                           {"sigma", cert.sigma},
                           {"lambda", cert.lambda},
                           {"offset", offset},
                           {"samples", cert.samples}};
  report["residuals"] = residual_statistics(residuals, offset);
  report["pca"] = {{"q", reducer.q()},
                   {"state_dimension", reducer.dimension()},
                   {"samples", reducer.basis.samples},
                   {"cumulative_variance_at_q", explained.column("cumulative")(reducer.q() - 1)},
                   {"variance_threshold", config.variance_threshold}};
  report["surrogate"] = {{"cost_test_mse", train_report.at("cost").at("test_mse")},
                         {"constraint_test_mse", train_report.at("constraint").at("test_mse")},
                         {"train_rows", train_report.at("constraint").at("train_rows")},
                         {"test_rows", train_report.at("constraint").at("test_rows")}};
  report["sources"] = rec.inputs;
  write_json(run_dir / "report/report.json", report);

  {
    fs::create_directories(run_dir / "report");
    std::ofstream out(run_dir / "report/report.csv", std::ios::binary);
    out << rows.str();
  }

  // Solver comparison on states spread over the training episodes.
  const auto episodes = datagen::load_episodes(run_dir / kEpisodesDir);
  const Eigen::MatrixXd states = datagen::stack_states(episodes);
  const auto artifacts = load_controller_artifacts(config, run_dir, true);
  std::vector<plant::PlantState> picks;
  const int count = std::min<int>(config.comparison_states, static_cast<int>(states.rows()));
  for (int i = 0; i < count; ++i) {
    const auto row = static_cast<Eigen::Index>((static_cast<double>(i) + 0.5) * states.rows() / count);
    picks.push_back(plant::PlantState::unflatten(states.row(row).transpose(), artifacts.params.radial_nodes));
  }
  Json comparison = Json::array();
  for (const auto& s : control::compare_solvers(picks, artifacts.bundle, artifacts.reducer,
                                                config.rhc_config(artifacts.offset, config.control_seed())))
    comparison.push_back({{"solver", s.solver},
                          {"mean_objective", s.mean_objective},
                          {"feasible_fraction", s.feasible_fraction},
                          {"mean_step_s", s.mean_seconds},
                          {"mean_evaluations", s.mean_evaluations}});
  write_json(run_dir / "report/solver_comparison.json",
             {{"format", "drsc-solver-comparison"}, {"version", 1}, {"states", count}, {"solvers", comparison}});

  timing["format"] = "drsc-report-timing";
  if (manifest.has("scaling")) {
    manifest.require_all(run_dir, "scaling");
    timing["scaling"] = read_json(run_dir / kScalingDir / "scaling.json");
  }
  write_json(run_dir / "report/timing.json", timing);

  rec.volatile_outputs = {"report/report.csv", "report/solver_comparison.json", "report/timing.json"};
  commit(run_dir, "report", std::move(rec), {"report/report.json"});
  timer.finish();
}

void run_all(const ExperimentConfig& config, const fs::path& run_dir, bool with_scaling) {
  config.validate();
  fs::create_directories(run_dir);
  stage_simulate_data(config, run_dir);
  stage_fit_pca(config, run_dir);
  stage_train(config, run_dir);
  stage_compute_dro(config, run_dir);
  for (const Variant v : {Variant::Cccv, Variant::NonRobust, Variant::Robust}) stage_run_control(config, run_dir, v);
  if (with_scaling) stage_scaling(config, run_dir);
  stage_report(config, run_dir);
}

}  // namespace drsc::experiment
