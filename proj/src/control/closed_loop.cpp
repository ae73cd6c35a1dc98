#include "drsc/control/closed_loop.hpp"

#include "drsc/common/csv.hpp"
#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "drsc/common/json_io.hpp"

#include <chrono>
#include <cmath>
#include <memory>

namespace drsc::control {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

SurrogateHorizon::SurrogateHorizon(const surrogate::SurrogateBundle& bundle, Eigen::VectorXd reduced)
    : bundle_(&bundle), reduced_(std::move(reduced)) {
  bundle.validate();
  if (reduced_.size() != bundle.q) throw DimensionMismatch("reduced state length differs from the surrogate q");
}

void SurrogateHorizon::evaluate_batch(const Eigen::Ref<const Eigen::MatrixXd>& controls, Eigen::VectorXd& j,
                                      Eigen::MatrixXd& g) const {
  bundle_->evaluate_batch(reduced_, controls, j, g);
}

void SurrogateHorizon::evaluate_gradient(const Eigen::Ref<const Eigen::VectorXd>& controls, double& j,
                                         Eigen::VectorXd& g, Eigen::VectorXd& dj, Eigen::MatrixXd& dg) const {
  auto e = bundle_->evaluate(reduced_, controls, true);
  j = e.j;
  g = std::move(e.g);
  dj = std::move(e.dj_du);
  dg = std::move(e.dg_du);
}

std::string to_string(SolverKind s) { return s == SolverKind::Es ? "es" : "grad"; }

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "es") return SolverKind::Es;
  if (s == "grad") return SolverKind::Grad;
  throw ConfigError("unknown solver '" + s + "' (expected es or grad)");
}

RhcDecision rhc_step(const plant::PlantState& state, const surrogate::SurrogateBundle& bundle,
                     const reduction::StateReducer& reducer, const RhcConfig& config,
                     const Eigen::VectorXd& previous_plan, int step) {
  const auto start = Clock::now();
  RhcDecision d;
  d.reduced = reducer.reduce(state.flatten());
  const SurrogateHorizon model(bundle, d.reduced);
  HorizonProblem problem;
  problem.model = &model;
  problem.u_min = config.u_min;
  problem.u_max = config.u_max;
  problem.offset = config.offset;
  if (previous_plan.size() == model.window()) problem.warm_start = shift_warm_start(previous_plan);

  if (config.solver == SolverKind::Es) {
    EsConfig es = config.es;
    es.seed = stream_seed(config.seed, static_cast<std::uint64_t>(step));
    d.solve = solve_es(problem, es);
  } else {
    d.solve = solve_grad(problem, config.grad);
  }
  d.current = d.solve.controls(0);
  d.seconds = seconds_since(start);
  return d;
}

double cccv_current(const plant::PlantState& state, const plant::PlantParams& params, double i_max, double v_cutoff,
                    double tolerance) {
  if (!(i_max >= 0.0) || !(tolerance > 0.0)) throw ConfigError("CCCV needs i_max >= 0 and a positive tolerance");
  const auto voltage = [&](double i) { return plant::observe(state, i, params).voltage; };
  if (voltage(i_max) <= v_cutoff) return i_max;
  double lo = 0.0, hi = i_max;
  if (voltage(lo) >= v_cutoff) return 0.0;
  // Voltage rises with charging current; stop once the bracket pins V within tolerance.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = voltage(mid);
    if (std::abs(v - v_cutoff) <= 0.25 * tolerance) return mid;
    (v < v_cutoff ? lo : hi) = mid;
  }
  return lo;
}

int ClosedLoopConfig::max_steps() const { return static_cast<int>(std::floor(length / dt + 1e-9)); }

void ClosedLoopConfig::validate() const {
  if (!(dt > 0.0) || !(length >= dt)) throw ConfigError("closed loop needs dt > 0 and length >= dt");
  if (!(soc_initial >= 0.0 && soc_initial < soc_target && soc_target <= 1.0))
    throw ConfigError("need 0 <= initial SOC < target SOC <= 1");
  if (!(ambient > 0.0)) throw ConfigError("ambient temperature must be positive");
}

ClosedLoopResult run_closed_loop(const plant::PlantParams& params, const ClosedLoopConfig& config, const Policy& policy,
                                 const std::string& variant) {
  config.validate();
  ClosedLoopResult result;
  result.variant = variant;
  result.termination = "time-limit";
  auto state = plant::initial_state(params, config.soc_initial, config.ambient);
  double min_eta = std::numeric_limits<double>::infinity();
  double total_seconds = 0.0;

  for (int k = 0; k < config.max_steps(); ++k) {
    const PolicyDecision d = policy(state, k);
    StepRecord rec;
    try {
      const auto out = plant::observe(state, d.current, params);
      auto next = plant::step_spm(state, d.current, config.dt, params);
      rec.time = k * config.dt;
      rec.current = d.current;
      rec.soc = out.soc;
      rec.voltage = out.voltage;
      rec.eta_s = out.eta_s;
      rec.temperature = out.temperature;
      rec.soc_next = plant::bulk_soc(next, params);
      state = std::move(next);
    } catch (const NumericalError& e) {
      result.termination = "plant-error";
      result.error = e.what();
      break;
    }
    rec.predicted_eta_s = d.predicted_eta_s;
    rec.objective = d.objective;
    rec.feasible = d.feasible;
    rec.seconds = d.seconds;
    total_seconds += d.seconds;
    if (rec.eta_s < 0.0) ++result.violations;
    min_eta = std::min(min_eta, rec.eta_s);
    result.steps.push_back(rec);
    if (rec.soc_next >= config.soc_target) {
      result.termination = "target-reached";
      result.charge_time_s = (k + 1) * config.dt;
      break;
    }
  }
  result.max_violation = std::isfinite(min_eta) ? std::max(0.0, -min_eta) : 0.0;
  if (!result.steps.empty()) result.mean_step_seconds = total_seconds / static_cast<double>(result.steps.size());
  return result;
}

Policy make_rhc_policy(const surrogate::SurrogateBundle& bundle, const reduction::StateReducer& reducer,
                       const RhcConfig& config) {
  bundle.validate();
  if (reducer.q() != bundle.q) throw DimensionMismatch("reducer q differs from the surrogate q");
  auto plan = std::make_shared<Eigen::VectorXd>();
  return [&bundle, &reducer, config, plan](const plant::PlantState& state, int step) {
    const auto d = rhc_step(state, bundle, reducer, config, *plan, step);
    *plan = d.solve.controls;
    PolicyDecision out;
    out.current = d.current;
    out.predicted_eta_s = d.solve.constraint.head(bundle.window()).minCoeff();
    out.objective = d.solve.objective;
    out.feasible = d.solve.feasible;
    out.seconds = d.seconds;
    return out;
  };
}

Policy make_cccv_policy(const plant::PlantParams& params, double i_max, double v_cutoff) {
  return [&params, i_max, v_cutoff](const plant::PlantState& state, int) {
    const auto start = Clock::now();
    PolicyDecision out;
    out.current = cccv_current(state, params, i_max, v_cutoff);
    out.seconds = seconds_since(start);
    return out;
  };
}

void save_closed_loop(const std::filesystem::path& dir, const ClosedLoopResult& result) {
  std::filesystem::create_directories(dir);
  csv::Table t;
  t.columns = {"time_s", "current_C", "soc", "voltage_V", "eta_s_V", "temperature_K", "soc_next",
               "predicted_eta_s_V", "objective", "feasible"};
  t.values.resize(static_cast<Eigen::Index>(result.steps.size()), static_cast<Eigen::Index>(t.columns.size()));
  Json timing = Json::array();
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const auto& s = result.steps[i];
    t.values.row(static_cast<Eigen::Index>(i)) << s.time, s.current, s.soc, s.voltage, s.eta_s, s.temperature,
        s.soc_next, s.predicted_eta_s, s.objective, s.feasible ? 1.0 : 0.0;
    timing.push_back(s.seconds);
  }
  csv::write(dir / "steps.csv", t);

  Json summary;
  summary["format"] = "drsc-closed-loop";
  summary["version"] = 1;
  summary["variant"] = result.variant;
  summary["termination"] = result.termination;
  summary["error"] = result.error;
  summary["steps"] = result.steps.size();
  summary["charge_time_min"] = std::isfinite(result.charge_time_s) ? Json(result.charge_time_s / 60.0) : Json(nullptr);
  summary["violations"] = result.violations;
  summary["max_violation_V"] = result.max_violation;
  summary["steps_sha256"] = sha256_file(dir / "steps.csv");
  write_json(dir / "summary.json", summary);

  Json vol;
  vol["mean_step_s"] = result.mean_step_seconds;
  vol["step_s"] = std::move(timing);
  write_json(dir / "timing.json", vol);
}

ClosedLoopResult load_closed_loop_summary(const std::filesystem::path& dir) {
  const Json s = read_json(dir / "summary.json");
  if (s.value("format", "") != "drsc-closed-loop") throw ConfigError("not a closed-loop summary: " + dir.string());
  if (sha256_file(dir / "steps.csv") != required<std::string>(s, "steps_sha256"))
    throw StaleArtifact((dir / "steps.csv").string());
  ClosedLoopResult r;
  r.variant = required<std::string>(s, "variant");
  r.termination = required<std::string>(s, "termination");
  r.error = s.value("error", "");
  r.violations = required<int>(s, "violations");
  r.max_violation = required<double>(s, "max_violation_V");
  if (!s.at("charge_time_min").is_null()) r.charge_time_s = 60.0 * s.at("charge_time_min").get<double>();
  if (std::filesystem::exists(dir / "timing.json"))
    r.mean_step_seconds = read_json(dir / "timing.json").value("mean_step_s", 0.0);
  return r;
}

std::vector<SolverStats> compare_solvers(const std::vector<plant::PlantState>& states,
                                         const surrogate::SurrogateBundle& bundle,
                                         const reduction::StateReducer& reducer, const RhcConfig& config) {
  if (states.empty()) throw ConfigError("solver comparison needs at least one state");
  std::vector<SolverStats> out;
  for (const SolverKind kind : {SolverKind::Es, SolverKind::Grad}) {
    RhcConfig cfg = config;
    cfg.solver = kind;
    SolverStats s;
    s.solver = to_string(kind);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto d = rhc_step(states[i], bundle, reducer, cfg, Eigen::VectorXd(), static_cast<int>(i));
      s.mean_objective += d.solve.objective;
      s.feasible_fraction += d.solve.feasible ? 1.0 : 0.0;
      s.mean_seconds += d.seconds;
      s.mean_evaluations += d.solve.evaluations;
    }
    const double n = static_cast<double>(states.size());
    s.mean_objective /= n;
    s.feasible_fraction /= n;
    s.mean_seconds /= n;
    s.mean_evaluations /= n;
    out.push_back(s);
  }
  return out;
}

}  // namespace drsc::control
