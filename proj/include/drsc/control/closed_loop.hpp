#pragma once

#include "drsc/control/solvers.hpp"
#include "drsc/plant/spm.hpp"
#include "drsc/reduction/reducer.hpp"
#include "drsc/surrogate/bundle.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace drsc::control {

/// Surrogate cost and constraint at a fixed reduced state.
class SurrogateHorizon final : public HorizonModel {
 public:
  SurrogateHorizon(const surrogate::SurrogateBundle& bundle, Eigen::VectorXd reduced);
  [[nodiscard]] int window() const override { return bundle_->window(); }
  void evaluate_batch(const Eigen::Ref<const Eigen::MatrixXd>& controls, Eigen::VectorXd& j,
                      Eigen::MatrixXd& g) const override;
  void evaluate_gradient(const Eigen::Ref<const Eigen::VectorXd>& controls, double& j, Eigen::VectorXd& g,
                         Eigen::VectorXd& dj, Eigen::MatrixXd& dg) const override;

 private:
  const surrogate::SurrogateBundle* bundle_;
  Eigen::VectorXd reduced_;
};

enum class SolverKind { Es, Grad };
std::string to_string(SolverKind s);
SolverKind solver_kind_from_string(const std::string& s);

struct RhcConfig {
  SolverKind solver = SolverKind::Es;
  EsConfig es;
  GradConfig grad;
  double u_min = 0.0;
  double u_max = 2.5;
  double offset = 0.0;  // r; zero for the non-robust controller
  std::uint64_t seed = 0;
};

struct RhcDecision {
  double current = 0.0;
  SolveResult solve;
  Eigen::VectorXd reduced;
  double seconds = 0.0;
};

/// One receding-horizon decision: reduce the state, solve the window problem warm-started
/// from the shifted previous plan, and apply the first input. The ES stream for step k is
/// derived from (seed, k).
RhcDecision rhc_step(const plant::PlantState& state, const surrogate::SurrogateBundle& bundle,
                     const reduction::StateReducer& reducer, const RhcConfig& config,
                     const Eigen::VectorXd& previous_plan, int step);

/// Largest current in [0, i_max] whose terminal voltage stays at or below v_cutoff,
/// found by bisection to `tolerance` volts.
double cccv_current(const plant::PlantState& state, const plant::PlantParams& params, double i_max,
                    double v_cutoff = 4.2, double tolerance = 1e-3);

struct ClosedLoopConfig {
  double dt = 15.0;
  double length = 3300.0;
  double soc_initial = 0.0286;
  double soc_target = 0.7;
  double ambient = 281.0;

  [[nodiscard]] int max_steps() const;
  void validate() const;
};

struct PolicyDecision {
  double current = 0.0;
  double predicted_eta_s = std::numeric_limits<double>::quiet_NaN();  // min_k G_k, if the policy predicts
  double objective = std::numeric_limits<double>::quiet_NaN();
  bool feasible = true;
  double seconds = 0.0;
};

/// Maps (state, step index) to the current applied over the next step.
using Policy = std::function<PolicyDecision(const plant::PlantState&, int)>;

struct StepRecord {
  double time = 0.0;
  double current = 0.0;
  double soc = 0.0;
  double voltage = 0.0;
  double eta_s = 0.0;  // realized under the applied current
  double temperature = 0.0;
  double soc_next = 0.0;
  double predicted_eta_s = 0.0;
  double objective = 0.0;
  bool feasible = true;
  double seconds = 0.0;  // wall time of the decision, volatile
};

struct ClosedLoopResult {
  std::string variant;
  std::string termination;  // target-reached | time-limit | plant-error
  std::string error;
  std::vector<StepRecord> steps;
  double charge_time_s = std::numeric_limits<double>::quiet_NaN();  // NaN when the target was not reached
  int violations = 0;        // steps with realized eta_s < 0
  double max_violation = 0.0;  // max(0, -min eta_s) [V]
  double mean_step_seconds = 0.0;
};

ClosedLoopResult run_closed_loop(const plant::PlantParams& params, const ClosedLoopConfig& config, const Policy& policy,
                                 const std::string& variant);

/// Receding-horizon policy over the surrogate bundle.
Policy make_rhc_policy(const surrogate::SurrogateBundle& bundle, const reduction::StateReducer& reducer,
                       const RhcConfig& config);
Policy make_cccv_policy(const plant::PlantParams& params, double i_max, double v_cutoff = 4.2);

/// steps.csv and summary.json are deterministic; timing.json holds wall-clock data.
void save_closed_loop(const std::filesystem::path& dir, const ClosedLoopResult& result);
ClosedLoopResult load_closed_loop_summary(const std::filesystem::path& dir);

struct SolverStats {
  std::string solver;
  double mean_objective = 0.0;
  double feasible_fraction = 0.0;
  double mean_seconds = 0.0;
  double mean_evaluations = 0.0;
};

/// Solves the same window problems with both solvers.
std::vector<SolverStats> compare_solvers(const std::vector<plant::PlantState>& states,
                                         const surrogate::SurrogateBundle& bundle,
                                         const reduction::StateReducer& reducer, const RhcConfig& config);

}  // namespace drsc::control
