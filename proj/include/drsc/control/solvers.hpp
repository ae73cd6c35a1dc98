#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace drsc::control {

/// Horizon cost J(U) and constraint predictions G(U) over one control window.
/// The robust constraint is min_k (G_k(U) - r) >= 0.
class HorizonModel {
 public:
  virtual ~HorizonModel() = default;
  [[nodiscard]] virtual int window() const = 0;
  /// `controls` is window x B; fills J (B) and G (constraints x B).
  virtual void evaluate_batch(const Eigen::Ref<const Eigen::MatrixXd>& controls, Eigen::VectorXd& j,
                              Eigen::MatrixXd& g) const = 0;
  /// J, G and their derivatives with respect to U (dG is constraints x window).
  virtual void evaluate_gradient(const Eigen::Ref<const Eigen::VectorXd>& controls, double& j, Eigen::VectorXd& g,
                                 Eigen::VectorXd& dj, Eigen::MatrixXd& dg) const = 0;
};

struct HorizonProblem {
  const HorizonModel* model = nullptr;
  double u_min = 0.0;
  double u_max = 2.5;
  double offset = 0.0;         // r, subtracted from every constraint prediction
  Eigen::VectorXd warm_start;  // empty: start from mid-range

  void validate() const;
};

enum class RankingRule { FeasibilityFirst, Penalty };

struct EsConfig {
  int population = 512;
  int iterations = 12;
  double mutation_scale = 0.15;  // times u_max
  double mutation_decay = 0.97;
  RankingRule ranking = RankingRule::FeasibilityFirst;
  double penalty_weight = 100.0;  // Penalty ranking only
  unsigned threads = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GradConfig {
  int max_iterations = 200;
  double penalty_weight = 100.0;
  double initial_step = 1.0;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 40;
  double tolerance = 1e-8;  // projected-gradient norm at which to stop

  void validate() const;
};

struct SolveResult {
  Eigen::VectorXd controls;
  double objective = 0.0;      // J at the returned controls
  Eigen::VectorXd constraint;  // G at the returned controls
  double violation = 0.0;      // max_k (r - G_k)^+
  bool feasible = false;       // violation == 0
  int evaluations = 0;
  int iterations = 0;
  double gradient_norm = 0.0;          // projected gradient norm at exit (gradient solver)
  std::vector<double> parent_history;  // ES: parent J after each iteration
  std::vector<double> violation_history;  // gradient solver: violation at each accepted iterate
};

/// Largest shortfall of the offset constraint, max_k (r - G_k)^+.
double constraint_violation(const Eigen::Ref<const Eigen::VectorXd>& g, double offset);

/// (1+lambda) evolution strategy with feasibility-first ranking and elitism. Mutant i of
/// iteration t draws from its own RNG stream, so the result is independent of `threads`.
SolveResult solve_es(const HorizonProblem& problem, const EsConfig& config);

/// Projected gradient descent on J + rho sum_k (r - G_k)^+ with backtracking. A step is
/// accepted only if it satisfies the Armijo condition and does not increase the violation.
SolveResult solve_grad(const HorizonProblem& problem, const GradConfig& config);

/// [a, b, c, d, e] -> [b, c, d, e, e].
Eigen::VectorXd shift_warm_start(const Eigen::Ref<const Eigen::VectorXd>& previous);

}  // namespace drsc::control
