#include "drsc/control/solvers.hpp"

#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace drsc::control {

void HorizonProblem::validate() const {
  if (model == nullptr) throw ConfigError("horizon problem has no model");
  if (model->window() < 2) throw ConfigError("horizon N must be at least 1");
  if (!std::isfinite(u_min) || !std::isfinite(u_max) || u_min > u_max || u_min < 0.0)
    throw ConfigError("input bounds must be finite with 0 <= u_min <= u_max");
  if (!std::isfinite(offset)) throw ConfigError("robust offset must be finite");
  if (warm_start.size() != 0 && warm_start.size() != model->window())
    throw DimensionMismatch("warm start length differs from the window");
}

void EsConfig::validate() const {
  if (population < 1 || iterations < 1) throw ConfigError("ES population and iterations must be >= 1");
  if (!(mutation_scale > 0.0) || !(mutation_decay > 0.0)) throw ConfigError("ES mutation scale must be positive");
  if (penalty_weight < 0.0) throw ConfigError("ES penalty weight must be nonnegative");
}

void GradConfig::validate() const {
  if (max_iterations < 1 || max_backtracks < 1) throw ConfigError("gradient iteration limits must be >= 1");
  if (!(initial_step > 0.0) || !(shrink > 0.0 && shrink < 1.0) || !(armijo > 0.0 && armijo < 1.0))
    throw ConfigError("invalid line-search parameters");
  if (penalty_weight < 0.0 || !(tolerance > 0.0)) throw ConfigError("invalid gradient penalty or tolerance");
}

double constraint_violation(const Eigen::Ref<const Eigen::VectorXd>& g, double offset) {
  return g.size() == 0 ? 0.0 : std::max(0.0, offset - g.minCoeff());
}

Eigen::VectorXd shift_warm_start(const Eigen::Ref<const Eigen::VectorXd>& previous) {
  Eigen::VectorXd out(previous.size());
  if (previous.size() == 0) return out;
  out.head(previous.size() - 1) = previous.tail(previous.size() - 1);
  out(previous.size() - 1) = previous(previous.size() - 1);
  return out;
}

namespace {

struct Candidate {
  double j = std::numeric_limits<double>::infinity();
  double violation = std::numeric_limits<double>::infinity();
  Eigen::Index index = -1;
};

bool better(const Candidate& a, const Candidate& b, const EsConfig& cfg) {
  if (cfg.ranking == RankingRule::Penalty)
    return a.j + cfg.penalty_weight * a.violation < b.j + cfg.penalty_weight * b.violation;
  const bool fa = a.violation == 0.0, fb = b.violation == 0.0;
  if (fa != fb) return fa;
  if (fa) return a.j < b.j;
  if (a.violation != b.violation) return a.violation < b.violation;
  return a.j < b.j;
}

Eigen::VectorXd initial_point(const HorizonProblem& p) {
  if (p.warm_start.size() != 0) return p.warm_start.cwiseMax(p.u_min).cwiseMin(p.u_max);
  return Eigen::VectorXd::Constant(p.model->window(), 0.5 * (p.u_min + p.u_max));
}

void fill_result(SolveResult& r, const HorizonProblem& p, const Eigen::VectorXd& u) {
  Eigen::VectorXd j;
  Eigen::MatrixXd g;
  p.model->evaluate_batch(u, j, g);
  r.controls = u;
  r.objective = j(0);
  r.constraint = g.col(0);
  r.violation = constraint_violation(r.constraint, p.offset);
  r.feasible = r.violation == 0.0;
}

}  // namespace

SolveResult solve_es(const HorizonProblem& problem, const EsConfig& config) {
  problem.validate();
  config.validate();
  const int w = problem.model->window();
  const int lambda = config.population;

  SolveResult result;
  Eigen::VectorXd parent = initial_point(problem);
  Eigen::VectorXd j;
  Eigen::MatrixXd g;
  problem.model->evaluate_batch(parent, j, g);
  Candidate parent_score{j(0), constraint_violation(g.col(0), problem.offset), 0};
  result.evaluations = 1;

  Eigen::MatrixXd mutants(w, lambda);
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(lambda)));
  double scale = config.mutation_scale * problem.u_max;

  for (int it = 0; it < config.iterations; ++it) {
    const auto draw = [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        std::mt19937_64 rng(stream_seed(config.seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> n01;
        for (int k = 0; k < w; ++k)
          mutants(k, i) = std::clamp(parent(k) + scale * n01(rng), problem.u_min, problem.u_max);
      }
    };
    std::vector<Eigen::VectorXd> js(threads);
    std::vector<Eigen::MatrixXd> gs(threads);
    const auto chunk = [&](unsigned t) {
      const int begin = static_cast<int>(static_cast<long long>(lambda) * t / threads);
      const int end = static_cast<int>(static_cast<long long>(lambda) * (t + 1) / threads);
      draw(begin, end);
      problem.model->evaluate_batch(mutants.middleCols(begin, end - begin), js[t], gs[t]);
    };
    if (threads == 1) {
      chunk(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(chunk, t);
    }

    Candidate best;
    for (unsigned t = 0; t < threads; ++t) {
      const int begin = static_cast<int>(static_cast<long long>(lambda) * t / threads);
      for (Eigen::Index c = 0; c < js[t].size(); ++c) {
        Candidate cand{js[t](c), constraint_violation(gs[t].col(c), problem.offset), begin + c};
        if (best.index < 0 || better(cand, best, config)) best = cand;
      }
    }
    result.evaluations += lambda;
    if (better(best, parent_score, config)) {
      parent = mutants.col(best.index);
      parent_score = best;
    }
    result.parent_history.push_back(parent_score.j);
    scale *= config.mutation_decay;
    ++result.iterations;
  }

  fill_result(result, problem, parent);
  return result;
}

SolveResult solve_grad(const HorizonProblem& problem, const GradConfig& config) {
  problem.validate();
  config.validate();
  const double rho = config.penalty_weight;
  const double r = problem.offset;

  struct Point {
    Eigen::VectorXd u;
    double j = 0.0;
    Eigen::VectorXd g;
    double merit = 0.0;
    double violation = 0.0;
  };
  SolveResult result;
  const auto evaluate = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd j;
    Eigen::MatrixXd g;
    problem.model->evaluate_batch(u, j, g);
    ++result.evaluations;
    Point p{u, j(0), g.col(0), 0.0, constraint_violation(g.col(0), r)};
    p.merit = p.j + rho * (r - p.g.array()).max(0.0).sum();
    return p;
  };
  const auto project = [&](const Eigen::VectorXd& u) { return Eigen::VectorXd(u.cwiseMax(problem.u_min).cwiseMin(problem.u_max)); };

  Point x = evaluate(initial_point(problem));
  Point best_feasible, best_penalized = x;
  bool have_feasible = x.violation == 0.0;
  if (have_feasible) best_feasible = x;
  result.violation_history.push_back(x.violation);
  double step = config.initial_step;

  for (int it = 0; it < config.max_iterations; ++it) {
    double j = 0.0;
    Eigen::VectorXd g, dj;
    Eigen::MatrixXd dg;
    problem.model->evaluate_gradient(x.u, j, g, dj, dg);
    ++result.evaluations;
    Eigen::VectorXd grad = dj;
    for (Eigen::Index k = 0; k < g.size(); ++k)
      if (r - g(k) > 0.0) grad -= rho * dg.row(k).transpose();
    if (!grad.allFinite()) throw NonFiniteGradient("merit gradient at iteration " + std::to_string(it));

    result.gradient_norm = (x.u - project(x.u - grad)).norm();
    if (result.gradient_norm < config.tolerance) break;

    bool accepted = false;
    for (int bt = 0; bt < config.max_backtracks; ++bt, step *= config.shrink) {
      const Eigen::VectorXd trial_u = project(x.u - step * grad);
      const double decrease = grad.dot(x.u - trial_u);
      if (decrease <= 0.0) continue;
      Point trial = evaluate(trial_u);
      if (trial.merit <= x.merit - config.armijo * decrease && trial.violation <= x.violation) {
        x = std::move(trial);
        accepted = true;
        break;
      }
    }
    ++result.iterations;
    if (!accepted) break;
    result.violation_history.push_back(x.violation);
    if (x.violation == 0.0 && (!have_feasible || x.j < best_feasible.j)) {
      best_feasible = x;
      have_feasible = true;
    }
    if (x.merit < best_penalized.merit) best_penalized = x;
    step = std::min(step * 2.0, config.initial_step * 1e3);
  }

  const int evaluations = result.evaluations;
  fill_result(result, problem, have_feasible ? best_feasible.u : best_penalized.u);
  result.evaluations = evaluations;
  return result;
}

}  // namespace drsc::control
