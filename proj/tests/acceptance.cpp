// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "drsc/common/csv.hpp"
#include "drsc/common/hash.hpp"
#include "drsc/common/json_io.hpp"
#include "drsc/dro/certificate.hpp"
#include "drsc/dro/wasserstein.hpp"
#include "drsc/experiment/pipeline.hpp"
#include "drsc/plant/spm.hpp"
#include "drsc/reduction/pca.hpp"
#include "dro_oracle.hpp"
#include "net_oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>

using namespace drsc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void jacobian_check() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = test::random_net({9, 10, 10, 5}, rng);
    Eigen::VectorXd x(9);
    for (Eigen::Index i = 0; i < 9; ++i) x(i) = net.input_mean(i) + u(rng) * net.input_scale(i);
    worst = std::max(worst, test::jacobian_relative_error(surrogate::input_jacobian(net, x), test::fd_jacobian(net, x)));
  }
  const double t = seconds_since(start);
  report("jacobian-fd", worst < 1e-5 && t < 10.0, fmt("max rel err %.3g over 100 nets (< 1e-5), %.2f s (< 10 s)", worst, t));
}

void dro_closed_form_check() {
  const auto start = Clock::now();
  const double tol = 1e-6;
  double worst = 0.0;
  for (const double c : {0.3, 1.0, 2.7}) {
    for (const double eps : {0.01, 0.05, 0.2}) {
      for (const double eta : {0.05, 0.1, 0.3}) {
        Eigen::VectorXd norms = Eigen::VectorXd::Constant(40, c);
        const double sigma_max = 3.0 * c + eps / eta;
        const auto r = dro::compute_sigma(norms, eps, eta, sigma_max, tol);
        worst = std::max(worst, std::abs(r.sigma - (c + eps / eta)));
      }
    }
  }
  const double t = seconds_since(start);
  report("dro-closed-form", worst < 2 * tol && t < 1.0,
         fmt("max |sigma - (c + eps/eta)| = %.3g (< 2e-6) over 27 cases, %.3f s (< 1 s)", worst, t));
}

void dro_oracle_check(std::vector<dro::AmbiguityCertificate>& certificates, std::vector<Eigen::MatrixXd>& residual_sets) {
  const auto start = Clock::now();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> scale(0.001, 0.05), shift(-0.01, 0.01);
  double worst = 0.0;
  for (int set = 0; set < 20; ++set) {
    Eigen::MatrixXd residuals(50, 1);
    const double s = scale(rng), m = shift(rng);
    for (int i = 0; i < 50; ++i) residuals(i, 0) = m + s * (set % 2 ? n01(rng) : std::pow(n01(rng), 3));
    const auto n = dro::normalize(residuals);
    const double eps = dro::radius_concentration(n.theta, 0.9).epsilon;
    const double sigma_max = n.sigma_max + eps / 0.1;
    const auto r = dro::compute_sigma(n.inf_norms, eps, 0.1, sigma_max, 1e-6);
    worst = std::max(worst, std::abs(r.sigma - test::oracle_sigma(n.inf_norms, eps, 0.1, sigma_max)));

    dro::DroConfig cfg;
    cfg.sigma_max_factor = sigma_max / n.inf_norms.maxCoeff();
    certificates.push_back(dro::build_certificate(residuals, cfg));
    residual_sets.push_back(residuals);
  }
  const double t = seconds_since(start);
  report("dro-oracle", worst < 1e-3 && t < 60.0,
         fmt("max |sigma - grid oracle| = %.3g (< 1e-3) over 20 sets of 50, %.2f s (< 60 s)", worst, t));
}

void guarantee_check(const std::vector<dro::AmbiguityCertificate>& certs, const std::vector<Eigen::MatrixXd>& residuals) {
  double worst_fraction = 0.0, worst_eta = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& c = certs[i];
    const Eigen::MatrixXd theta =
        ((residuals[i].rowwise() - c.mean.transpose()) * c.sqrt_cov.inverse().transpose()).eval();
    const Eigen::VectorXd norms = theta.cwiseAbs().rowwise().maxCoeff();
    const double fraction = static_cast<double>((norms.array() > c.sigma).count()) / static_cast<double>(norms.size());
    ok = ok && fraction <= c.eta;
    if (fraction >= worst_fraction) {
      worst_fraction = fraction;
      worst_eta = c.eta;
    }
  }
  report("dro-guarantee", ok,
         fmt("worst held-out exceedance %.4f (<= eta = %.2f) over %zu certificates", worst_fraction, worst_eta, certs.size()));
}

double bisect_overpotential(double flux, double i0, double temperature, const plant::PlantParams& p) {
  const double f = p.faraday / (p.gas_constant * temperature);
  double lo = -3.0, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((i0 / p.faraday) * (std::exp(0.5 * f * mid) - std::exp(-0.5 * f * mid)) < flux ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void plant_check(const plant::PlantParams& p) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> base(0.15, 0.75), wiggle(-0.05, 0.05);
  auto s = plant::initial_state(p, 0.0, 285.0);
  for (int i = 0; i < p.radial_nodes; ++i) {
    s.c_neg(i) = (0.4 + wiggle(rng)) * p.negative.max_concentration;
    s.c_pos(i) = (0.6 + wiggle(rng)) * p.positive.max_concentration;
  }
  double worst_step = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double n0 = plant::particle_lithium(s.c_neg, p.negative.particle_radius);
    const double p0 = plant::particle_lithium(s.c_pos, p.positive.particle_radius);
    s = plant::step_spm(s, 0.0, 15.0, p);
    worst_step = std::max({worst_step, std::abs(plant::particle_lithium(s.c_neg, p.negative.particle_radius) - n0) / n0,
                           std::abs(plant::particle_lithium(s.c_pos, p.positive.particle_radius) - p0) / p0});
  }

  double worst_bv = 0.0;
  auto state = plant::initial_state(p, 0.0286, 281.0);
  for (int k = 0; k < 60; ++k) {
    for (const double c_rate : {0.1, 1.0, 2.5}) {
      const auto out = plant::observe(state, c_rate, p);
      worst_bv = std::max({worst_bv,
                           std::abs(out.eta_minus - bisect_overpotential(out.flux_neg, out.i0_minus, out.temperature, p)),
                           std::abs(out.eta_plus - bisect_overpotential(out.flux_pos, out.i0_plus, out.temperature, p))});
    }
    state = plant::step_spm(state, 2.5, 15.0, p);
  }
  report("plant-conservation", worst_step < 1e-10 && worst_bv < 1e-9,
         fmt("max per-step lithium drift %.3g (< 1e-10) over 1000 steps, BV inversion residual %.3g V (< 1e-9)",
             worst_step, worst_bv));
}

void pca_check(const experiment::ExperimentConfig& cfg, const fs::path& run) {
  const auto episodes = datagen::load_episodes(run / experiment::kEpisodesDir);
  const Eigen::MatrixXd states = datagen::stack_states(episodes);
  const int radial = static_cast<int>((states.cols() - 1) / 2);
  const auto reducer = reduction::fit_reducer(states, cfg.reducer_options(radial));
  const Eigen::MatrixXd scaled = reducer.scaling.apply_rows(states);
  const double mse = reduction::reconstruction_mse(reducer.basis, scaled);
  const auto& sv = reducer.basis.singular_values;
  const double discarded = sv.tail(sv.size() - reducer.q()).squaredNorm() / static_cast<double>(states.rows());
  const double rel = std::abs(mse - discarded) / discarded;
  report("pca-fidelity", states.rows() >= 101 && rel < 1e-6,
         fmt("q = %ld at %.2f%% (cumulative %.4f%%), n = %ld, |mse - discarded| / discarded = %.3g (< 1e-6)",
             static_cast<long>(reducer.q()), 100.0 * cfg.variance_threshold,
             100.0 * reduction::cumulative_variance(reducer.basis, reducer.q()), static_cast<long>(states.rows()), rel));
}

void closed_loop_checks(const experiment::ExperimentConfig& cfg, const fs::path& run, int seeds) {
  using experiment::Variant;
  const auto start = Clock::now();
  const auto artifacts = experiment::load_controller_artifacts(cfg, run, true);
  const auto cccv = experiment::run_variant(cfg, artifacts, Variant::Cccv, 0);
  std::vector<double> t_robust, t_nonrobust;
  int robust_total = 0, nonrobust_total = 0, strict = 0, dominated = 0, robust_clean = 0, reached = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto seed = stream_seed(cfg.control_seed(), static_cast<std::uint64_t>(s));
    const auto r = experiment::run_variant(cfg, artifacts, Variant::Robust, seed);
    const auto n = experiment::run_variant(cfg, artifacts, Variant::NonRobust, seed);
    robust_total += r.violations;
    nonrobust_total += n.violations;
    strict += r.violations < n.violations;
    dominated += r.violations <= n.violations;
    robust_clean += r.violations == 0;
    reached += std::isfinite(r.charge_time_s) && std::isfinite(n.charge_time_s);
    t_robust.push_back(r.charge_time_s / 60.0);
    t_nonrobust.push_back(n.charge_time_s / 60.0);
  }
  const double t = seconds_since(start);
  const bool safe = dominated == seeds && 2 * strict > seeds && robust_clean == seeds && t < 600.0;
  report("safety-ordering", safe,
         fmt("violation steps robust %d vs non-robust %d over %d seeds; robust <= non-robust in %d, strict in %d, "
             "robust clean in %d; %.1f s (< 600 s)",
             robust_total, nonrobust_total, seeds, dominated, strict, robust_clean, t));

  const double tc = cccv.charge_time_s / 60.0, tn = median(t_nonrobust), tr = median(t_robust);
  const double spread = std::max({tc, tn, tr}) / std::min({tc, tn, tr});
  const bool ordered = reached == seeds && std::isfinite(tc) && tc <= tn && tn <= tr && spread <= 2.0;
  report("charge-time-ordering", ordered,
         fmt("median minutes CCCV %.2f <= non-robust %.2f <= robust %.2f, max/min %.3f (<= 2)", tc, tn, tr, spread));
}

void scaling_check(const fs::path& run) {
  const auto s = read_json(run / experiment::kScalingDir / "scaling.json");
  const double ratio = s.at("ratio").get<double>();
  report("dimensional-scaling", ratio < 2.0 && ratio > 0.5,
         fmt("per-step time %.4f s at N_r = %d vs %.4f s at N_r = %d, ratio %.3f (< 2)",
             s.at("scaled_mean_step_s").get<double>(), s.at("scaled_radial_nodes").get<int>(),
             s.at("base_mean_step_s").get<double>(), s.at("base_radial_nodes").get<int>(), ratio));
}

void determinism_check(const fs::path& a, const fs::path& b) {
  const auto ma = experiment::RunManifest::load(a), mb = experiment::RunManifest::load(b);
  std::size_t hashes = 0, equal = 0;
  for (const auto& [stage, rec] : ma.stages()) {
    for (const auto& [path, sha] : rec.outputs) {
      ++hashes;
      if (mb.has(stage) && mb.stage(stage).outputs.count(path) && mb.stage(stage).outputs.at(path) == sha) ++equal;
    }
  }
  const bool same_file = slurp(a / "manifest.json") == slurp(b / "manifest.json");
  report("run-all-determinism", same_file && hashes > 0 && equal == hashes && ma.stages().size() == mb.stages().size(),
         fmt("%zu/%zu output hashes identical across two run-all invocations, manifest bytes %s", equal, hashes,
             same_file ? "identical" : "differ"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string config_path = std::string(DRSC_CONFIG_DIR) + "/experiment_default.json";
  std::string work = (fs::temp_directory_path() / "drsc_acceptance").string();
  int seeds = 20;
  app.add_option("--config", config_path)->capture_default_str();
  app.add_option("--work", work, "Scratch directory for the two pipeline runs")->capture_default_str();
  app.add_option("--seeds", seeds, "Closed-loop seeds")->check(CLI::Range(20, 1000))->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    jacobian_check();
    dro_closed_form_check();
    std::vector<dro::AmbiguityCertificate> certificates;
    std::vector<Eigen::MatrixXd> residual_sets;
    dro_oracle_check(certificates, residual_sets);

    const auto cfg = experiment::load_config(config_path);
    plant_check(cfg.plant());

    const fs::path run_a = fs::path(work) / "run_a", run_b = fs::path(work) / "run_b";
    fs::remove_all(work);
    auto start = Clock::now();
    experiment::run_all(cfg, run_a, true);
    std::printf("      (run-all #1 finished in %.1f s)\n", seconds_since(start));
    start = Clock::now();
    experiment::run_all(cfg, run_b, true);
    std::printf("      (run-all #2 finished in %.1f s)\n", seconds_since(start));

    for (const fs::path dir : {run_a, run_a / experiment::kScalingDir}) {
      certificates.push_back(dro::load_certificate(dir / experiment::kCertificate));
      const auto table = csv::read(dir / experiment::kResidualsTest);
      residual_sets.push_back(Eigen::Map<const Eigen::VectorXd>(table.values.data(), table.values.size()));
    }
    guarantee_check(certificates, residual_sets);
    pca_check(cfg, run_a);
    closed_loop_checks(cfg, run_a, seeds);
    scaling_check(run_a);
    determinism_check(run_a, run_b);
  } catch (const std::exception& e) {
    std::printf("FAIL  %-28s %s\n", "uncaught-error", e.what());
    return 1;
  }
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
