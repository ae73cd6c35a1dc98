#include "drsc/datagen/episodes.hpp"

#include "drsc/common/csv.hpp"
#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "drsc/common/json_io.hpp"
#include "drsc/plant/spm.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace drsc::datagen {

int EpisodeConfig::max_steps() const { return static_cast<int>(std::floor(episode_length / dt + 1e-9)); }

void EpisodeConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("episode dt must be positive");
  if (!(episode_length >= dt)) throw ConfigError("episode length must cover at least one step");
  if (!(max_current >= 0.0)) throw ConfigError("max current must be nonnegative");
  if (!(soc_initial >= 0.0 && soc_initial < soc_target && soc_target <= 1.0))
    throw ConfigError("need 0 <= initial SOC < target SOC <= 1");
  if (!(ambient > 0.0)) throw ConfigError("ambient temperature must be positive");
  if (min_hold < 1 || max_hold < min_hold) throw ConfigError("hold range must satisfy 1 <= min <= max");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::TargetReached: return "target-reached";
    case Termination::TimeLimit: return "time-limit";
    case Termination::PlantError: return "plant-error";
  }
  return "unknown";
}

Termination termination_from_string(const std::string& s) {
  if (s == "target-reached") return Termination::TargetReached;
  if (s == "time-limit") return Termination::TimeLimit;
  if (s == "plant-error") return Termination::PlantError;
  throw ConfigError("unknown termination '" + s + "'");
}

EpisodeLog run_random_episode(std::uint64_t seed, const plant::PlantParams& params, const EpisodeConfig& config) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level_dist(0.0, config.max_current);
  std::uniform_int_distribution<int> hold_dist(config.min_hold, config.max_hold);

  EpisodeLog log;
  log.seed = seed;
  const int steps = config.max_steps();
  std::vector<Eigen::VectorXd> states;
  auto state = plant::initial_state(params, config.soc_initial, config.ambient);
  double level = 0.0;
  int remaining = 0;

  log.termination = Termination::TimeLimit;
  for (int k = 0; k < steps; ++k) {
    if (remaining == 0) {
      level = config.max_current > 0.0 ? level_dist(rng) : 0.0;
      remaining = hold_dist(rng);
    }
    --remaining;

    plant::PlantOutputs out;
    plant::PlantState next;
    try {
      out = plant::observe(state, level, params);
      next = plant::step_spm(state, level, config.dt, params);
    } catch (const NumericalError& e) {
      log.termination = Termination::PlantError;
      log.error = e.what();
      break;
    }
    log.time.push_back(k * config.dt);
    log.current.push_back(level);
    log.soc.push_back(out.soc);
    log.voltage.push_back(out.voltage);
    log.eta_s.push_back(out.eta_s);
    log.temperature.push_back(out.temperature);
    log.soc_next.push_back(plant::bulk_soc(next, params));
    log.temperature_next.push_back(next.temperature);
    states.push_back(state.flatten());
    state = std::move(next);
    if (log.soc_next.back() >= config.soc_target) {
      log.termination = Termination::TargetReached;
      break;
    }
  }

  log.states.resize(static_cast<Eigen::Index>(states.size()), params.state_dimension());
  for (std::size_t i = 0; i < states.size(); ++i) log.states.row(static_cast<Eigen::Index>(i)) = states[i].transpose();
  return log;
}

std::vector<EpisodeLog> run_random_episodes(std::uint64_t master_seed, int count, const plant::PlantParams& params,
                                            const EpisodeConfig& config, unsigned threads) {
  if (count < 1) throw ConfigError("episode count must be positive");
  config.validate();
  std::vector<EpisodeLog> out(static_cast<std::size_t>(count));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(count));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[static_cast<std::size_t>(i)] = run_random_episode(master_seed + static_cast<std::uint64_t>(i), params, config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Eigen::MatrixXd stack_states(const std::vector<EpisodeLog>& episodes) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& e : episodes) {
    rows += e.size();
    if (e.size() > 0) cols = e.states.cols();
  }
  Eigen::MatrixXd all(rows, cols);
  Eigen::Index at = 0;
  for (const auto& e : episodes) {
    if (e.size() == 0) continue;
    if (e.states.cols() != cols) throw DimensionMismatch("episodes disagree on state dimension");
    all.middleRows(at, e.size()) = e.states;
    at += e.size();
  }
  return all;
}

namespace {

const std::vector<std::string> kScalarColumns = {"time",        "current",          "soc",     "voltage", "eta_s",
                                                 "temperature", "soc_next", "temperature_next"};

std::string episode_file(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "episode_%04zu.csv", i);
  return buf;
}

}  // namespace

void save_episodes(const std::filesystem::path& dir, const std::vector<EpisodeLog>& episodes,
                   std::uint64_t master_seed, const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  Json list = Json::array();
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    csv::Table t;
    t.columns = kScalarColumns;
    for (Eigen::Index c = 0; c < e.states.cols(); ++c) t.columns.push_back("x" + std::to_string(c));
    t.values.resize(e.size(), static_cast<Eigen::Index>(t.columns.size()));
    for (Eigen::Index r = 0; r < e.size(); ++r) {
      const auto k = static_cast<std::size_t>(r);
      t.values.row(r).head(8) << e.time[k], e.current[k], e.soc[k], e.voltage[k], e.eta_s[k], e.temperature[k],
          e.soc_next[k], e.temperature_next[k];
      t.values.row(r).tail(e.states.cols()) = e.states.row(r);
    }
    const auto file = episode_file(i);
    csv::write(dir / file, t);
    list.push_back({{"file", file},
                    {"seed", e.seed},
                    {"records", e.size()},
                    {"state_dimension", e.states.cols()},
                    {"termination", to_string(e.termination)},
                    {"error", e.error},
                    {"sha256", sha256_file(dir / file)}});
  }
  write_json(dir / "manifest.json", {{"format", "drsc-episodes"},
                                     {"version", 1},
                                     {"master_seed", master_seed},
                                     {"config_sha256", config_hash},
                                     {"count", episodes.size()},
                                     {"episodes", list}});
}

std::vector<EpisodeLog> load_episodes(const std::filesystem::path& dir) {
  const Json manifest = read_json(dir / "manifest.json");
  if (required<std::string>(manifest, "format") != "drsc-episodes" || required<int>(manifest, "version") != 1)
    throw ConfigError("unsupported episode manifest in " + dir.string());
  std::vector<EpisodeLog> out;
  for (const auto& entry : required<Json>(manifest, "episodes")) {
    const auto path = dir / required<std::string>(entry, "file");
    if (!std::filesystem::exists(path)) throw MissingArtifact(path.string());
    if (sha256_file(path) != required<std::string>(entry, "sha256")) throw StaleArtifact(path.string());
    const auto t = csv::read(path);
    const auto n = required<Eigen::Index>(entry, "state_dimension");
    if (t.values.cols() != 8 + n) throw DimensionMismatch("episode file has the wrong column count: " + path.string());

    EpisodeLog e;
    e.seed = required<std::uint64_t>(entry, "seed");
    e.termination = termination_from_string(required<std::string>(entry, "termination"));
    e.error = required<std::string>(entry, "error");
    const auto col = [&](int c) {
      const Eigen::VectorXd v = t.values.col(c);
      return std::vector<double>(v.data(), v.data() + v.size());
    };
    e.time = col(0);
    e.current = col(1);
    e.soc = col(2);
    e.voltage = col(3);
    e.eta_s = col(4);
    e.temperature = col(5);
    e.soc_next = col(6);
    e.temperature_next = col(7);
    e.states = t.values.rightCols(n);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace drsc::datagen
