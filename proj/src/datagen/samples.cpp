#include "drsc/datagen/samples.hpp"

#include "drsc/common/csv.hpp"
#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "drsc/common/json_io.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace drsc::datagen {

SampleSet SampleSet::select(const std::vector<Eigen::Index>& rows, const std::string& new_tag) const {
  SampleSet out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.inputs.resize(n, inputs.cols());
  out.labels_j.resize(n);
  out.labels_g.resize(n, labels_g.cols());
  out.labels_t.resize(n, labels_t.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = rows[static_cast<std::size_t>(i)];
    out.inputs.row(i) = inputs.row(r);
    out.labels_j(i) = labels_j(r);
    out.labels_g.row(i) = labels_g.row(r);
    out.labels_t.row(i) = labels_t.row(r);
    out.episode.push_back(episode[static_cast<std::size_t>(r)]);
    out.step.push_back(step[static_cast<std::size_t>(r)]);
  }
  out.q = q;
  out.horizon = horizon;
  out.dt = dt;
  out.seed = seed;
  out.tag = new_tag;
  return out;
}

double window_cost(const EpisodeLog& episode, Eigen::Index k, int horizon, double soc_target) {
  double cost = 0.0;
  for (Eigen::Index j = k; j <= k + horizon; ++j) {
    const double e = episode.soc_next[static_cast<std::size_t>(j)] - soc_target;
    cost += e * e;
  }
  return cost;
}

SampleSet build_samples(const std::vector<EpisodeLog>& episodes, const reduction::StateReducer& reducer,
                        const WindowConfig& config) {
  if (episodes.empty()) throw ConfigError("build_samples needs at least one episode");
  if (config.horizon < 1 || config.stride < 1) throw ConfigError("horizon and stride must be positive");
  const int w = config.horizon + 1;
  Eigen::Index rows = 0;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto size = episodes[e].size();
    if (size < w)
      throw WindowTooLong("episode " + std::to_string(e) + " has " + std::to_string(size) +
                          " records, fewer than the window of " + std::to_string(w));
    rows += (size - w) / config.stride + 1;
  }

  const auto q = reducer.q();
  SampleSet s;
  s.q = q;
  s.horizon = config.horizon;
  s.dt = config.dt;
  s.inputs.resize(rows, q + w);
  s.labels_j.resize(rows);
  s.labels_g.resize(rows, w);
  s.labels_t.resize(rows, w);

  Eigen::Index r = 0;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    const Eigen::MatrixXd reduced = reducer.reduce_rows(ep.states);
    for (Eigen::Index k = 0; k + w <= ep.size(); k += config.stride, ++r) {
      s.inputs.row(r).head(q) = reduced.row(k);
      for (int j = 0; j < w; ++j) {
        const auto at = static_cast<std::size_t>(k + j);
        s.inputs(r, q + j) = ep.current[at];
        s.labels_g(r, j) = ep.eta_s[at];
        s.labels_t(r, j) = ep.temperature_next[at];
      }
      s.labels_j(r) = window_cost(ep, k, config.horizon, config.soc_target);
      s.episode.push_back(static_cast<int>(e));
      s.step.push_back(static_cast<int>(k));
    }
  }
  if (!s.inputs.allFinite() || !s.labels_j.allFinite() || !s.labels_g.allFinite())
    throw NonFiniteOutput("sample set contains non-finite values");
  return s;
}

std::pair<SampleSet, SampleSet> split(const SampleSet& samples, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(samples.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  std::vector<Eigen::Index> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Eigen::Index> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  auto a = samples.select(train, "train");
  auto b = samples.select(test, "test");
  a.seed = b.seed = seed;
  return {std::move(a), std::move(b)};
}

void save_samples(const std::filesystem::path& path, const SampleSet& s) {
  csv::Table t;
  t.columns = {"episode", "step"};
  for (Eigen::Index i = 0; i < s.q; ++i) t.columns.push_back("x" + std::to_string(i));
  for (int j = 0; j < s.window(); ++j) t.columns.push_back("u" + std::to_string(j));
  t.columns.push_back("J");
  for (int j = 0; j < s.window(); ++j) t.columns.push_back("eta_s" + std::to_string(j));
  for (int j = 0; j < s.window(); ++j) t.columns.push_back("T" + std::to_string(j));
  t.values.resize(s.rows(), static_cast<Eigen::Index>(t.columns.size()));
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const auto k = static_cast<std::size_t>(r);
    t.values(r, 0) = s.episode[k];
    t.values(r, 1) = s.step[k];
    t.values.row(r).segment(2, s.inputs.cols()) = s.inputs.row(r);
    t.values(r, 2 + s.inputs.cols()) = s.labels_j(r);
    t.values.row(r).segment(3 + s.inputs.cols(), s.window()) = s.labels_g.row(r);
    t.values.row(r).tail(s.window()) = s.labels_t.row(r);
  }
  csv::write(path, t);
  write_json(path.string() + ".json", {{"format", "drsc-samples"},
                                       {"version", 1},
                                       {"q", s.q},
                                       {"horizon", s.horizon},
                                       {"dt", s.dt},
                                       {"seed", s.seed},
                                       {"tag", s.tag},
                                       {"rows", s.rows()},
                                       {"sha256", sha256_file(path)}});
}

SampleSet load_samples(const std::filesystem::path& path) {
  const Json meta = read_json(path.string() + ".json");
  if (required<std::string>(meta, "format") != "drsc-samples" || required<int>(meta, "version") != 1)
    throw ConfigError("unsupported sample sidecar for " + path.string());
  if (!std::filesystem::exists(path)) throw MissingArtifact(path.string());
  if (sha256_file(path) != required<std::string>(meta, "sha256")) throw StaleArtifact(path.string());
  const auto t = csv::read(path);

  SampleSet s;
  s.q = required<Eigen::Index>(meta, "q");
  s.horizon = required<int>(meta, "horizon");
  s.dt = required<double>(meta, "dt");
  s.seed = required<std::uint64_t>(meta, "seed");
  s.tag = required<std::string>(meta, "tag");
  const auto w = s.window();
  const auto d = s.q + w;
  if (t.values.cols() != 2 + d + 1 + 2 * w) throw DimensionMismatch("sample file column count: " + path.string());
  s.inputs = t.values.middleCols(2, d);
  s.labels_j = t.values.col(2 + d);
  s.labels_g = t.values.middleCols(3 + d, w);
  s.labels_t = t.values.rightCols(w);
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    s.episode.push_back(static_cast<int>(t.values(r, 0)));
    s.step.push_back(static_cast<int>(t.values(r, 1)));
  }
  return s;
}

}  // namespace drsc::datagen
