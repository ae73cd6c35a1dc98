#include "drsc/reduction/pca.hpp"
#include "drsc/reduction/reducer.hpp"

#include "drsc/common/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <fstream>
#include <numeric>
#include <random>

using namespace drsc;
using namespace drsc::reduction;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n01(rng);
  return m;
}

// Columns with decaying scale so the spectrum is well separated.
Eigen::MatrixXd anisotropic(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Eigen::MatrixXd m = random_matrix(rows, cols, seed);
  for (Eigen::Index c = 0; c < cols; ++c) m.col(c) *= std::pow(0.8, static_cast<double>(c));
  const Eigen::MatrixXd mix = random_matrix(cols, cols, seed + 1).householderQr().householderQ();
  return m * mix;
}

}  // namespace

TEST_CASE("fit recovers an exactly low-dimensional subspace") {
  const Eigen::MatrixXd latent = random_matrix(60, 3, 1);
  const Eigen::MatrixXd lift = random_matrix(3, 20, 2);
  Eigen::MatrixXd data = latent * lift;
  data.rowwise() += Eigen::RowVectorXd::LinSpaced(20, -1, 1);

  auto basis = fit_pca(data);
  CHECK(choose_q(basis, 1.0) == 3);
  basis.q = 3;
  CHECK(reconstruction_mse(basis, data) < 1e-20 * data.squaredNorm() + 1e-24);
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    CHECK((inverse_transform(basis, transform(basis, data.row(i).transpose())) - data.row(i).transpose()).norm() <
          1e-10);
}

TEST_CASE("points on y = x give the diagonal as first component") {
  Eigen::MatrixXd data(5, 2);
  data << -2, -2, -1, -1, 0, 0, 1, 1, 2, 2;
  const auto basis = fit_pca(data);
  CHECK(basis.components(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(basis.components(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(basis.explained_variance_ratio(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("component variances match a dense eigensolver of the covariance") {
  const Eigen::MatrixXd data = anisotropic(200, 50, 7);
  const auto basis = fit_pca(data);
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / 200.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd evals = eig.eigenvalues().reverse();
  const Eigen::VectorXd variance = basis.component_variance();
  REQUIRE(variance.size() == 50);
  for (Eigen::Index i = 0; i < 50; ++i) {
    CHECK(std::abs(variance(i) - evals(i)) < 1e-8);
    const Eigen::VectorXd v = eig.eigenvectors().col(49 - i);
    CHECK(std::abs(std::abs(v.dot(basis.components.row(i).transpose())) - 1.0) < 1e-6);
  }
}

TEST_CASE("basis invariants") {
  const Eigen::MatrixXd data = anisotropic(80, 30, 11);
  const auto basis = fit_pca(data);
  const Eigen::MatrixXd gram = basis.components * basis.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
  const auto& r = basis.explained_variance_ratio;
  CHECK(r.minCoeff() >= 0.0);
  for (Eigen::Index i = 1; i < r.size(); ++i) CHECK(r(i) <= r(i - 1));
  CHECK(r.sum() <= 1.0 + 1e-12);
  CHECK((r - basis.singular_values.array().square().matrix() / basis.singular_values.squaredNorm()).norm() < 1e-15);
  for (Eigen::Index i = 0; i < basis.components.rows(); ++i) {
    Eigen::Index arg = 0;
    basis.components.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(basis.components(i, arg) > 0.0);
  }
}

TEST_CASE("transform and inverse") {
  const Eigen::MatrixXd data = anisotropic(100, 12, 5);
  auto basis = fit_pca(data);
  basis.q = 5;
  CHECK(transform(basis, basis.mean).norm() < 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd z(5);
    for (auto& v : z) v = n01(rng);
    CHECK((transform(basis, inverse_transform(basis, z)) - z).norm() < 1e-10);
  }
  CHECK_THROWS_AS(transform(basis, Eigen::VectorXd::Zero(11)), DimensionMismatch);
  CHECK_THROWS_AS(inverse_transform(basis, Eigen::VectorXd::Zero(4)), DimensionMismatch);
}

TEST_CASE("reconstruction error equals the discarded spectrum") {
  const Eigen::MatrixXd data = anisotropic(300, 40, 9);
  auto basis = fit_pca(data);
  const double total = basis.component_variance().sum();
  for (const double threshold : {0.5, 0.9, 0.99}) {
    basis.q = choose_q(basis, threshold);
    CHECK(cumulative_variance(basis, basis.q) >= threshold - 1e-12);
    if (basis.q > 1) CHECK(cumulative_variance(basis, basis.q - 1) < threshold);
    const double discarded = (1.0 - cumulative_variance(basis, basis.q)) * total;
    CHECK(test::relative_error(reconstruction_mse(basis, data), discarded) < 1e-6);
  }
}

TEST_CASE("fit is invariant to row order") {
  const Eigen::MatrixXd data = anisotropic(64, 10, 21);
  std::vector<int> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  Eigen::MatrixXd shuffled(64, 10);
  for (int i = 0; i < 64; ++i) shuffled.row(i) = data.row(perm[i]);
  const auto a = fit_pca(data);
  const auto b = fit_pca(shuffled);
  CHECK((a.components - b.components).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.singular_values - b.singular_values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("degenerate inputs") {
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Constant(10, 4, 3.5)), DegenerateData);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Ones(1, 4)), DegenerateData);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Random(5, 3);
  bad(2, 1) = std::nan("");
  CHECK_THROWS_AS(fit_pca(bad), DegenerateData);
  const auto basis = fit_pca(anisotropic(10, 3, 1));
  CHECK_THROWS_AS(choose_q(basis, 0.0), ConfigError);
  CHECK_THROWS_AS(choose_q(basis, 1.5), ConfigError);
}

TEST_CASE("field scaling gives unit pooled deviation per field") {
  Eigen::MatrixXd data = random_matrix(50, 7, 8);
  data.leftCols(3) = data.leftCols(3) * 1e4 + Eigen::MatrixXd::Constant(50, 3, 2e4);
  data.col(6) = data.col(6) * 0.5 + Eigen::VectorXd::Constant(50, 300.0);
  const auto scaling = fit_field_scaling(data, {3, 3, 1});
  const Eigen::MatrixXd scaled = scaling.apply_rows(data);
  Eigen::Index at = 0;
  for (const Eigen::Index size : {3, 3, 1}) {
    const auto block = scaled.middleCols(at, size);
    const double pooled = (block.rowwise() - block.colwise().mean()).squaredNorm() / static_cast<double>(block.size());
    CHECK(pooled == doctest::Approx(1.0).epsilon(1e-12));
    at += size;
  }
  CHECK((scaling.apply(data.row(4).transpose()) - scaled.row(4).transpose()).norm() < 1e-12);
  CHECK_THROWS_AS(fit_field_scaling(data, {3, 3}), DimensionMismatch);
}

TEST_CASE("reducer persistence round trip") {
  const auto dir = test::scratch_dir("reduction");
  const Eigen::MatrixXd data = anisotropic(120, 9, 31);
  ReducerOptions opts;
  opts.field_sizes = {4, 4, 1};
  const auto reducer = fit_reducer(data, opts);
  CHECK(reducer.q() == choose_q(reducer.basis, 0.99));
  save_reducer(dir / "pca.json", reducer);
  const auto loaded = load_reducer(dir / "pca.json");
  CHECK(loaded.q() == reducer.q());
  for (Eigen::Index i = 0; i < 10; ++i)
    CHECK((loaded.reduce(data.row(i).transpose()) - reducer.reduce(data.row(i).transpose())).cwiseAbs().maxCoeff() ==
          0.0);
  CHECK((loaded.reduce_rows(data).row(3) - reducer.reduce(data.row(3).transpose()).transpose()).norm() < 1e-12);

  opts.fixed_q = 2;
  CHECK(fit_reducer(data, opts).q() == 2);

  std::ofstream(dir / "pca.csv", std::ios::app) << "0,0,0,0,0,0,0,0,0\n";
  CHECK_THROWS_AS(load_reducer(dir / "pca.json"), StaleArtifact);
  std::filesystem::remove(dir / "pca.csv");
  CHECK_THROWS_AS(load_reducer(dir / "pca.json"), MissingArtifact);
}
