#include "drsc/surrogate/bundle.hpp"
#include "drsc/surrogate/network.hpp"

#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "net_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace drsc;
using namespace drsc::surrogate;

namespace {

Eigen::MatrixXd uniform_rows(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

Eigen::MatrixXd apply_rows(const Net& net, const Eigen::MatrixXd& x) { return forward_batch(net, x.transpose()).transpose(); }

}  // namespace

TEST_CASE("zero weights output the denormalized biases") {
  auto net = Net::zeros({3, 4, 4, 2});
  net.biases.back() << 0.5, -1.0;
  net.output_mean << 10.0, 20.0;
  net.output_scale << 2.0, 3.0;
  const auto y = forward(net, Eigen::Vector3d(1, 2, 3));
  CHECK(y(0) == 11.0);
  CHECK(y(1) == 17.0);
  CHECK(input_jacobian(net, Eigen::Vector3d(1, 2, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single neuron net is hand-evaluable") {
  auto net = Net::zeros({1, 1, 1});
  net.weights[0](0, 0) = 1.0;
  net.weights[1](0, 0) = 2.5;
  for (const double x : {-3.0, 0.0, 0.7}) {
    CHECK(forward(net, Eigen::VectorXd::Constant(1, x))(0) == doctest::Approx(2.5 / (1.0 + std::exp(-x))).epsilon(1e-15));
  }
}

TEST_CASE("forward matches a loop re-implementation") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = test::random_net({7, 10, 10, 5}, rng);
    const Eigen::VectorXd x = uniform_rows(1, 7, 100 + trial).transpose();
    CHECK((forward(net, x) - test::loop_forward(net, x)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("one-hidden-layer Jacobian equals the closed form") {
  std::mt19937_64 rng(2);
  auto net = test::random_net({4, 6, 3}, rng);
  net.input_mean.setZero();
  net.input_scale.setOnes();
  net.output_mean.setZero();
  net.output_scale.setOnes();
  const Eigen::Vector4d x(0.3, -0.2, 1.1, 0.5);
  const Eigen::VectorXd s = sigmoid((net.weights[0] * x + net.biases[0]).array()).matrix();
  const Eigen::VectorXd ds = s.array() * (1.0 - s.array());
  Eigen::MatrixXd closed(3, 4);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i) {
      double acc = 0.0;
      for (int k = 0; k < 6; ++k) acc += net.weights[0](k, i) * net.weights[1](j, k) * ds(k);
      closed(j, i) = acc;
    }
  CHECK((input_jacobian(net, x) - closed).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("Jacobian agrees with central differences on random nets") {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = test::random_net({9, 10, 10, 5}, rng);
    const Eigen::VectorXd x = uniform_rows(1, 9, 500 + trial).transpose();
    worst = std::max(worst, test::jacobian_relative_error(input_jacobian(net, x), test::fd_jacobian(net, x)));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("teacher-student training reaches the realizable fit") {
  std::mt19937_64 rng(4);
  auto teacher = test::random_net({4, 10, 10, 2}, rng);
  const Eigen::MatrixXd x = uniform_rows(3000, 4, 5);
  const Eigen::MatrixXd y = apply_rows(teacher, x);
  const Eigen::MatrixXd xt = uniform_rows(500, 4, 6);
  const Eigen::MatrixXd yt = apply_rows(teacher, xt);

  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-2;
  cfg.seed = 9;
  const auto result = train<double>(x, y, xt, yt, cfg);
  const double variance = (yt.rowwise() - yt.colwise().mean()).squaredNorm() / static_cast<double>(yt.size());
  CHECK(result.report.test_mse < 1e-3 * variance);
  CHECK(result.report.residuals.rows() == 500);
  CHECK(result.report.residuals.cols() == 2);
  CHECK(result.report.best_epoch >= 0);
  CHECK(result.report.epoch_train_loss.size() == 400);
  CHECK(result.report.epoch_validation_loss[result.report.best_epoch] ==
        *std::min_element(result.report.epoch_validation_loss.begin(), result.report.epoch_validation_loss.end()));
}

TEST_CASE("constant labels train to a constant") {
  const Eigen::MatrixXd x = uniform_rows(400, 3, 7);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Constant(400, 1, 0.25);
  const Eigen::MatrixXd xt = uniform_rows(100, 3, 8);
  TrainConfig cfg;
  cfg.epochs = 50;
  const auto result = train<double>(x, y, xt, Eigen::MatrixXd::Constant(100, 1, 0.25), cfg);
  CHECK(result.report.residuals.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(result.net.output_scale(0) == 1.0);
}

TEST_CASE("training is seed-deterministic and NaN-guarded") {
  const Eigen::MatrixXd x = uniform_rows(300, 3, 10);
  const Eigen::MatrixXd y = (x.col(0).array().sin() + x.col(1).array() * x.col(2).array()).matrix();
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 3;
  const auto a = train<double>(x, y, x, y, cfg);
  const auto b = train<double>(x, y, x, y, cfg);
  for (std::size_t l = 0; l < a.net.weights.size(); ++l) CHECK(a.net.weights[l] == b.net.weights[l]);
  cfg.seed = 4;
  CHECK(train<double>(x, y, x, y, cfg).net.weights[0] != a.net.weights[0]);

  cfg.learning_rate = 1e300;
  CHECK_THROWS_AS(train<double>(x, y, x, y, cfg), NonFiniteLoss);
  CHECK_THROWS_AS(train<double>(x, y.topRows(10), x, y, TrainConfig{}), DimensionMismatch);
}

TEST_CASE("net file round trip preserves outputs exactly") {
  const auto dir = test::scratch_dir("surrogate");
  std::mt19937_64 rng(11);
  const auto net = test::random_net({6, 10, 10, 5}, rng);
  save_net(dir / "net.json", net);
  const auto back = load_net(dir / "net.json");
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = uniform_rows(1, 6, 900 + trial).transpose();
    CHECK((forward(back, x) - forward(net, x)).cwiseAbs().maxCoeff() == 0.0);
  }
  save_net(dir / "again.json", back);
  CHECK(sha256_file(dir / "net.json") == sha256_file(dir / "again.json"));
  CHECK_THROWS_AS(load_net(dir / "none.json"), MissingArtifact);
  CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(5)), DimensionMismatch);
}

TEST_CASE("surrogate bundle slices the control block") {
  std::mt19937_64 rng(12);
  SurrogateBundle b;
  b.q = 3;
  b.horizon = 4;
  b.cost = test::random_net({8, 10, 10, 1}, rng);
  b.constraint = test::random_net({8, 10, 10, 5}, rng);
  b.validate();

  const Eigen::Vector3d x(0.1, -0.4, 0.9);
  Eigen::VectorXd u(5);
  u << 0.5, 1.0, 1.5, 2.0, 2.5;
  const auto e = b.evaluate(x, u);
  Eigen::VectorXd full(8);
  full << x, u;
  CHECK(e.j == forward(b.cost, full)(0));
  CHECK(e.g == forward(b.constraint, full));
  CHECK(e.dj_du == input_jacobian(b.cost, full).rightCols(5).transpose());
  CHECK(e.dg_du == input_jacobian(b.constraint, full).rightCols(5));
  CHECK(test::jacobian_relative_error(e.dj_du.transpose(), test::fd_jacobian(b.cost, full).rightCols(5)) < 1e-5);

  Eigen::MatrixXd many(5, 3);
  many << u, u.reverse(), u * 0.5;
  Eigen::VectorXd j;
  Eigen::MatrixXd g;
  b.evaluate_batch(x, many, j, g);
  for (int c = 0; c < 3; ++c) {
    const auto one = b.evaluate(x, many.col(c), false);
    CHECK(std::abs(j(c) - one.j) < 1e-14);
    CHECK((g.col(c) - one.g).cwiseAbs().maxCoeff() < 1e-14);
  }

  b.temperature = test::random_net({8, 10, 10, 5}, rng);
  CHECK(b.constraint_rows() == 5);
  CHECK(b.evaluate(x, u).g == e.g);
  b.temperature_limit = 318.0;
  CHECK(b.constraint_rows() == 10);
  const auto t = b.evaluate(x, u);
  Eigen::VectorXd stacked(10);
  stacked << e.g, (318.0 - forward(*b.temperature, full).array()).matrix();
  CHECK((t.g - stacked).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t.dg_du.rows() == 10);
  CHECK(t.dg_du.bottomRows(5) == -input_jacobian(*b.temperature, full).rightCols(5));
  b.evaluate_batch(x, many, j, g);
  CHECK(g.rows() == 10);
  CHECK((g.col(0) - t.g).cwiseAbs().maxCoeff() < 1e-12);

  b.constraint = test::random_net({8, 10, 10, 4}, rng);
  CHECK_THROWS_AS(b.validate(), DimensionMismatch);
  CHECK_THROWS_AS(b.evaluate(x, u.head(4)), DimensionMismatch);
}
