#pragma once

#include "drsc/common/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace drsc::surrogate {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Fully connected net: sigmoid hidden layers, identity output, with per-feature
/// standardization of inputs and outputs folded around the affine stack.
template <typename Scalar>
struct FeedforwardNet {
  std::vector<MatrixX<Scalar>> weights;  // W_l is (out x in)
  std::vector<VectorX<Scalar>> biases;
  VectorX<Scalar> input_mean, input_scale;
  VectorX<Scalar> output_mean, output_scale;

  [[nodiscard]] Eigen::Index d_in() const { return weights.front().cols(); }
  [[nodiscard]] Eigen::Index d_out() const { return weights.back().rows(); }
  [[nodiscard]] std::vector<Eigen::Index> layer_sizes() const {
    std::vector<Eigen::Index> s{d_in()};
    for (const auto& w : weights) s.push_back(w.rows());
    return s;
  }
  [[nodiscard]] Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  /// Checks that dimensions chain, scales are positive and everything is finite.
  void validate() const {
    if (weights.empty() || weights.size() != biases.size()) throw DimensionMismatch("net needs matching W/b layers");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (biases[l].size() != weights[l].rows()) throw DimensionMismatch("bias length differs from layer width");
      if (l > 0 && weights[l].cols() != weights[l - 1].rows()) throw DimensionMismatch("layer widths do not chain");
      if (!weights[l].allFinite() || !biases[l].allFinite()) throw NonFiniteOutput("net parameters are not finite");
    }
    if (input_mean.size() != d_in() || input_scale.size() != d_in() || output_mean.size() != d_out() ||
        output_scale.size() != d_out())
      throw DimensionMismatch("normalization statistics do not match the net");
    if (!(input_scale.array() > 0).all() || !(output_scale.array() > 0).all())
      throw ConfigError("normalization scales must be strictly positive");
  }

  /// Zero-initialized net with identity normalization.
  static FeedforwardNet zeros(const std::vector<Eigen::Index>& sizes) {
    if (sizes.size() < 2) throw ConfigError("a net needs at least input and output sizes");
    FeedforwardNet net;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
      net.weights.push_back(MatrixX<Scalar>::Zero(sizes[l], sizes[l - 1]));
      net.biases.push_back(VectorX<Scalar>::Zero(sizes[l]));
    }
    net.input_mean = VectorX<Scalar>::Zero(sizes.front());
    net.input_scale = VectorX<Scalar>::Ones(sizes.front());
    net.output_mean = VectorX<Scalar>::Zero(sizes.back());
    net.output_scale = VectorX<Scalar>::Ones(sizes.back());
    return net;
  }
};

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) / (Scalar(1) + (-x).exp());
}

/// Column-batched evaluation: `inputs` is d_in x B, the result d_out x B.
template <typename Scalar, typename Derived>
MatrixX<Scalar> forward_batch(const FeedforwardNet<Scalar>& net, const Eigen::MatrixBase<Derived>& inputs) {
  if (inputs.rows() != net.d_in()) throw DimensionMismatch("net input has the wrong dimension");
  MatrixX<Scalar> a = (inputs.colwise() - net.input_mean).array().colwise() / net.input_scale.array();
  const auto hidden = net.weights.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l)
    a = sigmoid(((net.weights[l] * a).colwise() + net.biases[l]).array()).matrix();
  MatrixX<Scalar> out = (net.weights.back() * a).colwise() + net.biases.back();
  return (out.array().colwise() * net.output_scale.array()).colwise() + net.output_mean.array();
}

template <typename Scalar, typename Derived>
VectorX<Scalar> forward(const FeedforwardNet<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  if (input.size() != net.d_in()) throw DimensionMismatch("net input has the wrong dimension");
  return forward_batch(net, VectorX<Scalar>(input));
}

/// Exact input Jacobian (d_out x d_in):
/// diag(s_out) W_L diag(s'_{L-1}) W_{L-1} ... diag(s'_1) W_1 diag(1/s_in), with s' = s (1 - s).
template <typename Scalar, typename Derived>
MatrixX<Scalar> input_jacobian(const FeedforwardNet<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  if (input.size() != net.d_in()) throw DimensionMismatch("net input has the wrong dimension");
  VectorX<Scalar> a = (input - net.input_mean).cwiseQuotient(net.input_scale);
  MatrixX<Scalar> jac = net.input_scale.cwiseInverse().asDiagonal();
  const auto hidden = net.weights.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    a = sigmoid((net.weights[l] * a + net.biases[l]).array()).matrix();
    const VectorX<Scalar> slope = a.array() * (Scalar(1) - a.array());
    jac = slope.asDiagonal() * (net.weights[l] * jac);
  }
  return net.output_scale.asDiagonal() * (net.weights.back() * jac);
}

struct TrainConfig {
  std::vector<Eigen::Index> hidden = {10, 10};
  int epochs = 2000;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double validation_fraction = 0.1;  // carved from the training rows
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct TrainReport {
  Scalar train_mse = 0;       // label units, at the checkpointed weights
  Scalar validation_mse = 0;
  Scalar test_mse = 0;
  std::vector<Scalar> epoch_train_loss;       // standardized units
  std::vector<Scalar> epoch_validation_loss;  // standardized units
  int best_epoch = -1;
  MatrixX<Scalar> residuals;  // test rows x d_out, prediction - label
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct TrainResult {
  FeedforwardNet<Scalar> net;
  TrainReport<Scalar> report;
};

namespace detail {

template <typename Scalar>
Scalar mse(const MatrixX<Scalar>& a, const MatrixX<Scalar>& b) {
  return a.size() == 0 ? Scalar(0) : (a - b).squaredNorm() / static_cast<Scalar>(a.size());
}

// Column statistics of a samples-by-features matrix; zero spread maps to scale 1.
template <typename Scalar>
void standardize_stats(const MatrixX<Scalar>& rows, VectorX<Scalar>& mean, VectorX<Scalar>& scale) {
  mean = rows.colwise().mean().transpose();
  scale = ((rows.rowwise() - mean.transpose()).colwise().squaredNorm() / static_cast<Scalar>(rows.rows()))
              .cwiseSqrt()
              .transpose();
  for (Eigen::Index i = 0; i < scale.size(); ++i)
    if (!(scale(i) > Scalar(1e-12) * std::max(Scalar(1), std::abs(mean(i))))) scale(i) = Scalar(1);
}

}  // namespace detail

/// Minibatch Adam on the standardized mean-squared error with a fixed epoch budget.
/// The weights with the lowest validation loss are returned. Rows are samples.
template <typename Scalar>
TrainResult<Scalar> train(const MatrixX<Scalar>& train_inputs, const MatrixX<Scalar>& train_labels,
                          const MatrixX<Scalar>& test_inputs, const MatrixX<Scalar>& test_labels,
                          const TrainConfig& config) {
  if (train_inputs.rows() != train_labels.rows() || test_inputs.rows() != test_labels.rows())
    throw DimensionMismatch("inputs and labels differ in row count");
  if (test_inputs.rows() > 0 &&
      (test_inputs.cols() != train_inputs.cols() || test_labels.cols() != train_labels.cols()))
    throw DimensionMismatch("train and test columns differ");
  if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0))
    throw ConfigError("epochs, batch size and learning rate must be positive");
  if (!(config.validation_fraction >= 0 && config.validation_fraction < 1))
    throw ConfigError("validation fraction must lie in [0, 1)");

  std::mt19937_64 rng(config.seed);
  const auto total = train_inputs.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<Eigen::Index>(std::llround(config.validation_fraction * static_cast<double>(total)));
  const auto n_fit = total - n_val;
  if (n_fit < 1) throw ConfigError("no training rows left after the validation carve-out");

  const auto gather = [&](const MatrixX<Scalar>& m, Eigen::Index from, Eigen::Index count) {
    MatrixX<Scalar> out(count, m.cols());
    for (Eigen::Index i = 0; i < count; ++i) out.row(i) = m.row(order[static_cast<std::size_t>(from + i)]);
    return out;
  };
  const MatrixX<Scalar> fit_x = gather(train_inputs, 0, n_fit), fit_y = gather(train_labels, 0, n_fit);
  const MatrixX<Scalar> val_x = gather(train_inputs, n_fit, n_val), val_y = gather(train_labels, n_fit, n_val);

  std::vector<Eigen::Index> sizes{train_inputs.cols()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(train_labels.cols());
  auto net = FeedforwardNet<Scalar>::zeros(sizes);
  detail::standardize_stats(fit_x, net.input_mean, net.input_scale);
  detail::standardize_stats(fit_y, net.output_mean, net.output_scale);

  const auto params = net.parameter_count();
  if (n_fit < 10 * params)
    std::cerr << "warning: " << n_fit << " training rows for " << params << " parameters (fewer than 10x)\n";

  // Glorot-uniform hidden weights; the output layer starts at zero so the initial
  // prediction is the label mean.
  for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    const Scalar limit = std::sqrt(Scalar(6) / static_cast<Scalar>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-double(limit), double(limit));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = Scalar(u(rng));
  }

  // Standardized column-major copies: features x samples.
  const auto to_z_in = [&](const MatrixX<Scalar>& x) -> MatrixX<Scalar> {
    return ((x.rowwise() - net.input_mean.transpose()).array().rowwise() / net.input_scale.transpose().array())
        .matrix()
        .transpose();
  };
  const auto to_z_out = [&](const MatrixX<Scalar>& y) -> MatrixX<Scalar> {
    return ((y.rowwise() - net.output_mean.transpose()).array().rowwise() / net.output_scale.transpose().array())
        .matrix()
        .transpose();
  };
  const MatrixX<Scalar> zx = to_z_in(fit_x), zy = to_z_out(fit_y);
  const MatrixX<Scalar> vzx = to_z_in(val_x), vzy = to_z_out(val_y);

  const auto layers = net.weights.size();
  std::vector<MatrixX<Scalar>> mw, vw;
  std::vector<VectorX<Scalar>> mb, vb;
  for (std::size_t l = 0; l < layers; ++l) {
    mw.push_back(MatrixX<Scalar>::Zero(net.weights[l].rows(), net.weights[l].cols()));
    vw.push_back(mw.back());
    mb.push_back(VectorX<Scalar>::Zero(net.biases[l].size()));
    vb.push_back(mb.back());
  }

  // Forward pass in standardized space; keeps the activations for backprop.
  std::vector<MatrixX<Scalar>> act(layers + 1);
  const auto run = [&](const MatrixX<Scalar>& z) -> const MatrixX<Scalar>& {
    act[0] = z;
    for (std::size_t l = 0; l < layers; ++l) {
      MatrixX<Scalar> pre = (net.weights[l] * act[l]).colwise() + net.biases[l];
      act[l + 1] = l + 1 < layers ? MatrixX<Scalar>(sigmoid(pre.array()).matrix()) : pre;
    }
    return act[layers];
  };
  const auto loss_of = [&](const MatrixX<Scalar>& z, const MatrixX<Scalar>& y) {
    return z.cols() == 0 ? Scalar(0) : detail::mse<Scalar>(run(z), y);
  };

  auto best = net;
  Scalar best_loss = std::numeric_limits<Scalar>::infinity();
  TrainReport<Scalar> report;
  report.seed = config.seed;
  const bool use_val = n_val > 0;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_fit));
  std::iota(perm.begin(), perm.end(), Eigen::Index(0));
  long long t = 0;
  MatrixX<Scalar> bx, by;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Scalar epoch_loss = 0;
    for (Eigen::Index start = 0; start < n_fit; start += config.batch_size) {
      const auto b = std::min<Eigen::Index>(config.batch_size, n_fit - start);
      bx.resize(zx.rows(), b);
      by.resize(zy.rows(), b);
      for (Eigen::Index i = 0; i < b; ++i) {
        bx.col(i) = zx.col(perm[static_cast<std::size_t>(start + i)]);
        by.col(i) = zy.col(perm[static_cast<std::size_t>(start + i)]);
      }
      const MatrixX<Scalar>& out = run(bx);
      MatrixX<Scalar> delta = (out - by) * (Scalar(2) / static_cast<Scalar>(by.size()));
      epoch_loss += (out - by).squaredNorm();
      if (!std::isfinite(double(epoch_loss)))
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch at row " + std::to_string(start) +
                            ": loss is not finite (learning rate " + std::to_string(config.learning_rate) + ")");

      ++t;
      const Scalar c1 = Scalar(1) - std::pow(Scalar(config.beta1), Scalar(t));
      const Scalar c2 = Scalar(1) - std::pow(Scalar(config.beta2), Scalar(t));
      const Scalar lr = Scalar(config.learning_rate) * std::sqrt(c2) / c1;
      for (std::size_t l = layers; l-- > 0;) {
        const MatrixX<Scalar> gw = delta * act[l].transpose();
        const VectorX<Scalar> gb = delta.rowwise().sum();
        if (l > 0) {
          delta = (net.weights[l].transpose() * delta).array() * act[l].array() * (Scalar(1) - act[l].array());
        }
        mw[l] = Scalar(config.beta1) * mw[l] + Scalar(1 - config.beta1) * gw;
        vw[l] = Scalar(config.beta2) * vw[l] + Scalar(1 - config.beta2) * gw.cwiseAbs2();
        mb[l] = Scalar(config.beta1) * mb[l] + Scalar(1 - config.beta1) * gb;
        vb[l] = Scalar(config.beta2) * vb[l] + Scalar(1 - config.beta2) * gb.cwiseAbs2();
        net.weights[l].array() -= lr * mw[l].array() / (vw[l].array().sqrt() + Scalar(config.adam_epsilon));
        net.biases[l].array() -= lr * mb[l].array() / (vb[l].array().sqrt() + Scalar(config.adam_epsilon));
      }
    }
    report.epoch_train_loss.push_back(epoch_loss / static_cast<Scalar>(zy.size()));
    const Scalar val_loss = use_val ? loss_of(vzx, vzy) : report.epoch_train_loss.back();
    report.epoch_validation_loss.push_back(val_loss);
    if (!std::isfinite(double(val_loss))) throw NonFiniteLoss("validation loss at epoch " + std::to_string(epoch));
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = net;
      report.best_epoch = epoch;
    }
  }

  net = std::move(best);
  const auto predict = [&](const MatrixX<Scalar>& x) -> MatrixX<Scalar> {
    return x.rows() == 0 ? MatrixX<Scalar>(0, net.d_out()) : MatrixX<Scalar>(forward_batch(net, x.transpose()).transpose());
  };
  report.train_mse = detail::mse<Scalar>(predict(fit_x), fit_y);
  report.validation_mse = detail::mse<Scalar>(predict(val_x), val_y);
  report.residuals = predict(test_inputs) - test_labels;
  report.test_mse = report.residuals.size() ? report.residuals.squaredNorm() / static_cast<Scalar>(report.residuals.size())
                                            : Scalar(0);
  return {std::move(net), std::move(report)};
}

}  // namespace drsc::surrogate
