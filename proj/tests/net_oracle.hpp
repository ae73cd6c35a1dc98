#pragma once

// Reference evaluations for feedforward nets: a loop-only forward pass and a
// central finite-difference Jacobian.

#include "drsc/surrogate/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drsc::test {

inline Eigen::VectorXd loop_forward(const surrogate::FeedforwardNet<double>& net, const Eigen::VectorXd& x) {
  std::vector<double> a(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) a[i] = (x(i) - net.input_mean(i)) / net.input_scale(i);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = net.biases[l](r);
      for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * a[c];
      next[r] = l + 1 < net.weights.size() ? 1.0 / (1.0 + std::exp(-s)) : s;
    }
    a = std::move(next);
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(a.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = a[i] * net.output_scale(i) + net.output_mean(i);
  return y;
}

/// Central differences with step h in standardized input units.
inline Eigen::MatrixXd fd_jacobian(const surrogate::FeedforwardNet<double>& net, const Eigen::VectorXd& x,
                                   double h = 1e-5) {
  Eigen::MatrixXd jac(net.d_out(), net.d_in());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * net.input_scale(i);
    Eigen::VectorXd up = x, down = x;
    up(i) += step;
    down(i) -= step;
    jac.col(i) = (loop_forward(net, up) - loop_forward(net, down)) / (2.0 * step);
  }
  return jac;
}

/// Max entrywise error relative to the largest Jacobian entry.
inline double jacobian_relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1e-12);
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

/// Net with random weights and random (positive) normalization statistics.
inline surrogate::FeedforwardNet<double> random_net(const std::vector<Eigen::Index>& sizes, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> pos(0.2, 3.0);
  auto net = surrogate::FeedforwardNet<double>::zeros(sizes);
  for (auto& w : net.weights)
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n01(rng) / std::sqrt(double(w.cols()));
  for (auto& b : net.biases)
    for (auto& v : b) v = 0.5 * n01(rng);
  for (auto& v : net.input_mean) v = n01(rng);
  for (auto& v : net.input_scale) v = pos(rng);
  for (auto& v : net.output_mean) v = n01(rng);
  for (auto& v : net.output_scale) v = pos(rng);
  return net;
}

}  // namespace drsc::test
