#include "drsc/surrogate/bundle.hpp"

#include "drsc/common/error.hpp"
#include "drsc/common/json_io.hpp"

namespace drsc::surrogate {

void save_net(const std::filesystem::path& path, const Net& net) {
  net.validate();
  Json weights = Json::array(), biases = Json::array(), activations = Json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weights.push_back(matrix_to_json(net.weights[l]));
    biases.push_back(to_json(net.biases[l]));
    activations.push_back(l + 1 < net.weights.size() ? "sigmoid" : "identity");
  }
  write_json(path, {{"format", "drsc-feedforward-net"},
                    {"version", 1},
                    {"layer_sizes", net.layer_sizes()},
                    {"activations", activations},
                    {"input_mean", to_json(net.input_mean)},
                    {"input_scale", to_json(net.input_scale)},
                    {"output_mean", to_json(net.output_mean)},
                    {"output_scale", to_json(net.output_scale)},
                    {"weights", weights},
                    {"biases", biases}});
}

Net load_net(const std::filesystem::path& path) {
  const Json j = read_json(path);
  if (required<std::string>(j, "format") != "drsc-feedforward-net" || required<int>(j, "version") != 1)
    throw ConfigError("unsupported net format in " + path.string());
  Net net;
  const auto acts = required<std::vector<std::string>>(j, "activations");
  for (std::size_t l = 0; l < acts.size(); ++l)
    if (acts[l] != (l + 1 < acts.size() ? "sigmoid" : "identity"))
      throw ConfigError("unsupported activation '" + acts[l] + "' in " + path.string());
  for (const auto& w : required<Json>(j, "weights")) net.weights.push_back(matrix_from_json(w));
  for (const auto& b : required<Json>(j, "biases")) net.biases.push_back(vector_from_json(b));
  net.input_mean = vector_from_json(required<Json>(j, "input_mean"));
  net.input_scale = vector_from_json(required<Json>(j, "input_scale"));
  net.output_mean = vector_from_json(required<Json>(j, "output_mean"));
  net.output_scale = vector_from_json(required<Json>(j, "output_scale"));
  if (acts.size() != net.weights.size()) throw DimensionMismatch("activation count differs from layer count");
  net.validate();
  if (net.layer_sizes() != required<std::vector<Eigen::Index>>(j, "layer_sizes"))
    throw DimensionMismatch("declared layer sizes differ from the stored weights");
  return net;
}

void SurrogateBundle::validate() const {
  const auto d = q + window();
  cost.validate();
  constraint.validate();
  if (cost.d_in() != d || cost.d_out() != 1) throw DimensionMismatch("cost net must map q + N + 1 inputs to 1 output");
  if (constraint.d_in() != d || constraint.d_out() != window())
    throw DimensionMismatch("constraint net must map q + N + 1 inputs to N + 1 outputs");
  if (temperature) {
    temperature->validate();
    if (temperature->d_in() != d || temperature->d_out() != window())
      throw DimensionMismatch("temperature net must map q + N + 1 inputs to N + 1 outputs");
  }
}

SurrogateBundle::Evaluation SurrogateBundle::evaluate(const Eigen::Ref<const Eigen::VectorXd>& reduced,
                                                      const Eigen::Ref<const Eigen::VectorXd>& controls,
                                                      bool with_jacobians) const {
  if (reduced.size() != q || controls.size() != window())
    throw DimensionMismatch("surrogate bundle evaluated with the wrong reduced-state or window length");
  Eigen::VectorXd input(q + window());
  input << reduced, controls;
  Evaluation e;
  e.j = forward(cost, input)(0);
  e.g = forward(constraint, input);
  if (with_jacobians) {
    e.dj_du = input_jacobian(cost, input).rightCols(window()).transpose();
    e.dg_du = input_jacobian(constraint, input).rightCols(window());
  }
  if (temperature_active()) {
    e.g.conservativeResize(2 * window());
    e.g.tail(window()) = temperature_limit - forward(*temperature, input).array();
    if (with_jacobians) {
      e.dg_du.conservativeResize(2 * window(), Eigen::NoChange);
      e.dg_du.bottomRows(window()) = -input_jacobian(*temperature, input).rightCols(window());
    }
  }
  return e;
}

void SurrogateBundle::evaluate_batch(const Eigen::Ref<const Eigen::VectorXd>& reduced,
                                     const Eigen::Ref<const Eigen::MatrixXd>& controls, Eigen::VectorXd& j,
                                     Eigen::MatrixXd& g) const {
  if (reduced.size() != q || controls.rows() != window())
    throw DimensionMismatch("surrogate bundle evaluated with the wrong reduced-state or window length");
  Eigen::MatrixXd inputs(q + window(), controls.cols());
  inputs.topRows(q) = reduced.replicate(1, controls.cols());
  inputs.bottomRows(window()) = controls;
  j = forward_batch(cost, inputs).row(0).transpose();
  if (!temperature_active()) {
    g = forward_batch(constraint, inputs);
    return;
  }
  g.resize(2 * window(), controls.cols());
  g.topRows(window()) = forward_batch(constraint, inputs);
  g.bottomRows(window()) = temperature_limit - forward_batch(*temperature, inputs).array();
}

}  // namespace drsc::surrogate
