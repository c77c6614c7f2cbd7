#include "uam/nn.hpp"

#include <atomic>
#include <cmath>
#include <fstream>

#include "uam/errors.hpp"

namespace uam::nn {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, OutputActivation output)
    : sizes_(std::move(layer_sizes)), output_(output), version_(next_version()) {
  if (sizes_.size() < 2) throw ShapeError("Mlp: need at least an input and an output layer");
  for (int s : sizes_) {
    if (s < 1) throw ShapeError("Mlp: layer sizes must be positive");
  }
  std::size_t total = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
  }
  params_.assign(total, 0.0);
}

void Mlp::touch() { version_ = next_version(); }

std::span<double> Mlp::mutable_parameters() {
  touch();
  return params_;
}

void Mlp::set_parameters(std::span<const double> values) {
  if (values.size() != params_.size()) throw ShapeError("Mlp: parameter count mismatch");
  std::copy(values.begin(), values.end(), params_.begin());
  touch();
}

std::size_t Mlp::bias_offset(int layer) const {
  return offsets_[layer] +
         static_cast<std::size_t>(sizes_[layer]) * static_cast<std::size_t>(sizes_[layer + 1]);
}

void Mlp::init_glorot(Rng& rng) {
  for (int l = 0; l < layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    auto w = mutable_weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
    }
    mutable_bias(l).setZero();
  }
  touch();
}

Eigen::Map<const Matrix> Mlp::weight(int layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Vector> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

Eigen::Map<Matrix> Mlp::mutable_weight(int layer) {
  touch();
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<Vector> Mlp::mutable_bias(int layer) {
  touch();
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

Matrix Mlp::forward(const Matrix& input, Cache* cache) const {
  if (input.rows() != input_size()) {
    throw ShapeError("Mlp::forward: expected input of size " + std::to_string(input_size()) +
                     ", got " + std::to_string(input.rows()));
  }
  if (cache != nullptr) {
    cache->inputs.assign(static_cast<std::size_t>(layer_count()), Matrix());
    cache->preactivation.assign(static_cast<std::size_t>(layer_count()), Matrix());
    cache->net = this;
    cache->version = version_;
  }
  Matrix x = input;
  for (int l = 0; l < layer_count(); ++l) {
    Matrix z = weight(l) * x;
    z.colwise() += bias(l);
    const bool rectify = l + 1 < layer_count() || output_ == OutputActivation::Relu;
    if (cache != nullptr) {
      cache->inputs[l] = std::move(x);
      cache->preactivation[l] = z;
    }
    x = rectify ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return x;
}

Vector Mlp::forward(const Vector& input) const { return forward(Matrix(input)).col(0); }

Matrix Mlp::backward(const Cache& cache, const Matrix& output_grad,
                     std::span<double> param_grad) const {
  if (cache.net != this || cache.version != version_) {
    throw ContractError("Mlp::backward: cache does not belong to the current parameters");
  }
  if (param_grad.size() != params_.size()) throw ShapeError("Mlp::backward: gradient size mismatch");
  if (output_grad.rows() != output_size() ||
      output_grad.cols() != cache.preactivation.back().cols()) {
    throw ShapeError("Mlp::backward: output gradient shape mismatch");
  }
  Matrix g = output_grad;
  for (int l = layer_count() - 1; l >= 0; --l) {
    const bool rectify = l + 1 < layer_count() || output_ == OutputActivation::Relu;
    if (rectify) {
      // Subgradient of the rectifier at exactly zero is taken as 0.
      g = g.cwiseProduct((cache.preactivation[l].array() > 0.0).cast<double>().matrix());
    }
    Eigen::Map<Matrix> dw(param_grad.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    Eigen::Map<Vector> db(param_grad.data() + bias_offset(l), sizes_[l + 1]);
    // Products land in aligned temporaries first: Eigen picks a summation
    // order from the destination's alignment, and param_grad may have any.
    const Matrix dw_layer = g * cache.inputs[l].transpose();
    const Vector db_layer = g.rowwise().sum();
    dw += dw_layer;
    db += db_layer;
    g = weight(l).transpose() * g;
  }
  return g;
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) out.col(c) = softmax(logits.col(c));
  return out;
}

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

AdamState::AdamState(std::size_t size, AdamConfig cfg)
    : config(cfg), first_moment(size, 0.0), second_moment(size, 0.0) {}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               Direction direction) {
  if (params.size() != grad.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: parameter, gradient and state sizes differ");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  const double sign = direction == Direction::Descent ? -1.0 : 1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * grad[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] += sign * c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grad, double learning_rate,
              Direction direction) {
  if (params.size() != grad.size()) throw ShapeError("sgd_step: size mismatch");
  const double sign = direction == Direction::Descent ? -1.0 : 1.0;
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += sign * learning_rate * grad[i];
}

double clip_global_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t size, AdamConfig config)
    : kind_(kind), adam_(size, config) {}

void Optimizer::apply(std::span<double> params, std::span<const double> grad,
                      Direction direction) {
  if (kind_ == OptimizerKind::Adam) {
    adam_step(params, grad, adam_, direction);
  } else {
    sgd_step(params, grad, adam_.config.learning_rate, direction);
    ++adam_.step;
  }
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json j;
  j["layers"] = net.layer_sizes();
  j["output"] = net.output_activation() == OutputActivation::Relu ? "relu" : "identity";
  j["parameters"] = std::vector<double>(net.parameters().begin(), net.parameters().end());
  return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  try {
    const auto sizes = j.at("layers").get<std::vector<int>>();
    const auto output = j.at("output").get<std::string>();
    if (output != "relu" && output != "identity") throw LoadError("unknown output activation");
    Mlp net(sizes, output == "relu" ? OutputActivation::Relu : OutputActivation::Identity);
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != net.parameter_count()) {
      throw LoadError("parameter count does not match layer shapes");
    }
    net.set_parameters(params);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed network: ") + e.what());
  } catch (const ShapeError& e) {
    throw LoadError(std::string("malformed network: ") + e.what());
  }
}

nlohmann::json Checkpoint::to_json() const {
  nlohmann::json j;
  j["format"] = "uam-checkpoint";
  j["version"] = kFormatVersion;
  j["algorithm"] = algorithm;
  j["metadata"] = metadata;
  nlohmann::json nets = nlohmann::json::object();
  for (const auto& [name, net] : networks) nets[name] = nn::to_json(net);
  j["networks"] = std::move(nets);
  return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "uam-checkpoint") {
      throw LoadError("not a checkpoint file");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw LoadError("unsupported checkpoint version");
    }
    Checkpoint c;
    c.algorithm = j.at("algorithm").get<std::string>();
    c.metadata = j.at("metadata");
    for (const auto& [name, net] : j.at("networks").items()) {
      c.networks.emplace(name, mlp_from_json(net));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  }
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << to_json().dump() << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

const Mlp& Checkpoint::network(const std::string& name,
                               const std::vector<int>& expected_sizes) const {
  const auto it = networks.find(name);
  if (it == networks.end()) throw LoadError("checkpoint has no network named " + name);
  if (it->second.layer_sizes() != expected_sizes) {
    throw LoadError("checkpoint network " + name + " does not match the configured dimensions");
  }
  return it->second;
}

}  // namespace uam::nn
