#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "uam/rng.hpp"

namespace uam::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputActivation { Identity, Relu };

// Fully connected network with rectifier hidden layers. Parameters live in
// one flat buffer laid out layer by layer as [W (out x in, column-major), b].
// Batched calls take one sample per column.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> preactivation;
    const Mlp* net = nullptr;
    std::uint64_t version = 0;
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes,
               OutputActivation output = OutputActivation::Identity);

  // Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
  void init_glorot(Rng& rng);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  OutputActivation output_activation() const { return output_; }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<const double> parameters() const { return params_; }
  // Mutable access invalidates outstanding caches.
  std::span<double> mutable_parameters();
  void set_parameters(std::span<const double> values);

  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Matrix> mutable_weight(int layer);
  Eigen::Map<Vector> mutable_bias(int layer);

  // Throws ShapeError when the input row count differs from input_size().
  Matrix forward(const Matrix& input, Cache* cache = nullptr) const;
  Vector forward(const Vector& input) const;

  // Accumulates dLoss/dparams into param_grad (size parameter_count()) and
  // returns dLoss/dinput. Throws ContractError when the cache was produced
  // by a different network or before the parameters last changed.
  Matrix backward(const Cache& cache, const Matrix& output_grad,
                  std::span<double> param_grad) const;

 private:
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const;
  void touch();

  std::vector<int> sizes_;
  OutputActivation output_ = OutputActivation::Identity;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
  std::uint64_t version_ = 0;
};

// Numerically stable softmax of one logit vector / of each column.
Vector softmax(const Vector& logits);
Matrix softmax_columns(const Matrix& logits);
Vector log_softmax(const Vector& logits);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t size, AdamConfig config);

  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
};

enum class Direction { Descent, Ascent };

// Bias-corrected Adam update in place. Throws ShapeError on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               Direction direction);

// Plain gradient step: params -/+= learning_rate * grad.
void sgd_step(std::span<double> params, std::span<const double> grad, double learning_rate,
              Direction direction);

// Rescales grad to at most max_norm in Euclidean norm; returns the norm
// before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(std::span<double> grad, double max_norm);

enum class OptimizerKind { Adam, Sgd };

// Optimizer bound to one parameter vector.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, std::size_t size, AdamConfig config);

  void apply(std::span<double> params, std::span<const double> grad, Direction direction);
  const AdamState& adam() const { return adam_; }
  std::int64_t steps() const { return adam_.step; }

 private:
  OptimizerKind kind_ = OptimizerKind::Adam;
  AdamState adam_;
};

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

// Named networks plus free-form metadata, stored as versioned JSON.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::string algorithm;
  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, Mlp> networks;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);

  void save(const std::string& path) const;
  // Throws LoadError on unreadable or malformed files.
  static Checkpoint load(const std::string& path);

  // Throws LoadError when absent or shaped differently from expected_sizes.
  const Mlp& network(const std::string& name, const std::vector<int>& expected_sizes) const;
};

}  // namespace uam::nn
