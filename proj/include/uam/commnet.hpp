#pragma once

#include <span>
#include <string>
#include <vector>

#include "uam/nn.hpp"
#include "uam/rng.hpp"
#include "uam/world.hpp"

namespace uam {

struct CommNetConfig {
  int input_size = 0;
  int hidden_size = 64;
  int comm_layers = 2;  // K
  int action_count = kActionCount;
  // false forces every communication vector to zero (the no-communication
  // baseline); the architecture is otherwise unchanged.
  bool communicate = true;
};

// Mean of the other agents' hidden states, per group of group_size
// consecutive columns. A group of one receives a zero vector. The map is
// symmetric, so it is also its own adjoint for backpropagation.
nn::Matrix comm_mean(const nn::Matrix& hidden, int group_size);

// Shared-parameter CommNet: encoder -> K communication modules, each taking
// concat(h, c) -> decoder producing action logits.
class CommNetPolicy {
 public:
  struct Cache {
    nn::Mlp::Cache encoder;
    std::vector<nn::Mlp::Cache> comm;
    nn::Mlp::Cache decoder;
    int group_size = 0;
  };

  CommNetPolicy() = default;
  explicit CommNetPolicy(CommNetConfig config);  // all parameters zero

  void init(Rng& rng);

  const CommNetConfig& config() const { return config_; }
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  nn::Mlp& encoder() { return encoder_; }
  const nn::Mlp& encoder() const { return encoder_; }
  nn::Mlp& comm_module(int i) { return comm_.at(static_cast<std::size_t>(i)); }
  const nn::Mlp& comm_module(int i) const { return comm_.at(static_cast<std::size_t>(i)); }
  nn::Mlp& decoder() { return decoder_; }
  const nn::Mlp& decoder() const { return decoder_; }

  // First-layer hidden states, one column per observation.
  nn::Matrix encode(const nn::Matrix& observations) const;

  // observations holds groups of group_size agents as consecutive columns;
  // communication happens within a group only.
  nn::Matrix logits(const nn::Matrix& observations, int group_size, Cache* cache = nullptr) const;
  nn::Matrix forward_joint(const nn::Matrix& observations, int group_size) const;

  // Flat parameter gradient for dLoss/dlogits (same layout as parameters()).
  std::vector<double> backward_joint(const Cache& cache, const nn::Matrix& logit_grad) const;

  void store(nn::Checkpoint& checkpoint, const std::string& prefix) const;
  // Throws LoadError when the stored shapes differ from this policy's.
  void restore(const nn::Checkpoint& checkpoint, const std::string& prefix);

 private:
  CommNetConfig config_;
  nn::Mlp encoder_;
  std::vector<nn::Mlp> comm_;
  nn::Mlp decoder_;
};

enum class SelectionMode { Sample, Argmax };

// With probability epsilon a uniformly random action; otherwise a draw from
// probs (Sample) or its first maximum (Argmax).
int select_action(std::span<const double> probs, double epsilon, Rng& rng, SelectionMode mode);

// d/dlogits of weight * log softmax(logits)[action], column by column.
nn::Matrix log_prob_logit_grad(const nn::Matrix& probs, std::span<const int> actions,
                               std::span<const double> weights);

}  // namespace uam
