#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uam/commnet.hpp"
#include "uam/ctde.hpp"
#include "uam/nn.hpp"
#include "uam/rng.hpp"

namespace uam {

enum class BenchmarkKind { CommNetCtde, Hybrid, Dnn, Iac, Dqn, MonteCarlo };

inline constexpr BenchmarkKind kAllBenchmarks[] = {
    BenchmarkKind::CommNetCtde, BenchmarkKind::Hybrid, BenchmarkKind::Dnn,
    BenchmarkKind::Iac,         BenchmarkKind::Dqn,    BenchmarkKind::MonteCarlo};

// Config keys: commnet_ctde, hybrid, dnn, iac, dqn, monte_carlo.
std::string to_string(BenchmarkKind kind);
BenchmarkKind parse_benchmark(const std::string& key);  // throws ConfigError

// CommNet architecture with every communication vector forced to zero.
CommNetPolicy make_dnn_policy(CommNetConfig config);

// Uniform over the action set.
int monte_carlo_policy(Rng& rng);

// y = r + gamma * max_a Q(o', a), cut at terminal transitions.
double dqn_target(double reward, double max_next_q, double discount, bool terminal);

// Shared CommNet actors with one independent value critic per agent on the
// agent's own learner features.
class IacLearner final : public Learner {
 public:
  IacLearner(JointActor actor, std::vector<ValueCritic> critics, double discount);

  std::string name() const override { return "iac"; }
  std::vector<int> act(std::span<const double> features, double epsilon, bool greedy,
                       Rng& rng) override;
  UpdateStats update(const BatchSampler& sampler, Rng& rng) override;
  nn::Checkpoint checkpoint() const override;
  void restore(const nn::Checkpoint& checkpoint) override;

  JointActor& actor() { return actor_; }
  std::vector<ValueCritic>& critics() { return critics_; }

  // Critic step for agent j on its local features and reward; returns delta_j.
  std::vector<double> critic_step(int agent, const Batch& batch);

 private:
  JointActor actor_;
  std::vector<ValueCritic> critics_;
  double discount_;
};

// One action-value network per agent; no target network.
class DqnLearner final : public Learner {
 public:
  DqnLearner(std::vector<nn::Mlp> q_networks, nn::OptimizerKind optimizer, nn::AdamConfig adam,
             double clip_norm, double discount);

  std::string name() const override { return "dqn"; }
  std::vector<int> act(std::span<const double> features, double epsilon, bool greedy,
                       Rng& rng) override;
  UpdateStats update(const BatchSampler& sampler, Rng& rng) override;
  nn::Checkpoint checkpoint() const override;
  void restore(const nn::Checkpoint& checkpoint) override;

  std::vector<nn::Mlp>& q_networks() { return q_; }

  // Squared-error descent step for agent j; returns the targets used.
  std::vector<double> q_step(int agent, const Batch& batch);

 private:
  std::vector<nn::Mlp> q_;
  std::vector<nn::Optimizer> optimizers_;
  double clip_norm_;
  double discount_;
};

class MonteCarloLearner final : public Learner {
 public:
  explicit MonteCarloLearner(int num_agents) : num_agents_(num_agents) {}

  std::string name() const override { return "monte_carlo"; }
  std::vector<int> act(std::span<const double> features, double epsilon, bool greedy,
                       Rng& rng) override;
  bool learns() const override { return false; }
  UpdateStats update(const BatchSampler&, Rng&) override { return {}; }
  nn::Checkpoint checkpoint() const override;
  void restore(const nn::Checkpoint&) override {}

 private:
  int num_agents_;
};

// Builds an initialized learner; parameter initialization is seeded from
// config.seed.
std::unique_ptr<Learner> make_learner(BenchmarkKind kind, const TrainConfig& config);

}  // namespace uam
