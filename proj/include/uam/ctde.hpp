#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uam/commnet.hpp"
#include "uam/metrics.hpp"
#include "uam/nn.hpp"
#include "uam/trajectory.hpp"
#include "uam/world.hpp"

namespace uam {

// One environment step as stored for learning. Features are column-major
// (feature_size x J) learner inputs.
struct Transition {
  std::vector<double> state;
  std::vector<double> features;
  std::vector<int> actions;
  std::vector<double> rewards;  // per agent
  double team_reward = 0.0;
  std::vector<double> next_state;
  std::vector<double> next_features;
  bool terminal = false;
};

// Fixed-capacity FIFO; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  std::uint64_t total_pushed() const { return pushed_; }

  // 0 is the oldest retained transition.
  const Transition& at(std::size_t age) const { return items_.at(age); }

  // n distinct transitions, uniformly at random. Throws UsageError when the
  // buffer holds fewer than n.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;
  // The n most recent transitions, oldest first.
  std::vector<const Transition*> newest(std::size_t n) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
  std::uint64_t pushed_ = 0;
};

using Batch = std::vector<const Transition*>;

// delta = r + gamma * V(s') * (terminal ? 0 : 1) - V(s)
double td_error(double reward, double value, double next_value, double discount, bool terminal);

struct ExplorationSchedule {
  double initial = 0.275;
  double minimum = 0.01;
  double decay_per_epoch = 5e-5;

  double at(int epoch) const;
};

struct TrainConfig {
  WorldConfig world;
  std::uint64_t seed = 1;
  int epochs = 5500;
  int batch_size = 32;
  int buffer_capacity = 50000;
  int buffer_gate = 0;  // transitions required before updates; 0 means batch_size
  double discount = 0.98;
  ExplorationSchedule exploration;
  int actor_hidden = 64;
  int comm_layers = 2;
  int critic_hidden = 256;
  int critic_layers = 2;
  double actor_learning_rate = 1e-2;
  double critic_learning_rate = 2.5e-3;
  nn::AdamConfig adam;  // learning_rate is overridden per network
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
  double grad_clip_norm = 10.0;
  bool on_policy_only = false;
  bool record_wall_time = false;
  bool check_invariants = false;
  int trajectory_interval = 50;  // log every n-th training episode (and the last); 0 disables
  int inference_episodes = 100;

  int gate() const { return buffer_gate > 0 ? buffer_gate : batch_size; }
  nn::AdamConfig adam_with(double learning_rate) const;
  void validate() const;  // throws ConfigError
};

// Derived stream seeds so that every algorithm in an experiment cell sees
// the same episodes.
std::uint64_t training_episode_seed(std::uint64_t seed, int epoch);
std::uint64_t inference_episode_seed(std::uint64_t seed, int episode);

// State-value network with its optimizer. Used as the centralized critic
// (input: ground-truth state) and by the independent critics of IAC
// (input: local features).
class ValueCritic {
 public:
  ValueCritic() = default;
  ValueCritic(int input_size, int hidden_size, int hidden_layers, nn::OptimizerKind optimizer,
              nn::AdamConfig adam, double clip_norm);

  void init(Rng& rng);

  nn::Mlp& network() { return net_; }
  const nn::Mlp& network() const { return net_; }
  const nn::Optimizer& optimizer() const { return optimizer_; }

  double value(std::span<const double> input) const;
  nn::Vector values(const nn::Matrix& inputs) const;

  // Semi-gradient step on 0.5 * mean(delta^2), the TD target held fixed.
  // Returns the TD errors computed with the pre-update parameters.
  std::vector<double> update(const nn::Matrix& inputs, const nn::Matrix& next_inputs,
                             std::span<const double> rewards, std::span<const bool> terminals,
                             double discount);

 private:
  nn::Mlp net_;
  nn::Optimizer optimizer_;
  double clip_norm_ = 0.0;
};

// Critic step on the team reward over a batch of ground-truth states.
std::vector<double> critic_update(ValueCritic& critic, const Batch& batch, double discount);

// Policy shared by a subset of agents, with its own optimizer.
struct PolicyGroup {
  CommNetPolicy policy;
  nn::Optimizer optimizer;
  std::vector<int> members;  // agent indices, ascending
};

// All actors of an experiment: one or more parameter-sharing groups.
class JointActor {
 public:
  JointActor() = default;
  JointActor(std::vector<PolicyGroup> groups, int num_agents, double clip_norm);

  int num_agents() const { return num_agents_; }
  const std::vector<PolicyGroup>& groups() const { return groups_; }
  std::vector<PolicyGroup>& groups() { return groups_; }
  int group_of(int agent) const;

  // action_count x J probabilities for a column-major feature block.
  nn::Matrix probabilities(std::span<const double> features) const;

  // Gradient of mean_b delta_b * log pi(a_agent | o) with respect to the
  // parameters of the agent's group, through the joint forward pass.
  std::vector<double> objective_gradient(const Batch& batch, int agent,
                                         std::span<const double> deltas) const;

  // Gradient ascent on the objective above.
  void ascend(const Batch& batch, int agent, std::span<const double> deltas);

  void store(nn::Checkpoint& checkpoint) const;
  void restore(const nn::Checkpoint& checkpoint);

 private:
  nn::Matrix gather(std::span<const double> features, const PolicyGroup& group) const;

  std::vector<PolicyGroup> groups_;
  std::vector<int> group_index_;
  int num_agents_ = 0;
  double clip_norm_ = 0.0;
};

void actor_update(JointActor& actor, const Batch& batch, int agent, std::span<const double> deltas);

struct UpdateStats {
  int gradient_steps = 0;
  double mean_abs_td_error = 0.0;
};

// Draws mini-batches from the replay buffer, or from the freshest episode
// when training on-policy only.
class BatchSampler {
 public:
  BatchSampler(const ReplayBuffer& buffer, std::size_t batch_size, std::size_t on_policy_window);

  Batch sample(Rng& rng) const;

 private:
  const ReplayBuffer* buffer_;
  std::size_t batch_size_;
  std::size_t window_;
};

// A trainable (or fixed) multi-agent controller.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string name() const = 0;
  virtual std::vector<int> act(std::span<const double> features, double epsilon, bool greedy,
                               Rng& rng) = 0;
  virtual bool learns() const { return true; }
  // One pass of the per-agent update loop.
  virtual UpdateStats update(const BatchSampler& sampler, Rng& rng) = 0;
  virtual nn::Checkpoint checkpoint() const = 0;
  virtual void restore(const nn::Checkpoint& checkpoint) = 0;
};

// CommNet (or any JointActor layout) with one centralized critic.
class CtdeLearner final : public Learner {
 public:
  CtdeLearner(std::string name, JointActor actor, ValueCritic critic, double discount);

  std::string name() const override { return name_; }
  std::vector<int> act(std::span<const double> features, double epsilon, bool greedy,
                       Rng& rng) override;
  UpdateStats update(const BatchSampler& sampler, Rng& rng) override;
  nn::Checkpoint checkpoint() const override;
  void restore(const nn::Checkpoint& checkpoint) override;

  JointActor& actor() { return actor_; }
  ValueCritic& critic() { return critic_; }

 private:
  std::string name_;
  JointActor actor_;
  ValueCritic critic_;
  double discount_;
};

struct ActorLayout {
  enum class Kind { Shared, NoCommunication, Hybrid } kind = Kind::Shared;
};

// Builds the actors of the CTDE family: one shared CommNet, one shared
// network without communication, or the half/half hybrid (even J only).
JointActor make_joint_actor(const TrainConfig& config, ActorLayout layout, Rng& rng);

struct EpochRecord {
  int epoch = 0;
  double epsilon = 0.0;
  double mean_reward = 0.0;
  std::vector<double> per_agent_reward;
  std::size_t buffer_size = 0;
  double wall_ms = 0.0;
  int gradient_steps = 0;
};

void write_epoch_csv_header(std::ostream& out, int num_agents);
void write_epoch_csv_row(std::ostream& out, const EpochRecord& record);

struct TrainSinks {
  std::ostream* epoch_csv = nullptr;
  TrajectoryWriter* trajectories = nullptr;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<EpisodeMetrics> episodes;  // one per training epoch
  std::vector<std::string> invariant_violations;
  int total_gradient_steps = 0;
};

TrainResult train(const TrainConfig& config, Learner& learner, const TrainSinks& sinks = {});

// Greedy rollouts (epsilon = 0, argmax) without learning.
std::vector<EpisodeMetrics> run_inference(const TrainConfig& config, Learner& learner,
                                          int episodes, TrajectoryWriter* trajectories = nullptr,
                                          std::vector<std::string>* invariant_violations = nullptr);

}  // namespace uam
