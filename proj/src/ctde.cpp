#include "uam/ctde.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>

#include "uam/errors.hpp"

namespace uam {

namespace {

constexpr std::uint64_t kActionStream = 0xA11CE;
constexpr std::uint64_t kBatchStream = 0xBA7C4;
constexpr std::uint64_t kInferenceStream = 0x1F3E7;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nn::Matrix column_block(const Batch& batch, std::vector<double> Transition::*field) {
  const auto rows = static_cast<Eigen::Index>((batch.front()->*field).size());
  nn::Matrix m(rows, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& v = batch[b]->*field;
    m.col(static_cast<Eigen::Index>(b)) = Eigen::Map<const nn::Vector>(v.data(), rows);
  }
  return m;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw UsageError("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
  ++pushed_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (n > items_.size()) throw UsageError("ReplayBuffer::sample: not enough transitions");
  // Floyd's algorithm: n distinct indices with n draws.
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  const std::size_t size = items_.size();
  for (std::size_t j = size - n; j < size; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
      chosen.push_back(t);
    } else {
      chosen.push_back(j);
    }
  }
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i : chosen) out.push_back(&items_[i]);
  return out;
}

std::vector<const Transition*> ReplayBuffer::newest(std::size_t n) const {
  n = std::min(n, items_.size());
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = items_.size() - n; i < items_.size(); ++i) out.push_back(&items_[i]);
  return out;
}

double td_error(double reward, double value, double next_value, double discount, bool terminal) {
  return reward + discount * next_value * (terminal ? 0.0 : 1.0) - value;
}

double ExplorationSchedule::at(int epoch) const {
  return std::max(minimum, initial - decay_per_epoch * epoch);
}

nn::AdamConfig TrainConfig::adam_with(double learning_rate) const {
  nn::AdamConfig c = adam;
  c.learning_rate = learning_rate;
  return c;
}

void TrainConfig::validate() const {
  world.validate();
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount factor out of range (0, 1]");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (buffer_capacity < 1) throw ConfigError("replay buffer capacity must be positive");
  if (batch_size > buffer_capacity) throw ConfigError("batch size exceeds replay buffer capacity");
  if (buffer_gate < 0 || gate() > buffer_capacity) {
    throw ConfigError("buffer gate must lie between the batch size and the buffer capacity");
  }
  if (gate() < batch_size) throw ConfigError("buffer gate is smaller than the batch size");
  if (!(exploration.initial >= 0.0 && exploration.initial <= 1.0) ||
      !(exploration.minimum >= 0.0 && exploration.minimum <= exploration.initial) ||
      !(exploration.decay_per_epoch >= 0.0)) {
    throw ConfigError("epsilon schedule out of range");
  }
  if (actor_hidden < 1 || critic_hidden < 1 || critic_layers < 0 || comm_layers < 0) {
    throw ConfigError("network widths must be positive");
  }
  if (!(actor_learning_rate > 0.0) || !(critic_learning_rate > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0)) {
    throw ConfigError("Adam constants out of range");
  }
  if (grad_clip_norm < 0.0) throw ConfigError("gradient clip norm must be non-negative");
  if (trajectory_interval < 0) throw ConfigError("trajectory interval must be non-negative");
  if (inference_episodes < 0) throw ConfigError("inference episodes must be non-negative");
}

std::uint64_t training_episode_seed(std::uint64_t seed, int epoch) {
  return mix_seed(seed, static_cast<std::uint64_t>(epoch));
}

std::uint64_t inference_episode_seed(std::uint64_t seed, int episode) {
  return mix_seed(mix_seed(seed, kInferenceStream), static_cast<std::uint64_t>(episode));
}

ValueCritic::ValueCritic(int input_size, int hidden_size, int hidden_layers,
                         nn::OptimizerKind optimizer, nn::AdamConfig adam, double clip_norm)
    : clip_norm_(clip_norm) {
  std::vector<int> sizes{input_size};
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(hidden_size);
  sizes.push_back(1);
  net_ = nn::Mlp(sizes);
  optimizer_ = nn::Optimizer(optimizer, net_.parameter_count(), adam);
}

void ValueCritic::init(Rng& rng) { net_.init_glorot(rng); }

double ValueCritic::value(std::span<const double> input) const {
  const Eigen::Map<const nn::Vector> x(input.data(), static_cast<Eigen::Index>(input.size()));
  return net_.forward(nn::Vector(x))(0);
}

nn::Vector ValueCritic::values(const nn::Matrix& inputs) const {
  return net_.forward(inputs).row(0).transpose();
}

std::vector<double> ValueCritic::update(const nn::Matrix& inputs, const nn::Matrix& next_inputs,
                                        std::span<const double> rewards,
                                        std::span<const bool> terminals, double discount) {
  const auto n = inputs.cols();
  if (n == 0 || next_inputs.cols() != n || static_cast<Eigen::Index>(rewards.size()) != n ||
      static_cast<Eigen::Index>(terminals.size()) != n) {
    throw ShapeError("ValueCritic::update: batch shapes disagree");
  }
  nn::Mlp::Cache cache;
  const nn::Matrix v = net_.forward(inputs, &cache);
  const nn::Matrix v_next = net_.forward(next_inputs);
  std::vector<double> deltas(static_cast<std::size_t>(n));
  nn::Matrix dv(1, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto i = static_cast<std::size_t>(b);
    deltas[i] = td_error(rewards[i], v(0, b), v_next(0, b), discount, terminals[i]);
    dv(0, b) = -deltas[i] / static_cast<double>(n);
  }
  std::vector<double> grad(net_.parameter_count(), 0.0);
  net_.backward(cache, dv, grad);
  nn::clip_global_norm(grad, clip_norm_);
  optimizer_.apply(net_.mutable_parameters(), grad, nn::Direction::Descent);
  return deltas;
}

std::vector<double> critic_update(ValueCritic& critic, const Batch& batch, double discount) {
  if (batch.empty()) throw UsageError("critic_update: empty batch");
  std::vector<double> rewards;
  std::vector<char> term;
  for (const Transition* t : batch) {
    rewards.push_back(t->team_reward);
    term.push_back(t->terminal ? 1 : 0);
  }
  const std::unique_ptr<bool[]> terminals(new bool[term.size()]);
  for (std::size_t i = 0; i < term.size(); ++i) terminals[i] = term[i] != 0;
  return critic.update(column_block(batch, &Transition::state),
                       column_block(batch, &Transition::next_state), rewards,
                       std::span<const bool>(terminals.get(), term.size()), discount);
}

JointActor::JointActor(std::vector<PolicyGroup> groups, int num_agents, double clip_norm)
    : groups_(std::move(groups)), group_index_(static_cast<std::size_t>(num_agents), -1),
      num_agents_(num_agents), clip_norm_(clip_norm) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    auto& members = groups_[g].members;
    if (members.empty()) throw ConfigError("JointActor: empty policy group");
    std::sort(members.begin(), members.end());
    for (int a : members) {
      if (a < 0 || a >= num_agents || group_index_[static_cast<std::size_t>(a)] >= 0) {
        throw ConfigError("JointActor: agents must belong to exactly one group");
      }
      group_index_[static_cast<std::size_t>(a)] = static_cast<int>(g);
    }
  }
  for (int g : group_index_) {
    if (g < 0) throw ConfigError("JointActor: every agent needs a policy group");
  }
}

int JointActor::group_of(int agent) const { return group_index_.at(static_cast<std::size_t>(agent)); }

nn::Matrix JointActor::gather(std::span<const double> features, const PolicyGroup& group) const {
  const auto f = static_cast<Eigen::Index>(features.size() / static_cast<std::size_t>(num_agents_));
  const Eigen::Map<const nn::Matrix> all(features.data(), f, num_agents_);
  nn::Matrix x(f, static_cast<Eigen::Index>(group.members.size()));
  for (std::size_t m = 0; m < group.members.size(); ++m) {
    x.col(static_cast<Eigen::Index>(m)) = all.col(group.members[m]);
  }
  return x;
}

nn::Matrix JointActor::probabilities(std::span<const double> features) const {
  if (features.size() % static_cast<std::size_t>(num_agents_) != 0) {
    throw ShapeError("JointActor: feature block is not J columns");
  }
  nn::Matrix out(groups_.front().policy.config().action_count, num_agents_);
  for (const auto& group : groups_) {
    const nn::Matrix p = group.policy.forward_joint(gather(features, group),
                                                    static_cast<int>(group.members.size()));
    for (std::size_t m = 0; m < group.members.size(); ++m) {
      out.col(group.members[m]) = p.col(static_cast<Eigen::Index>(m));
    }
  }
  return out;
}

std::vector<double> JointActor::objective_gradient(const Batch& batch, int agent,
                                                   std::span<const double> deltas) const {
  if (batch.empty() || deltas.size() != batch.size()) {
    throw ShapeError("actor update: one TD error per transition required");
  }
  const PolicyGroup& group = groups_.at(static_cast<std::size_t>(group_of(agent)));
  const auto size = static_cast<Eigen::Index>(group.members.size());
  const auto position = static_cast<Eigen::Index>(
      std::find(group.members.begin(), group.members.end(), agent) - group.members.begin());

  nn::Matrix x(group.policy.config().input_size, size * static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    x.middleCols(static_cast<Eigen::Index>(b) * size, size) = gather(batch[b]->features, group);
  }
  CommNetPolicy::Cache cache;
  const nn::Matrix probs = nn::softmax_columns(group.policy.logits(x, static_cast<int>(size), &cache));
  nn::Matrix logit_grad = nn::Matrix::Zero(probs.rows(), probs.cols());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Eigen::Index col = static_cast<Eigen::Index>(b) * size + position;
    const int action = batch[b]->actions[static_cast<std::size_t>(agent)];
    logit_grad.col(col) = -probs.col(col);
    logit_grad(action, col) += 1.0;
    logit_grad.col(col) *= deltas[b] * scale;
  }
  return group.policy.backward_joint(cache, logit_grad);
}

void JointActor::ascend(const Batch& batch, int agent, std::span<const double> deltas) {
  std::vector<double> grad = objective_gradient(batch, agent, deltas);
  nn::clip_global_norm(grad, clip_norm_);
  PolicyGroup& group = groups_.at(static_cast<std::size_t>(group_of(agent)));
  std::vector<double> params = group.policy.parameters();
  group.optimizer.apply(params, grad, nn::Direction::Ascent);
  group.policy.set_parameters(params);
}

void JointActor::store(nn::Checkpoint& checkpoint) const {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    groups_[g].policy.store(checkpoint, "actor" + std::to_string(g));
  }
}

void JointActor::restore(const nn::Checkpoint& checkpoint) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    groups_[g].policy.restore(checkpoint, "actor" + std::to_string(g));
  }
}

void actor_update(JointActor& actor, const Batch& batch, int agent, std::span<const double> deltas) {
  actor.ascend(batch, agent, deltas);
}

BatchSampler::BatchSampler(const ReplayBuffer& buffer, std::size_t batch_size,
                           std::size_t on_policy_window)
    : buffer_(&buffer), batch_size_(batch_size), window_(on_policy_window) {}

Batch BatchSampler::sample(Rng& rng) const {
  if (window_ == 0) return buffer_->sample(batch_size_, rng);
  const Batch recent = buffer_->newest(std::max(window_, batch_size_));
  if (recent.size() < batch_size_) throw UsageError("BatchSampler: not enough recent transitions");
  Batch out;
  out.reserve(batch_size_);
  std::vector<std::size_t> chosen;
  for (std::size_t j = recent.size() - batch_size_; j < recent.size(); ++j) {
    const std::size_t t = rng.index(j + 1);
    chosen.push_back(std::find(chosen.begin(), chosen.end(), t) == chosen.end() ? t : j);
  }
  for (std::size_t i : chosen) out.push_back(recent[i]);
  return out;
}

CtdeLearner::CtdeLearner(std::string name, JointActor actor, ValueCritic critic, double discount)
    : name_(std::move(name)), actor_(std::move(actor)), critic_(std::move(critic)),
      discount_(discount) {}

std::vector<int> CtdeLearner::act(std::span<const double> features, double epsilon, bool greedy,
                                  Rng& rng) {
  const nn::Matrix probs = actor_.probabilities(features);
  std::vector<int> actions(static_cast<std::size_t>(actor_.num_agents()));
  for (int j = 0; j < actor_.num_agents(); ++j) {
    const nn::Vector p = probs.col(j);
    actions[static_cast<std::size_t>(j)] =
        select_action(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                      epsilon, rng, greedy ? SelectionMode::Argmax : SelectionMode::Sample);
  }
  return actions;
}

UpdateStats CtdeLearner::update(const BatchSampler& sampler, Rng& rng) {
  UpdateStats stats;
  double abs_delta = 0.0;
  std::size_t count = 0;
  for (int j = 0; j < actor_.num_agents(); ++j) {
    const Batch batch = sampler.sample(rng);
    const std::vector<double> deltas = critic_update(critic_, batch, discount_);
    actor_.ascend(batch, j, deltas);
    for (double d : deltas) abs_delta += std::abs(d);
    count += deltas.size();
    stats.gradient_steps += 2;
  }
  stats.mean_abs_td_error = count ? abs_delta / static_cast<double>(count) : 0.0;
  return stats;
}

nn::Checkpoint CtdeLearner::checkpoint() const {
  nn::Checkpoint c;
  c.algorithm = name_;
  actor_.store(c);
  c.networks["critic"] = critic_.network();
  return c;
}

void CtdeLearner::restore(const nn::Checkpoint& checkpoint) {
  actor_.restore(checkpoint);
  critic_.network().set_parameters(
      checkpoint.network("critic", critic_.network().layer_sizes()).parameters());
}

JointActor make_joint_actor(const TrainConfig& config, ActorLayout layout, Rng& rng) {
  const int J = config.world.num_uams;
  CommNetConfig cc;
  cc.input_size = static_cast<int>(config.world.feature_size());
  cc.hidden_size = config.actor_hidden;
  cc.comm_layers = config.comm_layers;
  cc.action_count = kActionCount;

  auto make_group = [&](bool communicate, std::vector<int> members) {
    CommNetConfig c = cc;
    c.communicate = communicate;
    PolicyGroup g{CommNetPolicy(c), {}, std::move(members)};
    g.policy.init(rng);
    g.optimizer = nn::Optimizer(config.optimizer, g.policy.parameter_count(),
                                config.adam_with(config.actor_learning_rate));
    return g;
  };
  std::vector<int> all(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) all[static_cast<std::size_t>(j)] = j;

  std::vector<PolicyGroup> groups;
  switch (layout.kind) {
    case ActorLayout::Kind::Shared: groups.push_back(make_group(true, all)); break;
    case ActorLayout::Kind::NoCommunication: groups.push_back(make_group(false, all)); break;
    case ActorLayout::Kind::Hybrid: {
      if (J % 2 != 0 || J < 2) throw ConfigError("hybrid layout requires an even number of UAMs");
      groups.push_back(make_group(true, std::vector<int>(all.begin(), all.begin() + J / 2)));
      groups.push_back(make_group(false, std::vector<int>(all.begin() + J / 2, all.end())));
      break;
    }
  }
  return JointActor(std::move(groups), J, config.grad_clip_norm);
}

void write_epoch_csv_header(std::ostream& out, int num_agents) {
  out << "epoch,epsilon,mean_reward";
  for (int j = 1; j <= num_agents; ++j) out << ",per_agent_reward_" << j;
  out << ",buffer_size,wall_ms\n";
}

void write_epoch_csv_row(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << format_double(r.epsilon) << ',' << format_double(r.mean_reward);
  for (double v : r.per_agent_reward) out << ',' << format_double(v);
  out << ',' << r.buffer_size << ',' << format_double(r.wall_ms) << '\n';
}

namespace {

// Runs one episode with the learner; shared by training and inference.
struct EpisodeOutcome {
  EpisodeMetrics metrics;
  std::vector<double> reward_sums;
};

EpisodeOutcome run_episode(const TrainConfig& config, Learner& learner, std::uint64_t world_seed,
                           int episode_index, double epsilon, bool greedy, Rng& rng,
                           ReplayBuffer* buffer, TrajectoryWriter* trajectories,
                           std::vector<std::string>* violations) {
  World world(config.world, world_seed);
  const int J = config.world.num_uams;
  EpisodeRecorder recorder(J, world_seed);
  EpisodeOutcome outcome;
  outcome.reward_sums.assign(static_cast<std::size_t>(J), 0.0);

  std::vector<double> features = world.joint_features();
  std::vector<double> state = world.state_vector();
  std::vector<double> energy_before(static_cast<std::size_t>(J));
  while (!world.done()) {
    for (int j = 0; j < J; ++j) {
      energy_before[static_cast<std::size_t>(j)] = world.uams()[j].energy.remaining_kwh;
    }
    const std::vector<int> actions = learner.act(features, epsilon, greedy, rng);
    StepResult step = world.step(actions);
    std::vector<double> next_features = world.joint_features();
    std::vector<double> next_state = world.state_vector();

    for (int j = 0; j < J; ++j) outcome.reward_sums[j] += step.reward.per_agent[j];
    recorder.record(world, step);
    if (trajectories != nullptr) trajectories->write(episode_index, world, step);
    if (violations != nullptr && violations->size() < 100) {
      for (auto& v : world.check_invariants()) violations->push_back(std::move(v));
      for (int j = 0; j < J; ++j) {
        if (energy_before[static_cast<std::size_t>(j)] <= 0.0 &&
            step.applied_actions[static_cast<std::size_t>(j)] != static_cast<int>(Action::Hold)) {
          violations->push_back("uam " + std::to_string(j) + ": acted with an empty battery");
        }
      }
    }
    if (buffer != nullptr) {
      Transition t;
      t.state = std::move(state);
      t.features = features;
      t.actions = actions;
      t.rewards = step.reward.per_agent;
      t.team_reward = step.reward.team;
      t.next_state = next_state;
      t.next_features = next_features;
      t.terminal = step.done;
      buffer->push(std::move(t));
    }
    features = std::move(next_features);
    state = std::move(next_state);
  }
  outcome.metrics = recorder.finish();
  return outcome;
}

}  // namespace

TrainResult train(const TrainConfig& config, Learner& learner, const TrainSinks& sinks) {
  config.validate();
  const int J = config.world.num_uams;
  const int T = config.world.steps_per_episode();
  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  const BatchSampler sampler(buffer, static_cast<std::size_t>(config.batch_size),
                             config.on_policy_only ? static_cast<std::size_t>(T) : 0);
  Rng action_rng(mix_seed(config.seed, kActionStream));
  Rng batch_rng(mix_seed(config.seed, kBatchStream));

  if (sinks.epoch_csv != nullptr) write_epoch_csv_header(*sinks.epoch_csv, J);

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double epsilon = config.exploration.at(epoch);
    const bool log = sinks.trajectories != nullptr && config.trajectory_interval > 0 &&
                     (epoch % config.trajectory_interval == 0 || epoch + 1 == config.epochs);

    EpisodeOutcome outcome =
        run_episode(config, learner, training_episode_seed(config.seed, epoch), epoch, epsilon,
                    false, action_rng, learner.learns() ? &buffer : nullptr,
                    log ? sinks.trajectories : nullptr,
                    config.check_invariants ? &result.invariant_violations : nullptr);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.epsilon = epsilon;
    if (learner.learns() && buffer.size() >= static_cast<std::size_t>(config.gate())) {
      rec.gradient_steps = learner.update(sampler, batch_rng).gradient_steps;
      result.total_gradient_steps += rec.gradient_steps;
    }
    double total = 0.0;
    for (double s : outcome.reward_sums) {
      rec.per_agent_reward.push_back(s / T);
      total += s;
    }
    rec.mean_reward = total / (static_cast<double>(T) * J);
    rec.buffer_size = buffer.size();
    if (config.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                        .count();
    }
    if (sinks.epoch_csv != nullptr) write_epoch_csv_row(*sinks.epoch_csv, rec);
    result.epochs.push_back(std::move(rec));
    result.episodes.push_back(std::move(outcome.metrics));
  }
  return result;
}

std::vector<EpisodeMetrics> run_inference(const TrainConfig& config, Learner& learner,
                                          int episodes, TrajectoryWriter* trajectories,
                                          std::vector<std::string>* invariant_violations) {
  config.validate();
  if (episodes < 0) throw UsageError("run_inference: negative episode count");
  Rng rng(mix_seed(config.seed, kInferenceStream ^ kActionStream));
  std::vector<EpisodeMetrics> out;
  out.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    out.push_back(run_episode(config, learner, inference_episode_seed(config.seed, e), e, 0.0, true,
                              rng, nullptr, trajectories, invariant_violations)
                      .metrics);
  }
  return out;
}

}  // namespace uam
