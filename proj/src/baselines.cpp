#include "uam/baselines.hpp"

#include <algorithm>

#include "uam/errors.hpp"

namespace uam {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;

nn::Matrix agent_columns(const Batch& batch, int agent, bool next) {
  const auto& first = next ? batch.front()->next_features : batch.front()->features;
  const auto J = static_cast<Eigen::Index>(batch.front()->actions.size());
  const auto f = static_cast<Eigen::Index>(first.size()) / J;
  nn::Matrix m(f, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& v = next ? batch[b]->next_features : batch[b]->features;
    m.col(static_cast<Eigen::Index>(b)) =
        Eigen::Map<const nn::Vector>(v.data() + f * agent, f);
  }
  return m;
}

}  // namespace

std::string to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::CommNetCtde: return "commnet_ctde";
    case BenchmarkKind::Hybrid: return "hybrid";
    case BenchmarkKind::Dnn: return "dnn";
    case BenchmarkKind::Iac: return "iac";
    case BenchmarkKind::Dqn: return "dqn";
    case BenchmarkKind::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

BenchmarkKind parse_benchmark(const std::string& key) {
  for (BenchmarkKind k : kAllBenchmarks) {
    if (to_string(k) == key) return k;
  }
  throw ConfigError("unknown algorithm '" + key +
                    "' (expected commnet_ctde, hybrid, dnn, iac, dqn or monte_carlo)");
}

CommNetPolicy make_dnn_policy(CommNetConfig config) {
  config.communicate = false;
  return CommNetPolicy(config);
}

int monte_carlo_policy(Rng& rng) { return static_cast<int>(rng.index(kActionCount)); }

double dqn_target(double reward, double max_next_q, double discount, bool terminal) {
  return terminal ? reward : reward + discount * max_next_q;
}

IacLearner::IacLearner(JointActor actor, std::vector<ValueCritic> critics, double discount)
    : actor_(std::move(actor)), critics_(std::move(critics)), discount_(discount) {
  if (static_cast<int>(critics_.size()) != actor_.num_agents()) {
    throw ConfigError("IAC needs one critic per agent");
  }
}

std::vector<int> IacLearner::act(std::span<const double> features, double epsilon, bool greedy,
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

std::vector<double> IacLearner::critic_step(int agent, const Batch& batch) {
  if (batch.empty()) throw UsageError("IAC critic step: empty batch");
  std::vector<double> rewards;
  std::unique_ptr<bool[]> terminals(new bool[batch.size()]);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    rewards.push_back(batch[b]->rewards.at(static_cast<std::size_t>(agent)));
    terminals[b] = batch[b]->terminal;
  }
  return critics_.at(static_cast<std::size_t>(agent))
      .update(agent_columns(batch, agent, false), agent_columns(batch, agent, true), rewards,
              std::span<const bool>(terminals.get(), batch.size()), discount_);
}

UpdateStats IacLearner::update(const BatchSampler& sampler, Rng& rng) {
  UpdateStats stats;
  double abs_delta = 0.0;
  std::size_t count = 0;
  for (int j = 0; j < actor_.num_agents(); ++j) {
    const Batch batch = sampler.sample(rng);
    const std::vector<double> deltas = critic_step(j, batch);
    actor_.ascend(batch, j, deltas);
    for (double d : deltas) abs_delta += std::abs(d);
    count += deltas.size();
    stats.gradient_steps += 2;
  }
  stats.mean_abs_td_error = count ? abs_delta / static_cast<double>(count) : 0.0;
  return stats;
}

nn::Checkpoint IacLearner::checkpoint() const {
  nn::Checkpoint c;
  c.algorithm = name();
  actor_.store(c);
  for (std::size_t j = 0; j < critics_.size(); ++j) {
    c.networks["critic" + std::to_string(j)] = critics_[j].network();
  }
  return c;
}

void IacLearner::restore(const nn::Checkpoint& checkpoint) {
  actor_.restore(checkpoint);
  for (std::size_t j = 0; j < critics_.size(); ++j) {
    auto& net = critics_[j].network();
    net.set_parameters(
        checkpoint.network("critic" + std::to_string(j), net.layer_sizes()).parameters());
  }
}

DqnLearner::DqnLearner(std::vector<nn::Mlp> q_networks, nn::OptimizerKind optimizer,
                       nn::AdamConfig adam, double clip_norm, double discount)
    : q_(std::move(q_networks)), clip_norm_(clip_norm), discount_(discount) {
  if (q_.empty()) throw ConfigError("DQN needs at least one agent");
  for (const auto& q : q_) optimizers_.emplace_back(optimizer, q.parameter_count(), adam);
}

std::vector<int> DqnLearner::act(std::span<const double> features, double epsilon, bool,
                                 Rng& rng) {
  const auto J = static_cast<Eigen::Index>(q_.size());
  if (features.size() % q_.size() != 0) throw ShapeError("DQN: feature block is not J columns");
  const auto f = static_cast<Eigen::Index>(features.size()) / J;
  std::vector<int> actions(q_.size());
  for (Eigen::Index j = 0; j < J; ++j) {
    const nn::Vector o = Eigen::Map<const nn::Vector>(features.data() + f * j, f);
    if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
      actions[static_cast<std::size_t>(j)] = monte_carlo_policy(rng);
      continue;
    }
    const nn::Vector q = q_[static_cast<std::size_t>(j)].forward(o);
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q.size(); ++a) {
      if (q(a) > q(best)) best = a;
    }
    actions[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return actions;
}

std::vector<double> DqnLearner::q_step(int agent, const Batch& batch) {
  if (batch.empty()) throw UsageError("DQN step: empty batch");
  auto& net = q_.at(static_cast<std::size_t>(agent));
  const nn::Matrix o = agent_columns(batch, agent, false);
  const nn::Matrix o_next = agent_columns(batch, agent, true);
  nn::Mlp::Cache cache;
  const nn::Matrix q = net.forward(o, &cache);
  const nn::Matrix q_next = net.forward(o_next);
  const auto n = static_cast<Eigen::Index>(batch.size());
  nn::Matrix grad_out = nn::Matrix::Zero(q.rows(), n);
  std::vector<double> targets(batch.size());
  for (Eigen::Index b = 0; b < n; ++b) {
    const Transition& t = *batch[static_cast<std::size_t>(b)];
    const double y = dqn_target(t.rewards.at(static_cast<std::size_t>(agent)),
                                q_next.col(b).maxCoeff(), discount_, t.terminal);
    const int a = t.actions.at(static_cast<std::size_t>(agent));
    grad_out(a, b) = (q(a, b) - y) / static_cast<double>(n);
    targets[static_cast<std::size_t>(b)] = y;
  }
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(cache, grad_out, grad);
  nn::clip_global_norm(grad, clip_norm_);
  optimizers_[static_cast<std::size_t>(agent)].apply(net.mutable_parameters(), grad,
                                                     nn::Direction::Descent);
  return targets;
}

UpdateStats DqnLearner::update(const BatchSampler& sampler, Rng& rng) {
  UpdateStats stats;
  for (std::size_t j = 0; j < q_.size(); ++j) {
    q_step(static_cast<int>(j), sampler.sample(rng));
    ++stats.gradient_steps;
  }
  return stats;
}

nn::Checkpoint DqnLearner::checkpoint() const {
  nn::Checkpoint c;
  c.algorithm = name();
  for (std::size_t j = 0; j < q_.size(); ++j) c.networks["q" + std::to_string(j)] = q_[j];
  return c;
}

void DqnLearner::restore(const nn::Checkpoint& checkpoint) {
  for (std::size_t j = 0; j < q_.size(); ++j) {
    q_[j].set_parameters(
        checkpoint.network("q" + std::to_string(j), q_[j].layer_sizes()).parameters());
  }
}

std::vector<int> MonteCarloLearner::act(std::span<const double>, double, bool, Rng& rng) {
  std::vector<int> actions(static_cast<std::size_t>(num_agents_));
  for (int& a : actions) a = monte_carlo_policy(rng);
  return actions;
}

nn::Checkpoint MonteCarloLearner::checkpoint() const {
  nn::Checkpoint c;
  c.algorithm = name();
  return c;
}

std::unique_ptr<Learner> make_learner(BenchmarkKind kind, const TrainConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, kInitStream));
  const int J = config.world.num_uams;
  const auto state = static_cast<int>(config.world.state_size());
  const auto features = static_cast<int>(config.world.feature_size());
  const auto critic_adam = config.adam_with(config.critic_learning_rate);

  auto central_critic = [&] {
    ValueCritic c(state, config.critic_hidden, config.critic_layers, config.optimizer, critic_adam,
                  config.grad_clip_norm);
    c.init(rng);
    return c;
  };
  auto ctde = [&](ActorLayout::Kind layout) -> std::unique_ptr<Learner> {
    JointActor actor = make_joint_actor(config, ActorLayout{layout}, rng);
    return std::make_unique<CtdeLearner>(to_string(kind), std::move(actor), central_critic(),
                                         config.discount);
  };

  switch (kind) {
    case BenchmarkKind::CommNetCtde: return ctde(ActorLayout::Kind::Shared);
    case BenchmarkKind::Dnn: return ctde(ActorLayout::Kind::NoCommunication);
    case BenchmarkKind::Hybrid: return ctde(ActorLayout::Kind::Hybrid);
    case BenchmarkKind::Iac: {
      JointActor actor = make_joint_actor(config, ActorLayout{ActorLayout::Kind::Shared}, rng);
      std::vector<ValueCritic> critics;
      for (int j = 0; j < J; ++j) {
        critics.emplace_back(features, config.critic_hidden, config.critic_layers,
                             config.optimizer, critic_adam, config.grad_clip_norm);
        critics.back().init(rng);
      }
      return std::make_unique<IacLearner>(std::move(actor), std::move(critics), config.discount);
    }
    case BenchmarkKind::Dqn: {
      std::vector<nn::Mlp> nets;
      for (int j = 0; j < J; ++j) {
        nets.emplace_back(std::vector<int>{features, config.actor_hidden, config.actor_hidden,
                                           kActionCount});
        nets.back().init_glorot(rng);
      }
      return std::make_unique<DqnLearner>(std::move(nets), config.optimizer, critic_adam,
                                          config.grad_clip_norm, config.discount);
    }
    case BenchmarkKind::MonteCarlo: return std::make_unique<MonteCarloLearner>(J);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace uam
