#include "uam/commnet.hpp"

#include "uam/errors.hpp"

namespace uam {

nn::Matrix comm_mean(const nn::Matrix& hidden, int group_size) {
  if (group_size < 1 || hidden.cols() % group_size != 0) {
    throw ShapeError("comm_mean: column count is not a multiple of the group size");
  }
  nn::Matrix c = nn::Matrix::Zero(hidden.rows(), hidden.cols());
  if (group_size == 1) return c;
  const double scale = 1.0 / (group_size - 1);
  for (Eigen::Index g = 0; g < hidden.cols(); g += group_size) {
    const auto block = hidden.middleCols(g, group_size);
    const nn::Vector total = block.rowwise().sum();
    for (int j = 0; j < group_size; ++j) {
      c.col(g + j) = (total - block.col(j)) * scale;
    }
  }
  return c;
}

CommNetPolicy::CommNetPolicy(CommNetConfig config) : config_(config) {
  if (config_.input_size < 1 || config_.hidden_size < 1 || config_.comm_layers < 0 ||
      config_.action_count < 1) {
    throw ShapeError("CommNetPolicy: invalid dimensions");
  }
  const int h = config_.hidden_size;
  encoder_ = nn::Mlp({config_.input_size, h}, nn::OutputActivation::Relu);
  for (int i = 0; i < config_.comm_layers; ++i) {
    comm_.emplace_back(std::vector<int>{2 * h, h}, nn::OutputActivation::Relu);
  }
  decoder_ = nn::Mlp({h, config_.action_count});
}

void CommNetPolicy::init(Rng& rng) {
  encoder_.init_glorot(rng);
  for (auto& m : comm_) m.init_glorot(rng);
  decoder_.init_glorot(rng);
}

std::size_t CommNetPolicy::parameter_count() const {
  std::size_t n = encoder_.parameter_count() + decoder_.parameter_count();
  for (const auto& m : comm_) n += m.parameter_count();
  return n;
}

std::vector<double> CommNetPolicy::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  auto append = [&out](const nn::Mlp& m) {
    out.insert(out.end(), m.parameters().begin(), m.parameters().end());
  };
  append(encoder_);
  for (const auto& m : comm_) append(m);
  append(decoder_);
  return out;
}

void CommNetPolicy::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw ShapeError("CommNetPolicy: parameter count mismatch");
  std::size_t offset = 0;
  auto take = [&](nn::Mlp& m) {
    m.set_parameters(values.subspan(offset, m.parameter_count()));
    offset += m.parameter_count();
  };
  take(encoder_);
  for (auto& m : comm_) take(m);
  take(decoder_);
}

nn::Matrix CommNetPolicy::encode(const nn::Matrix& observations) const {
  return encoder_.forward(observations);
}

nn::Matrix CommNetPolicy::logits(const nn::Matrix& observations, int group_size,
                                 Cache* cache) const {
  const int h = config_.hidden_size;
  nn::Matrix hidden = encoder_.forward(observations, cache ? &cache->encoder : nullptr);
  if (cache != nullptr) {
    cache->comm.assign(comm_.size(), nn::Mlp::Cache{});
    cache->group_size = group_size;
  }
  for (std::size_t i = 0; i < comm_.size(); ++i) {
    nn::Matrix x(2 * h, hidden.cols());
    x.topRows(h) = hidden;
    if (config_.communicate) {
      x.bottomRows(h) = comm_mean(hidden, group_size);
    } else {
      x.bottomRows(h).setZero();
    }
    hidden = comm_[i].forward(x, cache ? &cache->comm[i] : nullptr);
  }
  return decoder_.forward(hidden, cache ? &cache->decoder : nullptr);
}

nn::Matrix CommNetPolicy::forward_joint(const nn::Matrix& observations, int group_size) const {
  return nn::softmax_columns(logits(observations, group_size));
}

std::vector<double> CommNetPolicy::backward_joint(const Cache& cache,
                                                  const nn::Matrix& logit_grad) const {
  const int h = config_.hidden_size;
  std::vector<double> grad(parameter_count(), 0.0);
  std::span<double> all(grad);

  std::size_t offset = encoder_.parameter_count();
  std::vector<std::size_t> comm_offsets;
  for (const auto& m : comm_) {
    comm_offsets.push_back(offset);
    offset += m.parameter_count();
  }
  nn::Matrix g =
      decoder_.backward(cache.decoder, logit_grad, all.subspan(offset, decoder_.parameter_count()));
  for (int i = static_cast<int>(comm_.size()) - 1; i >= 0; --i) {
    const nn::Matrix dx = comm_[i].backward(cache.comm[i], g,
                                            all.subspan(comm_offsets[i], comm_[i].parameter_count()));
    g = dx.topRows(h);
    if (config_.communicate) g += comm_mean(dx.bottomRows(h), cache.group_size);
  }
  encoder_.backward(cache.encoder, g, all.subspan(0, encoder_.parameter_count()));
  return grad;
}

void CommNetPolicy::store(nn::Checkpoint& checkpoint, const std::string& prefix) const {
  checkpoint.networks[prefix + ".encoder"] = encoder_;
  for (std::size_t i = 0; i < comm_.size(); ++i) {
    checkpoint.networks[prefix + ".comm" + std::to_string(i)] = comm_[i];
  }
  checkpoint.networks[prefix + ".decoder"] = decoder_;
}

void CommNetPolicy::restore(const nn::Checkpoint& checkpoint, const std::string& prefix) {
  encoder_.set_parameters(
      checkpoint.network(prefix + ".encoder", encoder_.layer_sizes()).parameters());
  for (std::size_t i = 0; i < comm_.size(); ++i) {
    comm_[i].set_parameters(
        checkpoint.network(prefix + ".comm" + std::to_string(i), comm_[i].layer_sizes())
            .parameters());
  }
  decoder_.set_parameters(
      checkpoint.network(prefix + ".decoder", decoder_.layer_sizes()).parameters());
}

int select_action(std::span<const double> probs, double epsilon, Rng& rng, SelectionMode mode) {
  const std::size_t n = probs.size();
  if (n == 0) throw ShapeError("select_action: empty distribution");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return static_cast<int>(rng.index(n));
  if (mode == SelectionMode::Argmax) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (probs[i] > probs[best]) best = i;
    }
    return static_cast<int>(best);
  }
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cumulative += probs[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  // Rounding left the cumulative sum just below 1: take the last action
  // with nonzero mass.
  for (std::size_t i = n; i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(n - 1);
}

nn::Matrix log_prob_logit_grad(const nn::Matrix& probs, std::span<const int> actions,
                               std::span<const double> weights) {
  if (static_cast<Eigen::Index>(actions.size()) != probs.cols() || actions.size() != weights.size()) {
    throw ShapeError("log_prob_logit_grad: one action and weight per column required");
  }
  nn::Matrix g = -probs;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    g(actions[static_cast<std::size_t>(c)], c) += 1.0;
    g.col(c) *= weights[static_cast<std::size_t>(c)];
  }
  return g;
}

}  // namespace uam
