#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "uam/baselines.hpp"
#include "uam/errors.hpp"

using namespace uam;

namespace {

TrainConfig small_config(int uams) {
  TrainConfig c;
  c.world.num_uams = uams;
  c.world.num_passengers = 4;
  c.world.episode_minutes = 10.0;
  c.epochs = 3;
  c.batch_size = 4;
  c.buffer_capacity = 100;
  c.actor_hidden = 8;
  c.critic_hidden = 8;
  return c;
}

std::vector<double> random_features(const TrainConfig& c, Rng& rng) {
  std::vector<double> v(c.world.feature_size() * static_cast<std::size_t>(c.world.num_uams));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

Transition random_transition(const TrainConfig& c, Rng& rng) {
  Transition t;
  t.state.assign(c.world.state_size(), 0.0);
  for (double& x : t.state) x = rng.uniform(-1.0, 1.0);
  t.next_state = t.state;
  t.features = random_features(c, rng);
  t.next_features = random_features(c, rng);
  for (int j = 0; j < c.world.num_uams; ++j) {
    t.actions.push_back(static_cast<int>(rng.index(kActionCount)));
    t.rewards.push_back(rng.uniform(-3.0, 1.0));
  }
  t.team_reward = rng.uniform(-5.0, 0.0);
  return t;
}

}  // namespace

TEST_CASE("benchmark keys round-trip") {
  for (BenchmarkKind k : kAllBenchmarks) CHECK(parse_benchmark(to_string(k)) == k);
  CHECK_THROWS_AS(parse_benchmark("qmix"), ConfigError);
}

TEST_CASE("random policy is uniform, in range and seed-determined") {
  Rng rng(1);
  std::vector<int> counts(kActionCount, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const int a = monte_carlo_policy(rng);
    REQUIRE(a >= 0);
    REQUIRE(a < kActionCount);
    ++counts[a];
  }
  const double expected = static_cast<double>(draws) / kActionCount;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(kActionCount - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);

  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) CHECK(monte_carlo_policy(a) == monte_carlo_policy(b));
}

TEST_CASE("dqn target") {
  CHECK(dqn_target(0.5, 3.0, 0.98, true) == 0.5);
  CHECK(dqn_target(0.5, 3.0, 0.0, false) == 0.5);
  CHECK(dqn_target(0.5, 3.0, 0.98, false) == doctest::Approx(0.5 + 0.98 * 3.0));
}

TEST_CASE("a linear Q network takes the closed-form step") {
  TrainConfig c = small_config(1);
  const int F = static_cast<int>(c.world.feature_size());
  nn::Mlp q({F, kActionCount});
  Rng rng(2);
  q.init_glorot(rng);
  const double alpha = 0.01;
  DqnLearner dqn({q}, nn::OptimizerKind::Sgd, nn::AdamConfig{alpha}, 0.0, 0.9);
  const Transition t = random_transition(c, rng);
  const Batch batch{&t};

  const nn::Vector o = Eigen::Map<const nn::Vector>(t.features.data(), F);
  const nn::Vector o2 = Eigen::Map<const nn::Vector>(t.next_features.data(), F);
  const nn::Vector q_now = q.forward(o);
  const double y = t.rewards[0] + 0.9 * q.forward(o2).maxCoeff();
  const int a = t.actions[0];
  const double err = q_now(a) - y;

  const auto targets = dqn.q_step(0, batch);
  CHECK(targets[0] == doctest::Approx(y).epsilon(1e-14));
  const nn::Mlp& after = dqn.q_networks()[0];
  for (int k = 0; k < F; ++k) {
    CHECK(after.weight(0)(a, k) == doctest::Approx(q.weight(0)(a, k) - alpha * err * o(k)).epsilon(1e-13));
    const int other = (a + 1) % kActionCount;
    CHECK(after.weight(0)(other, k) == q.weight(0)(other, k));
  }
  CHECK(after.bias(0)(a) == doctest::Approx(q.bias(0)(a) - alpha * err).epsilon(1e-13));
}

TEST_CASE("independent critics hold distinct parameters after asymmetric updates") {
  const TrainConfig c = small_config(2);
  auto learner = make_learner(BenchmarkKind::Iac, c);
  auto& iac = dynamic_cast<IacLearner&>(*learner);
  // Start both critics from the same point so only the data separates them.
  iac.critics()[1].network().set_parameters(iac.critics()[0].network().parameters());
  Rng rng(3);
  std::vector<Transition> store;
  for (int i = 0; i < 4; ++i) store.push_back(random_transition(c, rng));
  Batch batch;
  for (const auto& t : store) batch.push_back(&t);
  iac.critic_step(0, batch);
  iac.critic_step(1, batch);
  const auto p0 = iac.critics()[0].network().parameters();
  const auto p1 = iac.critics()[1].network().parameters();
  CHECK(!std::equal(p0.begin(), p0.end(), p1.begin()));
}

TEST_CASE("independent critic errors are local td errors") {
  const TrainConfig c = small_config(2);
  auto learner = make_learner(BenchmarkKind::Iac, c);
  auto& iac = dynamic_cast<IacLearner&>(*learner);
  Rng rng(4);
  Transition t = random_transition(c, rng);
  const Batch batch{&t};
  const std::size_t F = c.world.feature_size();
  for (int j = 0; j < 2; ++j) {
    const ValueCritic& critic = iac.critics()[j];
    const double v = critic.value(std::span(t.features).subspan(F * j, F));
    const double v2 = critic.value(std::span(t.next_features).subspan(F * j, F));
    const auto deltas = iac.critic_step(j, batch);
    CHECK(deltas[0] == doctest::Approx(td_error(t.rewards[j], v, v2, c.discount, false)).epsilon(1e-13));
  }
}

TEST_CASE("independent and centralized critics see different inputs") {
  // Identical reward streams, but the centralized critic reads the ground
  // truth while the independent one reads local features.
  TrainConfig c = small_config(2);
  auto iac_learner = make_learner(BenchmarkKind::Iac, c);
  auto ctde_learner = make_learner(BenchmarkKind::CommNetCtde, c);
  auto& iac = dynamic_cast<IacLearner&>(*iac_learner);
  auto& ctde = dynamic_cast<CtdeLearner&>(*ctde_learner);
  CHECK(iac.critics()[0].network().input_size() == static_cast<int>(c.world.feature_size()));
  CHECK(ctde.critic().network().input_size() == static_cast<int>(c.world.state_size()));

  Rng rng(5);
  std::vector<Transition> episode{random_transition(c, rng), random_transition(c, rng)};
  episode[1].terminal = true;
  for (auto& t : episode) {
    t.rewards = {t.team_reward, t.team_reward};
  }
  Batch batch{&episode[0], &episode[1]};
  const auto d_iac = iac.critic_step(0, batch);
  const auto d_ctde = critic_update(ctde.critic(), batch, c.discount);
  CHECK(d_iac != d_ctde);
}

TEST_CASE("hybrid requires an even fleet") {
  TrainConfig c = small_config(3);
  Rng rng(6);
  CHECK_THROWS_AS(make_joint_actor(c, ActorLayout{ActorLayout::Kind::Hybrid}, rng), ConfigError);
}

TEST_CASE("hybrid halves communicate only among communicating peers") {
  const TrainConfig c = small_config(4);
  Rng rng(7);
  const JointActor actor = make_joint_actor(c, ActorLayout{ActorLayout::Kind::Hybrid}, rng);
  REQUIRE(actor.groups().size() == 2);
  CHECK(actor.groups()[0].members == std::vector<int>{0, 1});
  CHECK(actor.groups()[1].members == std::vector<int>{2, 3});
  CHECK(actor.groups()[0].policy.config().communicate);
  CHECK(!actor.groups()[1].policy.config().communicate);

  const std::size_t F = c.world.feature_size();
  std::vector<double> x = random_features(c, rng);
  const nn::Matrix before = actor.probabilities(x);
  std::vector<double> y = x;
  for (std::size_t i = 0; i < 2 * F; ++i) y[i] += 0.3;  // perturb the communicating half
  const nn::Matrix after = actor.probabilities(y);
  CHECK(after.col(2) == before.col(2));
  CHECK(after.col(3) == before.col(3));

  std::vector<double> z = x;
  for (std::size_t i = 2 * F; i < 4 * F; ++i) z[i] -= 0.4;  // perturb the other half
  const nn::Matrix other = actor.probabilities(z);
  CHECK(other.col(0) == before.col(0));
  CHECK(other.col(1) == before.col(1));

  // Agent 0's communication vector is agent 1's hidden state.
  const CommNetPolicy& p = actor.groups()[0].policy;
  nn::Matrix obs(F, 2);
  obs.col(0) = Eigen::Map<const nn::Vector>(x.data(), static_cast<Eigen::Index>(F));
  obs.col(1) = Eigen::Map<const nn::Vector>(x.data() + F, static_cast<Eigen::Index>(F));
  const nn::Matrix h = p.encode(obs);
  CHECK(comm_mean(h, 2).col(0) == h.col(1));
}

TEST_CASE("a two-agent hybrid leaves the communicating agent without peers") {
  const TrainConfig c = small_config(2);
  Rng rng(8);
  const JointActor actor = make_joint_actor(c, ActorLayout{ActorLayout::Kind::Hybrid}, rng);
  const CommNetPolicy& p = actor.groups()[0].policy;
  std::vector<double> x = random_features(c, rng);
  const nn::Matrix probs = actor.probabilities(x);
  nn::Matrix obs(c.world.feature_size(), 1);
  obs.col(0) = Eigen::Map<const nn::Vector>(x.data(), obs.rows());
  CHECK(p.forward_joint(obs, 1).col(0) == probs.col(0));
  CHECK(comm_mean(p.encode(obs), 1).isZero());
}

TEST_CASE("no-communication policy outputs sum to one and ignore other agents") {
  const TrainConfig c = small_config(3);
  Rng rng(9);
  const JointActor actor =
      make_joint_actor(c, ActorLayout{ActorLayout::Kind::NoCommunication}, rng);
  std::vector<double> x = random_features(c, rng);
  const nn::Matrix p = actor.probabilities(x);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(p.col(j).sum() - 1.0) < 1e-12);
  const std::size_t F = c.world.feature_size();
  for (std::size_t i = F; i < 3 * F; ++i) x[i] += 0.5;
  CHECK(actor.probabilities(x).col(0) == p.col(0));
}

TEST_CASE("critic-free learners store no value network") {
  const TrainConfig c = small_config(2);
  const auto mc = make_learner(BenchmarkKind::MonteCarlo, c)->checkpoint();
  CHECK(mc.networks.empty());
  const auto dqn = make_learner(BenchmarkKind::Dqn, c)->checkpoint();
  CHECK(dqn.networks.size() == 2);
  for (const auto& [name, net] : dqn.networks) CHECK(name.rfind("q", 0) == 0);
  CHECK(!make_learner(BenchmarkKind::MonteCarlo, c)->learns());
}

TEST_CASE("every benchmark trains on the same episodes") {
  const TrainConfig c = small_config(2);
  std::vector<std::vector<std::uint64_t>> seeds;
  for (BenchmarkKind k : kAllBenchmarks) {
    auto learner = make_learner(k, c);
    const TrainResult r = train(c, *learner);
    std::vector<std::uint64_t> s;
    for (const auto& e : r.episodes) s.push_back(e.seed);
    seeds.push_back(s);
  }
  for (const auto& s : seeds) CHECK(s == seeds.front());
}

TEST_CASE("random inference is reproducible on the inference episode seeds") {
  const TrainConfig c = small_config(2);
  auto learner = make_learner(BenchmarkKind::MonteCarlo, c);
  const auto a = run_inference(c, *learner, 5);
  const auto b = run_inference(c, *learner, 5);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == inference_episode_seed(c.seed, static_cast<int>(i)));
    CHECK(a[i].team_reward == b[i].team_reward);
  }
}
