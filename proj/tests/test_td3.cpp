#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lander/td3.hpp"

using namespace lander;

namespace {

Td3Hyperparams small_hp() {
  Td3Hyperparams hp;
  hp.hidden = {32, 32};
  hp.batch_size = 32;
  hp.learning_rate = 1e-3;
  return hp;
}

TransitionBatch constant_batch(int n, int obs_dim, int act_dim, float reward, float terminal, Rng& rng) {
  TransitionBatch b;
  b.observations = Eigen::MatrixXf::Zero(obs_dim, n);
  b.next_observations = Eigen::MatrixXf::Zero(obs_dim, n);
  b.actions.resize(act_dim, n);
  for (Eigen::Index i = 0; i < b.actions.size(); ++i) b.actions.data()[i] = static_cast<float>(uniform(rng, -1, 1));
  b.rewards = Eigen::RowVectorXf::Constant(n, reward);
  b.terminals = Eigen::RowVectorXf::Constant(n, terminal);
  return b;
}

}  // namespace

TEST(ReplayBuffer, EvictsOldestWhenFull) {
  ReplayBuffer buf(5, 2, 1);
  const Eigen::VectorXf o = Eigen::VectorXf::Zero(2), a = Eigen::VectorXf::Zero(1);
  for (int i = 0; i < 8; ++i) buf.add(o, a, static_cast<float>(i), o, false);
  EXPECT_EQ(buf.size(), 5u);
  EXPECT_EQ(buf.total_added(), 8u);
  std::multiset<float> held;
  for (std::size_t s = 0; s < 5; ++s) held.insert(buf.reward_at(s));
  EXPECT_EQ(held, (std::multiset<float>{3, 4, 5, 6, 7}));

  Rng rng(1);
  const auto batch = buf.sample(200, rng);
  EXPECT_GE(batch.rewards.minCoeff(), 3.0f);
  EXPECT_LE(batch.rewards.maxCoeff(), 7.0f);
}

TEST(ReplayBuffer, SamplesOnlyFilledRegion) {
  ReplayBuffer buf(100, 1, 1);
  const Eigen::VectorXf z = Eigen::VectorXf::Zero(1);
  buf.add(z, z, 42.0f, z, true);
  Rng rng(2);
  const auto batch = buf.sample(10, rng);
  EXPECT_TRUE((batch.rewards.array() == 42.0f).all());
  EXPECT_TRUE((batch.terminals.array() == 1.0f).all());
  EXPECT_THROW(ReplayBuffer(0, 1, 1), ContractError);
}

TEST(ReplayBuffer, RejectsWrongShapes) {
  ReplayBuffer buf(4, 3, 2);
  EXPECT_THROW(buf.add(Eigen::VectorXf::Zero(2), Eigen::VectorXf::Zero(2), 0, Eigen::VectorXf::Zero(3), false),
               ContractError);
}

TEST(Td3, TerminalTargetIsReward) {
  Td3Learner learner(small_hp(), 1, 4, 2);
  Rng rng(3);
  const auto b = constant_batch(16, 4, 2, -0.75f, 1.0f, rng);
  const Eigen::RowVectorXf y = learner.td_targets(b);
  for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], -0.75f);
}

TEST(Td3, IdenticalTwinsGiveSingleCriticTarget) {
  Td3Hyperparams hp = small_hp();
  hp.target_noise_sigma = 0.0;
  Td3Learner learner(hp, 2, 4, 2);
  learner.critic2_target().copy_parameters_from(learner.critic1_target());
  Rng rng(4);
  auto b = constant_batch(8, 4, 2, 0.5f, 0.0f, rng);
  for (Eigen::Index i = 0; i < b.next_observations.size(); ++i)
    b.next_observations.data()[i] = static_cast<float>(uniform(rng, -1, 1));
  const Eigen::RowVectorXf y = learner.td_targets(b);
  const auto next_a = learner.actor_target().forward(b.next_observations);
  const auto q1 = learner.critic1_target().forward(Td3Learner::stack(b.next_observations, next_a));
  for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], 0.5f + 0.99f * q1(0, i), 1e-6f);
}

TEST(Td3, TwinMinimumIsSymmetric) {
  Td3Learner a(small_hp(), 5, 4, 2);
  Td3Learner b = a;
  auto tmp = b.critic1_target();
  b.critic1_target().copy_parameters_from(b.critic2_target());
  b.critic2_target().copy_parameters_from(tmp);
  Rng rng(6);
  auto batch = constant_batch(8, 4, 2, 0.1f, 0.0f, rng);
  for (Eigen::Index i = 0; i < batch.next_observations.size(); ++i)
    batch.next_observations.data()[i] = static_cast<float>(uniform(rng, -1, 1));
  const Eigen::RowVectorXf ya = a.td_targets(batch);
  const Eigen::RowVectorXf yb = b.td_targets(batch);
  EXPECT_EQ(ya, yb);
}

TEST(Td3, TargetUsesMinimumOfTwins) {
  Td3Hyperparams hp = small_hp();
  hp.target_noise_sigma = 0.0;
  Td3Learner learner(hp, 7, 4, 2);
  // Output biases shift the twins apart by a constant.
  learner.critic2_target().copy_parameters_from(learner.critic1_target());
  learner.critic2_target().biases().back()[0] -= 3.0f;
  Rng rng(8);
  const auto b = constant_batch(4, 4, 2, 0.0f, 0.0f, rng);
  const Eigen::RowVectorXf y = learner.td_targets(b);
  const auto next_a = learner.actor_target().forward(b.next_observations);
  const auto q2 = learner.critic2_target().forward(Td3Learner::stack(b.next_observations, next_a));
  for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], 0.99f * q2(0, i), 1e-5f);
}

TEST(Td3, ActionsStayInBox) {
  Td3Hyperparams hp = small_hp();
  hp.exploration_noise_sigma = 5.0;
  Td3Learner learner(hp, 9);
  Rng rng(10);
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXf obs(kObservationSize);
    for (int i = 0; i < obs.size(); ++i) obs[i] = static_cast<float>(uniform(rng, -50, 50));
    const auto a = learner.act(obs);
    const auto e = learner.explore(obs);
    const auto r = learner.random_action();
    for (const auto* v : {&a, &e, &r}) {
      ASSERT_EQ(v->size(), kActionSize);
      EXPECT_LE(v->cwiseAbs().maxCoeff(), 1.0f);
    }
  }
}

TEST(Td3, PolicyUpdatesAreDelayed) {
  Td3Learner learner(small_hp(), 11, 4, 2);
  Rng rng(12);
  const auto b = constant_batch(32, 4, 2, 1.0f, 1.0f, rng);
  const auto target_before = learner.critic1_target().flatten();
  const auto d1 = learner.update(b);
  EXPECT_FALSE(d1.actor_loss.has_value());
  EXPECT_EQ(learner.critic1_target().flatten(), target_before);
  const auto d2 = learner.update(b);
  EXPECT_TRUE(d2.actor_loss.has_value());
  EXPECT_NE(learner.critic1_target().flatten(), target_before);
}

TEST(Td3, BanditCriticConvergesToReward) {
  // One state, every transition terminal with reward 1: Q should approach 1.
  Td3Learner learner(small_hp(), 13, 4, 2);
  Rng rng(14);
  for (int i = 0; i < 1500; ++i) learner.update(constant_batch(32, 4, 2, 1.0f, 1.0f, rng));
  const Eigen::MatrixXf s = Eigen::MatrixXf::Zero(4, 1);
  const auto in = Td3Learner::stack(s, learner.actor().forward(s));
  EXPECT_NEAR(learner.critic1().forward(in)(0, 0), 1.0f, 0.02f);
  EXPECT_NEAR(learner.critic2().forward(in)(0, 0), 1.0f, 0.02f);
}

TEST(Td3, ActorClimbsCriticTowardBestAction) {
  // Continuous bandit: r = 1 - (a0 - 0.5)^2 - a1^2. The greedy action is (0.5, 0).
  Td3Learner learner(small_hp(), 15, 4, 2);
  Rng rng(16);
  for (int i = 0; i < 4000; ++i) {
    auto b = constant_batch(32, 4, 2, 0.0f, 1.0f, rng);
    for (int k = 0; k < 32; ++k) {
      const float a0 = b.actions(0, k), a1 = b.actions(1, k);
      b.rewards[k] = 1.0f - (a0 - 0.5f) * (a0 - 0.5f) - a1 * a1;
    }
    learner.update(b);
  }
  const auto a = learner.act(Eigen::VectorXf::Zero(4));
  // The actor sits at the critic's maximizer (grid search)...
  float best = -1e9f;
  Eigen::Vector2f argmax;
  for (int x = -40; x <= 40; ++x)
    for (int y = -40; y <= 40; ++y) {
      Eigen::MatrixXf in = Eigen::MatrixXf::Zero(6, 1);
      in(4, 0) = x / 40.0f;
      in(5, 0) = y / 40.0f;
      const float q = learner.critic1().forward(in)(0, 0);
      if (q > best) best = q, argmax = Eigen::Vector2f(in(4, 0), in(5, 0));
    }
  EXPECT_LT((a.head<2>() - argmax).norm(), 0.1f);
  // ...which is close to optimal under the true reward (random actions average 0.5).
  const float r = 1.0f - (a[0] - 0.5f) * (a[0] - 0.5f) - a[1] * a[1];
  EXPECT_GT(r, 0.9f);
}

TEST(Td3, DivergenceIsReported) {
  Td3Learner learner(small_hp(), 17, 4, 2);
  Rng rng(18);
  auto b = constant_batch(8, 4, 2, std::numeric_limits<float>::quiet_NaN(), 1.0f, rng);
  EXPECT_THROW(learner.update(b), TrainingDivergedError);
}

TEST(Td3, HyperparamValidation) {
  Td3Hyperparams hp;
  hp.discount = 1.5;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  hp.hidden = {};
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = {};
  hp.policy_delay = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
}

TEST(Td3, SameSeedSameNetworks) {
  Td3Learner a(small_hp(), 99), b(small_hp(), 99), c(small_hp(), 100);
  EXPECT_EQ(a.actor().flatten(), b.actor().flatten());
  EXPECT_NE(a.actor().flatten(), c.actor().flatten());
  EXPECT_EQ(a.actor().flatten(), a.actor_target().flatten());
  EXPECT_NE(a.critic1().flatten(), a.critic2().flatten());
}

TEST(Td3Training, ShortRunIsDeterministic) {
  Td3Hyperparams hp = small_hp();
  hp.total_steps = 600;
  hp.learning_starts = 100;
  hp.eval_every = 300;
  hp.eval_episodes = 2;
  hp.buffer_capacity = 1000;
  auto make_env = [] { return Environment(WorldConfig{}); };
  auto run = [&] {
    Td3Learner learner(hp, 21);
    std::vector<long> ckpts;
    TrainingOptions opts{.seed = 5, .checkpoint_sink = [&](long s, const Td3Learner&) { ckpts.push_back(s); }};
    const auto res = train(make_env, learner, opts);
    EXPECT_EQ(ckpts.back(), 600);
    return std::make_pair(res, learner.actor().flatten());
  };
  const auto [r1, w1] = run();
  const auto [r2, w2] = run();
  ASSERT_EQ(r1.curve.size(), 2u);
  EXPECT_EQ(r1.curve[1].step, 600);
  EXPECT_EQ(r1.curve[0].mean_reward, r2.curve[0].mean_reward);
  EXPECT_EQ(r1.curve[1].mean_ep_len, r2.curve[1].mean_ep_len);
  EXPECT_EQ(w1, w2);
  EXPECT_GE(r1.episodes, 1);
}
