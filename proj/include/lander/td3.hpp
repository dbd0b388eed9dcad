// Twin delayed deep deterministic policy gradient (TD3).
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "lander/common.hpp"
#include "lander/environment.hpp"
#include "lander/mlp.hpp"
#include "lander/replay_buffer.hpp"

namespace lander {

struct Td3Hyperparams {
  double learning_rate = 1e-4;
  int batch_size = 100;
  long learning_starts = 100;
  double discount = 0.99;
  double polyak_tau = 0.005;
  int policy_delay = 2;
  double target_noise_sigma = 0.2;
  double target_noise_clip = 0.5;
  double exploration_noise_sigma = 0.1;
  long total_steps = 300000;
  long buffer_capacity = 1000000;
  std::vector<int> hidden = {512, 512, 256, 128};
  long eval_every = 10000;
  int eval_episodes = 10;
  long checkpoint_every = 100000;  // 0 disables intermediate checkpoints

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("td3.learning_rate must be > 0");
    if (batch_size <= 0) throw ConfigError("td3.batch_size must be > 0");
    if (learning_starts < 0) throw ConfigError("td3.learning_starts must be >= 0");
    if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("td3.discount must lie in [0, 1]");
    if (!(polyak_tau > 0.0 && polyak_tau <= 1.0)) throw ConfigError("td3.polyak_tau must lie in (0, 1]");
    if (policy_delay < 1) throw ConfigError("td3.policy_delay must be >= 1");
    if (!(target_noise_sigma >= 0.0 && target_noise_clip >= 0.0 && exploration_noise_sigma >= 0.0))
      throw ConfigError("td3: noise parameters must be >= 0");
    if (total_steps < 0) throw ConfigError("td3.total_steps must be >= 0");
    if (buffer_capacity <= 0) throw ConfigError("td3.buffer_capacity must be > 0");
    if (hidden.empty()) throw ConfigError("td3.hidden must list at least one layer");
    for (int h : hidden)
      if (h <= 0) throw ConfigError("td3.hidden sizes must be > 0");
    if (eval_every < 0 || eval_episodes < 0 || checkpoint_every < 0)
      throw ConfigError("td3: eval/checkpoint cadences must be >= 0");
  }
};

struct UpdateDiagnostics {
  double critic_loss = 0.0;
  std::optional<double> actor_loss;  // set on delayed policy updates
  double mean_q = 0.0;
  double mean_target = 0.0;
};

/// Flushes float denormals to zero for the guard's lifetime. Gradients and
/// Adam moments drift into the denormal range during training, and denormal
/// arithmetic costs roughly half the update throughput on x86.
class DenormalsAreZero {
 public:
#if defined(__SSE__)
  DenormalsAreZero() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }  // FTZ | DAZ
  ~DenormalsAreZero() { _mm_setcsr(saved_); }
#else
  DenormalsAreZero() = default;
#endif
  DenormalsAreZero(const DenormalsAreZero&) = delete;
  DenormalsAreZero& operator=(const DenormalsAreZero&) = delete;

#if defined(__SSE__)
 private:
  unsigned saved_;
#endif
};

class Td3Learner {
 public:
  using Net = Mlp<float>;
  using Matrix = Net::Matrix;

  Td3Learner(const Td3Hyperparams& hp, std::uint64_t seed, int obs_dim = kObservationSize,
             int action_dim = kActionSize)
      : hp_(hp), obs_dim_(obs_dim), action_dim_(action_dim) {
    hp_.validate();
    auto dims = [&](int in, int out) {
      std::vector<int> d{in};
      d.insert(d.end(), hp_.hidden.begin(), hp_.hidden.end());
      d.push_back(out);
      return d;
    };
    actor_ = Net(dims(obs_dim, action_dim), Activation::Tanh);
    critic1_ = Net(dims(obs_dim + action_dim, 1), Activation::Identity);
    critic2_ = critic1_;
    Rng init = make_rng(seed, "td3-init");
    actor_.initialize(init);
    critic1_.initialize(init);
    critic2_.initialize(init);
    actor_target_ = actor_;
    critic1_target_ = critic1_;
    critic2_target_ = critic2_;
    const Adam<float>::Options opt{static_cast<float>(hp_.learning_rate)};
    actor_opt_ = Adam<float>(actor_, opt);
    critic1_opt_ = Adam<float>(critic1_, opt);
    critic2_opt_ = Adam<float>(critic2_, opt);
    noise_rng_ = make_rng(seed, "td3-noise");
    replay_rng_ = make_rng(seed, "td3-replay");
  }

  const Td3Hyperparams& hyperparams() const { return hp_; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }

  /// Deterministic policy action in [-1, 1]^action_dim.
  Eigen::VectorXf act(const Eigen::VectorXf& obs) const { return actor_.forward(obs); }

  /// Policy action plus Gaussian exploration noise, clamped to the action box.
  Eigen::VectorXf explore(const Eigen::VectorXf& obs) {
    Eigen::VectorXf a = act(obs);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a[i] += static_cast<float>(hp_.exploration_noise_sigma * standard_normal(noise_rng_));
    return a.cwiseMax(-1.0f).cwiseMin(1.0f);
  }

  Eigen::VectorXf random_action() {
    Eigen::VectorXf a(action_dim_);
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = static_cast<float>(uniform(noise_rng_, -1.0, 1.0));
    return a;
  }

  /// TD targets r + discount * (1 - terminal) * min(Q1', Q2') with smoothed target actions.
  Eigen::RowVectorXf td_targets(const TransitionBatch& batch) {
    // Target nets never run backward; their caches just serve as reusable buffers.
    Matrix next_action = actor_target_.forward_cached(batch.next_observations);
    for (Eigen::Index i = 0; i < next_action.size(); ++i) {
      const double eps = std::clamp(hp_.target_noise_sigma * standard_normal(noise_rng_), -hp_.target_noise_clip,
                                    hp_.target_noise_clip);
      next_action.data()[i] = std::clamp(next_action.data()[i] + static_cast<float>(eps), -1.0f, 1.0f);
    }
    const Matrix next_in = stack(batch.next_observations, next_action);
    const Matrix& q1 = critic1_target_.forward_cached(next_in);
    const Matrix& q2 = critic2_target_.forward_cached(next_in);
    const Eigen::RowVectorXf qmin = q1.row(0).cwiseMin(q2.row(0));
    return batch.rewards +
           (static_cast<float>(hp_.discount) * (1.0f - batch.terminals.array()) * qmin.array()).matrix();
  }

  UpdateDiagnostics update(const TransitionBatch& batch) {
    const DenormalsAreZero ftz;
    const auto n = batch.observations.cols();
    const float inv_n = 1.0f / static_cast<float>(n);
    UpdateDiagnostics diag;

    const Eigen::RowVectorXf y = td_targets(batch);
    const Matrix in = stack(batch.observations, batch.actions);

    const Eigen::RowVectorXf e1 = critic1_.forward_cached(in).row(0) - y;
    critic1_.backward(2.0f * inv_n * e1, &grads_);
    critic1_opt_.step(critic1_, grads_);
    const Eigen::RowVectorXf q2 = critic2_.forward_cached(in).row(0);
    const Eigen::RowVectorXf e2 = q2 - y;
    critic2_.backward(2.0f * inv_n * e2, &grads_);
    critic2_opt_.step(critic2_, grads_);

    diag.critic_loss = (e1.squaredNorm() + e2.squaredNorm()) * inv_n;
    diag.mean_q = (e1 + y).mean();
    diag.mean_target = y.mean();
    ++updates_;

    if (updates_ % hp_.policy_delay == 0) {
      const Matrix& pi = actor_.forward_cached(batch.observations);
      const Matrix q = critic1_.forward_cached(stack(batch.observations, pi));
      diag.actor_loss = -q.mean();
      Matrix dq_din;
      critic1_.backward(Matrix::Constant(1, n, -inv_n), nullptr, &dq_din);
      actor_.backward(dq_din.bottomRows(action_dim_), &grads_);
      actor_opt_.step(actor_, grads_);
      const auto tau = static_cast<float>(hp_.polyak_tau);
      actor_target_.polyak_update(actor_, tau);
      critic1_target_.polyak_update(critic1_, tau);
      critic2_target_.polyak_update(critic2_, tau);
    }

    // Non-finite parameters surface in the losses of the next update, so a full
    // parameter scan only runs on the policy-update cadence.
    const bool scan = diag.actor_loss.has_value();
    if (!std::isfinite(diag.critic_loss) || (diag.actor_loss && !std::isfinite(*diag.actor_loss)) ||
        (scan && (!actor_.parameters_finite() || !critic1_.parameters_finite() || !critic2_.parameters_finite()))) {
      std::ostringstream msg;
      msg << "TD3 update " << updates_ << " diverged: critic_loss=" << diag.critic_loss
          << " actor_loss=" << (diag.actor_loss ? *diag.actor_loss : 0.0) << " mean_q=" << diag.mean_q
          << " mean_target=" << diag.mean_target << " reward_range=[" << batch.rewards.minCoeff() << ", "
          << batch.rewards.maxCoeff() << "]";
      throw TrainingDivergedError(msg.str());
    }
    return diag;
  }

  long updates() const { return updates_; }
  void set_updates(long u) { updates_ = u; }

  Net& actor() { return actor_; }
  Net& critic1() { return critic1_; }
  Net& critic2() { return critic2_; }
  Net& actor_target() { return actor_target_; }
  Net& critic1_target() { return critic1_target_; }
  Net& critic2_target() { return critic2_target_; }
  const Net& actor() const { return actor_; }
  const Net& critic1() const { return critic1_; }
  const Net& critic2() const { return critic2_; }
  const Net& actor_target() const { return actor_target_; }
  const Net& critic1_target() const { return critic1_target_; }
  const Net& critic2_target() const { return critic2_target_; }
  Adam<float>& actor_optimizer() { return actor_opt_; }
  Adam<float>& critic1_optimizer() { return critic1_opt_; }
  Adam<float>& critic2_optimizer() { return critic2_opt_; }
  const Adam<float>& actor_optimizer() const { return actor_opt_; }
  const Adam<float>& critic1_optimizer() const { return critic1_opt_; }
  const Adam<float>& critic2_optimizer() const { return critic2_opt_; }
  Rng& noise_rng() { return noise_rng_; }
  Rng& replay_rng() { return replay_rng_; }
  const Rng& noise_rng() const { return noise_rng_; }
  const Rng& replay_rng() const { return replay_rng_; }

  static Matrix stack(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
  }

 private:
  Td3Hyperparams hp_;
  int obs_dim_;
  int action_dim_;
  Net actor_, critic1_, critic2_;
  Net actor_target_, critic1_target_, critic2_target_;
  Adam<float> actor_opt_, critic1_opt_, critic2_opt_;
  Net::Gradients grads_;
  Rng noise_rng_, replay_rng_;
  long updates_ = 0;
};

// --- training loop --------------------------------------------------------------

struct CurvePoint {
  long step = 0;
  double mean_reward = 0.0;  // mean episodic return of deterministic evaluation episodes
  double mean_ep_len = 0.0;  // control steps
  double success_rate = 0.0;
};

struct PolicyEvaluation {
  double mean_return = 0.0;
  double mean_length = 0.0;
  double success_rate = 0.0;
  int episodes = 0;
};

inline Eigen::VectorXf to_float(const Observation& o) { return o.cast<float>(); }

/// Deterministic rollouts of the learner's policy on the given episode seeds.
inline PolicyEvaluation evaluate_policy(const Td3Learner& learner, Environment& env,
                                        const std::vector<std::int64_t>& seeds) {
  PolicyEvaluation ev;
  for (auto seed : seeds) {
    Observation obs = env.reset(seed);
    double ret = 0.0;
    for (;;) {
      const Eigen::VectorXf a = learner.act(to_float(obs));
      const StepOutcome out = env.step(a.cast<double>());
      ret += out.reward.total;
      obs = out.observation;
      if (out.terminal != Terminal::None) {
        if (out.terminal == Terminal::Touchdown) ev.success_rate += 1.0;
        break;
      }
    }
    ev.mean_return += ret;
    ev.mean_length += static_cast<double>(env.steps());
    ++ev.episodes;
  }
  if (ev.episodes > 0) {
    ev.mean_return /= ev.episodes;
    ev.mean_length /= ev.episodes;
    ev.success_rate /= ev.episodes;
  }
  return ev;
}

/// Seeds for evaluation episodes, disjoint from training-episode seeds.
inline std::vector<std::int64_t> evaluation_seeds(std::uint64_t root, std::string_view stream, int count) {
  std::vector<std::int64_t> seeds;
  for (int i = 0; i < count; ++i)
    seeds.push_back(static_cast<std::int64_t>(derive_seed(root, stream, static_cast<std::uint64_t>(i)) >> 1));
  return seeds;
}

struct TrainingOptions {
  std::uint64_t seed = 0;
  /// Invoked as (step, learner) every checkpoint_every steps and once at the end.
  std::function<void(long, const Td3Learner&)> checkpoint_sink;
  /// Invoked after every evaluation point.
  std::function<void(const CurvePoint&)> on_curve_point;
};

struct TrainingResult {
  std::vector<CurvePoint> curve;
  long steps = 0;
  long episodes = 0;
};

/// Off-policy loop: act (uniform random before learning_starts, then policy +
/// exploration noise), store, update once per environment step after
/// learning_starts. Timeouts are truncations and keep bootstrapping.
inline TrainingResult train(const std::function<Environment()>& make_env, Td3Learner& learner,
                            const TrainingOptions& opts) {
  const Td3Hyperparams& hp = learner.hyperparams();
  Environment env = make_env();
  Environment eval_env = make_env();
  ReplayBuffer buffer(static_cast<std::size_t>(hp.buffer_capacity), learner.obs_dim(), learner.action_dim());
  const auto eval_seeds = evaluation_seeds(opts.seed, "train-eval", hp.eval_episodes);

  TrainingResult result;
  auto episode_seed = [&](long i) {
    return static_cast<std::int64_t>(derive_seed(opts.seed, "train-episode", static_cast<std::uint64_t>(i)) >> 1);
  };
  std::int64_t current_seed = episode_seed(0);
  Observation obs = env.reset(current_seed);

  for (long step = 1; step <= hp.total_steps; ++step) {
    const Eigen::VectorXf obs_f = to_float(obs);
    const Eigen::VectorXf action = step <= hp.learning_starts ? learner.random_action() : learner.explore(obs_f);
    StepOutcome out;
    try {
      out = env.step(action.cast<double>());
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "environment failure at training step " << step << " (episode seed " << current_seed << ", t="
          << env.time() << ", drone=" << env.drone().position.transpose() << ", pad="
          << env.pad().position.transpose() << "): " << e.what();
      throw std::runtime_error(msg.str());
    }
    const bool terminal = out.terminal == Terminal::Touchdown || out.terminal == Terminal::Crash ||
                          out.terminal == Terminal::OutOfBounds;
    buffer.add(obs_f, action, static_cast<float>(out.reward.total), to_float(out.observation), terminal);
    obs = out.observation;

    if (out.terminal != Terminal::None) {
      ++result.episodes;
      current_seed = episode_seed(result.episodes);
      obs = env.reset(current_seed);
    }

    if (step > hp.learning_starts && buffer.size() >= static_cast<std::size_t>(hp.batch_size))
      learner.update(buffer.sample(static_cast<std::size_t>(hp.batch_size), learner.replay_rng()));

    if (hp.eval_every > 0 && step % hp.eval_every == 0) {
      const PolicyEvaluation ev = evaluate_policy(learner, eval_env, eval_seeds);
      const CurvePoint p{step, ev.mean_return, ev.mean_length, ev.success_rate};
      result.curve.push_back(p);
      if (opts.on_curve_point) opts.on_curve_point(p);
    }
    if (opts.checkpoint_sink && hp.checkpoint_every > 0 && step % hp.checkpoint_every == 0 &&
        step != hp.total_steps)
      opts.checkpoint_sink(step, learner);
    result.steps = step;
  }
  if (opts.checkpoint_sink) opts.checkpoint_sink(result.steps, learner);
  return result;
}

}  // namespace lander
