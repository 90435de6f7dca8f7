#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "laesim/common.hpp"
#include "laesim/maddpg_config.hpp"
#include "laesim/ricbus.hpp"
#include "laesim/rng.hpp"
#include "laesim/scenario.hpp"
#include "laesim/tinynet.hpp"
#include "laesim/version.hpp"

namespace laesim::rl {

using ric::Transition;

/// Fixed-capacity ring of flattened transitions (float storage; training math
/// runs in doubles after widening).
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int n_agents, int obs_dim)
      : capacity_(capacity),
        n_agents_(n_agents),
        obs_dim_(obs_dim),
        stride_(2 * n_agents * obs_dim + n_agents * 3 + n_agents + n_agents + 1) {
    data_.resize(static_cast<std::size_t>(capacity_) * stride_);
  }

  int size() const { return size_; }
  int capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }

  void push(const Transition& t) {
    if (static_cast<int>(t.obs.size()) != n_agents_ ||
        static_cast<int>(t.actions.size()) != n_agents_ ||
        static_cast<int>(t.rewards.size()) != n_agents_ ||
        static_cast<int>(t.next_obs.size()) != n_agents_ ||
        static_cast<int>(t.dones.size()) != n_agents_)
      throw ValidationError("replay: transition arity mismatch");
    for (int i = 0; i < n_agents_; ++i) {
      if (static_cast<int>(t.obs[static_cast<std::size_t>(i)].size()) != obs_dim_ ||
          static_cast<int>(t.next_obs[static_cast<std::size_t>(i)].size()) != obs_dim_)
        throw ValidationError("replay: observation dim mismatch");
    }
    float* row = &data_[static_cast<std::size_t>(head_) * stride_];
    std::size_t o = 0;
    for (int i = 0; i < n_agents_; ++i)
      for (double v : t.obs[static_cast<std::size_t>(i)]) row[o++] = static_cast<float>(v);
    for (int i = 0; i < n_agents_; ++i)
      for (double v : t.actions[static_cast<std::size_t>(i)]) row[o++] = static_cast<float>(v);
    for (int i = 0; i < n_agents_; ++i)
      row[o++] = static_cast<float>(t.rewards[static_cast<std::size_t>(i)]);
    for (int i = 0; i < n_agents_; ++i)
      for (double v : t.next_obs[static_cast<std::size_t>(i)]) row[o++] = static_cast<float>(v);
    for (int i = 0; i < n_agents_; ++i) row[o++] = t.dones[static_cast<std::size_t>(i)] ? 1.0f : 0.0f;
    row[o++] = t.done_all ? 1.0f : 0.0f;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    ++pushed_;
  }

  /// Uniform with replacement.
  std::vector<int> sample_indices(Rng& rng, int batch) const {
    if (size_ < batch) throw ValidationError("replay: insufficient buffer for batch");
    std::vector<int> idx(static_cast<std::size_t>(batch));
    for (auto& i : idx) i = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(size_)));
    return idx;
  }

  const float* row(int index) const { return &data_[static_cast<std::size_t>(index) * stride_]; }

  int joint_obs_dim() const { return n_agents_ * obs_dim_; }
  int joint_act_dim() const { return n_agents_ * 3; }
  int obs_dim() const { return obs_dim_; }
  int n_agents() const { return n_agents_; }

  // row layout offsets
  int off_obs() const { return 0; }
  int off_act() const { return joint_obs_dim(); }
  int off_rew() const { return joint_obs_dim() + joint_act_dim(); }
  int off_next() const { return off_rew() + n_agents_; }
  int off_dones() const { return off_next() + joint_obs_dim(); }
  int off_done_all() const { return off_dones() + n_agents_; }

 private:
  int capacity_;
  int n_agents_;
  int obs_dim_;
  int stride_;
  std::vector<float> data_;
  int head_ = 0;
  int size_ = 0;
  std::uint64_t pushed_ = 0;
};

struct EvalMetrics {
  int episodes = 0;
  double mean_return = 0.0;
  double reach_rate = 0.0;
  double mean_sinr_db = 0.0;
  long collision_events = 0;
  long obstacle_strikes = 0;
  long deadline_violations = 0;
};

struct TrainingReport {
  std::vector<double> episode_returns;
  std::vector<double> critic_loss;
  EvalMetrics eval_metrics;
};

inline nlohmann::json report_to_json(const TrainingReport& r) {
  return nlohmann::json{
      {"episode_returns", r.episode_returns},
      {"critic_loss", r.critic_loss},
      {"eval_metrics",
       {{"episodes", r.eval_metrics.episodes},
        {"mean_return", r.eval_metrics.mean_return},
        {"reach_rate", r.eval_metrics.reach_rate},
        {"mean_sinr_db", r.eval_metrics.mean_sinr_db},
        {"collision_events", r.eval_metrics.collision_events},
        {"obstacle_strikes", r.eval_metrics.obstacle_strikes},
        {"deadline_violations", r.eval_metrics.deadline_violations}}}};
}

/// Centralized-critic, decentralized-actor learner. One critic is trained on
/// the team-mean reward; per-agent actors act from local observations only.
class Trainer : public ric::Policy, public ric::TrainHooks {
 public:
  Trainer(const MaddpgConfig& cfg, int n_agents, int obs_dim)
      : cfg_(cfg),
        n_agents_(n_agents),
        obs_dim_(obs_dim),
        buffer_(cfg.buffer_capacity, n_agents, obs_dim),
        noise_rng_(mix_seed({cfg.seed, 0x4e4f4953ull})),    // "NOIS"
        sample_rng_(mix_seed({cfg.seed, 0x53414d50ull})) {  // "SAMP"
    cfg.validate();
    std::vector<int> actor_sizes{obs_dim};
    for (int h : cfg.actor_hidden) actor_sizes.push_back(h);
    actor_sizes.push_back(3);
    std::vector<nn::Activation> actor_acts(actor_sizes.size() - 1, nn::Activation::Relu);
    actor_acts.back() = nn::Activation::Tanh;

    const int joint = n_agents * obs_dim + n_agents * 3;
    std::vector<int> critic_sizes{joint};
    for (int h : cfg.critic_hidden) critic_sizes.push_back(h);
    critic_sizes.push_back(1);
    std::vector<nn::Activation> critic_acts(critic_sizes.size() - 1, nn::Activation::Relu);
    critic_acts.back() = nn::Activation::Linear;

    for (int i = 0; i < n_agents; ++i) {
      actors_.push_back(
          nn::init(actor_sizes, actor_acts, mix_seed({cfg.seed, 0x41435452ull,  // "ACTR"
                                                      static_cast<std::uint64_t>(i)})));
      target_actors_.push_back(actors_.back());
      actor_opt_.push_back(nn::make_adam(actors_.back()));
    }
    critic_ = nn::init(critic_sizes, critic_acts, mix_seed({cfg.seed, 0x43524954ull}));  // "CRIT"
    target_critic_ = critic_;
    critic_opt_ = nn::make_adam(critic_);
    noise_sigma_ = cfg.noise_sigma_start;
  }

  const MaddpgConfig& config() const { return cfg_; }
  int agent_count() const { return n_agents_; }
  int obs_dim() const { return obs_dim_; }
  ReplayBuffer& buffer() { return buffer_; }
  const std::vector<double>& critic_losses() const { return critic_losses_; }
  std::uint64_t env_steps() const { return env_steps_; }
  std::uint64_t updates() const { return updates_; }
  bool explore = false;

  const nn::DenseNet& actor(int i) const { return actors_[static_cast<std::size_t>(i)]; }
  nn::DenseNet& mutable_actor(int i) { return actors_[static_cast<std::size_t>(i)]; }
  const nn::DenseNet& target_actor(int i) const { return target_actors_[static_cast<std::size_t>(i)]; }
  const nn::DenseNet& critic() const { return critic_; }
  nn::DenseNet& mutable_critic() { return critic_; }
  const nn::DenseNet& target_critic() const { return target_critic_; }

  /// Linear exploration-noise decay across the episode budget.
  void begin_episode(int episode_index, int total_episodes) {
    const double frac =
        total_episodes <= 1
            ? 1.0
            : std::min(1.0, static_cast<double>(episode_index) / (total_episodes - 1));
    noise_sigma_ = cfg_.noise_sigma_start + (cfg_.noise_sigma_end - cfg_.noise_sigma_start) * frac;
  }

  double noise_sigma() const { return noise_sigma_; }

  /// Deterministic actor outputs, optionally with clamped Gaussian noise.
  std::vector<env::ActionVec> select_actions(const std::vector<std::vector<double>>& obs,
                                             bool with_noise) {
    if (static_cast<int>(obs.size()) != n_agents_)
      throw ValidationError("select_actions: one observation per agent");
    std::vector<env::ActionVec> out(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i) {
      const auto& o = obs[static_cast<std::size_t>(i)];
      if (static_cast<int>(o.size()) != obs_dim_)
        throw ValidationError("select_actions: observation dim mismatch");
      Eigen::VectorXd x(obs_dim_);
      for (int k = 0; k < obs_dim_; ++k) x(k) = o[static_cast<std::size_t>(k)];
      const Eigen::VectorXd y = nn::forward(actors_[static_cast<std::size_t>(i)], x);
      env::ActionVec a{y(0), y(1), y(2)};
      if (with_noise) {
        for (auto& v : a) v = clamp(v + noise_sigma_ * noise_rng_.gaussian(), -1.0, 1.0);
      }
      out[static_cast<std::size_t>(i)] = a;
    }
    return out;
  }

  std::vector<env::ActionVec> act(const ric::DecisionContext& ctx) override {
    return select_actions(*ctx.observations, explore);
  }

  void store(const Transition& t) { buffer_.push(t); }

  void on_transition(const Transition& t) override {
    store(t);
    ++env_steps_;
    if (static_cast<int>(buffer_.size()) >= std::max(cfg_.warmup, cfg_.batch) &&
        env_steps_ % static_cast<std::uint64_t>(cfg_.update_every) == 0) {
      update();
    }
  }

  /// One full update: critic on a sampled batch, then each actor on the same
  /// batch, then soft-update both target families.
  void update() {
    const std::vector<int> idx = buffer_.sample_indices(sample_rng_, cfg_.batch);
    critic_losses_.push_back(critic_update(idx));
    for (int i = 0; i < n_agents_; ++i) actor_update(idx, i);
    for (int i = 0; i < n_agents_; ++i)
      nn::soft_update(target_actors_[static_cast<std::size_t>(i)],
                      actors_[static_cast<std::size_t>(i)], cfg_.tau);
    nn::soft_update(target_critic_, critic_, cfg_.tau);
    ++updates_;
  }

  /// TD update of the centralized critic:
  ///   y = r_team + gamma * (1 - done_all) * Q_target(o', mu'_target(o')).
  /// Returns the pre-step mean-squared TD loss.
  double critic_update(const std::vector<int>& idx) {
    const int b = static_cast<int>(idx.size());
    Eigen::MatrixXd obs, act, next_obs;
    Eigen::VectorXd r_team, done_all;
    gather(idx, obs, act, next_obs, r_team, done_all);

    // target joint action from target actors
    Eigen::MatrixXd next_act(buffer_.joint_act_dim(), b);
    for (int i = 0; i < n_agents_; ++i) {
      next_act.middleRows(i * 3, 3) = nn::forward_batch(
          target_actors_[static_cast<std::size_t>(i)], next_obs.middleRows(i * obs_dim_, obs_dim_));
    }
    Eigen::MatrixXd xn(buffer_.joint_obs_dim() + buffer_.joint_act_dim(), b);
    xn << next_obs, next_act;
    const Eigen::RowVectorXd q_next = nn::forward_batch(target_critic_, xn).row(0);

    Eigen::RowVectorXd y(b);
    for (int k = 0; k < b; ++k)
      y(k) = r_team(k) + cfg_.gamma * (1.0 - done_all(k)) * q_next(k);

    Eigen::MatrixXd x(buffer_.joint_obs_dim() + buffer_.joint_act_dim(), b);
    x << obs, act;
    nn::ForwardCache cache;
    const Eigen::RowVectorXd q = nn::forward_batch(critic_, x, &cache).row(0);
    const Eigen::RowVectorXd diff = q - y;
    const double loss = diff.squaredNorm() / b;

    Eigen::MatrixXd dl_dq = (2.0 / b) * diff;
    nn::Gradients grads;
    nn::backward(critic_, cache, dl_dq, &grads);
    nn::adam_step(critic_, grads, critic_opt_, cfg_.lr_critic);
    return loss;
  }

  /// Deterministic policy-gradient ascent for actor i through the frozen
  /// critic; other agents' actions come from the batch. Returns the pre-step
  /// objective mean_b Q(o, a_1..mu_i(o_i)..a_N).
  double actor_update(const std::vector<int>& idx, int agent) {
    const int b = static_cast<int>(idx.size());
    Eigen::MatrixXd obs, act, next_obs;
    Eigen::VectorXd r_team, done_all;
    gather(idx, obs, act, next_obs, r_team, done_all);

    nn::ForwardCache actor_cache;
    const Eigen::MatrixXd mu =
        nn::forward_batch(actors_[static_cast<std::size_t>(agent)],
                          obs.middleRows(agent * obs_dim_, obs_dim_), &actor_cache);
    Eigen::MatrixXd act_sub = act;
    act_sub.middleRows(agent * 3, 3) = mu;

    Eigen::MatrixXd x(buffer_.joint_obs_dim() + buffer_.joint_act_dim(), b);
    x << obs, act_sub;
    nn::ForwardCache critic_cache;
    const Eigen::RowVectorXd q = nn::forward_batch(critic_, x, &critic_cache).row(0);
    const double objective = q.mean();

    // dJ/dx without critic parameter gradients
    Eigen::MatrixXd dj_dq = Eigen::MatrixXd::Constant(1, b, 1.0 / b);
    const Eigen::MatrixXd dj_dx = nn::backward(critic_, critic_cache, dj_dq, nullptr);
    const Eigen::MatrixXd dj_da =
        dj_dx.middleRows(buffer_.joint_obs_dim() + agent * 3, 3);

    nn::Gradients grads;
    nn::backward(actors_[static_cast<std::size_t>(agent)], actor_cache, -dj_da, &grads);
    nn::adam_step(actors_[static_cast<std::size_t>(agent)], grads,
                  actor_opt_[static_cast<std::size_t>(agent)], cfg_.lr_actor);
    return objective;
  }

 private:
  void gather(const std::vector<int>& idx, Eigen::MatrixXd& obs, Eigen::MatrixXd& act,
              Eigen::MatrixXd& next_obs, Eigen::VectorXd& r_team, Eigen::VectorXd& done_all) const {
    const int b = static_cast<int>(idx.size());
    obs.resize(buffer_.joint_obs_dim(), b);
    act.resize(buffer_.joint_act_dim(), b);
    next_obs.resize(buffer_.joint_obs_dim(), b);
    r_team.resize(b);
    done_all.resize(b);
    for (int k = 0; k < b; ++k) {
      const float* row = buffer_.row(idx[static_cast<std::size_t>(k)]);
      for (int d = 0; d < buffer_.joint_obs_dim(); ++d)
        obs(d, k) = static_cast<double>(row[buffer_.off_obs() + d]);
      for (int d = 0; d < buffer_.joint_act_dim(); ++d)
        act(d, k) = static_cast<double>(row[buffer_.off_act() + d]);
      double r = 0.0;
      for (int i = 0; i < n_agents_; ++i) r += static_cast<double>(row[buffer_.off_rew() + i]);
      r_team(k) = r / n_agents_;
      for (int d = 0; d < buffer_.joint_obs_dim(); ++d)
        next_obs(d, k) = static_cast<double>(row[buffer_.off_next() + d]);
      done_all(k) = static_cast<double>(row[buffer_.off_done_all()]);
    }
  }

  MaddpgConfig cfg_;
  int n_agents_;
  int obs_dim_;
  std::vector<nn::DenseNet> actors_, target_actors_;
  nn::DenseNet critic_, target_critic_;
  std::vector<nn::AdamState> actor_opt_;
  nn::AdamState critic_opt_;
  ReplayBuffer buffer_;
  Rng noise_rng_, sample_rng_;
  double noise_sigma_ = 0.0;
  std::uint64_t env_steps_ = 0;
  std::uint64_t updates_ = 0;
  std::vector<double> critic_losses_;

 public:
  /// Versioned model file: every parameter round-trips bit-exactly.
  nlohmann::json to_model_json(const std::string& kind_tag) const {
    nlohmann::json actors = nlohmann::json::array();
    nlohmann::json tactors = nlohmann::json::array();
    for (int i = 0; i < n_agents_; ++i) {
      actors.push_back(nn::net_to_json(actors_[static_cast<std::size_t>(i)]));
      tactors.push_back(nn::net_to_json(target_actors_[static_cast<std::size_t>(i)]));
    }
    return nlohmann::json{{"version", kModelSchemaVersion},
                          {"kind", kind_tag},
                          {"n_agents", n_agents_},
                          {"obs_dim", obs_dim_},
                          {"actors", std::move(actors)},
                          {"target_actors", std::move(tactors)},
                          {"critic", nn::net_to_json(critic_)},
                          {"target_critic", nn::net_to_json(target_critic_)}};
  }

  void load_model_json(const nlohmann::json& j) {
    const int version = j.at("version").get<int>();
    if (version != kModelSchemaVersion)
      throw VersionError("model: version " + std::to_string(version) + " unsupported (expected " +
                         std::to_string(kModelSchemaVersion) + ")");
    const int n = j.at("n_agents").get<int>();
    if (n != n_agents_)
      throw ValidationError("model: agent count " + std::to_string(n) +
                            " does not match scenario " + std::to_string(n_agents_));
    const int od = j.at("obs_dim").get<int>();
    if (od != obs_dim_)
      throw ValidationError("model: obs dim " + std::to_string(od) + " does not match scenario " +
                            std::to_string(obs_dim_));
    for (int i = 0; i < n_agents_; ++i) {
      actors_[static_cast<std::size_t>(i)] = nn::net_from_json(j.at("actors").at(i));
      target_actors_[static_cast<std::size_t>(i)] = nn::net_from_json(j.at("target_actors").at(i));
    }
    critic_ = nn::net_from_json(j.at("critic"));
    target_critic_ = nn::net_from_json(j.at("target_critic"));
  }
};

inline void save_model(const Trainer& trainer, const std::string& path,
                       const std::string& kind_tag) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file: " + path);
  out << trainer.to_model_json(kind_tag).dump() << '\n';
}

inline std::string model_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model parse error in " + path + ": " + e.what());
  }
  return j.value("kind", "full");
}

inline void load_model(Trainer& trainer, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model parse error in " + path + ": " + e.what());
  }
  try {
    trainer.load_model_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model field error in " + path + ": " + e.what());
  }
}

/// Progress callback: (episode index, episodes total, episode return).
using TrainProgressFn = std::function<void(int, int, double)>;

/// Full training loop over the dual-timescale mission runner. Deterministic
/// per (scenario, config seed).
inline TrainingReport train(const world::ScenarioConfig& scenario, Trainer& trainer,
                            const TrainProgressFn& progress = nullptr) {
  const auto& cfg = trainer.config();
  TrainingReport report;
  report.episode_returns.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    trainer.begin_episode(ep, cfg.episodes);
    trainer.explore = true;
    ric::EpisodeLog log =
        ric::run_mission(scenario, trainer, ric::RunMode::Train, &trainer,
                         static_cast<std::uint64_t>(ep), /*detailed_log=*/false);
    trainer.explore = false;
    report.episode_returns.push_back(log.episode_return);
    if (progress) progress(ep, cfg.episodes, log.episode_return);
  }
  report.critic_loss = trainer.critic_losses();

  // final deterministic evaluation
  const int eval_episodes = 5;
  EvalMetrics em;
  em.episodes = eval_episodes;
  double sinr_sum = 0.0;
  long sinr_count = 0;
  long reached = 0;
  for (int ep = 0; ep < eval_episodes; ++ep) {
    ric::EpisodeLog log =
        ric::run_mission(scenario, trainer, ric::RunMode::Eval, nullptr,
                         mix_seed({0x4556414cull, static_cast<std::uint64_t>(ep)}),
                         /*detailed_log=*/false);
    em.mean_return += log.episode_return;
    em.collision_events += log.collision_events;
    em.obstacle_strikes += log.obstacle_strikes;
    em.deadline_violations += log.deadline_violations;
    for (auto r : log.reached) reached += r;
    for (const auto& rec : log.ticks) {
      sinr_sum += rec.sinr_db;
      ++sinr_count;
    }
  }
  em.mean_return /= eval_episodes;
  em.reach_rate = static_cast<double>(reached) /
                  (static_cast<double>(eval_episodes) * trainer.agent_count());
  em.mean_sinr_db = sinr_count > 0 ? sinr_sum / static_cast<double>(sinr_count) : 0.0;
  report.eval_metrics = em;
  return report;
}

}  // namespace laesim::rl
