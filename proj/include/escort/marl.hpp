#pragma once

// DDPG and MADDPG for the bodyguard team: replay storage, exploration,
// critic and actor updates, and the training loop.
//
// Both algorithms use deterministic policies. They differ only in what each
// agent's critic sees: DDPG conditions Q_i on (s_i, a_i); MADDPG conditions it
// on every bodyguard's action, plus every bodyguard's observation when
// critic_obs == all.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "escort/config.hpp"
#include "escort/neural.hpp"
#include "escort/scenario.hpp"

namespace escort {

enum class Algorithm : std::uint8_t { maddpg = 0, ddpg = 1 };
enum class CriticObs : std::uint8_t { all = 0, own = 1 };

inline const char* to_string(Algorithm a) { return a == Algorithm::maddpg ? "maddpg" : "ddpg"; }
inline const char* to_string(CriticObs c) { return c == CriticObs::all ? "all" : "own"; }

struct NoiseSchedule {
  double initial = 0.3;
  double final = 0.05;
  double decay_fraction = 0.6;  // of all episodes

  double at(std::size_t episode, std::size_t episodes) const {
    const double horizon = decay_fraction * static_cast<double>(episodes);
    if (horizon <= 0.0) return final;
    const double t = static_cast<double>(episode) / horizon;
    if (t >= 1.0) return final;
    return initial + (final - initial) * t;
  }
};

struct TrainConfig {
  std::size_t episodes = 10000;
  int steps_per_episode = 25;
  std::size_t batch_size = 1024;
  double gamma = 0.95;
  double tau = 0.01;
  NoiseSchedule noise;
  std::size_t update_every = 100;
  std::optional<std::size_t> warmup_transitions;  // defaults to batch_size
  std::size_t buffer_capacity = 1'000'000;
  Algorithm algorithm = Algorithm::maddpg;
  CriticObs critic_obs = CriticObs::all;
  bool share_parameters = false;
  bool team_average_reward = false;
  std::vector<std::size_t> hidden = {64, 64};
  AdamHyper adam;
  double grad_clip = 0.5;
  // The horizon is a time limit the policies cannot observe, so by default
  // critic targets keep bootstrapping through it. Set to mask the bootstrap
  // term on horizon-end transitions instead.
  bool terminal_at_horizon = false;
  std::uint64_t seed = 0;

  std::size_t warmup() const { return warmup_transitions.value_or(batch_size); }
};

inline void validate(const TrainConfig& t) {
  using detail::check;
  check(t.steps_per_episode >= 1, "train.steps_per_episode", "must be at least 1");
  check(t.batch_size >= 1, "train.batch_size", "must be at least 1");
  check(std::isfinite(t.gamma) && t.gamma >= 0.0 && t.gamma < 1.0, "train.gamma", "must lie in [0, 1)");
  check(std::isfinite(t.tau) && t.tau > 0.0 && t.tau <= 1.0, "train.tau", "must lie in (0, 1]");
  check(std::isfinite(t.noise.initial) && t.noise.initial >= 0.0, "train.noise.initial", "must be nonnegative");
  check(std::isfinite(t.noise.final) && t.noise.final >= 0.0, "train.noise.final", "must be nonnegative");
  check(std::isfinite(t.noise.decay_fraction) && t.noise.decay_fraction >= 0.0 && t.noise.decay_fraction <= 1.0,
        "train.noise.decay_fraction", "must lie in [0, 1]");
  check(t.update_every >= 1, "train.update_every", "must be at least 1");
  check(t.buffer_capacity >= t.batch_size, "train.buffer_capacity", "must be at least batch_size");
  check(!t.hidden.empty(), "train.hidden", "need at least one hidden layer");
  for (std::size_t h : t.hidden) check(h >= 1, "train.hidden", "layer sizes must be positive");
  check(detail::finite_pos(t.adam.step_size), "train.adam.step_size", "must be positive");
  check(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0, "train.adam.beta1", "must lie in [0, 1)");
  check(t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0, "train.adam.beta2", "must lie in [0, 1)");
  check(detail::finite_pos(t.adam.epsilon), "train.adam.epsilon", "must be positive");
  check(detail::finite_pos(t.grad_clip), "train.grad_clip", "must be positive");
}

/// Training diverged (a loss or objective became non-finite).
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Replay storage

/// One joint bodyguard transition; every vector has one entry per bodyguard.
struct Transition {
  std::vector<Observation> observations;
  std::vector<std::vector<double>> actions;  // force (2) then utterance (c_dim)
  std::vector<double> rewards;
  std::vector<Observation> next_observations;
  bool done = false;
};

/// Minibatch laid out per agent, one sample per row.
struct Batch {
  std::vector<Matrix> observations;
  std::vector<Matrix> actions;
  std::vector<std::vector<double>> rewards;
  std::vector<Matrix> next_observations;
  std::vector<double> done;

  std::size_t size() const { return done.size(); }
  std::size_t n_agents() const { return observations.size(); }
};

/// Ring buffer over flat storage. Holds the most recent `capacity` transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t n_agents, std::size_t obs_dim, std::size_t act_dim)
      : capacity_(capacity), n_agents_(n_agents), obs_dim_(obs_dim), act_dim_(act_dim) {
    require(capacity >= 1, "ReplayBuffer: capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t insertions() const { return insertions_; }
  std::size_t size() const { return std::min(insertions_, capacity_); }

  void push(const Transition& t) {
    require(t.observations.size() == n_agents_ && t.actions.size() == n_agents_ && t.rewards.size() == n_agents_ &&
                t.next_observations.size() == n_agents_,
            "ReplayBuffer::push: one entry per agent");
    const std::size_t slot = insertions_ % capacity_;
    if (slot == done_.size()) grow();
    for (std::size_t a = 0; a < n_agents_; ++a) {
      require(t.observations[a].size() == obs_dim_ && t.next_observations[a].size() == obs_dim_ &&
                  t.actions[a].size() == act_dim_,
              "ReplayBuffer::push: observation or action width");
      std::copy(t.observations[a].begin(), t.observations[a].end(), obs_.begin() + offset_obs(slot, a));
      std::copy(t.next_observations[a].begin(), t.next_observations[a].end(), next_obs_.begin() + offset_obs(slot, a));
      std::copy(t.actions[a].begin(), t.actions[a].end(), act_.begin() + offset_act(slot, a));
      rew_[slot * n_agents_ + a] = t.rewards[a];
    }
    done_[slot] = t.done ? 1.0 : 0.0;
    ++insertions_;
  }

  Transition at(std::size_t slot) const {
    require(slot < size(), "ReplayBuffer::at: slot out of range");
    Transition t;
    for (std::size_t a = 0; a < n_agents_; ++a) {
      auto o = obs_.begin() + offset_obs(slot, a);
      auto no = next_obs_.begin() + offset_obs(slot, a);
      auto ac = act_.begin() + offset_act(slot, a);
      t.observations.emplace_back(o, o + obs_dim_);
      t.next_observations.emplace_back(no, no + obs_dim_);
      t.actions.emplace_back(ac, ac + act_dim_);
      t.rewards.push_back(rew_[slot * n_agents_ + a]);
    }
    t.done = done_[slot] != 0.0;
    return t;
  }

  /// Indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const {
    require(size() >= batch_size && batch_size > 0, "ReplayBuffer::sample: not enough transitions");
    std::vector<std::size_t> idx(batch_size);
    for (std::size_t& i : idx) i = rng.index(size());
    return idx;
  }

  Batch gather(std::span<const std::size_t> indices) const {
    Batch b;
    const std::size_t n = indices.size();
    for (std::size_t a = 0; a < n_agents_; ++a) {
      Matrix o(n, obs_dim_), no(n, obs_dim_), ac(n, act_dim_);
      std::vector<double> r(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t s = indices[k];
        std::copy_n(obs_.begin() + offset_obs(s, a), obs_dim_, o.data.begin() + k * obs_dim_);
        std::copy_n(next_obs_.begin() + offset_obs(s, a), obs_dim_, no.data.begin() + k * obs_dim_);
        std::copy_n(act_.begin() + offset_act(s, a), act_dim_, ac.data.begin() + k * act_dim_);
        r[k] = rew_[s * n_agents_ + a];
      }
      b.observations.push_back(std::move(o));
      b.next_observations.push_back(std::move(no));
      b.actions.push_back(std::move(ac));
      b.rewards.push_back(std::move(r));
    }
    for (std::size_t s : indices) b.done.push_back(done_[s]);
    return b;
  }

 private:
  std::size_t offset_obs(std::size_t slot, std::size_t a) const { return (slot * n_agents_ + a) * obs_dim_; }
  std::size_t offset_act(std::size_t slot, std::size_t a) const { return (slot * n_agents_ + a) * act_dim_; }

  void grow() {
    obs_.resize(obs_.size() + n_agents_ * obs_dim_);
    next_obs_.resize(next_obs_.size() + n_agents_ * obs_dim_);
    act_.resize(act_.size() + n_agents_ * act_dim_);
    rew_.resize(rew_.size() + n_agents_);
    done_.push_back(0.0);
  }

  std::size_t capacity_, n_agents_, obs_dim_, act_dim_;
  std::size_t insertions_ = 0;
  std::vector<double> obs_, next_obs_, act_, rew_, done_;
};

// ---------------------------------------------------------------------------
// Learners

struct AgentLearner {
  MlpParams actor, critic, target_actor, target_critic;
  OptState actor_opt, critic_opt;
  double noise_scale = 0.0;

  friend bool operator==(const AgentLearner&, const AgentLearner&) = default;
};

struct LearnerBundle {
  Algorithm algorithm = Algorithm::maddpg;
  CriticObs critic_obs = CriticObs::all;
  bool shared = false;
  std::size_t n_bodyguards = 0;
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::vector<AgentLearner> learners;  // one per bodyguard, or one if shared

  AgentLearner& agent(std::size_t i) { return learners.at(shared ? 0 : i); }
  const AgentLearner& agent(std::size_t i) const { return learners.at(shared ? 0 : i); }

  friend bool operator==(const LearnerBundle&, const LearnerBundle&) = default;
};

inline std::size_t critic_input_size(Algorithm algo, CriticObs obs_mode, std::size_t n, std::size_t obs_dim,
                                     std::size_t act_dim) {
  if (algo == Algorithm::ddpg) return obs_dim + act_dim;
  return (obs_mode == CriticObs::all ? n * obs_dim : obs_dim) + n * act_dim;
}

/// Column where agent `i`'s own action starts inside its critic input.
inline std::size_t action_slot_offset(Algorithm algo, CriticObs obs_mode, std::size_t n, std::size_t i,
                                      std::size_t obs_dim, std::size_t act_dim) {
  if (algo == Algorithm::ddpg) return obs_dim;
  return (obs_mode == CriticObs::all ? n * obs_dim : obs_dim) + i * act_dim;
}

/// MADDPG/all: [s_1..s_N, a_1..a_N]; MADDPG/own: [s_i, a_1..a_N]; DDPG: [s_i, a_i].
inline std::vector<double> critic_input(Algorithm algo, CriticObs obs_mode, std::size_t agent_index,
                                        std::span<const std::vector<double>> observations,
                                        std::span<const std::vector<double>> actions) {
  const std::size_t n = observations.size();
  if (actions.size() != n) throw ContractViolation("critic_input: observation and action counts differ");
  if (agent_index >= n) throw ContractViolation("critic_input: agent index out of range");
  std::vector<double> x;
  auto append = [&x](const std::vector<double>& v) { x.insert(x.end(), v.begin(), v.end()); };
  if (algo == Algorithm::ddpg) {
    append(observations[agent_index]);
    append(actions[agent_index]);
    return x;
  }
  if (obs_mode == CriticObs::all)
    for (const auto& o : observations) append(o);
  else
    append(observations[agent_index]);
  for (const auto& a : actions) append(a);
  return x;
}

/// Row-wise critic_input over a batch. `actions[j]` supplies agent j's action rows.
inline Matrix critic_input_batch(Algorithm algo, CriticObs obs_mode, std::size_t agent_index,
                                 std::span<const Matrix> observations, std::span<const Matrix* const> actions) {
  const std::size_t n = observations.size();
  require(actions.size() == n && agent_index < n, "critic_input_batch: agent counts");
  const std::size_t rows = observations[0].rows;
  const std::size_t od = observations[0].cols;
  const std::size_t ad = actions[agent_index]->cols;
  Matrix x(rows, critic_input_size(algo, obs_mode, n, od, ad));
  for (std::size_t r = 0; r < rows; ++r) {
    double* out = x.data.data() + r * x.cols;
    auto put = [&out](std::span<const double> v) { out = std::copy(v.begin(), v.end(), out); };
    if (algo == Algorithm::ddpg) {
      put(observations[agent_index].row_span(r));
      put(actions[agent_index]->row_span(r));
      continue;
    }
    if (obs_mode == CriticObs::all)
      for (std::size_t j = 0; j < n; ++j) put(observations[j].row_span(r));
    else
      put(observations[agent_index].row_span(r));
    for (std::size_t j = 0; j < n; ++j) put(actions[j]->row_span(r));
  }
  return x;
}

inline LearnerBundle make_bundle(const ScenarioConfig& scenario, const TrainConfig& train) {
  LearnerBundle b;
  b.algorithm = train.algorithm;
  b.critic_obs = train.critic_obs;
  b.shared = train.share_parameters;
  b.n_bodyguards = static_cast<std::size_t>(scenario.n_bodyguards);
  b.obs_dim = observation_size(static_cast<std::size_t>(scenario.n_agents()),
                               static_cast<std::size_t>(scenario.n_landmarks), static_cast<std::size_t>(scenario.c_dim));
  b.act_dim = 2 + static_cast<std::size_t>(scenario.c_dim);
  const std::size_t critic_in = critic_input_size(b.algorithm, b.critic_obs, b.n_bodyguards, b.obs_dim, b.act_dim);
  const std::size_t count = b.shared ? 1 : b.n_bodyguards;
  for (std::size_t i = 0; i < count; ++i) {
    auto sizes = [&](std::size_t in, std::size_t out) {
      std::vector<std::size_t> s{in};
      s.insert(s.end(), train.hidden.begin(), train.hidden.end());
      s.push_back(out);
      return s;
    };
    AgentLearner l;
    l.actor = init_mlp(sizes(b.obs_dim, b.act_dim), Activation::tanh, derive_seed(train.seed, 100 + 2 * i));
    l.critic = init_mlp(sizes(critic_in, 1), Activation::identity, derive_seed(train.seed, 101 + 2 * i));
    l.target_actor = l.actor;
    l.target_critic = l.critic;
    l.actor_opt = make_opt_state(l.actor, train.adam);
    l.critic_opt = make_opt_state(l.critic, train.adam);
    l.noise_scale = train.noise.initial;
    b.learners.push_back(std::move(l));
  }
  return b;
}

inline AgentAction to_agent_action(std::span<const double> v) {
  require(v.size() >= 2, "to_agent_action: need a 2D force");
  return AgentAction{{v[0], v[1]}, Utterance(v.begin() + 2, v.end())};
}

inline std::vector<double> to_vector(const AgentAction& a) {
  std::vector<double> v{a.force.x, a.force.y};
  v.insert(v.end(), a.utterance.begin(), a.utterance.end());
  return v;
}

/// Actor output plus N(0, noise_scale^2) per component, clamped to [-1, 1].
/// With noise_scale == 0 the generator is not touched.
inline AgentAction select_action(const MlpParams& actor, std::span<const double> observation, double noise_scale,
                                 Rng& rng) {
  if (observation.size() != actor.input_size())
    throw ContractViolation("select_action: observation width differs from actor input");
  std::vector<double> out = forward(actor, observation);
  for (double& v : out) {
    if (noise_scale > 0.0) v += rng.normal(0.0, noise_scale);
    v = std::clamp(v, -1.0, 1.0);
  }
  return to_agent_action(out);
}

namespace detail {
inline void check_batch(const LearnerBundle& b, const Batch& batch, std::size_t agent_index) {
  require(agent_index < b.n_bodyguards, "update: agent index out of range");
  require(batch.size() >= 1, "update: empty batch");
  require(batch.n_agents() == b.n_bodyguards && batch.actions.size() == b.n_bodyguards &&
              batch.rewards.size() == b.n_bodyguards && batch.next_observations.size() == b.n_bodyguards,
          "update: batch agent count");
}

inline std::vector<const Matrix*> pointers(const std::vector<Matrix>& v) {
  std::vector<const Matrix*> p;
  for (const Matrix& m : v) p.push_back(&m);
  return p;
}
}  // namespace detail

/// Loss and unclipped parameter gradient of the critic regression toward
/// r + gamma Q_target(next), with the bootstrap masked on done transitions
/// when cfg.terminal_at_horizon is set.
inline std::pair<double, GradBundle> critic_gradient(const LearnerBundle& bundle, const Batch& batch,
                                                     std::size_t agent_index, const TrainConfig& cfg) {
  detail::check_batch(bundle, batch, agent_index);
  const std::size_t n = bundle.n_bodyguards;
  const std::size_t rows = batch.size();

  std::vector<Matrix> next_actions(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (bundle.algorithm == Algorithm::ddpg && j != agent_index) continue;
    next_actions[j] = forward(bundle.agent(j).target_actor, batch.next_observations[j]);
  }
  std::vector<const Matrix*> next_ptrs = detail::pointers(next_actions);
  if (bundle.algorithm == Algorithm::ddpg)
    for (std::size_t j = 0; j < n; ++j)
      if (j != agent_index) next_ptrs[j] = &batch.actions[j];  // unused by the DDPG layout

  const AgentLearner& me = bundle.agent(agent_index);
  const Matrix next_q = forward(me.target_critic, critic_input_batch(bundle.algorithm, bundle.critic_obs, agent_index,
                                                                     batch.next_observations, next_ptrs));
  const Matrix x = critic_input_batch(bundle.algorithm, bundle.critic_obs, agent_index, batch.observations,
                                      detail::pointers(batch.actions));
  ForwardCache cache;
  const Matrix q = forward(me.critic, x, &cache);

  Matrix grad(rows, 1);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double live = cfg.terminal_at_horizon ? 1.0 - batch.done[r] : 1.0;
    const double y = batch.rewards[agent_index][r] + cfg.gamma * live * next_q.data[r];
    const double err = q.data[r] - y;
    loss += err * err;
    grad.data[r] = 2.0 * err / static_cast<double>(rows);
  }
  loss /= static_cast<double>(rows);
  if (!std::isfinite(loss)) throw TrainingDivergence("critic loss became non-finite for agent " + std::to_string(agent_index));
  return {loss, backward(me.critic, cache, grad)};
}

/// One clipped optimizer step on the critic. Returns the loss before the step.
inline double critic_update(LearnerBundle& bundle, const Batch& batch, std::size_t agent_index, const TrainConfig& cfg) {
  auto [loss, g] = critic_gradient(bundle, batch, agent_index, cfg);
  clip_global_norm(g, cfg.grad_clip);
  AgentLearner& me = bundle.agent(agent_index);
  opt_step(me.critic, g, me.critic_opt);
  return loss;
}

/// Mean Q_i(s, a_1..a_N) with a_i = actor_i(s_i) and the other agents'
/// actions taken from the batch, plus the unclipped gradient of -mean Q with
/// respect to the actor parameters.
inline std::pair<double, GradBundle> actor_gradient(const LearnerBundle& bundle, const Batch& batch,
                                                    std::size_t agent_index) {
  detail::check_batch(bundle, batch, agent_index);
  const std::size_t rows = batch.size();
  const AgentLearner& me = bundle.agent(agent_index);

  ForwardCache actor_cache;
  const Matrix own_action = forward(me.actor, batch.observations[agent_index], &actor_cache);
  std::vector<const Matrix*> acts = detail::pointers(batch.actions);
  acts[agent_index] = &own_action;
  const Matrix x = critic_input_batch(bundle.algorithm, bundle.critic_obs, agent_index, batch.observations, acts);
  ForwardCache critic_cache;
  const Matrix q = forward(me.critic, x, &critic_cache);

  double objective = 0.0;
  for (double v : q.data) objective += v;
  objective /= static_cast<double>(rows);
  if (!std::isfinite(objective))
    throw TrainingDivergence("actor objective became non-finite for agent " + std::to_string(agent_index));

  const Matrix dq(rows, 1, -1.0 / static_cast<double>(rows));
  const GradBundle critic_grad = backward(me.critic, critic_cache, dq);
  const std::size_t offset = action_slot_offset(bundle.algorithm, bundle.critic_obs, bundle.n_bodyguards, agent_index,
                                                bundle.obs_dim, bundle.act_dim);
  Matrix da(rows, bundle.act_dim);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < bundle.act_dim; ++c) da(r, c) = critic_grad.input(r, offset + c);
  return {objective, backward(me.actor, actor_cache, da)};
}

/// One clipped ascent step on mean Q for the actor. Returns the mean Q before
/// the step.
inline double actor_update(LearnerBundle& bundle, const Batch& batch, std::size_t agent_index, const TrainConfig& cfg) {
  auto [objective, g] = actor_gradient(bundle, batch, agent_index);
  clip_global_norm(g, cfg.grad_clip);
  AgentLearner& me = bundle.agent(agent_index);
  opt_step(me.actor, g, me.actor_opt);
  return objective;
}

inline void update_targets(LearnerBundle& bundle, double tau) {
  for (AgentLearner& l : bundle.learners) {
    soft_update(l.target_actor, l.actor, tau);
    soft_update(l.target_critic, l.critic, tau);
  }
}

// ---------------------------------------------------------------------------
// Training loop

struct EpisodeLog {
  std::size_t episode = 0;
  double mean_return = 0.0;       // mean over bodyguards of the summed reward
  double cumulative_threat = 0.0;
  std::optional<double> critic_loss;  // mean over updates in this episode
  std::optional<double> actor_q;      // mean actor objective over updates
  double noise_scale = 0.0;
  std::size_t updates = 0;

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

struct TrainResult {
  LearnerBundle bundle;
  std::vector<EpisodeLog> log;
};

namespace detail {
inline constexpr std::uint64_t kNoiseStream = 10;
inline constexpr std::uint64_t kSampleStream = 11;
inline constexpr std::uint64_t kEpisodeStream = 12;

inline std::vector<Observation> observe_bodyguards(const WorldState& s, const RoleAssignment& roles) {
  std::vector<Observation> out;
  for (std::size_t b : roles.bodyguard_indices) out.push_back(observe(s, b));
  return out;
}
}  // namespace detail

inline std::uint64_t training_episode_seed(std::uint64_t train_seed, std::size_t episode) {
  return derive_seed(derive_seed(train_seed, detail::kEpisodeStream), episode);
}

inline TrainResult train(const ScenarioConfig& scenario, const TrainConfig& cfg,
                         const std::function<void(const EpisodeLog&)>& on_episode = {}) {
  validate(scenario);
  validate(cfg);
  if (cfg.steps_per_episode != scenario.horizon_T)
    throw ConfigError("train.steps_per_episode", "must equal scenario.horizon_T");

  TrainResult result{make_bundle(scenario, cfg), {}};
  LearnerBundle& bundle = result.bundle;
  const std::size_t n = bundle.n_bodyguards;
  ReplayBuffer buffer(cfg.buffer_capacity, n, bundle.obs_dim, bundle.act_dim);
  Rng noise_rng(derive_seed(cfg.seed, detail::kNoiseStream));
  Rng sample_rng(derive_seed(cfg.seed, detail::kSampleStream));
  const std::size_t min_fill = std::max(cfg.warmup(), cfg.batch_size);
  std::size_t total_steps = 0;

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const double noise = cfg.noise.at(ep, cfg.episodes);
    for (AgentLearner& l : bundle.learners) l.noise_scale = noise;

    Episode env(scenario, training_episode_seed(cfg.seed, ep));
    std::vector<Observation> obs = detail::observe_bodyguards(env.state(), env.roles());
    EpisodeLog log;
    log.episode = ep;
    log.noise_scale = noise;
    std::vector<double> returns(n, 0.0);
    double threat_sum = 0.0, critic_sum = 0.0, actor_sum = 0.0;

    while (!env.done()) {
      std::vector<AgentAction> actions;
      for (std::size_t i = 0; i < n; ++i)
        actions.push_back(select_action(bundle.agent(i).actor, obs[i], bundle.agent(i).noise_scale, noise_rng));
      StepRecord rec = env.step(actions);

      Transition t;
      t.observations = std::move(obs);
      for (const AgentAction& a : actions) t.actions.push_back(to_vector(a));
      t.rewards = rec.rewards;
      if (cfg.team_average_reward) {
        double mean = 0.0;
        for (double r : rec.rewards) mean += r;
        std::fill(t.rewards.begin(), t.rewards.end(), mean / static_cast<double>(n));
      }
      t.next_observations = detail::observe_bodyguards(env.state(), env.roles());
      t.done = env.done();
      buffer.push(t);
      obs = std::move(t.next_observations);
      for (std::size_t i = 0; i < n; ++i) returns[i] += rec.rewards[i];
      threat_sum += rec.threat;
      ++total_steps;

      if (total_steps % cfg.update_every == 0 && buffer.size() >= min_fill) {
        const Batch batch = buffer.gather(buffer.sample_indices(cfg.batch_size, sample_rng));
        for (std::size_t i = 0; i < n; ++i) {
          critic_sum += critic_update(bundle, batch, i, cfg);
          actor_sum += actor_update(bundle, batch, i, cfg);
        }
        update_targets(bundle, cfg.tau);
        ++log.updates;
      }
    }

    for (double r : returns) log.mean_return += r;
    log.mean_return /= static_cast<double>(n);
    log.cumulative_threat = threat_sum;
    if (log.updates > 0) {
      const double count = static_cast<double>(log.updates * n);
      log.critic_loss = critic_sum / count;
      log.actor_q = actor_sum / count;
    }
    if (on_episode) on_episode(log);
    result.log.push_back(log);
  }
  return result;
}

}  // namespace escort
