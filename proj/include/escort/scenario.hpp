#pragma once

// The mall scenario: role layout, scripted VIP and bystander policies, and
// episode orchestration around the particle world.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "escort/config.hpp"
#include "escort/roles.hpp"
#include "escort/threat.hpp"
#include "escort/world.hpp"

namespace escort {

/// Raised when a bodyguard controller fails mid-episode.
class EpisodeError : public std::runtime_error {
 public:
  EpisodeError(int step, const std::string& what)
      : std::runtime_error("episode aborted at step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

struct StepRecord {
  WorldState state;                       // after the step
  std::vector<AgentAction> bodyguard_actions;
  std::vector<double> rewards;            // per bodyguard
  double threat = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  RoleAssignment roles;  // as assigned at reset
  std::vector<StepRecord> records;

  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

inline std::vector<double> step_threats(const EpisodeTrace& trace) {
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const StepRecord& r : trace.records) out.push_back(r.threat);
  return out;
}

inline double cumulative_threat(const EpisodeTrace& trace) { return cumulative_threat(step_threats(trace)); }

namespace detail {
inline constexpr std::uint64_t kPlacementStream = 0;
inline constexpr std::uint64_t kRoleStream = 1;

inline Vec2 seek(Vec2 from, Vec2 to, double speed_factor, double arrival_radius) {
  const Vec2 delta = to - from;
  const double dist = norm(delta);
  if (dist <= arrival_radius) return {};
  return delta * (speed_factor / dist);
}

inline std::size_t redraw_waypoint(std::size_t current, std::size_t n_landmarks, Rng& rng) {
  if (n_landmarks < 2) return current;
  const std::size_t pick = rng.index(n_landmarks - 1);
  return pick >= current ? pick + 1 : pick;
}
}  // namespace detail

/// Resets the world and assigns roles. `rng` receives the role stream so the
/// episode can keep drawing bystander waypoints from it.
inline std::pair<WorldState, RoleAssignment> build_scenario(const ScenarioConfig& cfg, Rng& rng) {
  validate(cfg);
  WorldState world = reset_world(cfg, derive_seed(cfg.seed, detail::kPlacementStream));
  rng = Rng(derive_seed(cfg.seed, detail::kRoleStream));

  RoleAssignment roles;
  roles.vip_index = 0;
  for (int i = 0; i < cfg.n_bodyguards; ++i) roles.bodyguard_indices.push_back(static_cast<std::size_t>(1 + i));
  for (int i = 0; i < cfg.n_bystanders; ++i)
    roles.bystander_indices.push_back(static_cast<std::size_t>(1 + cfg.n_bodyguards + i));
  const auto m = static_cast<std::size_t>(cfg.n_landmarks);
  roles.vip_goal_landmark = rng.index(m);
  for (int i = 0; i < cfg.n_bystanders; ++i) roles.bystander_waypoints.push_back(rng.index(m));
  return {std::move(world), std::move(roles)};
}

inline std::pair<WorldState, RoleAssignment> build_scenario(const ScenarioConfig& cfg) {
  Rng rng;
  return build_scenario(cfg, rng);
}

inline AgentAction silent_action(const ScenarioConfig& cfg, Vec2 force = {}) {
  return AgentAction{force, Utterance(static_cast<std::size_t>(cfg.c_dim), 0.0)};
}

/// Heads for the goal landmark at vip_speed_factor; stops inside arrival_radius.
inline AgentAction vip_policy(const WorldState& state, const RoleAssignment& roles, const ScenarioConfig& cfg) {
  const Vec2 pos = state.agents.at(roles.vip_index).position;
  const Vec2 goal = state.landmarks.at(roles.vip_goal_landmark).position;
  return silent_action(cfg, detail::seek(pos, goal, cfg.vip_speed_factor, cfg.arrival_radius));
}

/// `bystander_slot` indexes roles.bystander_indices. On arrival a new waypoint
/// is drawn uniformly from the other landmarks and the bystander heads for it.
inline std::pair<AgentAction, std::size_t> bystander_policy(const WorldState& state, std::size_t bystander_slot,
                                                            const RoleAssignment& roles, const ScenarioConfig& cfg,
                                                            Rng& rng) {
  require(bystander_slot < roles.bystander_indices.size(), "bystander_policy: slot out of range");
  const Vec2 pos = state.agents.at(roles.bystander_indices[bystander_slot]).position;
  std::size_t waypoint = roles.bystander_waypoints.at(bystander_slot);
  if (norm(state.landmarks.at(waypoint).position - pos) <= cfg.arrival_radius)
    waypoint = detail::redraw_waypoint(waypoint, state.n_landmarks(), rng);
  const Vec2 force = detail::seek(pos, state.landmarks[waypoint].position, cfg.bystander_speed_factor, cfg.arrival_radius);
  return {silent_action(cfg, force), waypoint};
}

/// Step-by-step episode driver. The caller supplies bodyguard actions; the
/// scripted agents, physics, rewards and threat are handled here.
class Episode {
 public:
  Episode(ScenarioConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.seed = seed;
    std::tie(state_, roles_) = build_scenario(cfg_, rng_);
  }

  const ScenarioConfig& config() const { return cfg_; }
  const WorldState& state() const { return state_; }
  const RoleAssignment& roles() const { return roles_; }
  int step_index() const { return state_.step_index; }
  bool done() const { return state_.step_index >= cfg_.horizon_T; }

  StepRecord step(std::span<const AgentAction> bodyguard_actions) {
    require(!done(), "Episode::step: horizon reached");
    require(bodyguard_actions.size() == roles_.bodyguard_indices.size(), "Episode::step: one action per bodyguard");

    std::vector<AgentAction> actions(state_.n_agents());
    actions[roles_.vip_index] = vip_policy(state_, roles_, cfg_);
    for (std::size_t k = 0; k < roles_.bodyguard_indices.size(); ++k)
      actions[roles_.bodyguard_indices[k]] = clamped(bodyguard_actions[k]);
    for (std::size_t k = 0; k < roles_.bystander_indices.size(); ++k) {
      auto [action, waypoint] = bystander_policy(state_, k, roles_, cfg_, rng_);
      actions[roles_.bystander_indices[k]] = std::move(action);
      roles_.bystander_waypoints[k] = waypoint;
    }

    state_ = step_world(state_, actions, cfg_.physics);

    StepRecord rec;
    rec.state = state_;
    for (std::size_t b : roles_.bodyguard_indices) {
      rec.bodyguard_actions.push_back(actions[b]);
      rec.rewards.push_back(bodyguard_reward(state_, b, actions[b], roles_, cfg_.threat).total);
    }
    rec.threat = instantaneous_threat(state_, roles_, cfg_.threat);
    return rec;
  }

 private:
  ScenarioConfig cfg_;
  Rng rng_;
  WorldState state_;
  RoleAssignment roles_;
};

/// Returns one action per bodyguard, in roles.bodyguard_indices order.
using BodyguardController = std::function<std::vector<AgentAction>(const WorldState&, const RoleAssignment&)>;

inline EpisodeTrace run_episode(const ScenarioConfig& cfg, const BodyguardController& controller, std::uint64_t seed) {
  Episode ep(cfg, seed);
  EpisodeTrace trace;
  trace.seed = seed;
  trace.config_digest = config_digest(cfg);
  trace.roles = ep.roles();
  trace.records.reserve(static_cast<std::size_t>(cfg.horizon_T));
  while (!ep.done()) {
    std::vector<AgentAction> actions;
    try {
      actions = controller(ep.state(), ep.roles());
    } catch (const std::exception& e) {
      throw EpisodeError(ep.step_index(), e.what());
    }
    if (actions.size() != ep.roles().bodyguard_indices.size())
      throw EpisodeError(ep.step_index(), "controller returned the wrong number of actions");
    for (const AgentAction& a : actions)
      if (a.utterance.size() != static_cast<std::size_t>(cfg.c_dim))
        throw EpisodeError(ep.step_index(), "controller utterance length differs from c_dim");
    trace.records.push_back(ep.step(actions));
  }
  return trace;
}

}  // namespace escort
