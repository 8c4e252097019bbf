#pragma once

// Deterministic 2D particle world: disc-shaped entities, damped Euler
// integration, soft pairwise contact and a soft boundary, plus per-agent
// observation vectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "escort/config.hpp"
#include "escort/core.hpp"

namespace escort {

struct EntityState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.05;
  double mass = 1.0;
  bool movable = true;

  friend bool operator==(const EntityState&, const EntityState&) = default;
};

using Utterance = std::vector<double>;

struct WorldState {
  std::vector<EntityState> agents;
  std::vector<EntityState> landmarks;
  std::vector<Utterance> utterances;  // one per agent, each of length c_dim
  int step_index = 0;

  std::size_t n_agents() const { return agents.size(); }
  std::size_t n_landmarks() const { return landmarks.size(); }
  std::size_t c_dim() const { return utterances.empty() ? 0 : utterances.front().size(); }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct AgentAction {
  Vec2 force;            // each component in [-1, 1]
  Utterance utterance;   // length c_dim

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

/// Clamps force components to [-1, 1].
inline AgentAction clamped(AgentAction a) {
  a.force.x = std::clamp(a.force.x, -1.0, 1.0);
  a.force.y = std::clamp(a.force.y, -1.0, 1.0);
  return a;
}

/// Layout: for each entity (agents, then landmarks) the position relative to
/// the observer (2) and the entity velocity (2); then every agent's utterance.
using Observation = std::vector<double>;

constexpr std::size_t observation_size(std::size_t n_agents, std::size_t n_landmarks, std::size_t c_dim) {
  return (n_agents + n_landmarks) * 4 + n_agents * c_dim;
}

/// Uniform placement in the world square. Agents are drawn first (in index
/// order, x then y), then landmarks, all from one stream seeded by `seed`.
inline WorldState reset_world(const ScenarioConfig& config, std::uint64_t seed) {
  validate_world(config);
  const auto n = static_cast<std::size_t>(config.n_agents());
  const auto m = static_cast<std::size_t>(config.n_landmarks);
  const double h = config.physics.world_half_extent;
  Rng rng(seed);

  WorldState w;
  w.agents.resize(n);
  w.landmarks.resize(m);
  for (std::size_t i = 0; i < n; ++i) {
    EntityState& e = w.agents[i];
    e.radius = i == 0 ? config.radii.vip
               : i <= static_cast<std::size_t>(config.n_bodyguards) ? config.radii.bodyguard
                                                                     : config.radii.bystander;
    e.position.x = rng.uniform(-h, h);
    e.position.y = rng.uniform(-h, h);
  }
  for (EntityState& l : w.landmarks) {
    l.radius = config.radii.landmark;
    l.movable = false;
    l.position.x = rng.uniform(-h, h);
    l.position.y = rng.uniform(-h, h);
  }
  w.utterances.assign(n, Utterance(static_cast<std::size_t>(config.c_dim), 0.0));
  return w;
}

namespace detail {
/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Beyond this many margins of separation the softplus tail is below 1e-13
// and the force is reported as exactly zero.
inline constexpr double kContactCutoffMargins = 30.0;
}  // namespace detail

/// Magnitude of the contact repulsion for a signed penetration depth
/// (radius sum minus center distance): contact_force * margin * softplus(pen / margin).
inline double contact_magnitude(double penetration, const PhysicsConfig& cfg) {
  return cfg.contact_force * cfg.contact_margin * detail::softplus(penetration / cfg.contact_margin);
}

/// Force exerted on `a` by `b`. The force on `b` is the exact negation.
inline Vec2 pairwise_contact_force(const EntityState& a, const EntityState& b, const PhysicsConfig& cfg) {
  const Vec2 delta = a.position - b.position;
  const double dist = norm(delta);
  const double min_dist = a.radius + b.radius;
  const double penetration = min_dist - dist;
  if (-penetration >= detail::kContactCutoffMargins * cfg.contact_margin) return {};
  if (dist == 0.0) return Vec2{contact_magnitude(min_dist, cfg), 0.0};
  return delta * (contact_magnitude(penetration, cfg) / dist);
}

/// Linear restoring force pulling an entity back once it leaves the square.
inline Vec2 boundary_force(const EntityState& e, const PhysicsConfig& cfg) {
  auto axis = [&](double p) {
    const double excess = std::abs(p) - cfg.world_half_extent;
    return excess > 0.0 ? -std::copysign(cfg.contact_force * excess, p) : 0.0;
  };
  return {axis(e.position.x), axis(e.position.y)};
}

/// Advances the world by one step. Agents collide with each other; landmarks
/// are immovable, non-colliding markers.
inline WorldState step_world(const WorldState& state, std::span<const AgentAction> actions, const PhysicsConfig& cfg) {
  const std::size_t n = state.agents.size();
  if (actions.size() != n) throw ContractViolation("step_world: expected one action per agent");
  for (const AgentAction& a : actions)
    if (a.utterance.size() != state.c_dim()) throw ContractViolation("step_world: utterance length differs from c_dim");

  std::vector<Vec2> force(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AgentAction a = clamped(actions[i]);
    force[i] = a.force * cfg.force_gain + boundary_force(state.agents[i], cfg);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 f = pairwise_contact_force(state.agents[i], state.agents[j], cfg);
      force[i] += f;
      force[j] -= f;
    }
  }

  WorldState next = state;
  for (std::size_t i = 0; i < n; ++i) {
    EntityState& e = next.agents[i];
    if (!e.movable) continue;
    e.velocity = e.velocity * (1.0 - cfg.damping) + force[i] / e.mass * cfg.dt;
    if (cfg.max_speed) {
      const double speed = norm(e.velocity);
      if (speed > *cfg.max_speed) e.velocity *= *cfg.max_speed / speed;
    }
    e.position += e.velocity * cfg.dt;
  }
  for (std::size_t i = 0; i < n; ++i) next.utterances[i] = actions[i].utterance;
  ++next.step_index;
  return next;
}

inline Observation observe(const WorldState& state, std::size_t agent_index) {
  if (agent_index >= state.agents.size()) throw ContractViolation("observe: agent index out of range");
  const Vec2 origin = state.agents[agent_index].position;
  Observation obs;
  obs.reserve(observation_size(state.n_agents(), state.n_landmarks(), state.c_dim()));
  auto push_entity = [&](const EntityState& e) {
    const Vec2 rel = e.position - origin;
    obs.insert(obs.end(), {rel.x, rel.y, e.velocity.x, e.velocity.y});
  };
  for (const EntityState& e : state.agents) push_entity(e);
  for (const EntityState& e : state.landmarks) push_entity(e);
  for (const Utterance& u : state.utterances) obs.insert(obs.end(), u.begin(), u.end());
  return obs;
}

}  // namespace escort
