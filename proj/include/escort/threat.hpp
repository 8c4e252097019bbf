#pragma once

// Threat-based bodyguard reward and the cumulative-threat metric.
//
//   reward_i = -1 + prod_b (1 - TL(VIP, b)) + band(VIP, x_i) + utterance_penalty
//   TL(VIP, b) = exp(-A * |VIP - b| / B)
//   band = 0 when m <= |x_i - VIP| <= d, else -1

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "escort/config.hpp"
#include "escort/roles.hpp"
#include "escort/world.hpp"

namespace escort {

struct RewardBreakdown {
  double residual_threat_term = 0.0;
  double band_penalty = 0.0;
  double utterance_penalty = 0.0;
  double total = 0.0;
};

inline double threat_level(double dist, const ThreatParams& params) {
  if (!(dist >= 0.0)) throw ContractViolation("threat_level: distance must be nonnegative");
  return std::exp(-params.A * dist / params.B);
}

inline double distance_band_penalty(Vec2 bodyguard_pos, Vec2 vip_pos, const ThreatParams& params) {
  const double dist = norm(bodyguard_pos - vip_pos);
  return (params.m <= dist && dist <= params.d) ? 0.0 : -1.0;
}

/// prod over bystanders of (1 - TL); 1 when there are none.
inline double safety_product(const WorldState& state, const RoleAssignment& roles, const ThreatParams& params) {
  const Vec2 vip = state.agents.at(roles.vip_index).position;
  double product = 1.0;
  for (std::size_t b : roles.bystander_indices)
    product *= 1.0 - threat_level(norm(state.agents.at(b).position - vip), params);
  return product;
}

inline double instantaneous_threat(const WorldState& state, const RoleAssignment& roles, const ThreatParams& params) {
  return 1.0 - safety_product(state, roles, params);
}

inline RewardBreakdown bodyguard_reward(const WorldState& state, std::size_t bodyguard_id, const AgentAction& action,
                                        const RoleAssignment& roles, const ThreatParams& params) {
  if (!roles.is_bodyguard(bodyguard_id)) throw ContractViolation("bodyguard_reward: agent is not a bodyguard");
  RewardBreakdown r;
  r.residual_threat_term = -1.0 + safety_product(state, roles, params);
  r.band_penalty = distance_band_penalty(state.agents.at(bodyguard_id).position,
                                         state.agents.at(roles.vip_index).position, params);
  double loudest = 0.0;
  for (double c : action.utterance) loudest = std::max(loudest, std::abs(c));
  r.utterance_penalty = loudest > params.utterance_threshold ? params.p : 0.0;
  r.total = r.residual_threat_term + r.band_penalty + r.utterance_penalty;
  return r;
}

/// Sum of per-step threats; lower is better.
inline double cumulative_threat(std::span<const double> step_threats) {
  if (step_threats.empty()) throw ContractViolation("cumulative_threat: empty trace");
  return std::accumulate(step_threats.begin(), step_threats.end(), 0.0);
}

}  // namespace escort
